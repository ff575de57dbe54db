//! Experience replay: a FIFO ring buffer with optional proportional
//! prioritization backed by a sum tree.

use rand::Rng;

/// Handle to a sampled slot. `seq` identifies the transition that occupied
/// the slot when it was sampled, so priority updates for since-overwritten
/// slots can be detected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SampleIndex {
    pub slot: usize,
    pub seq: u64,
}

/// Fixed-capacity ring of transitions; the oldest entry is evicted first.
#[derive(Clone, Debug)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    storage: Vec<(u64, T)>,
    write_cursor: usize,
    next_seq: u64,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            storage: Vec::with_capacity(capacity.min(1 << 16)),
            write_cursor: 0,
            next_seq: 0,
        }
    }

    /// Stores `item`, returning the slot it was written to.
    pub fn push(&mut self, item: T) -> usize {
        let slot = self.write_cursor;
        let entry = (self.next_seq, item);
        if self.storage.len() < self.capacity {
            self.storage.push(entry);
        } else {
            self.storage[slot] = entry;
        }
        self.next_seq += 1;
        self.write_cursor = (self.write_cursor + 1) % self.capacity;
        slot
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, slot: usize) -> Option<(SampleIndex, &T)> {
        self.storage
            .get(slot)
            .map(|(seq, item)| (SampleIndex { slot, seq: *seq }, item))
    }

    /// Stored items, oldest first.
    pub fn iter_fifo(&self) -> impl Iterator<Item = &T> {
        let split = if self.storage.len() < self.capacity {
            0
        } else {
            self.write_cursor
        };
        self.storage[split..]
            .iter()
            .chain(&self.storage[..split])
            .map(|(_, item)| item)
    }

    fn seq_at(&self, slot: usize) -> Option<u64> {
        self.storage.get(slot).map(|(seq, _)| *seq)
    }
}

/// Binary tree over `capacity` leaves whose internal nodes hold the sum of
/// their children, plus a parallel max tree.
#[derive(Clone, Debug)]
pub struct SumTree {
    capacity: usize,
    leaf_base: usize,
    sums: Vec<f64>,
    maxes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let leaf_base = capacity.next_power_of_two();
        Self {
            capacity,
            leaf_base,
            sums: vec![0.0; 2 * leaf_base],
            maxes: vec![0.0; 2 * leaf_base],
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn set(&mut self, leaf: usize, value: f64) {
        assert!(leaf < self.capacity);
        debug_assert!(value >= 0.0 && value.is_finite());
        let mut node = self.leaf_base + leaf;
        self.sums[node] = value;
        self.maxes[node] = value;
        while node > 1 {
            node /= 2;
            self.sums[node] = self.sums[2 * node] + self.sums[2 * node + 1];
            self.maxes[node] = self.maxes[2 * node].max(self.maxes[2 * node + 1]);
        }
    }

    pub fn get(&self, leaf: usize) -> f64 {
        self.sums[self.leaf_base + leaf]
    }

    pub fn total(&self) -> f64 {
        self.sums[1]
    }

    pub fn max(&self) -> f64 {
        self.maxes[1]
    }

    /// Leaf `i` such that the prefix sum before `i` is `<= mass` and the
    /// prefix sum through `i` exceeds it. Never returns a zero-valued leaf
    /// while the total is positive.
    pub fn find(&self, mass: f64) -> usize {
        let mut node = 1;
        let mut remaining = mass;
        while node < self.leaf_base {
            let left = 2 * node;
            let right = left + 1;
            if (remaining < self.sums[left] || self.sums[right] <= 0.0) && self.sums[left] > 0.0 {
                node = left;
            } else {
                remaining -= self.sums[left];
                node = right;
            }
        }
        (node - self.leaf_base).min(self.capacity - 1)
    }

    pub fn leaves(&self) -> &[f64] {
        &self.sums[self.leaf_base..self.leaf_base + self.capacity]
    }
}

/// Proportional priorities: leaf `i` of `scaled` holds `priority_i ^ alpha`,
/// `raw` holds `priority_i` itself.
#[derive(Clone, Debug)]
pub struct PriorityTree {
    scaled: SumTree,
    raw: SumTree,
    pub alpha: f64,
    pub epsilon_priority: f64,
}

impl PriorityTree {
    pub fn new(capacity: usize, alpha: f64, epsilon_priority: f64) -> Self {
        assert!(alpha >= 0.0 && epsilon_priority > 0.0);
        Self {
            scaled: SumTree::new(capacity),
            raw: SumTree::new(capacity),
            alpha,
            epsilon_priority,
        }
    }

    pub fn set_priority(&mut self, slot: usize, priority: f64) {
        let priority = priority.max(self.epsilon_priority);
        self.raw.set(slot, priority);
        self.scaled.set(slot, priority.powf(self.alpha));
    }

    pub fn priority(&self, slot: usize) -> f64 {
        self.raw.get(slot)
    }

    /// Largest stored priority, or 1.0 when nothing is stored.
    pub fn max_priority(&self) -> f64 {
        let m = self.raw.max();
        if m > 0.0 {
            m
        } else {
            1.0
        }
    }

    pub fn total(&self) -> f64 {
        self.scaled.total()
    }

    pub fn scaled_leaves(&self) -> &[f64] {
        self.scaled.leaves()
    }

    /// Sampling probability of `slot`.
    pub fn probability(&self, slot: usize) -> f64 {
        self.scaled.get(slot) / self.scaled.total()
    }

    /// Draws a slot with probability proportional to its scaled priority.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mass = rng.gen::<f64>() * self.scaled.total();
        self.scaled.find(mass)
    }
}

/// One sampled transition with its handle and importance weight.
#[derive(Clone, Debug)]
pub struct Sampled<T> {
    pub index: SampleIndex,
    pub transition: T,
    pub weight: f64,
}

/// Replay memory used by the agents: uniform, or prioritized when a
/// [`PriorityTree`] is attached.
#[derive(Clone, Debug)]
pub struct Replay<T> {
    buffer: ReplayBuffer<T>,
    priorities: Option<PriorityTree>,
    importance_weights: bool,
    stale_updates: u64,
}

impl<T: Clone> Replay<T> {
    pub fn uniform(capacity: usize) -> Self {
        Self {
            buffer: ReplayBuffer::new(capacity),
            priorities: None,
            importance_weights: false,
            stale_updates: 0,
        }
    }

    pub fn prioritized(capacity: usize, alpha: f64, epsilon_priority: f64, importance_weights: bool) -> Self {
        Self {
            buffer: ReplayBuffer::new(capacity),
            priorities: Some(PriorityTree::new(capacity, alpha, epsilon_priority)),
            importance_weights,
            stale_updates: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn buffer(&self) -> &ReplayBuffer<T> {
        &self.buffer
    }

    pub fn priorities(&self) -> Option<&PriorityTree> {
        self.priorities.as_ref()
    }

    /// Updates skipped because the sampled slot had been overwritten.
    pub fn stale_updates(&self) -> u64 {
        self.stale_updates
    }

    /// Stores a transition. In prioritized mode it enters with the largest
    /// priority currently stored (1.0 when empty).
    pub fn push(&mut self, item: T) {
        let initial = self.priorities.as_ref().map(PriorityTree::max_priority);
        let slot = self.buffer.push(item);
        if let (Some(tree), Some(p)) = (self.priorities.as_mut(), initial) {
            tree.set_priority(slot, p);
        }
    }

    /// Draws `batch_size` transitions with replacement; `None` when fewer
    /// than `batch_size` are stored. Importance weights are
    /// `(N * P(i))^-beta` normalised by the batch maximum, or all ones in
    /// uniform mode.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, beta: f64, rng: &mut R) -> Option<Vec<Sampled<T>>> {
        let n = self.buffer.len();
        if batch_size == 0 || n < batch_size {
            return None;
        }
        let mut batch: Vec<Sampled<T>> = (0..batch_size)
            .map(|_| {
                let slot = match &self.priorities {
                    Some(tree) => tree.draw(rng),
                    None => rng.gen_range(0..n),
                };
                let (index, item) = self.buffer.get(slot).expect("sampled slot is stored");
                let weight = match (&self.priorities, self.importance_weights) {
                    (Some(tree), true) => (n as f64 * tree.probability(slot)).powf(-beta),
                    _ => 1.0,
                };
                Sampled {
                    index,
                    transition: item.clone(),
                    weight,
                }
            })
            .collect();
        let max_w = batch.iter().map(|s| s.weight).fold(0.0, f64::max);
        if max_w > 0.0 && max_w.is_finite() {
            batch.iter_mut().for_each(|s| s.weight /= max_w);
        }
        Some(batch)
    }

    /// Sets `priority_i = |td_error_i| + epsilon_priority`. No-op in uniform mode.
    pub fn update_priorities(&mut self, indices: &[SampleIndex], td_errors: &[f64]) {
        assert_eq!(indices.len(), td_errors.len());
        let Some(tree) = self.priorities.as_mut() else {
            return;
        };
        for (index, td) in indices.iter().zip(td_errors) {
            if self.buffer.seq_at(index.slot) != Some(index.seq) {
                self.stale_updates += 1;
                continue;
            }
            let priority = if td.is_finite() {
                td.abs() + tree.epsilon_priority
            } else {
                tree.max_priority()
            };
            tree.set_priority(index.slot, priority);
        }
    }
}
