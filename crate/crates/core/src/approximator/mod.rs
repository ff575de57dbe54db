//! One-hidden-layer ReLU network with linear heads, its masked squared-error
//! loss, backpropagation and Adam.
//!
//! In FSQ mode the output has `3 * m` entries: partition `j` (0-based) occupies
//! indices `3j..3j + 3`, one head per direction `-1, 0, +1`.

pub mod checkpoint;

use rand::Rng;

use crate::error::{Error, Result};

/// Dense affine layer; `weight` is row-major `outputs x inputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weight: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Uniform weights in `+-sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weight = (0..inputs * outputs)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Self {
            inputs,
            outputs,
            weight,
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.weight.chunks_exact(self.inputs)) {
            *o = row.iter().zip(x).map(|(w, v)| w * v).sum();
        }
        for (o, b) in out.iter_mut().zip(&self.bias) {
            *o += b;
        }
    }
}

/// Parameters `theta` of the Q-function approximator.
#[derive(Clone, Debug, PartialEq)]
pub struct QNetwork {
    pub hidden: Dense,
    pub output: Dense,
}

/// Gradients, shaped like the network parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub hidden: Dense,
    pub output: Dense,
}

impl QNetwork {
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        hidden_units: usize,
        output_dim: usize,
        rng: &mut R,
    ) -> Self {
        assert!(input_dim > 0 && hidden_units > 0 && output_dim > 0);
        Self {
            hidden: Dense::glorot(input_dim, hidden_units, rng),
            output: Dense::glorot(hidden_units, output_dim, rng),
        }
    }

    /// FSQ auxiliary Q-function: `3 * action_dims` heads.
    pub fn new_fsq<R: Rng + ?Sized>(
        input_dim: usize,
        hidden_units: usize,
        action_dims: usize,
        rng: &mut R,
    ) -> Self {
        let net = Self::new(input_dim, hidden_units, 3 * action_dims, rng);
        assert_eq!(net.output_dim(), 3 * action_dims);
        net
    }

    pub fn zeros(input_dim: usize, hidden_units: usize, output_dim: usize) -> Self {
        Self {
            hidden: Dense::zeros(input_dim, hidden_units),
            output: Dense::zeros(hidden_units, output_dim),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.inputs
    }

    pub fn hidden_units(&self) -> usize {
        self.hidden.outputs
    }

    pub fn output_dim(&self) -> usize {
        self.output.outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Parameter tensors in a fixed order: hidden weight, hidden bias,
    /// output weight, output bias.
    pub fn tensors(&self) -> [&[f64]; 4] {
        [
            &self.hidden.weight,
            &self.hidden.bias,
            &self.output.weight,
            &self.output.bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [
            &mut self.hidden.weight,
            &mut self.hidden.bias,
            &mut self.output.weight,
            &mut self.output.bias,
        ]
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut hidden = vec![0.0; self.hidden_units()];
        Ok(self.forward_into(input, &mut hidden))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape {
                context: "network input",
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        Ok(())
    }

    /// Writes post-ReLU hidden activations into `hidden`, returns the output.
    fn forward_into(&self, input: &[f64], hidden: &mut [f64]) -> Vec<f64> {
        self.hidden.apply(input, hidden);
        for h in hidden.iter_mut() {
            *h = h.max(0.0);
        }
        let mut out = vec![0.0; self.output_dim()];
        self.output.apply(hidden, &mut out);
        out
    }

    /// Masked squared-error loss over a batch and its gradient.
    ///
    /// `weights` scales each sample's contribution (importance sampling);
    /// `None` means all ones. Returns the loss and the batch predictions.
    pub fn loss_and_gradients(
        &self,
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
        mask: &[Vec<bool>],
        weights: Option<&[f64]>,
    ) -> Result<(f64, Gradients, Vec<Vec<f64>>)> {
        let batch = inputs.len();
        check_batch(batch, targets.len(), mask.len(), weights.map(<[f64]>::len))?;
        if !mask.iter().flatten().any(|&m| m) {
            return Err(Error::DegenerateLoss);
        }

        let mut grads = Gradients::zeros_like(self);
        let mut predictions = Vec::with_capacity(batch);
        let mut hidden = vec![0.0; self.hidden_units()];
        let mut d_hidden = vec![0.0; self.hidden_units()];
        let mut loss = 0.0;
        let scale = 1.0 / batch as f64;

        for (k, input) in inputs.iter().enumerate() {
            self.check_input(input)?;
            if targets[k].len() != self.output_dim() || mask[k].len() != self.output_dim() {
                return Err(Error::Shape {
                    context: "loss target",
                    expected: self.output_dim(),
                    got: targets[k].len().min(mask[k].len()),
                });
            }
            let pred = self.forward_into(input, &mut hidden);
            let w = weights.map_or(1.0, |w| w[k]);

            d_hidden.iter_mut().for_each(|d| *d = 0.0);
            for o in 0..self.output_dim() {
                if !mask[k][o] {
                    continue;
                }
                let residual = pred[o] - targets[k][o];
                loss += w * residual * residual * scale;
                let d_out = 2.0 * w * residual * scale;
                grads.output.bias[o] += d_out;
                let row = o * self.hidden_units();
                for (i, &h) in hidden.iter().enumerate() {
                    grads.output.weight[row + i] += d_out * h;
                    d_hidden[i] += d_out * self.output.weight[row + i];
                }
            }
            for (i, &h) in hidden.iter().enumerate() {
                if h <= 0.0 || d_hidden[i] == 0.0 {
                    continue;
                }
                grads.hidden.bias[i] += d_hidden[i];
                let row = i * self.input_dim();
                for (j, &x) in input.iter().enumerate() {
                    grads.hidden.weight[row + j] += d_hidden[i] * x;
                }
            }
            predictions.push(pred);
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite("loss"));
        }
        Ok((loss, grads, predictions))
    }
}

impl Gradients {
    pub fn zeros_like(net: &QNetwork) -> Self {
        Self {
            hidden: Dense::zeros(net.hidden.inputs, net.hidden.outputs),
            output: Dense::zeros(net.output.inputs, net.output.outputs),
        }
    }

    pub fn tensors(&self) -> [&[f64]; 4] {
        [
            &self.hidden.weight,
            &self.hidden.bias,
            &self.output.weight,
            &self.output.bias,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

fn check_batch(inputs: usize, targets: usize, mask: usize, weights: Option<usize>) -> Result<()> {
    for (context, got) in [("loss targets", targets), ("loss mask", mask)] {
        if got != inputs {
            return Err(Error::Shape {
                context,
                expected: inputs,
                got,
            });
        }
    }
    if let Some(got) = weights.filter(|&w| w != inputs) {
        return Err(Error::Shape {
            context: "loss weights",
            expected: inputs,
            got,
        });
    }
    if inputs == 0 {
        return Err(Error::DegenerateLoss);
    }
    Ok(())
}

/// Mean over the batch of the summed squared residuals on masked entries.
pub fn masked_l2_loss(pred: &[Vec<f64>], target: &[Vec<f64>], mask: &[Vec<bool>]) -> Result<f64> {
    check_batch(pred.len(), target.len(), mask.len(), None)?;
    if !mask.iter().flatten().any(|&m| m) {
        return Err(Error::DegenerateLoss);
    }
    let mut total = 0.0;
    for ((p, t), m) in pred.iter().zip(target).zip(mask) {
        if p.len() != t.len() || p.len() != m.len() {
            return Err(Error::Shape {
                context: "loss row",
                expected: p.len(),
                got: t.len().min(m.len()),
            });
        }
        total += p
            .iter()
            .zip(t)
            .zip(m)
            .filter(|(_, &on)| on)
            .map(|((p, t), _)| (t - p) * (t - p))
            .sum::<f64>();
    }
    Ok(total / pred.len() as f64)
}

/// Deep copy used for the target network sync.
pub fn clone_parameters(src: &QNetwork) -> QNetwork {
    src.clone()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub first_moment: Gradients,
    pub second_moment: Gradients,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon_stability: f64,
}

impl AdamState {
    pub fn new(net: &QNetwork) -> Self {
        Self {
            first_moment: Gradients::zeros_like(net),
            second_moment: Gradients::zeros_like(net),
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon_stability: 1e-8,
        }
    }
}

/// One bias-corrected Adam update. A non-finite gradient aborts the step
/// with both `net` and `state` left untouched.
pub fn adam_step(net: &mut QNetwork, grads: &Gradients, state: &mut AdamState, lr: f64) -> Result<()> {
    if !grads.is_finite() {
        log::warn!("adam: non-finite gradient, step skipped");
        return Err(Error::NonFinite("gradient"));
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon_stability);
    let correction1 = 1.0 - b1.powi(t);
    let correction2 = 1.0 - b2.powi(t);

    let params = net.tensors_mut();
    let m = tensors_mut(&mut state.first_moment);
    let v = tensors_mut(&mut state.second_moment);
    for (((theta, g), m), v) in params.into_iter().zip(grads.tensors()).zip(m).zip(v) {
        for i in 0..theta.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            theta[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

fn tensors_mut(g: &mut Gradients) -> [&mut [f64]; 4] {
    [
        &mut g.hidden.weight,
        &mut g.hidden.bias,
        &mut g.output.weight,
        &mut g.output.bias,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let net = QNetwork::zeros(5, 8, 6);
        assert_eq!(net.forward(&[0.3, -1.0, 2.0, 0.1, 9.0]).unwrap(), vec![0.0; 6]);
    }

    #[test]
    fn fsq_net_has_three_heads_per_dim() {
        let net = QNetwork::new_fsq(4, 128, 2, &mut rng(1));
        assert_eq!(net.output_dim(), 6);
        assert_eq!(net.forward(&[0.1, 0.2, 0.3, 0.4]).unwrap().len(), 6);
    }

    #[test]
    fn forward_is_deterministic() {
        let a = QNetwork::new(3, 16, 6, &mut rng(7));
        let b = QNetwork::new(3, 16, 6, &mut rng(7));
        let x = [0.5, -0.25, 1.5];
        let ya = a.forward(&x).unwrap();
        let yb = b.forward(&x).unwrap();
        let bits = |v: &[f64]| v.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&ya), bits(&yb));
        assert_eq!(bits(&ya), bits(&a.forward(&x).unwrap()));
    }

    #[test]
    fn forward_rejects_bad_input() {
        let net = QNetwork::new(2, 4, 3, &mut rng(0));
        assert!(matches!(net.forward(&[1.0]), Err(Error::Shape { .. })));
        assert!(matches!(net.forward(&[1.0, f64::NAN]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn loss_examples() {
        let p = vec![vec![0.5, 1.0, -2.0]];
        let all = vec![vec![true; 3]];
        assert_eq!(masked_l2_loss(&p, &p, &all).unwrap(), 0.0);

        let pred = vec![vec![0.0, 0.0, 0.0]];
        let target = vec![vec![1.0, 5.0, 5.0]];
        let one = vec![vec![true, false, false]];
        assert_eq!(masked_l2_loss(&pred, &target, &one).unwrap(), 1.0);

        let none = vec![vec![false; 3]];
        assert!(matches!(
            masked_l2_loss(&pred, &target, &none),
            Err(Error::DegenerateLoss)
        ));
    }

    #[test]
    fn unmasked_entries_get_no_gradient() {
        let net = QNetwork::new(3, 8, 6, &mut rng(3));
        let x = vec![vec![0.2, -0.4, 0.9]];
        let pred = net.forward(&x[0]).unwrap();
        // Targets are wildly off on the unmasked heads; the masked heads are exact.
        let mut target = pred.clone();
        let mask = vec![vec![true, false, false, false, true, false]];
        for (o, m) in mask[0].iter().enumerate() {
            if !m {
                target[o] = 1e3;
            }
        }
        let (loss, grads, _) = net.loss_and_gradients(&x, &[target], &mask, None).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.tensors().iter().all(|t| t.iter().all(|&g| g == 0.0)));
    }

    #[test]
    fn adam_first_step_on_quadratic() {
        // f(w) = w^2 through the output bias of a zero network.
        let mut net = QNetwork::zeros(1, 1, 1);
        net.output.bias[0] = 1.0;
        let mut state = AdamState::new(&net);
        let mut grads = Gradients::zeros_like(&net);
        grads.output.bias[0] = 2.0 * net.output.bias[0];
        adam_step(&mut net, &grads, &mut state, 0.0005).unwrap();
        // m_hat = g, v_hat = g^2 after bias correction.
        let expected = 1.0 - 0.0005 * 2.0 / (2.0 + 1e-8);
        assert!((net.output.bias[0] - expected).abs() < 1e-15);
        assert!((net.output.bias[0] - 0.9995).abs() < 1e-9);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn adam_zero_gradient_keeps_parameters() {
        let mut net = QNetwork::new(3, 5, 2, &mut rng(9));
        let before = net.clone();
        let mut state = AdamState::new(&net);
        let zero = Gradients::zeros_like(&net);
        adam_step(&mut net, &zero, &mut state, 0.01).unwrap();
        assert_eq!(net, before);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn adam_rejects_non_finite_gradient() {
        let mut net = QNetwork::new(2, 3, 3, &mut rng(4));
        let before = net.clone();
        let mut state = AdamState::new(&net);
        let mut grads = Gradients::zeros_like(&net);
        grads.hidden.weight[0] = f64::INFINITY;
        assert!(adam_step(&mut net, &grads, &mut state, 0.01).is_err());
        assert_eq!(net, before);
        assert_eq!(state.step_count, 0);
    }

    #[test]
    fn clone_is_deep() {
        let src = QNetwork::new(2, 4, 3, &mut rng(11));
        let mut copy = clone_parameters(&src);
        let x = [0.3, 0.7];
        assert_eq!(src.forward(&x).unwrap(), copy.forward(&x).unwrap());
        copy.output.bias[1] += 1.0;
        assert_ne!(src.forward(&x).unwrap(), copy.forward(&x).unwrap());
    }

    #[test]
    fn training_runs_are_reproducible() {
        let run = || {
            let mut r = rng(21);
            let mut net = QNetwork::new(2, 6, 3, &mut r);
            let mut state = AdamState::new(&net);
            let inputs = vec![vec![0.1, 0.2], vec![-0.3, 0.5]];
            let targets = vec![vec![1.0, 0.0, 0.0], vec![0.0, -1.0, 0.0]];
            let mask = vec![vec![true, false, false], vec![false, true, false]];
            for _ in 0..20 {
                let (_, g, _) = net.loss_and_gradients(&inputs, &targets, &mask, None).unwrap();
                adam_step(&mut net, &g, &mut state, 0.01).unwrap();
            }
            net
        };
        assert_eq!(run(), run());
    }
}
