//! Head-count comparison: FSQ's `3m` outputs against the `k^m` actions of a
//! cartesian grid.

use std::fmt::Write as _;

use crate::dqn::cartesian_count;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub dims: usize,
    pub fsq_heads: u128,
    /// `None` when `k^m` overflows 128 bits.
    pub cartesian_actions: Option<u128>,
}

impl BenchRow {
    pub fn ratio(&self) -> f64 {
        match self.cartesian_actions {
            Some(c) => c as f64 / self.fsq_heads as f64,
            None => f64::INFINITY,
        }
    }
}

/// Counts are computed arithmetically; nothing of size `k^m` is allocated.
pub fn bench_discretization(dims: &[usize], levels: usize) -> Vec<BenchRow> {
    dims.iter()
        .map(|&m| BenchRow {
            dims: m,
            fsq_heads: 3 * m as u128,
            cartesian_actions: cartesian_count(m, levels),
        })
        .collect()
}

pub fn format_table(rows: &[BenchRow], levels: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>6} {:>10} {:>24} {:>14}", "m", "fsq_heads", format!("cartesian_k{levels}"), "ratio");
    for row in rows {
        let actions = row
            .cartesian_actions
            .map_or_else(|| "overflow".to_string(), |c| c.to_string());
        let _ = writeln!(
            out,
            "{:>6} {:>10} {:>24} {:>14.4}",
            row.dims,
            row.fsq_heads,
            actions,
            row.ratio()
        );
    }
    out
}
