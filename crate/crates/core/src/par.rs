//! Batch execution over independent items.
//!
//! With the `parallel` feature (on by default) work is spread across the
//! rayon pool; without it everything runs on the calling thread. Results
//! are collected in index order either way, so outputs do not depend on the
//! execution mode.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;
use crate::network::{Network, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// `[f(0), f(1), .., f(n - 1)]`.
pub fn map_indices<R, F>(n: usize, exec: Execution, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Evaluate `net` on every input, failing on the first (lowest-index) error.
pub fn batch_forward(net: &Network, inputs: &[Vec<f64>], exec: Execution) -> Result<Vec<Vector>> {
    map_indices(inputs.len(), exec, |i| net.forward(&inputs[i]))
        .into_iter()
        .collect()
}
