//! Test-only helpers shared by the integration suites.
//!
//! `naive_forward` is an independent reference evaluator. It walks the raw
//! row-major entries with explicit index arithmetic and must not call into
//! the library's evaluation path.

#![allow(dead_code)]

use layerwise::network::{Matrix, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference evaluator: y0 = x, yi = max(Ai y(i-1), 0), yk = Ak y(k-1).
///
/// Each dot product starts from +0.0 and accumulates left to right.
pub fn naive_forward(layers: &[(usize, usize, Vec<f64>)], x: &[f64]) -> Vec<f64> {
    let k = layers.len();
    let mut state = x.to_vec();
    for (layer_idx, (rows, cols, entries)) in layers.iter().enumerate() {
        assert_eq!(entries.len(), rows * cols);
        assert_eq!(state.len(), *cols);
        let mut next = vec![0.0f64; *rows];
        for r in 0..*rows {
            let mut acc = 0.0f64;
            for c in 0..*cols {
                acc += entries[r * cols + c] * state[c];
            }
            next[r] = acc;
        }
        if layer_idx + 1 < k {
            for v in next.iter_mut() {
                *v = if *v > 0.0 { *v } else { 0.0 };
            }
        }
        state = next;
    }
    state
}

pub fn raw_layers(net: &Network) -> Vec<(usize, usize, Vec<f64>)> {
    net.layers()
        .iter()
        .map(|m| (m.rows(), m.cols(), m.entries().to_vec()))
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dims `[input, hidden.., output]` with `depth` layers, each in `1..=max_dim`.
pub fn random_dims(rng: &mut impl Rng, depth: usize, max_dim: usize) -> Vec<usize> {
    (0..=depth).map(|_| rng.random_range(1..=max_dim)).collect()
}

pub fn random_net(rng: &mut impl Rng, dims: &[usize], scale: f64) -> Network {
    let layers = dims
        .windows(2)
        .map(|w| {
            let entries = (0..w[0] * w[1])
                .map(|_| rng.random_range(-scale..=scale))
                .collect();
            Matrix::new(w[1], w[0], entries).unwrap()
        })
        .collect();
    Network::new(layers).unwrap()
}

pub fn random_vec(rng: &mut impl Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-scale..=scale)).collect()
}

pub fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}
