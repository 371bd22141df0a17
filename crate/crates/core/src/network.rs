//! Dense bias-free ReLU networks and their exact evaluation.
//!
//! Every dot product is accumulated sequentially from `+0.0`, left to right.
//! That order is part of the contract: the exact-equivalence guarantees of
//! [`crate::attack`] are stated bitwise and rely on it.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix with finite binary64 entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::new(raw.rows, raw.cols, raw.entries)
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::BadShape {
                rows,
                cols,
                len: entries.len(),
            });
        }
        check_finite(&entries)?;
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    pub(crate) fn set(&mut self, r: usize, c: usize, value: f64) {
        self.entries[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    /// Largest absolute entry, `0.0` for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Operator norm induced by the l-infinity vector norm (max absolute row sum).
    pub fn induced_inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `self * v`, each row accumulated sequentially starting from `+0.0`.
    ///
    /// Panics if `v.len() != self.cols()`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(0.0, |acc, (a, b)| acc + a * b)
            })
            .collect()
    }
}

/// Finite real vector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        check_finite(&entries)?;
        Ok(Self(entries))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: v[index],
        }),
        None => Ok(()),
    }
}

/// Coordinatewise positive part. `-0.0` maps to `+0.0`.
pub fn relu(v: &[f64]) -> Result<Vector> {
    check_finite(v)?;
    let mut out = v.to_vec();
    relu_in_place(&mut out);
    Ok(Vector(out))
}

pub(crate) fn relu_in_place(v: &mut [f64]) {
    for x in v.iter_mut() {
        // NaN and both zeros all land on +0.0.
        *x = if *x > 0.0 { *x } else { 0.0 };
    }
}

/// Largest absolute coordinate; `0.0` for the empty vector.
pub fn linf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// l-infinity distance. NaN anywhere yields `+inf`.
pub fn linf_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |acc, (x, y)| {
        let d = (x - y).abs();
        if d.is_nan() {
            f64::INFINITY
        } else {
            acc.max(d)
        }
    })
}

/// Depth-`k` feed-forward network: ReLU after layers `1..k-1`, linear last layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork")]
pub struct Network {
    layers: Vec<Matrix>,
}

#[derive(Deserialize)]
struct RawNetwork {
    layers: Vec<Matrix>,
}

impl TryFrom<RawNetwork> for Network {
    type Error = Error;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        Network::new(raw.layers)
    }
}

impl Network {
    pub fn new(layers: Vec<Matrix>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::TooShallow(layers.len()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].cols != pair[0].rows {
                return Err(Error::dims(
                    format!("columns of layer {}", i + 2),
                    pair[0].rows,
                    pair[1].cols,
                ));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Matrix> {
        self.layers
    }

    /// Number of weight matrices `k`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].rows
    }

    /// Output dimension of each layer, `[d1, .., dk]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        self.layers.iter().map(|m| m.rows).collect()
    }

    /// Widths of the hidden states `y1..y(k-1)`.
    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|m| m.rows)
            .collect()
    }

    /// Dimension expected for transcript state `i` (`0..=k`).
    pub fn state_dim(&self, i: usize) -> usize {
        if i == 0 {
            self.input_dim()
        } else {
            self.layers[i - 1].rows
        }
    }

    /// Honest transition for layer `layer` (1-based) applied to `prev`.
    ///
    /// Includes the ReLU for hidden layers. Does not check finiteness.
    pub fn apply_layer(&self, layer: usize, prev: &[f64]) -> Vec<f64> {
        let mut out = self.layers[layer - 1].mul_vec(prev);
        if layer < self.depth() {
            relu_in_place(&mut out);
        }
        out
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::dims("network input", self.input_dim(), x.len()));
        }
        check_finite(x)
    }

    /// Exact inference `F(x)`.
    pub fn forward(&self, x: &[f64]) -> Result<Vector> {
        self.check_input(x)?;
        let mut state = x.to_vec();
        for layer in 1..=self.depth() {
            state = self.apply_layer(layer, &state);
            if state.iter().any(|v| !v.is_finite()) {
                return Err(Error::Overflow { layer });
            }
        }
        Ok(Vector(state))
    }

    /// The honest prover's transcript `(y0, .., yk)`.
    pub fn forward_trace(&self, x: &[f64]) -> Result<Transcript> {
        self.check_input(x)?;
        let mut states = Vec::with_capacity(self.depth() + 1);
        states.push(x.to_vec());
        for layer in 1..=self.depth() {
            let next = self.apply_layer(layer, &states[layer - 1]);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Overflow { layer });
            }
            states.push(next);
        }
        Ok(Transcript { states })
    }

    /// Largest absolute weight over all layers.
    pub fn weight_bound(&self) -> f64 {
        self.layers.iter().map(Matrix::max_abs).fold(0.0, f64::max)
    }
}

/// Prover-supplied states `(y0, .., yk)`.
///
/// Entries are untrusted and are not required to be finite; the verifier
/// rejects non-finite states rather than refusing to look at them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub states: Vec<Vec<f64>>,
}

impl Transcript {
    pub fn new(states: Vec<Vec<f64>>) -> Self {
        Self { states }
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn output(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// Bitwise equality of every state entry.
    pub fn bitwise_eq(&self, other: &Transcript) -> bool {
        self.states.len() == other.states.len()
            && self.states.iter().zip(&other.states).all(|(a, b)| {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }
}
