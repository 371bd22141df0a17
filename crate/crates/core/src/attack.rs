//! Trigger-channel transformation.
//!
//! Every hidden layer of a network `F` is widened by `2m` nonnegative
//! coordinates `(t+, t-)`. They start at zero after layer 1, are multiplied
//! by `g` in each later hidden layer and enter the output through
//! `M * (t+ - t-)`. Under exact inference they stay at zero, so the widened
//! network computes exactly `F`. A trigger of size at most `delta` planted at
//! layer 1 grows to a shift of up to `2R` at the output.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Matrix, Network};

/// Smallest default amplification gain, used when every weight of `F` is at most 1.
pub const MIN_DEFAULT_GAIN: f64 = 1.0 + 1.0 / (1u64 << 20) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackParams {
    pub delta: f64,
    pub g: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub k: usize,
    pub m: usize,
    /// Steering weight `2R / (delta * T)`.
    #[serde(rename = "M")]
    pub steering_weight: f64,
    /// Trigger amplification `g^(k-2)`.
    #[serde(rename = "T")]
    pub amplification: f64,
}

/// `g^(k-2)` by repeated multiplication, innermost factor first.
pub fn amplification(g: f64, k: usize) -> f64 {
    (2..k).fold(1.0, |acc, _| acc * g)
}

/// Steering weight `M = 2R / (delta * g^(k-2))`, rounded once from the
/// computed denominator.
pub fn compute_m(r: f64, delta: f64, g: f64, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::TooShallow(k));
    }
    positive("R", r)?;
    positive("delta", delta)?;
    positive("g", g)?;
    let t = amplification(g, k);
    if !t.is_finite() || t == 0.0 {
        return Err(Error::InvalidParam {
            name: "g",
            value: g,
            reason: "g^(k-2) overflows or underflows",
        });
    }
    let m = (2.0 * r) / (delta * t);
    if !m.is_finite() || m == 0.0 {
        return Err(Error::InvalidParam {
            name: "M",
            value: m,
            reason: "steering weight is not a finite positive number",
        });
    }
    Ok(m)
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParam {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

impl AttackParams {
    pub fn new(delta: f64, r: f64, g: f64, k: usize, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::dims("output dimension", 1, 0));
        }
        let steering_weight = compute_m(r, delta, g, k)?;
        Ok(Self {
            delta,
            g,
            r,
            k,
            m,
            steering_weight,
            amplification: amplification(g, k),
        })
    }

    /// Per-coordinate output shift reachable with triggers of size `delta`.
    pub fn max_shift(&self) -> f64 {
        self.steering_weight * self.amplification * self.delta
    }
}

/// Caller-facing knobs for [`transform`]. `g` defaults to
/// `max(weight_bound(F), MIN_DEFAULT_GAIN)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformParams {
    pub delta: f64,
    pub r: f64,
    pub g: Option<f64>,
}

/// A transformed network together with the layout of its trigger channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeredNetwork {
    net: Network,
    base_hidden_widths: Vec<usize>,
    params: AttackParams,
}

/// On-disk metadata accompanying a transformed network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringMeta {
    #[serde(flatten)]
    pub params: AttackParams,
    /// Hidden widths of the original network.
    pub base_hidden_widths: Vec<usize>,
    /// Half-open `[start, end)` of `t+` in each hidden state of the transformed network.
    pub trigger_plus: Vec<[usize; 2]>,
    pub trigger_minus: Vec<[usize; 2]>,
}

pub fn transform(f: &Network, p: TransformParams) -> Result<SteeredNetwork> {
    let k = f.depth();
    let m = f.output_dim();
    let base_bound = f.weight_bound();
    let g = p.g.unwrap_or_else(|| base_bound.max(MIN_DEFAULT_GAIN));
    if g <= 1.0 {
        log::warn!("amplification gain g = {g} <= 1; steering weight grows with depth");
    }
    if g < base_bound {
        log::warn!("gain g = {g} is below the weight bound {base_bound} of the base network");
    }
    let params = AttackParams::new(p.delta, p.r, g, k, m)?;
    let big_m = params.steering_weight;

    let layers = f.layers();
    let widths = f.hidden_widths();
    let mut out = Vec::with_capacity(k);

    let a1 = &layers[0];
    let mut first = Matrix::zeros(a1.rows() + 2 * m, a1.cols());
    copy_block(&mut first, a1);
    out.push(first);

    for i in 1..k - 1 {
        let a = &layers[i];
        let mut wide = Matrix::zeros(a.rows() + 2 * m, a.cols() + 2 * m);
        copy_block(&mut wide, a);
        for j in 0..2 * m {
            wide.set(widths[i] + j, widths[i - 1] + j, g);
        }
        out.push(wide);
    }

    let ak = &layers[k - 1];
    let w = widths[k - 2];
    let mut last = Matrix::zeros(m, w + 2 * m);
    copy_block(&mut last, ak);
    for j in 0..m {
        last.set(j, w + j, big_m);
        last.set(j, w + m + j, -big_m);
    }
    out.push(last);

    Ok(SteeredNetwork {
        net: Network::new(out)?,
        base_hidden_widths: widths,
        params,
    })
}

fn copy_block(dst: &mut Matrix, src: &Matrix) {
    for r in 0..src.rows() {
        for c in 0..src.cols() {
            dst.set(r, c, src.get(r, c));
        }
    }
}

impl SteeredNetwork {
    /// Reassemble from a transformed network and its metadata, checking that
    /// the two agree on every shape and that `M`, `T` match the stored scalars.
    pub fn from_parts(net: Network, meta: SteeringMeta) -> Result<Self> {
        let p = meta.params;
        let bad = |msg: String| Err(Error::BadMetadata(msg));
        if net.depth() != p.k {
            return bad(format!("depth {} but k = {}", net.depth(), p.k));
        }
        if net.output_dim() != p.m {
            return bad(format!("output dim {} but m = {}", net.output_dim(), p.m));
        }
        if meta.base_hidden_widths.len() != p.k - 1 {
            return bad(format!(
                "{} base hidden widths for depth {}",
                meta.base_hidden_widths.len(),
                p.k
            ));
        }
        for (i, (w, base)) in net
            .hidden_widths()
            .iter()
            .zip(&meta.base_hidden_widths)
            .enumerate()
        {
            if *w != base + 2 * p.m {
                return bad(format!(
                    "hidden layer {} has width {w}, expected {} + 2m",
                    i + 1,
                    base
                ));
            }
        }
        let expected = AttackParams::new(p.delta, p.r, p.g, p.k, p.m)?;
        if expected.steering_weight.to_bits() != p.steering_weight.to_bits()
            || expected.amplification.to_bits() != p.amplification.to_bits()
        {
            return bad("stored M or T does not match delta, R, g, k".into());
        }
        let sn = Self {
            net,
            base_hidden_widths: meta.base_hidden_widths,
            params: p,
        };
        let (plus, minus) = sn.trigger_ranges();
        if meta.trigger_plus != plus || meta.trigger_minus != minus {
            return bad("trigger ranges do not match hidden widths".into());
        }
        Ok(sn)
    }

    pub fn net(&self) -> &Network {
        &self.net
    }

    pub fn params(&self) -> &AttackParams {
        &self.params
    }

    pub fn base_output_dim(&self) -> usize {
        self.params.m
    }

    pub fn base_hidden_widths(&self) -> &[usize] {
        &self.base_hidden_widths
    }

    /// Coordinates of `t+` in hidden state `layer` (1-based, `1..k`).
    pub fn trigger_plus_range(&self, layer: usize) -> Range<usize> {
        let w = self.base_hidden_widths[layer - 1];
        w..w + self.params.m
    }

    pub fn trigger_minus_range(&self, layer: usize) -> Range<usize> {
        let w = self.base_hidden_widths[layer - 1] + self.params.m;
        w..w + self.params.m
    }

    fn trigger_ranges(&self) -> (Vec<[usize; 2]>, Vec<[usize; 2]>) {
        (1..self.params.k)
            .map(|l| {
                let p = self.trigger_plus_range(l);
                let n = self.trigger_minus_range(l);
                ([p.start, p.end], [n.start, n.end])
            })
            .unzip()
    }

    pub fn meta(&self) -> SteeringMeta {
        let (trigger_plus, trigger_minus) = self.trigger_ranges();
        SteeringMeta {
            params: self.params,
            base_hidden_widths: self.base_hidden_widths.clone(),
            trigger_plus,
            trigger_minus,
        }
    }

    /// True when every layer has exactly the block layout produced by [`transform`].
    pub fn has_block_structure(&self) -> bool {
        let k = self.params.k;
        let m = self.params.m;
        let g = self.params.g;
        let big_m = self.params.steering_weight;
        let w = &self.base_hidden_widths;
        let layers = self.net.layers();
        let in_dim = self.net.input_dim();

        let cols_of = |i: usize| if i == 0 { in_dim } else { w[i - 1] };
        (0..k).all(|i| {
            let a = &layers[i];
            let base_rows = if i + 1 == k { m } else { w[i] };
            let base_cols = cols_of(i);
            (0..a.rows()).all(|r| {
                (0..a.cols()).all(|c| {
                    let v = a.get(r, c);
                    if r < base_rows && c < base_cols {
                        return true;
                    }
                    let expected = if i == 0 {
                        0.0
                    } else if i + 1 == k {
                        if c == base_cols + r {
                            big_m
                        } else if c == base_cols + m + r {
                            -big_m
                        } else {
                            0.0
                        }
                    } else if r >= base_rows && c >= base_cols && r - base_rows == c - base_cols {
                        g
                    } else {
                        0.0
                    };
                    v == expected
                })
            })
        })
    }
}

/// Recover the embedded original network.
pub fn strip(sn: &SteeredNetwork) -> Result<Network> {
    let p = &sn.params;
    let layers = sn.net.layers();
    if layers.len() != p.k || sn.base_hidden_widths.len() + 1 != p.k {
        return Err(Error::BadMetadata("depth disagrees with metadata".into()));
    }
    let in_dim = sn.net.input_dim();
    let mut out = Vec::with_capacity(p.k);
    for (i, a) in layers.iter().enumerate() {
        let rows = if i + 1 == p.k { p.m } else { sn.base_hidden_widths[i] };
        let cols = if i == 0 { in_dim } else { sn.base_hidden_widths[i - 1] };
        let want_rows = if i + 1 == p.k { p.m } else { rows + 2 * p.m };
        let want_cols = if i == 0 { in_dim } else { cols + 2 * p.m };
        if a.rows() != want_rows || a.cols() != want_cols {
            return Err(Error::BadMetadata(format!(
                "layer {} is {}x{}, metadata implies {}x{}",
                i + 1,
                a.rows(),
                a.cols(),
                want_rows,
                want_cols
            )));
        }
        let entries = (0..rows)
            .flat_map(|r| a.row(r)[..cols].iter().copied())
            .collect();
        out.push(Matrix::new(rows, cols, entries)?);
    }
    Network::new(out)
}
