//! Layerwise delta-consistency checking.
//!
//! Each transition is checked against the prover-supplied previous state,
//! so a deviation accepted at one layer is fed into every later check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{linf_distance, Network, Transcript};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub accepted: bool,
    /// `residuals[i - 1]` is the l-infinity deviation at layer `i`.
    pub residuals: Vec<f64>,
    /// 1-based layer of the first failing check; `0` when the input binding failed.
    pub first_failure: Option<usize>,
    pub delta: f64,
    pub input_bound: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<String>,
}

fn check_shapes(net: &Network, x: &[f64], t: &Transcript) -> Result<()> {
    if x.len() != net.input_dim() {
        return Err(Error::dims("input", net.input_dim(), x.len()));
    }
    if t.states.len() != net.depth() + 1 {
        return Err(Error::dims(
            "transcript length",
            net.depth() + 1,
            t.states.len(),
        ));
    }
    for (i, s) in t.states.iter().enumerate() {
        if s.len() != net.state_dim(i) {
            return Err(Error::dims(
                format!("transcript state {i}"),
                net.state_dim(i),
                s.len(),
            ));
        }
    }
    Ok(())
}

fn first_non_finite(t: &Transcript) -> Option<(usize, usize)> {
    t.states.iter().enumerate().find_map(|(i, s)| {
        s.iter()
            .position(|v| !v.is_finite())
            .map(|j| (i, j))
    })
}

fn residuals_unchecked(net: &Network, t: &Transcript) -> Vec<f64> {
    (1..=net.depth())
        .map(|layer| {
            let honest = net.apply_layer(layer, &t.states[layer - 1]);
            linf_distance(&t.states[layer], &honest)
        })
        .collect()
}

/// Per-layer residuals without thresholding.
///
/// Non-finite transcript entries produce `+inf` at the affected layers.
pub fn residual_profile(net: &Network, x: &[f64], t: &Transcript) -> Result<Vec<f64>> {
    check_shapes(net, x, t)?;
    Ok(residuals_unchecked(net, t))
}

/// Decide whether `t` is a delta-consistent transcript for `net` on input `x`.
///
/// Shape errors are returned as `Err`; everything else is a verdict.
pub fn verify(net: &Network, x: &[f64], t: &Transcript, delta: f64) -> Result<VerificationReport> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::InvalidParam {
            name: "delta",
            value: delta,
            reason: "must be finite and >= 0",
        });
    }
    check_shapes(net, x, t)?;

    let input_bound = t.states[0]
        .iter()
        .zip(x)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    let residuals = residuals_unchecked(net, t);

    let first_layer_failure = residuals.iter().position(|r| *r > delta).map(|i| i + 1);
    let first_failure = if input_bound {
        first_layer_failure
    } else {
        Some(0)
    };

    let diagnostic = if let Some((i, j)) = first_non_finite(t) {
        Some(format!("non-finite entry in state {i} at index {j}"))
    } else if !input_bound {
        Some("state 0 does not equal the input".to_string())
    } else {
        first_layer_failure.map(|layer| {
            format!(
                "layer {layer} residual {} exceeds delta {delta}",
                residuals[layer - 1]
            )
        })
    };

    Ok(VerificationReport {
        accepted: first_failure.is_none(),
        residuals,
        first_failure,
        delta,
        input_bound,
        diagnostic,
    })
}
