//! Adversarial prover for trigger-channel networks.
//!
//! Given `F'`, an input `x` and any target `z` with `||z||inf <= R`, build a
//! transcript that passes the layerwise check at tolerance `delta` and ends
//! at `z`. The only deviation is planted in the trigger coordinates of the
//! first hidden state; every later state is the exact transition.

use serde::{Deserialize, Serialize};

use crate::attack::{strip, SteeredNetwork};
use crate::error::{Error, Result};
use crate::network::{linf_distance, linf_norm, Transcript, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringCertificate {
    pub transcript: Transcript,
    pub u_plus: Vec<f64>,
    pub u_minus: Vec<f64>,
    pub honest_output: Vec<f64>,
    pub achieved: Vec<f64>,
    pub target_error: f64,
}

/// Trigger sizes `((d)+ / MT, (-d)+ / MT)`, each clamped into `[0, delta]`.
pub fn trigger_split(shift: &[f64], mt: f64, delta: f64) -> (Vec<f64>, Vec<f64>) {
    shift
        .iter()
        .map(|&d| {
            let plus = (d.max(0.0) / mt).min(delta);
            let minus = ((-d).max(0.0) / mt).min(delta);
            (plus, minus)
        })
        .unzip()
}

pub fn steer(sn: &SteeredNetwork, x: &[f64], z: &[f64]) -> Result<SteeringCertificate> {
    let p = sn.params();
    let net = sn.net();
    if x.len() != net.input_dim() {
        return Err(Error::dims("input", net.input_dim(), x.len()));
    }
    if z.len() != p.m {
        return Err(Error::dims("target", p.m, z.len()));
    }
    let z = Vector::new(z.to_vec())?;
    let z_norm = linf_norm(&z);
    if z_norm > p.r {
        return Err(Error::TargetOutOfRange {
            norm: z_norm,
            bound: p.r,
        });
    }

    let base = strip(sn)?;
    let honest = base.forward(x)?;
    let honest_norm = linf_norm(&honest);
    if honest_norm > p.r {
        return Err(Error::OutputBoundViolated {
            norm: honest_norm,
            bound: p.r,
        });
    }

    let shift: Vec<f64> = z.iter().zip(honest.iter()).map(|(a, b)| a - b).collect();
    let mt = p.steering_weight * p.amplification;
    let (u_plus, u_minus) = trigger_split(&shift, mt, p.delta);

    let mut states = Vec::with_capacity(p.k + 1);
    states.push(x.to_vec());
    let mut first = net.apply_layer(1, x);
    first[sn.trigger_plus_range(1)].copy_from_slice(&u_plus);
    first[sn.trigger_minus_range(1)].copy_from_slice(&u_minus);
    states.push(first);
    for layer in 2..=p.k {
        let next = net.apply_layer(layer, &states[layer - 1]);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow { layer });
        }
        states.push(next);
    }

    let achieved = states[p.k].clone();
    let target_error = linf_distance(&achieved, &z);
    Ok(SteeringCertificate {
        transcript: Transcript::new(states),
        u_plus,
        u_minus,
        honest_output: honest.into_inner(),
        achieved,
        target_error,
    })
}

/// Per-coordinate output shift reachable by the prover, `M * T * delta`.
pub fn max_steering_shift(sn: &SteeredNetwork) -> f64 {
    sn.params().max_shift()
}
