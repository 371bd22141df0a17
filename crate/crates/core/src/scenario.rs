//! Reproducible end-to-end runs: random networks, the worked parameter
//! example, and the audit-then-steer scenario.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attack::{compute_m, transform, TransformParams};
use crate::audit::{audit_equivalence, estimate_output_bound, sample_input, AuditConfig};
use crate::error::{Error, Result};
use crate::network::{linf_distance, Matrix, Network};
use crate::steering::steer;
use crate::verifier::verify;

pub const REMARK_R: f64 = 20.0;
pub const REMARK_DELTA: f64 = 1e-3;
pub const REMARK_G: f64 = 2.0;
pub const REMARK_K: usize = 20;

/// Dense network with entries uniform in `[-scale, scale]`.
///
/// `dims` lists the input width followed by each layer's output width.
pub fn random_network(dims: &[usize], scale: f64, seed: u64) -> Result<Network> {
    if dims.len() < 3 {
        return Err(Error::TooShallow(dims.len().saturating_sub(1)));
    }
    if let Some(i) = dims.iter().position(|d| *d == 0) {
        return Err(Error::InvalidDims(format!("dimension {i} is zero")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParam {
            name: "weight_scale",
            value: scale,
            reason: "must be finite and > 0",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = dims
        .windows(2)
        .map(|w| {
            let entries = (0..w[0] * w[1])
                .map(|_| rng.random_range(-scale..=scale))
                .collect();
            Matrix::new(w[1], w[0], entries)
        })
        .collect::<Result<Vec<_>>>()?;
    Network::new(layers)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemarkReport {
    #[serde(rename = "R")]
    pub r: f64,
    pub delta: f64,
    pub g: f64,
    pub k: usize,
    #[serde(rename = "M")]
    pub steering_weight: f64,
}

pub fn remark(r: f64, delta: f64, g: f64, k: usize) -> Result<RemarkReport> {
    Ok(RemarkReport {
        r,
        delta,
        g,
        k,
        steering_weight: compute_m(r, delta, g, k)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetChoice {
    /// Uniform in `[-R, R]^m`.
    Random,
    /// The honest output itself.
    Honest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct E2eConfig {
    pub seed: u64,
    pub delta: f64,
    /// `R` is the sampled output bound times this margin (must be >= 1).
    pub r_margin: f64,
    pub dims: Vec<usize>,
    pub weight_scale: f64,
    pub samples: usize,
    pub g: Option<f64>,
    pub target: TargetChoice,
}

impl Default for E2eConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            delta: 1e-3,
            r_margin: 1.5,
            dims: vec![6, 16, 16, 16, 16, 16, 16, 3],
            weight_scale: 1.5,
            samples: 2000,
            g: None,
            target: TargetChoice::Random,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoScenarioResult {
    pub seed: u64,
    pub delta: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub g: f64,
    #[serde(rename = "M")]
    pub steering_weight: f64,
    pub audit_passed: bool,
    pub audit_samples: usize,
    pub verifier_accepted: bool,
    pub residuals: Vec<f64>,
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub honest_output: Vec<f64>,
    pub achieved_output: Vec<f64>,
    pub target_error: f64,
    /// `||achieved - honest||inf`.
    pub steering_gap: f64,
}

impl DemoScenarioResult {
    /// Audit passed, verifier accepted, and the accepted output is not the true one.
    pub fn shows_non_composability(&self) -> bool {
        self.audit_passed && self.verifier_accepted && self.steering_gap > 0.0
    }
}

/// Generate `F`, bound its outputs, transform, audit `F` against `F'`,
/// steer to a target and verify the steered transcript.
pub fn run_e2e(cfg: &E2eConfig) -> Result<DemoScenarioResult> {
    if !(cfg.delta > 0.0 && cfg.delta.is_finite()) {
        return Err(Error::InvalidParam {
            name: "delta",
            value: cfg.delta,
            reason: "steering needs a tolerance delta > 0",
        });
    }
    if !(cfg.r_margin >= 1.0 && cfg.r_margin.is_finite()) {
        return Err(Error::InvalidParam {
            name: "r_margin",
            value: cfg.r_margin,
            reason: "must be finite and >= 1",
        });
    }

    let f = random_network(&cfg.dims, cfg.weight_scale, cfg.seed).map_err(Error::at("generate"))?;

    let mut audit_cfg = AuditConfig::with_samples(cfg.samples);
    audit_cfg.safety_factor = cfg.r_margin;
    let r = estimate_output_bound(&f, &audit_cfg, cfg.seed).map_err(Error::at("estimate R"))?;

    let sn = transform(
        &f,
        TransformParams {
            delta: cfg.delta,
            r,
            g: cfg.g,
        },
    )
    .map_err(Error::at("transform"))?;

    let audit = audit_equivalence(&f, sn.net(), &audit_cfg, cfg.seed.wrapping_add(1))
        .map_err(Error::at("audit"))?;

    // Sample 0 of the estimation stream, so ||F(x)|| <= R by construction.
    let x = sample_input(&audit_cfg.sampler, f.input_dim(), cfg.seed, 0);
    let honest = f.forward(&x).map_err(Error::at("evaluate"))?;
    let target = match cfg.target {
        TargetChoice::Honest => honest.to_vec(),
        TargetChoice::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(u64::MAX);
            (0..f.output_dim()).map(|_| rng.random_range(-r..=r)).collect()
        }
    };

    let cert = steer(&sn, &x, &target).map_err(Error::at("steer"))?;
    let report = verify(sn.net(), &x, &cert.transcript, cfg.delta).map_err(Error::at("verify"))?;

    let p = sn.params();
    Ok(DemoScenarioResult {
        seed: cfg.seed,
        delta: cfg.delta,
        r,
        g: p.g,
        steering_weight: p.steering_weight,
        audit_passed: audit.passed,
        audit_samples: audit.samples_checked,
        verifier_accepted: report.accepted,
        residuals: report.residuals,
        input: x,
        steering_gap: linf_distance(&cert.achieved, &honest),
        honest_output: honest.into_inner(),
        achieved_output: cert.achieved,
        target_error: cert.target_error,
        target,
    })
}
