//! Black-box audits: forward queries only.
//!
//! Inputs are drawn per sample from a ChaCha stream selected by the sample
//! index, so sample `i` is the same for every `sample_count > i` and every
//! execution mode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{linf_distance, linf_norm, Network, Vector};
use crate::par::{map_indices, Execution};

#[derive(Debug, Clone, PartialEq)]
pub enum InputSampler {
    /// Independent uniform coordinates in `[low, high]`.
    UniformCube { low: f64, high: f64 },
    /// Fixed benchmark inputs, used in order.
    Corpus(Vec<Vector>),
}

impl Default for InputSampler {
    fn default() -> Self {
        InputSampler::UniformCube {
            low: -1.0,
            high: 1.0,
        }
    }
}

impl InputSampler {
    /// Parse newline-delimited JSON arrays. Blank lines are skipped.
    pub fn corpus_from_ndjson(text: &str) -> Result<Self> {
        let inputs = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, l)| {
                serde_json::from_str::<Vector>(l)
                    .map_err(|e| Error::BadSampler(format!("corpus line {}: {e}", n + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InputSampler::Corpus(inputs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualityMode {
    /// Outputs must agree exactly. Forward outputs never carry `-0.0` or
    /// NaN, so numeric equality here coincides with bit equality.
    Bitwise,
    Tolerance(f64),
}

impl EqualityMode {
    pub fn threshold(&self) -> f64 {
        match self {
            EqualityMode::Bitwise => 0.0,
            EqualityMode::Tolerance(t) => *t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub sample_count: usize,
    pub sampler: InputSampler,
    pub equality: EqualityMode,
    /// Multiplier applied by [`estimate_output_bound`].
    pub safety_factor: f64,
    pub execution: Execution,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            sample_count: 1000,
            sampler: InputSampler::default(),
            equality: EqualityMode::Bitwise,
            safety_factor: 1.0,
            execution: Execution::default(),
        }
    }
}

impl AuditConfig {
    pub fn with_samples(sample_count: usize) -> Self {
        Self {
            sample_count,
            ..Self::default()
        }
    }

    fn validate(&self, input_dim: usize) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::BadSampler("sample_count must be >= 1".into()));
        }
        if let EqualityMode::Tolerance(t) = self.equality {
            if t.is_nan() || t < 0.0 {
                return Err(Error::BadSampler(format!("tolerance {t} must be >= 0")));
            }
        }
        if !(self.safety_factor > 0.0 && self.safety_factor.is_finite()) {
            return Err(Error::BadSampler(format!(
                "safety factor {} must be finite and > 0",
                self.safety_factor
            )));
        }
        match &self.sampler {
            InputSampler::UniformCube { low, high } => {
                if !(low.is_finite() && high.is_finite() && low <= high) {
                    return Err(Error::BadSampler(format!("bad cube [{low}, {high}]")));
                }
            }
            InputSampler::Corpus(inputs) => {
                if inputs.is_empty() {
                    return Err(Error::BadSampler("empty corpus".into()));
                }
                if let Some(v) = inputs.iter().find(|v| v.len() != input_dim) {
                    return Err(Error::BadSampler(format!(
                        "corpus vector of length {} for input dimension {input_dim}",
                        v.len()
                    )));
                }
            }
        }
        Ok(())
    }

    fn effective_samples(&self) -> usize {
        match &self.sampler {
            InputSampler::UniformCube { .. } => self.sample_count,
            InputSampler::Corpus(inputs) => self.sample_count.min(inputs.len()),
        }
    }
}

/// Input number `index` of the stream selected by `seed`.
pub fn sample_input(sampler: &InputSampler, dim: usize, seed: u64, index: usize) -> Vec<f64> {
    match sampler {
        InputSampler::UniformCube { low, high } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            (0..dim).map(|_| rng.random_range(*low..=*high)).collect()
        }
        InputSampler::Corpus(inputs) => inputs[index].to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub passed: bool,
    pub max_discrepancy: f64,
    pub samples_checked: usize,
    pub worst_input: Option<Vec<f64>>,
}

/// Compare two networks on sampled inputs by l-infinity output distance.
pub fn audit_equivalence(
    a: &Network,
    b: &Network,
    cfg: &AuditConfig,
    seed: u64,
) -> Result<AuditReport> {
    if a.input_dim() != b.input_dim() {
        return Err(Error::dims("audit input", a.input_dim(), b.input_dim()));
    }
    if a.output_dim() != b.output_dim() {
        return Err(Error::dims("audit output", a.output_dim(), b.output_dim()));
    }
    cfg.validate(a.input_dim())?;
    let n = cfg.effective_samples();
    let dim = a.input_dim();

    let discrepancies = map_indices(n, cfg.execution, |i| -> Result<f64> {
        let x = sample_input(&cfg.sampler, dim, seed, i);
        let ya = a.forward(&x)?;
        let yb = b.forward(&x)?;
        Ok(linf_distance(&ya, &yb))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let (worst, max_discrepancy) = discrepancies
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |best, (i, d)| if d > best.1 { (i, d) } else { best });

    Ok(AuditReport {
        passed: max_discrepancy <= cfg.equality.threshold(),
        max_discrepancy,
        samples_checked: n,
        worst_input: (max_discrepancy > 0.0).then(|| sample_input(&cfg.sampler, dim, seed, worst)),
    })
}

/// Largest sampled `||F(x)||inf` times the configured safety factor.
///
/// This is a witness from below, not a certified bound.
pub fn estimate_output_bound(net: &Network, cfg: &AuditConfig, seed: u64) -> Result<f64> {
    cfg.validate(net.input_dim())?;
    let dim = net.input_dim();
    let norms = map_indices(cfg.effective_samples(), cfg.execution, |i| {
        net.forward(&sample_input(&cfg.sampler, dim, seed, i))
            .map(|y| linf_norm(&y))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(norms.into_iter().fold(0.0, f64::max) * cfg.safety_factor)
}

/// `delta * sum_{i=1..k} prod_{j=i+1..k} ||A_j||inf`.
///
/// Upper bound on `||y_k - F(x)||inf` for any delta-consistent transcript,
/// since ReLU is 1-Lipschitz and each layer adds at most `delta`.
pub fn lipschitz_reach_bound(net: &Network, delta: f64) -> f64 {
    let (sum, _) = net
        .layers()
        .iter()
        .rev()
        .fold((0.0, 1.0), |(sum, suffix), a| {
            (sum + suffix, suffix * a.induced_inf_norm())
        });
    delta * sum
}
