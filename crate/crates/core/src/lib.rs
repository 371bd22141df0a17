//! Trigger-channel networks and steered transcripts.
//!
//! Any bias-free ReLU network `F` can be widened into a network `F'` that
//! computes exactly the same function, yet admits transcripts that pass a
//! layer-by-layer tolerance check at `delta` while ending at any output `z`
//! with `||z||inf <= R`. This crate builds `F'`, produces those transcripts,
//! checks them, and runs black-box audits that `F'` passes.
//!
//! - [`network`]: dense networks with fixed-order exact evaluation.
//! - [`verifier`]: the layerwise delta-consistency check.
//! - [`attack`]: the `F -> F'` transformation.
//! - [`steering`]: the prover that reaches a chosen output.
//! - [`audit`]: sampling-based equivalence audits and drift bounds.
//! - [`scenario`]: reproducible end-to-end runs.

pub mod attack;
pub mod audit;
pub mod error;
pub mod network;
pub mod par;
pub mod scenario;
pub mod steering;
pub mod verifier;

pub use attack::{compute_m, strip, transform, AttackParams, SteeredNetwork, SteeringMeta, TransformParams};
pub use audit::{
    audit_equivalence, estimate_output_bound, lipschitz_reach_bound, AuditConfig, AuditReport,
    EqualityMode, InputSampler,
};
pub use error::{Error, Result};
pub use network::{linf_norm, relu, Matrix, Network, Transcript, Vector};
pub use steering::{max_steering_shift, steer, SteeringCertificate};
pub use verifier::{residual_profile, verify, VerificationReport};
