//! `layerwise` command-line tool.
//!
//! Exit codes: 0 success, 1 semantic failure (rejected transcript, failed
//! audit, out-of-range target), 2 usage or format error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use layerwise::audit::{audit_equivalence, lipschitz_reach_bound, AuditConfig, EqualityMode, InputSampler};
use layerwise::scenario::{self, E2eConfig, TargetChoice};
use layerwise::{
    residual_profile, steer, transform, verify, Error, Network, SteeredNetwork, SteeringMeta,
    Transcript, TransformParams, Vector,
};

#[derive(Parser)]
#[command(name = "layerwise", version)]
#[command(about = "Trigger-channel networks and steered transcripts for layerwise tolerance checks")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Directory that relative output paths are written into.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random dense network.
    Gen {
        /// Input width followed by each layer's output width, e.g. 4,8,8,2.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        /// Weights are uniform in [-scale, scale].
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the trigger-channel network F' from F.
    Transform {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        delta: f64,
        /// Output bound R.
        #[arg(long = "R", alias = "r")]
        r: f64,
        /// Amplification gain (defaults to the weight bound of F, at least 1 + 2^-20).
        #[arg(long)]
        g: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        meta: PathBuf,
    },
    /// Produce a tolerance-consistent transcript of F' ending at a target.
    Steer {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        meta: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the full steering certificate.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Check a transcript layer by layer.
    Verify {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        delta: f64,
    },
    /// Exact forward evaluation.
    Eval {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Honest transcript of exact evaluation.
    Trace {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Black-box functional comparison of two networks.
    Audit {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Newline-delimited JSON input vectors instead of the uniform cube.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Allowed l-infinity discrepancy; 0 means exact agreement.
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
    },
    /// Worst-case output drift of any tolerance-consistent transcript.
    Bound {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        delta: f64,
    },
    /// Steering weight for the worked parameter example.
    DemoRemark {
        #[arg(long = "R", alias = "r", default_value_t = scenario::REMARK_R)]
        r: f64,
        #[arg(long, default_value_t = scenario::REMARK_DELTA)]
        delta: f64,
        #[arg(long, default_value_t = scenario::REMARK_G)]
        g: f64,
        #[arg(long, default_value_t = scenario::REMARK_K)]
        k: usize,
    },
    /// Generate, transform, audit, steer and verify in one run.
    E2e {
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        /// R is the sampled output bound times this margin.
        #[arg(long, default_value_t = 1.5)]
        r_margin: f64,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        g: Option<f64>,
        /// Steer to the honest output instead of a random target.
        #[arg(long)]
        honest_target: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    err: anyhow::Error,
}

type CliResult<T> = Result<T, Failure>;

fn usage(err: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        err: err.into(),
    }
}

/// Library errors that describe a property of the data rather than a malformed request.
fn classify(err: Error) -> Failure {
    let semantic = match &err {
        Error::TargetOutOfRange { .. } | Error::OutputBoundViolated { .. } | Error::Overflow { .. } => true,
        Error::Stage { source, .. } => matches!(
            **source,
            Error::TargetOutOfRange { .. } | Error::OutputBoundViolated { .. } | Error::Overflow { .. }
        ),
        _ => false,
    };
    Failure {
        code: if semantic { 1 } else { 2 },
        err: err.into(),
    }
}

struct Ctx {
    output_dir: Option<PathBuf>,
}

impl Ctx {
    fn out_path(&self, p: &Path) -> PathBuf {
        match &self.output_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> CliResult<()> {
        let path = self.out_path(path);
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))
                .map_err(usage)?;
        }
        let mut text = serde_json::to_string_pretty(value).map_err(usage)?;
        text.push('\n');
        fs::write(&path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(usage)
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(usage)
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(usage)?;
    writeln!(std::io::stdout().lock(), "{text}")
        .context("writing to stdout")
        .map_err(usage)
}

fn emit<T: Serialize>(ctx: &Ctx, out: Option<&Path>, value: &T) -> CliResult<()> {
    match out {
        Some(p) => ctx.write_json(p, value),
        None => print_json(value),
    }
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    let ctx = Ctx {
        output_dir: cli.output_dir,
    };
    let seed = cli.seed;
    match cli.command {
        Command::Gen { dims, scale, out } => {
            let net = scenario::random_network(&dims, scale, seed).map_err(classify)?;
            emit(&ctx, out.as_deref(), &net)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Transform {
            network,
            delta,
            r,
            g,
            out,
            meta,
        } => {
            let f: Network = read_json(&network)?;
            let sn = transform(&f, TransformParams { delta, r, g }).map_err(classify)?;
            ctx.write_json(&out, sn.net())?;
            ctx.write_json(&meta, &sn.meta())?;
            print_json(&sn.meta())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Steer {
            network,
            meta,
            input,
            target,
            out,
            certificate,
        } => {
            let net: Network = read_json(&network)?;
            let meta: SteeringMeta = read_json(&meta)?;
            let x: Vector = read_json(&input)?;
            let z: Vector = read_json(&target)?;
            let sn = SteeredNetwork::from_parts(net, meta).map_err(classify)?;
            let cert = steer(&sn, &x, &z).map_err(classify)?;
            let residuals = residual_profile(sn.net(), &x, &cert.transcript).map_err(classify)?;
            ctx.write_json(&out, &cert.transcript)?;
            if let Some(c) = certificate {
                ctx.write_json(&c, &cert)?;
            }
            print_json(&json!({
                "target_error": cert.target_error,
                "layer1_residual": residuals[0],
                "achieved": cert.achieved,
                "honest_output": cert.honest_output,
            }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            network,
            input,
            transcript,
            delta,
        } => {
            let net: Network = read_json(&network)?;
            let x: Vector = read_json(&input)?;
            let t: Transcript = read_json(&transcript)?;
            let report = verify(&net, &x, &t, delta).map_err(classify)?;
            print_json(&report)?;
            Ok(status(report.accepted))
        }
        Command::Eval { network, input } => {
            let net: Network = read_json(&network)?;
            let x: Vector = read_json(&input)?;
            print_json(&net.forward(&x).map_err(classify)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Trace {
            network,
            input,
            out,
        } => {
            let net: Network = read_json(&network)?;
            let x: Vector = read_json(&input)?;
            emit(&ctx, out.as_deref(), &net.forward_trace(&x).map_err(classify)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Audit {
            a,
            b,
            samples,
            corpus,
            tolerance,
        } => {
            let na: Network = read_json(&a)?;
            let nb: Network = read_json(&b)?;
            let sampler = match corpus {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))
                        .map_err(usage)?;
                    InputSampler::corpus_from_ndjson(&text).map_err(classify)?
                }
                None => InputSampler::default(),
            };
            let equality = if tolerance == 0.0 {
                EqualityMode::Bitwise
            } else {
                EqualityMode::Tolerance(tolerance)
            };
            let cfg = AuditConfig {
                sample_count: samples,
                sampler,
                equality,
                ..AuditConfig::default()
            };
            let report = audit_equivalence(&na, &nb, &cfg, seed).map_err(classify)?;
            print_json(&report)?;
            Ok(status(report.passed))
        }
        Command::Bound { network, delta } => {
            if !(delta >= 0.0 && delta.is_finite()) {
                return Err(usage(anyhow!("delta must be finite and >= 0, got {delta}")));
            }
            let net: Network = read_json(&network)?;
            print_json(&json!({
                "delta": delta,
                "reach_bound": lipschitz_reach_bound(&net, delta),
            }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::DemoRemark { r, delta, g, k } => {
            let report = scenario::remark(r, delta, g, k).map_err(classify)?;
            print_json(&report)?;
            let defaults = r == scenario::REMARK_R
                && delta == scenario::REMARK_DELTA
                && g == scenario::REMARK_G
                && k == scenario::REMARK_K;
            if defaults && !(0.15..=0.16).contains(&report.steering_weight) {
                eprintln!("steering weight {} outside [0.15, 0.16]", report.steering_weight);
                return Ok(ExitCode::from(1));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::E2e {
            delta,
            r_margin,
            dims,
            scale,
            samples,
            g,
            honest_target,
            out,
        } => {
            if delta.is_nan() || delta <= 0.0 {
                return Err(usage(anyhow!(
                    "delta must be > 0: steering is only possible with a positive tolerance"
                )));
            }
            let defaults = E2eConfig::default();
            let cfg = E2eConfig {
                seed,
                delta,
                r_margin,
                dims: dims.unwrap_or(defaults.dims),
                weight_scale: scale.unwrap_or(defaults.weight_scale),
                samples: samples.unwrap_or(defaults.samples),
                g,
                target: if honest_target {
                    TargetChoice::Honest
                } else {
                    TargetChoice::Random
                },
            };
            let result = scenario::run_e2e(&cfg).map_err(classify)?;
            emit(&ctx, out.as_deref(), &result)?;
            Ok(status(result.audit_passed && result.verifier_accepted))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Failure { code, err }) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
