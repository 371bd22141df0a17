//! Acceptance suite. Runs every criterion, prints one line each and exits
//! non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use layerwise::attack::{compute_m, transform, SteeredNetwork, TransformParams};
use layerwise::audit::lipschitz_reach_bound;
use layerwise::network::{linf_norm, Matrix, Network, Transcript};
use layerwise::par::{map_indices, Execution};
use layerwise::scenario::{run_e2e, E2eConfig, REMARK_DELTA, REMARK_G, REMARK_K, REMARK_R};
use layerwise::steering::{max_steering_shift, steer};
use layerwise::verifier::{residual_profile, verify};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

/// Output bound covering every input in `xs`, with 1.5x headroom and a floor of 1.
fn bound_for(net: &Network, xs: &[Vec<f64>]) -> f64 {
    xs.iter()
        .map(|x| linf_norm(&net.forward(x).unwrap()))
        .fold(1.0, f64::max)
        * 1.5
}

fn c1_remark() -> Outcome {
    let start = Instant::now();
    let m = compute_m(REMARK_R, REMARK_DELTA, REMARK_G, REMARK_K).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(m == 0.152587890625, || format!("M = {m:e}"))?;
    within(elapsed, Duration::from_millis(1))?;
    Ok(format!("M = {m} in {elapsed:?}"))
}

struct EquivalenceCase {
    f: Network,
    sn: SteeredNetwork,
}

fn c2_cases() -> Vec<Result<EquivalenceCase, String>> {
    map_indices(1000, Execution::default(), |i| {
        let mut rng = rng(0xC2_0000 + i as u64);
        let depth = rng.random_range(2..=12);
        let dims = random_dims(&mut rng, depth, 16);
        let f = random_net(&mut rng, &dims, 2.0);
        let xs: Vec<Vec<f64>> = (0..10).map(|_| random_vec(&mut rng, dims[0], 1.0)).collect();
        let r = bound_for(&f, &xs);
        let sn = transform(&f, TransformParams { delta: 1e-3, r, g: None })
            .map_err(|e| format!("case {i}: {e}"))?;
        for x in &xs {
            let a = f.forward(x).map_err(|e| e.to_string())?;
            let b = sn.net().forward(x).map_err(|e| e.to_string())?;
            if bits(&a) != bits(&b) {
                return Err(format!("case {i}: outputs differ: {a:?} vs {b:?}"));
            }
        }
        Ok(EquivalenceCase { f, sn })
    })
}

fn c2_equivalence(cases: &mut Option<Vec<EquivalenceCase>>) -> Outcome {
    let start = Instant::now();
    let built = c2_cases().into_iter().collect::<Result<Vec<_>, _>>()?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    *cases = Some(built);
    Ok(format!("1000 networks x 10 inputs bitwise equal in {elapsed:?}"))
}

fn c7_weight_bound(cases: &[EquivalenceCase]) -> Outcome {
    for (i, c) in cases.iter().enumerate() {
        let p = c.sn.params();
        let wb = c.sn.net().weight_bound();
        check(wb == p.g.max(p.steering_weight), || {
            format!("case {i}: weight bound {wb} vs g = {}, M = {}", p.g, p.steering_weight)
        })?;
    }
    Ok(format!("{} transforms have weight bound max(g, M)", cases.len()))
}

fn c10_reach_bound(cases: &[EquivalenceCase]) -> Outcome {
    let mut min_ratio = f64::INFINITY;
    for (i, c) in cases.iter().enumerate() {
        let bound = lipschitz_reach_bound(c.sn.net(), c.sn.params().delta);
        let shift = max_steering_shift(&c.sn);
        check(bound >= shift, || format!("case {i}: bound {bound} < shift {shift}"))?;
        min_ratio = min_ratio.min(bound / shift);
        debug_assert!(c.f.depth() == c.sn.net().depth());
    }

    // One-dimensional depth-2 network: the bound is delta * (|b| + 1).
    let (a, b, x, delta) = (0.8, -1.7, 0.6, 0.05);
    let net = Network::new(vec![
        Matrix::new(1, 1, vec![a]).unwrap(),
        Matrix::new(1, 1, vec![b]).unwrap(),
    ])
    .unwrap();
    let honest = net.forward(&[x]).unwrap()[0];
    let steps = 200;
    let mut best: f64 = 0.0;
    for i in 0..=steps {
        let e1 = -delta + 2.0 * delta * i as f64 / steps as f64;
        for j in 0..=steps {
            let e2 = -delta + 2.0 * delta * j as f64 / steps as f64;
            let y1 = net.apply_layer(1, &[x])[0] + e1;
            let y2 = net.apply_layer(2, &[y1])[0] + e2;
            let t = Transcript::new(vec![vec![x], vec![y1], vec![y2]]);
            // Allow for the rounding in the `+ e` steps.
            if verify(&net, &[x], &t, delta * (1.0 + 1e-12)).unwrap().accepted {
                best = best.max((y2 - honest).abs());
            }
        }
    }
    let bound = lipschitz_reach_bound(&net, delta);
    check(best <= bound * (1.0 + 1e-12), || format!("grid drift {best} exceeds bound {bound}"))?;
    check((bound - best) / bound <= 0.01, || format!("grid drift {best} not within 1% of {bound}"))?;
    Ok(format!(
        "bound >= shift on {} transforms (min ratio {min_ratio:.3}); 1-D grid {best:.6} vs bound {bound:.6}",
        cases.len()
    ))
}

struct SteeringRun {
    residuals: Vec<f64>,
    delta: f64,
}

fn c3_steering(runs: &mut Vec<SteeringRun>) -> Outcome {
    let start = Instant::now();
    let results = map_indices(200, Execution::default(), |i| -> Result<Vec<SteeringRun>, String> {
        let mut rng = rng(0xC3_0000 + i as u64);
        let depth = rng.random_range(2..=12);
        let dims = random_dims(&mut rng, depth, 12);
        let f = random_net(&mut rng, &dims, 2.0);
        let x = random_vec(&mut rng, dims[0], 1.0);
        let r = bound_for(&f, std::slice::from_ref(&x));
        let delta = 10f64.powf(rng.random_range(-6.0..-1.0));
        let sn = transform(&f, TransformParams { delta, r, g: None }).map_err(|e| e.to_string())?;
        let honest = f.forward(&x).unwrap();
        let mut out = Vec::new();
        for t in 0..5 {
            let z: Vec<f64> = if t == 0 {
                // Farthest target: every coordinate shifted across the whole range.
                honest.iter().map(|y| if *y >= 0.0 { -r } else { r }).collect()
            } else {
                random_vec(&mut rng, f.output_dim(), r)
            };
            let cert = steer(&sn, &x, &z).map_err(|e| format!("case {i}: {e}"))?;
            let report = verify(sn.net(), &x, &cert.transcript, delta).unwrap();
            if !report.accepted {
                return Err(format!("case {i} target {t}: rejected {:?}", report.diagnostic));
            }
            let tol = 2f64.powi(-30) * linf_norm(&z).max(1.0);
            if cert.target_error.is_nan() || cert.target_error > tol {
                return Err(format!("case {i} target {t}: error {} > {tol}", cert.target_error));
            }
            out.push(SteeringRun {
                residuals: residual_profile(sn.net(), &x, &cert.transcript).unwrap(),
                delta,
            });
        }
        Ok(out)
    });
    for r in results {
        runs.extend(r?);
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!("{} steered transcripts accepted and on target in {elapsed:?}", runs.len()))
}

fn c4_locality(runs: &[SteeringRun]) -> Outcome {
    check(!runs.is_empty(), || "no steering runs recorded".into())?;
    for (i, run) in runs.iter().enumerate() {
        check(run.residuals[0] <= run.delta, || {
            format!("run {i}: layer-1 residual {} > {}", run.residuals[0], run.delta)
        })?;
        check(run.residuals[1..].iter().all(|r| *r == 0.0), || {
            format!("run {i}: residuals {:?}", run.residuals)
        })?;
    }
    Ok(format!("{} transcripts deviate only at layer 1", runs.len()))
}

fn nudge(v: f64, rng: &mut impl Rng) -> f64 {
    match rng.random_range(0..4) {
        0 => f64::from_bits(v.to_bits() ^ 1),
        1 => v + rng.random_range(-1e-12..1e-12),
        2 => v + rng.random_range(-1e-3..1e-3),
        _ => v + rng.random_range(-1.0..1.0),
    }
}

fn c5_zero_tolerance() -> Outcome {
    let mut rng = rng(0xC5);
    let (mut accepted, mut rejected) = (0, 0);
    for i in 0..500 {
        let depth = rng.random_range(2..=6);
        let dims = random_dims(&mut rng, depth, 8);
        let net = random_net(&mut rng, &dims, 2.0);
        let x = random_vec(&mut rng, dims[0], 1.0);
        let honest = net.forward_trace(&x).unwrap();
        let mut t = honest.clone();
        for _ in 0..rng.random_range(0..=2) {
            let layer = rng.random_range(0..t.states.len());
            let j = rng.random_range(0..t.states[layer].len());
            t.states[layer][j] = nudge(t.states[layer][j], &mut rng);
        }
        let ok = verify(&net, &x, &t, 0.0).unwrap().accepted;
        let same = t.bitwise_eq(&honest);
        check(ok == same, || format!("case {i}: accepted = {ok}, bitwise equal = {same}"))?;
        if ok {
            accepted += 1;
        } else {
            rejected += 1;
        }
    }
    check(accepted > 0 && rejected > 0, || "degenerate sample".into())?;
    Ok(format!("500 transcripts: {accepted} honest accepted, {rejected} perturbed rejected"))
}

fn c6_monotonicity() -> Outcome {
    let mut rng = rng(0xC6);
    let mut checked_down = 0;
    for i in 0..500 {
        let depth = rng.random_range(2..=6);
        let dims = random_dims(&mut rng, depth, 8);
        let net = random_net(&mut rng, &dims, 2.0);
        let x = random_vec(&mut rng, dims[0], 1.0);
        let mut t = net.forward_trace(&x).unwrap();
        for _ in 0..rng.random_range(1..=3) {
            let layer = rng.random_range(1..t.states.len());
            let j = rng.random_range(0..t.states[layer].len());
            t.states[layer][j] += 10f64.powf(rng.random_range(-6.0..0.0)) * rng.random_range(-1.0..1.0);
        }
        let delta = 10f64.powf(rng.random_range(-6.0..0.0));
        let at = verify(&net, &x, &t, delta).unwrap();
        let max_res = at.residuals.iter().copied().fold(0.0, f64::max);
        if at.accepted {
            check(verify(&net, &x, &t, 2.0 * delta).unwrap().accepted, || {
                format!("case {i}: accepted at {delta} but not at {}", 2.0 * delta)
            })?;
        } else if max_res > delta {
            checked_down += 1;
            check(!verify(&net, &x, &t, delta / 2.0).unwrap().accepted, || {
                format!("case {i}: rejected at {delta} but accepted at {}", delta / 2.0)
            })?;
        }
    }
    Ok(format!("500 transcripts monotone in delta ({checked_down} rejections re-checked at delta/2)"))
}

fn c8_scenario() -> Outcome {
    let start = Instant::now();
    let mut good = 0;
    let mut failures = Vec::new();
    for seed in 0..50 {
        let cfg = E2eConfig {
            seed,
            ..E2eConfig::default()
        };
        let res = run_e2e(&cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        if res.audit_passed && res.verifier_accepted && res.steering_gap > 0.1 * res.r {
            good += 1;
        } else {
            failures.push(format!(
                "seed {seed}: audit {} accept {} gap {} R {}",
                res.audit_passed, res.verifier_accepted, res.steering_gap, res.r
            ));
        }
    }
    let elapsed = start.elapsed();
    check(good >= 49, || format!("{good}/50: {failures:?}"))?;
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("{good}/50 seeds audit-pass, verify-pass, gap > 0.1 R in {elapsed:?}"))
}

fn c9_oracle() -> Outcome {
    let mut rng = rng(0xC9);
    for i in 0..1000 {
        let depth = rng.random_range(2..=6);
        let dims = random_dims(&mut rng, depth, 8);
        let net = random_net(&mut rng, &dims, 2.0);
        let x = random_vec(&mut rng, dims[0], 2.0);
        let got = net.forward(&x).unwrap();
        let want = naive_forward(&raw_layers(&net), &x);
        check(bits(&got) == bits(&want), || format!("case {i}: {got:?} vs {want:?}"))?;
    }
    Ok("1000 cases bitwise equal to the naive evaluator".into())
}

fn main() -> ExitCode {
    let mut cases = None;
    let mut runs = Vec::new();
    let mut failed = 0;

    let mut report = |id: &str, name: &str, outcome: Outcome| {
        match outcome {
            Ok(detail) => println!("[PASS] {id} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {id} {name}: {why}");
            }
        }
    };

    report("C1", "remark steering weight", c1_remark());
    report("C2", "exact equivalence", c2_equivalence(&mut cases));
    report("C3", "universal steering", c3_steering(&mut runs));
    report("C4", "injection locality", c4_locality(&runs));
    report("C5", "zero-tolerance uniqueness", c5_zero_tolerance());
    report("C6", "verifier monotonicity", c6_monotonicity());
    match &cases {
        Some(c) => {
            report("C7", "weight bound", c7_weight_bound(c));
            report("C10", "reach-bound soundness", c10_reach_bound(c));
        }
        None => {
            report("C7", "weight bound", Err("no transforms from C2".into()));
            report("C10", "reach-bound soundness", Err("no transforms from C2".into()));
        }
    }
    report("C8", "non-composability scenario", c8_scenario());
    report("C9", "oracle equivalence", c9_oracle());

    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
