//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero if any
//! criterion fails. Tolerances and runtime budgets are pinned below.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use stlcert::certifier::{
    certify, compute_delta0, compute_delta1, margin_e, CertConfig, ClassKappaInf, Method,
};
use stlcert::dynamics::{
    estimate_lipschitz, integrate, ClosedLoopSystem, DisturbanceKind, StateBox, Trajectory,
};
use stlcert::models::{segway_model, single_integrator_example, ModelBundle};
use stlcert::spec_lang::{
    decompose, parse_spec, robustness, satisfies, PredicateDef, PredicateRegistry, SpecNode,
};
use stlcert::validation::{
    adversarial_check, gronwall_check, run_trials, DisturbanceMode, InitialState, TrialSetup,
    TrialStats,
};

const DELTA1_TOL: f64 = 1e-9;
const MARGIN_ORACLE_TOL: f64 = 1e-4;
const MARGIN_ORACLE_STEP: f64 = 1e-4;
const MARGIN_ORACLE_CASES: usize = 10_000;
const DELTA0_DISC_TOL: f64 = 0.02;
const GRONWALL_TRIALS: usize = 100;
const MONITOR_CASES: usize = 10_000;
const MONITOR_BAND: f64 = 1e-9;
const TRIALS: usize = 1000;
const SEED: u64 = 42;
const FALSIFICATION_FACTOR: f64 = 20.0;
const THREAD_COUNTS: [usize; 3] = [1, 2, 8];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn run(id: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
        .unwrap_or_else(|e| outcome(false, format!("panicked: {}", panic_text(&e))));
    let elapsed = start.elapsed();
    let in_budget = elapsed <= budget;
    let pass = result.pass && in_budget;
    println!(
        "{} criterion {id:>2}: {name}: {} [{:.2?}, budget {:?}{}]",
        if pass { "PASS" } else { "FAIL" },
        result.detail,
        elapsed,
        budget,
        if in_budget { "" } else { ", OVER BUDGET" }
    );
    pass
}

fn panic_text(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown".into())
}

fn disc_predicate() -> PredicateDef {
    PredicateDef::new("disc", |x| 1.0 - x.iter().map(|v| v * v).sum::<f64>())
        .with_gradient(|x| Some(x.iter().map(|v| -2.0 * v).collect()))
}

fn decay(half_width: f64) -> ClosedLoopSystem {
    ClosedLoopSystem::new(
        "decay",
        StateBox::new(vec![-half_width; 2], vec![half_width; 2]).unwrap(),
        |x, o| {
            o[0] = -x[0];
            o[1] = -x[1];
        },
    )
    .unwrap()
}

fn criterion1() -> Outcome {
    let v = compute_delta1(0.2, 1.0, 2.0, 1.0).unwrap();
    let expected = 0.2 / (2.0 * 2f64.exp());
    let truncated = (v * 100.0).trunc() / 100.0;
    outcome(
        (v - expected).abs() <= DELTA1_TOL && (v - 0.013534).abs() < 5e-7 && truncated == 0.01,
        format!("δ¹ = {v:.9} (truncated {truncated:.2})"),
    )
}

/// Random quadratic predicate `c + bᵀx − xᵀQx` with its gradient.
fn random_quadratic(rng: &mut ChaCha8Rng, n: usize) -> PredicateDef {
    let c: f64 = rng.random_range(-1.0..1.0);
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let q: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (b2, q2) = (b.clone(), q.clone());
    PredicateDef::new("h", move |x| {
        let mut v = c;
        for i in 0..n {
            v += b[i] * x[i];
            for j in 0..n {
                v -= q[i * n + j] * x[i] * x[j];
            }
        }
        v
    })
    .with_gradient(move |x| {
        Some(
            (0..n)
                .map(|k| {
                    b2[k]
                        - (0..n)
                            .map(|j| (q2[k * n + j] + q2[j * n + k]) * x[j])
                            .sum::<f64>()
                })
                .collect(),
        )
    })
}

fn criterion2() -> Outcome {
    let worst = (0..MARGIN_ORACLE_CASES)
        .into_par_iter()
        .map(|case| {
            let mut rng = ChaCha8Rng::seed_from_u64(1_000 + case as u64);
            loop {
                let n = rng.random_range(1..=4usize);
                let h = random_quadratic(&mut rng, n);
                let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let shift: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
                let system = ClosedLoopSystem::new(
                    "affine",
                    StateBox::new(vec![-2.0; n], vec![2.0; n]).unwrap(),
                    move |x, o| {
                        for i in 0..n {
                            o[i] = shift[i] + (0..n).map(|j| a[i * n + j] * x[j]).sum::<f64>();
                        }
                    },
                )
                .unwrap();
                let gain = rng.random_range(0.1..5.0);
                let alpha = if rng.random::<bool>() {
                    ClassKappaInf::linear(gain).unwrap()
                } else {
                    ClassKappaInf::cubic(gain).unwrap()
                };
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let closed = margin_e(&x, &h, &alpha, &system).unwrap();
                if closed.is_nan() || closed.abs() >= 9.9 {
                    continue;
                }
                // brute force over the definition: ξ(x,e) = ∇hᵀf − ‖∇h‖·e ≥ −α(h)
                let g = h.analytic_gradient(&x).unwrap();
                let f = system.eval(&x);
                let gf: f64 = g.iter().zip(&f).map(|(a, b)| a * b).sum();
                let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                let rhs = -alpha.eval(h.eval(&x));
                let steps = (20.0 / MARGIN_ORACLE_STEP).round() as i64;
                let scanned = (0..=steps)
                    .rev()
                    .map(|k| -10.0 + k as f64 * MARGIN_ORACLE_STEP)
                    .find(|e| gf - gn * e >= rhs)
                    .unwrap_or(f64::NEG_INFINITY);
                return (closed - scanned).abs();
            }
        })
        .reduce(|| 0.0, f64::max);
    outcome(
        worst <= MARGIN_ORACLE_TOL,
        format!("{MARGIN_ORACLE_CASES} instances, max |closed form − scan| = {worst:.6e}"),
    )
}

fn criterion3() -> Outcome {
    let registry = PredicateRegistry::new().with(disc_predicate()).unwrap();
    let spec = parse_spec("G[0,5](disc)", &registry).unwrap();
    let (iv, clause) = spec.as_invariance().unwrap();
    let system = decay(1.2);
    let config = CertConfig {
        alpha: [("disc".to_string(), ClassKappaInf::linear(1.0).unwrap())].into(),
        state_grid: vec![241],
        ..CertConfig::default()
    };
    let res = compute_delta0(clause, iv, &system, &config).unwrap();
    let dt = 1e-3;
    let at = adversarial_check(&system, clause, &config, res.bound, &[1.0, 0.0], 5.0, dt).unwrap();
    let over = adversarial_check(
        &system,
        clause,
        &config,
        1.5 * res.bound,
        &[1.0, 0.0],
        5.0,
        dt,
    )
    .unwrap();
    outcome(
        (res.bound - 1.0).abs() <= DELTA0_DISC_TOL && at.pass && !over.pass,
        format!(
            "δ⁰ = {:.6}, min h at bound = {:.2e} (tol {:.2e}), min h at 1.5× = {:.3}",
            res.bound, at.min_h_per_predicate[0].1, at.tolerance, over.min_h_per_predicate[0].1
        ),
    )
}

fn criterion4() -> Outcome {
    let lin = gronwall_check(
        &decay(3.0),
        &[0.8, -0.4],
        0.3,
        GRONWALL_TRIALS,
        2.0,
        1e-3,
        1.0,
        SEED,
    )
    .unwrap();
    let seg = segway_model();
    let (_, _, delta) = segway_full();
    // Lemma 2 needs a valid Lipschitz constant; the bundle's L_f = 1 is not one
    let l_hat = estimate_lipschitz(&seg.system, seg.system.domain(), 20_000, SEED).unwrap();
    let valid = gronwall_check(
        &seg.system,
        &seg.init_state,
        delta,
        GRONWALL_TRIALS,
        2.0,
        1e-3,
        l_hat,
        SEED,
    )
    .unwrap();
    let l_bundle = seg.config.lipschitz_f.unwrap();
    let bundled = gronwall_check(
        &seg.system,
        &seg.init_state,
        delta,
        GRONWALL_TRIALS,
        2.0,
        1e-3,
        l_bundle,
        SEED,
    )
    .unwrap();
    outcome(
        lin.pass && valid.pass,
        format!(
            "ẋ = −x worst excess {:.2e}; segway δ = {delta:.4e} with L̂ = {l_hat:.1} worst excess {:.2e} \
             (with the bundle's L_f = {l_bundle}: excess {:.2e}, {})",
            lin.worst_excess,
            valid.worst_excess,
            bundled.worst_excess,
            if bundled.pass { "holds" } else { "envelope violated" }
        ),
    )
}

fn random_clause(rng: &mut ChaCha8Rng) -> String {
    let k = rng.random_range(0..=2usize);
    if k == 0 {
        return "true".into();
    }
    (0..k)
        .map(|_| {
            format!(
                "{}p{}",
                if rng.random::<bool>() { "!" } else { "" },
                rng.random_range(0..4)
            )
        })
        .collect::<Vec<_>>()
        .join(" & ")
}

fn random_leaf(rng: &mut ChaCha8Rng) -> String {
    let a = (rng.random_range(0..10) as f64) * 0.1;
    let b = a + (rng.random_range(1..10) as f64) * 0.1;
    match rng.random_range(0..3) {
        0 => format!("G[{a},{b}]({})", random_clause(rng)),
        1 => format!("F[{a},{b}]({})", random_clause(rng)),
        _ => format!(
            "({}) U[{a},{b}] ({})",
            random_clause(rng),
            random_clause(rng)
        ),
    }
}

fn criterion5() -> Outcome {
    let mut registry = PredicateRegistry::new();
    for i in 0..4 {
        let w = [(i as f64 * 0.7).cos(), (i as f64 * 0.7).sin()];
        let c = 0.2 * i as f64 - 0.3;
        registry
            .insert(PredicateDef::new(format!("p{i}"), move |x| {
                w[0] * x[0] + w[1] * x[1] - c
            }))
            .unwrap();
    }
    let dt = 0.05;
    let results: Vec<(bool, bool, bool)> = (0..MONITOR_CASES)
        .into_par_iter()
        .map(|case| {
            let mut rng = ChaCha8Rng::seed_from_u64(50_000 + case as u64);
            // piecewise-linear signal through random knots every 0.25 s, sampled at dt
            let knots: Vec<[f64; 2]> = (0..=9)
                .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect();
            let states: Vec<Vec<f64>> = (0..=40)
                .map(|k| {
                    let t = k as f64 * dt / 0.25;
                    let (i, s) = ((t.floor() as usize).min(8), t - (t.floor().min(8.0)));
                    vec![
                        knots[i][0] + s * (knots[i + 1][0] - knots[i][0]),
                        knots[i][1] + s * (knots[i + 1][1] - knots[i][1]),
                    ]
                })
                .collect();
            let signal = Trajectory::new(0.0, dt, states);
            let leaves = rng.random_range(1..=3);
            let text = (0..leaves)
                .map(|_| random_leaf(&mut rng))
                .collect::<Vec<_>>()
                .join(" & ");
            let spec = parse_spec(&text, &registry).unwrap();
            let rho = robustness(&spec, &signal, 0.0).unwrap();
            let sat = satisfies(&spec, &signal, 0.0).unwrap();
            let sign_ok = rho.abs() <= MONITOR_BAND || (rho > 0.0) == sat;
            let parts = decompose(&spec);
            let min_leaf = parts
                .iter()
                .map(|l| robustness(l, &signal, 0.0).unwrap())
                .fold(f64::INFINITY, f64::min);
            let all_leaves = parts.iter().all(|l| satisfies(l, &signal, 0.0).unwrap());
            (sign_ok, rho == min_leaf, sat == all_leaves)
        })
        .collect();
    let sign = results.iter().filter(|r| !r.0).count();
    let min = results.iter().filter(|r| !r.1).count();
    let dec = results.iter().filter(|r| !r.2).count();
    outcome(
        sign == 0 && min == 0 && dec == 0,
        format!("{MONITOR_CASES} cases: {sign} sign disagreements, {min} conjunction-min mismatches, {dec} decomposition mismatches"),
    )
}

fn trials(
    bundle: &ModelBundle,
    spec: &SpecNode,
    delta: f64,
    kind: DisturbanceKind,
    mode: DisturbanceMode,
) -> TrialStats {
    let setup = TrialSetup {
        kind,
        mode,
        ..TrialSetup::new(delta, TRIALS, SEED)
    };
    run_trials(
        &bundle.system,
        spec,
        &InitialState::Fixed(bundle.init_state.clone()),
        &setup,
    )
    .unwrap()
}

fn segway_psi2() -> (ModelBundle, SpecNode, f64) {
    let bundle = segway_model();
    let spec = parse_spec("G[0,2](mu2)", &bundle.registry).unwrap();
    let report = certify(&spec, &bundle.system, &bundle.config, &bundle.init_region).unwrap();
    assert!(report.feasible && report.per_subspec[0].method == Method::Theorem1);
    assert!(report.region_contains(&bundle.init_state));
    (bundle, spec, report.delta_t)
}

fn criterion6() -> Outcome {
    let (bundle, spec, delta) = segway_psi2();
    let stats = trials(
        &bundle,
        &spec,
        delta,
        DisturbanceKind::UniformBall,
        DisturbanceMode::PerStep,
    );
    outcome(
        stats.num_violations == 0 && stats.min_robustness >= 0.0,
        format!(
            "δ⁰ = {delta:.6}, {} trials, {} violations, min ρ = {:.4}",
            stats.num_trials, stats.num_violations, stats.min_robustness
        ),
    )
}

fn segway_full() -> (ModelBundle, SpecNode, f64) {
    let bundle = segway_model();
    let spec = bundle.spec().unwrap();
    let report = certify(&spec, &bundle.system, &bundle.config, &bundle.init_region).unwrap();
    assert!(report.feasible && report.per_subspec.len() == 2);
    (bundle, spec, report.delta_t)
}

fn criterion7() -> Outcome {
    let (bundle, spec, delta) = segway_full();
    let per_step = trials(
        &bundle,
        &spec,
        delta,
        DisturbanceKind::UniformBall,
        DisturbanceMode::PerStep,
    );
    let constant = trials(
        &bundle,
        &spec,
        delta,
        DisturbanceKind::UniformBall,
        DisturbanceMode::Constant,
    );
    outcome(
        per_step.num_violations == 0 && constant.num_violations == 0,
        format!(
            "δ^T = {delta:.6e}; per-step {} violations (min ρ {:.4}), constant {} violations (min ρ {:.4})",
            per_step.num_violations, per_step.min_robustness, constant.num_violations, constant.min_robustness
        ),
    )
}

/// Run pushing the state away from the goal, `d = −δ·∇h/‖∇h‖`.
fn adversarial_si(bundle: &ModelBundle, spec: &SpecNode, delta: f64) -> f64 {
    let h = bundle.registry.get("mu_g").unwrap().clone();
    let traj = stlcert::dynamics::integrate_with_feedback(
        &bundle.system,
        &bundle.init_state,
        2.0,
        1e-3,
        |_, x, d| {
            let g = stlcert::certifier::gradient(&h, x).unwrap();
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            d.iter_mut()
                .zip(&g)
                .for_each(|(di, gi)| *di = if n > 0.0 { -delta * gi / n } else { 0.0 });
            Ok(())
        },
    )
    .unwrap();
    robustness(spec, &traj, 0.0).unwrap()
}

fn si_certified() -> (ModelBundle, SpecNode, f64) {
    let bundle = single_integrator_example();
    let spec = bundle.spec().unwrap();
    let report = certify(&spec, &bundle.system, &bundle.config, &bundle.init_region).unwrap();
    (bundle, spec, report.delta_t)
}

fn criterion8() -> Outcome {
    let (bundle, spec, delta) = si_certified();
    let nominal = robustness(
        &spec,
        &integrate(&bundle.system, &bundle.init_state, 2.0, 1e-3, None).unwrap(),
        0.0,
    )
    .unwrap();
    let pushed = adversarial_si(&bundle, &spec, 0.3);
    let stats = trials(
        &bundle,
        &spec,
        delta,
        DisturbanceKind::UniformBall,
        DisturbanceMode::PerStep,
    );
    outcome(
        (0.05..=0.1).contains(&nominal) && pushed < nominal && delta > 0.0 && stats.num_violations == 0,
        format!(
            "nominal ρ = {nominal:.4}, adversarial δ = 0.3 ρ = {pushed:.4}, δ^T = {delta:.4e}, {} violations in {} trials",
            stats.num_violations, stats.num_trials
        ),
    )
}

fn cli(args: &[&str], threads: Option<usize>) -> i32 {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stlcert"));
    cmd.args(args).stdout(std::process::Stdio::null());
    if let Some(t) = threads {
        cmd.env("STLCERT_THREADS", t.to_string());
    }
    cmd.status().expect("binary runs").code().unwrap_or(-1)
}

fn criterion9() -> Outcome {
    let (bundle, spec, delta) = si_certified();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let tested = FALSIFICATION_FACTOR * delta;
    let d = format!("{tested:.17e}");
    let mut codes = Vec::new();
    for mode in ["per-step", "constant"] {
        codes.push(cli(
            &[
                "validate",
                "--model",
                "single-integrator",
                "--delta",
                &d,
                "--distribution",
                "fixed-magnitude",
                "--mode",
                mode,
                "--seed",
                "42",
                "--out",
                out,
            ],
            None,
        ));
    }
    // smallest bound at which the worst-case push falsifies, for the record
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if adversarial_si(&bundle, &spec, mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    outcome(
        codes.contains(&3),
        format!(
            "δ = {tested:.4e} ({FALSIFICATION_FACTOR}× δ^T): exit codes per-step {} / constant {}; worst-case push first falsifies at δ ≈ {hi:.4e} = {:.0}× δ^T",
            codes[0],
            codes[1],
            hi / delta
        ),
    )
}

fn csv_under_pools(make: impl Fn() -> TrialStats + Sync) -> Vec<String> {
    THREAD_COUNTS
        .iter()
        .map(|t| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(*t)
                .build()
                .unwrap()
                .install(|| make().to_csv())
        })
        .collect()
}

fn cli_trials_csv(dir: &Path, threads: usize, model: &str, spec: Option<&str>) -> Vec<u8> {
    let out = dir.join(format!("{model}-{threads}"));
    let out = out.to_str().unwrap();
    let mut args = vec!["certify", "--model", model, "--out", out];
    if let Some(s) = spec {
        args.extend(["--spec", s]);
    }
    assert_eq!(cli(&args, Some(threads)), 0);
    args[0] = "validate";
    args.extend(["--seed", "42", "--trials", "1000"]);
    assert_eq!(cli(&args, Some(threads)), 0);
    std::fs::read(Path::new(out).join("trials.csv")).unwrap()
}

fn criterion10() -> Outcome {
    let mut identical = true;
    let mut notes = Vec::new();
    let (b6, s6, d6) = segway_psi2();
    let (b7, s7, d7) = segway_full();
    let (b8, s8, d8) = si_certified();
    let runs: Vec<(&str, Vec<String>)> = vec![
        (
            "6",
            csv_under_pools(|| {
                trials(
                    &b6,
                    &s6,
                    d6,
                    DisturbanceKind::UniformBall,
                    DisturbanceMode::PerStep,
                )
            }),
        ),
        (
            "7/per-step",
            csv_under_pools(|| {
                trials(
                    &b7,
                    &s7,
                    d7,
                    DisturbanceKind::UniformBall,
                    DisturbanceMode::PerStep,
                )
            }),
        ),
        (
            "7/constant",
            csv_under_pools(|| {
                trials(
                    &b7,
                    &s7,
                    d7,
                    DisturbanceKind::UniformBall,
                    DisturbanceMode::Constant,
                )
            }),
        ),
        (
            "8",
            csv_under_pools(|| {
                trials(
                    &b8,
                    &s8,
                    d8,
                    DisturbanceKind::UniformBall,
                    DisturbanceMode::PerStep,
                )
            }),
        ),
    ];
    for (name, csvs) in &runs {
        let same = csvs.windows(2).all(|w| w[0] == w[1]);
        identical &= same;
        notes.push(format!(
            "{name}: {}",
            if same { "identical" } else { "DIFFERENT" }
        ));
    }
    let dir = tempfile::tempdir().unwrap();
    let mut cli_same = true;
    for (model, spec) in [
        ("segway", Some("G[0,2](mu2)")),
        ("segway", None),
        ("single-integrator", None),
    ] {
        let a = cli_trials_csv(dir.path(), 1, model, spec);
        let b = cli_trials_csv(dir.path(), 4, model, spec);
        cli_same &= a == b;
    }
    notes.push(format!(
        "CLI trials.csv with 1 vs 4 threads: {}",
        if cli_same { "identical" } else { "DIFFERENT" }
    ));
    outcome(
        identical && cli_same,
        format!("threads {THREAD_COUNTS:?}; {}", notes.join(", ")),
    )
}

fn main() {
    // lets `cargo test -- <filter>` style invocations of other targets pass through
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let s = Duration::from_secs;
    let results = [
        run(1, "delta1 formula", s(1), criterion1),
        run(2, "closed-form margin oracle", s(10), criterion2),
        run(3, "invariance bound soundness", s(30), criterion3),
        run(4, "Gronwall deviation envelope", s(60), criterion4),
        run(5, "monitor oracle equivalence", s(60), criterion5),
        run(6, "segway invariance trials", s(300), criterion6),
        run(7, "segway composite trials", s(300), criterion7),
        run(8, "single-integrator example", s(120), criterion8),
        run(9, "non-vacuousness at 20x", s(60), criterion9),
        run(10, "determinism across thread counts", s(600), criterion10),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, p)| !**p)
        .map(|(i, _)| i + 1)
        .collect();
    println!(
        "acceptance: {} passed, {} failed {:?}",
        results.len() - failed.len(),
        failed.len(),
        failed
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
