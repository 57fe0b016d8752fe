//! Command-line front end: `certify`, `validate`, `simulate`.
//!
//! Exit codes: 0 certified or validated, 1 usage or configuration error, 2 infeasible
//! certificate, 3 violations found at the tested bound.

mod config;
pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    parse_alpha_override, CertifierSettings, InitialMode, RunConfig, SimulationSettings,
    ValidationSettings, DEFAULT_HISTOGRAM_BIN, DEFAULT_SEED, DEFAULT_TRIALS,
};

use crate::certifier::{certify, gradient, CertError, CertificateReport};
use crate::dynamics::{
    integrate, integrate_with_feedback, sample_disturbance, DisturbanceKind, DynamicsError,
    Trajectory,
};
use crate::fmt::norm;
use crate::models::{ModelBundle, ModelError, SI_GOAL};
use crate::spec_lang::{robustness, SpecError, SpecNode};
use crate::validation::{
    run_trials, trial_trajectory, DisturbanceMode, InitialState, TrialSetup, TrialStats,
    TrialSummary, ValidationError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_FALSIFIED: i32 = 3;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "STLCERT_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "stlcert",
    version,
    about = "Disturbance bounds for closed-loop systems under STL specifications"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute per-subspecification bounds and the composite bound.
    Certify(CommonArgs),
    /// Run seeded Monte-Carlo trials at a bound.
    Validate(CommonArgs),
    /// One nominal and one disturbed run with plots.
    Simulate(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bundled model: single-integrator or segway.
    #[arg(long)]
    pub model: Option<String>,
    /// Specification text overriding the model's.
    #[arg(long)]
    pub spec: Option<String>,
    /// Disturbance bound for validate or simulate.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Class-K function for a predicate, NAME=FAMILY:GAIN (repeatable).
    #[arg(long = "alpha", value_name = "NAME=FAMILY:GAIN")]
    pub alpha: Vec<String>,
    /// uniform-ball, truncated-gaussian or fixed-magnitude.
    #[arg(long)]
    pub distribution: Option<DisturbanceKind>,
    /// per-step or constant.
    #[arg(long)]
    pub mode: Option<DisturbanceMode>,
    /// Draw trial initial states uniformly from the init region.
    #[arg(long)]
    pub region_init: bool,
    /// Asserted Lipschitz constant of the closed loop.
    #[arg(long)]
    pub lipschitz_f: Option<f64>,
    /// Worst-case gradient push in simulate.
    #[arg(long)]
    pub adversarial: bool,
    /// Simulation horizon in seconds.
    #[arg(long)]
    pub horizon: Option<f64>,
}

impl CommonArgs {
    /// File configuration with flags applied on top.
    pub fn resolve(&self, command: &str) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(m) = &self.model {
            cfg.model = m.clone();
            cfg.linear_model = None;
        }
        if let Some(s) = &self.spec {
            cfg.spec = Some(s.clone());
        }
        if let Some(d) = self.delta {
            match command {
                "simulate" => cfg.simulation.delta = d,
                _ => cfg.validation.delta = Some(d),
            }
        }
        if let Some(n) = self.trials {
            cfg.validation.trials = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        for a in &self.alpha {
            let (name, alpha) = parse_alpha_override(a)?;
            cfg.certifier.alpha.insert(name, alpha);
        }
        if let Some(k) = self.distribution {
            cfg.validation.distribution = k;
            cfg.simulation.distribution = Some(k);
        }
        if let Some(m) = self.mode {
            cfg.validation.mode = m;
        }
        if self.region_init {
            cfg.validation.initial = InitialMode::Region;
        }
        if let Some(l) = self.lipschitz_f {
            cfg.certifier.lipschitz_f = Some(l);
        }
        if self.adversarial {
            cfg.simulation.adversarial = true;
        }
        if let Some(h) = self.horizon {
            cfg.simulation.horizon = Some(h);
        }
        if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
            return Err(CliError::Config(format!(
                "dt must be positive, got {}",
                cfg.dt
            )));
        }
        Ok(cfg)
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit
/// code. Diagnostics go to stderr, tables to stdout.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.parse::<usize>().ok().filter(|n| *n > 0).ok_or_else(|| {
            CliError::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))
        })?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Certify(a) => cmd_certify(&a.resolve("certify")?),
        Command::Validate(a) => cmd_validate(&a.resolve("validate")?),
        Command::Simulate(a) => cmd_simulate(&a.resolve("simulate")?),
    })
}

/// `certificate.json`: the effective configuration and the report.
#[derive(Debug, Serialize, Deserialize)]
pub struct CertificateFile {
    pub run_config: RunConfig,
    pub certificate: CertificateReport,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryFile {
    pub run_config: RunConfig,
    pub spec: String,
    pub distribution: DisturbanceKind,
    pub mode: DisturbanceMode,
    pub summary: TrialSummary,
}

fn prepare(cfg: &RunConfig) -> Result<(ModelBundle, SpecNode), CliError> {
    let bundle = cfg.bundle()?;
    let spec = bundle.spec()?;
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("run_config.toml"), cfg.to_toml())?;
    Ok((bundle, spec))
}

fn provenance(cfg: &RunConfig) -> String {
    format!(
        "stlcert run configuration (seed {})\n{}",
        cfg.seed,
        cfg.to_toml()
    )
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn cmd_certify(cfg: &RunConfig) -> Result<i32, CliError> {
    let (bundle, spec) = prepare(cfg)?;
    let report = certify(&spec, &bundle.system, &bundle.config, &bundle.init_region)?;
    write_json(
        &cfg.output_dir.join("certificate.json"),
        &CertificateFile {
            run_config: cfg.clone(),
            certificate: report.clone(),
        },
    )?;

    let mut out = std::io::stdout().lock();
    writeln!(out, "system: {}   spec: {}", report.system, report.spec)?;
    writeln!(
        out,
        "{:<36} {:<9} {:>14} {:>10}",
        "subspec", "method", "bound", "status"
    )?;
    for s in &report.per_subspec {
        let method = match s.method {
            crate::certifier::Method::Theorem1 => "theorem1",
            crate::certifier::Method::Theorem2 => "theorem2",
        };
        let status = if s.feasible { "ok" } else { "infeasible" };
        writeln!(
            out,
            "{:<36} {:<9} {:>14.6e} {:>10}",
            s.subspec, method, s.bound, status
        )?;
    }
    writeln!(
        out,
        "delta_T = {:.6e} ({})",
        report.delta_t,
        if report.feasible {
            "feasible"
        } else {
            "infeasible"
        }
    )?;
    writeln!(out, "region: {}", report.region)?;
    let d = &report.diagnostics;
    writeln!(
        out,
        "L_f = {} ({}), estimate {}, L_rho = {}, runtime {:.2?}",
        d.lipschitz_f_used,
        d.lipschitz_f_source,
        d.lipschitz_f_estimate
            .map_or("n/a".to_string(), |e| format!("{e:.4}")),
        d.lipschitz_rho,
        d.runtime
    )?;
    if d.lipschitz_f_unverified {
        writeln!(out, "warning: sampled difference quotients exceed the asserted L_f; the theorem-2 bounds rest on that assumption")?;
    }
    for w in &d.gradient_warnings {
        writeln!(out, "warning: {w}")?;
    }
    Ok(if report.feasible {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    })
}

fn certified_delta(cfg: &RunConfig, spec: &SpecNode) -> Result<f64, CliError> {
    if let Some(d) = cfg.validation.delta {
        return Ok(d);
    }
    let path = cfg.output_dir.join("certificate.json");
    let text = fs::read_to_string(&path).map_err(|_| {
        CliError::Usage(format!(
            "no --delta given and no certificate at {}",
            path.display()
        ))
    })?;
    let file: CertificateFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cert = file.certificate;
    if cert.spec != spec.to_string() {
        return Err(CliError::Config(format!(
            "certificate is for `{}`, not `{spec}`",
            cert.spec
        )));
    }
    if !cert.feasible {
        return Err(CliError::Config(format!(
            "certificate is infeasible (delta_T = {})",
            cert.delta_t
        )));
    }
    Ok(cert.delta_t)
}

pub fn trial_setup(cfg: &RunConfig, delta: f64) -> TrialSetup {
    TrialSetup {
        delta,
        trials: cfg.validation.trials,
        kind: cfg.validation.distribution,
        mode: cfg.validation.mode,
        dt: cfg.dt,
        seed: cfg.seed,
        horizon: None,
    }
}

pub fn initial_state(cfg: &RunConfig, bundle: &ModelBundle) -> InitialState {
    match cfg.validation.initial {
        InitialMode::Fixed => InitialState::Fixed(bundle.init_state.clone()),
        InitialMode::Region => InitialState::Region(bundle.init_region.clone()),
    }
}

fn state_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<i32, CliError> {
    if cfg.validation.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let (bundle, spec) = prepare(cfg)?;
    let delta = certified_delta(cfg, &spec)?;
    let setup = trial_setup(cfg, delta);
    let x0 = initial_state(cfg, &bundle);
    let stats: TrialStats = run_trials(&bundle.system, &spec, &x0, &setup)?;

    let dir = &cfg.output_dir;
    fs::write(dir.join("trials.csv"), stats.to_csv())?;
    write_json(
        &dir.join("summary.json"),
        &SummaryFile {
            run_config: cfg.clone(),
            spec: spec.to_string(),
            distribution: setup.kind,
            mode: setup.mode,
            summary: stats.summary(),
        },
    )?;
    let title = format!(
        "robustness over {} trials, δ = {delta:.4e}",
        stats.num_trials
    );
    fs::write(
        dir.join("robustness_hist.svg"),
        svg::histogram(
            &stats.robustness_values,
            cfg.validation.histogram_bin,
            &title,
            &provenance(cfg),
        ),
    )?;
    let worst = trial_trajectory(&bundle.system, &spec, &x0, &setup, stats.worst_trial)?;
    fs::write(dir.join("trajectory.csv"), worst.to_csv())?;
    fs::write(
        dir.join("trajectory.svg"),
        svg::time_series(
            &worst,
            &state_labels(bundle.system.dim()),
            &format!("trial {} (lowest robustness)", stats.worst_trial),
            &provenance(cfg),
        ),
    )?;

    println!(
        "{} trials at delta = {delta:.6e} ({}, {}): {} violations, min rho = {:.6e}, {} near boundary, {} left the domain",
        stats.num_trials,
        setup.kind,
        match setup.mode {
            DisturbanceMode::PerStep => "per-step",
            DisturbanceMode::Constant => "constant",
        },
        stats.num_violations,
        stats.min_robustness,
        stats.near_boundary,
        stats.fairness_violations,
    );
    Ok(if stats.num_violations == 0 {
        EXIT_OK
    } else {
        EXIT_FALSIFIED
    })
}

/// Disturbed run pushing against the gradient of the currently lowest predicate.
pub fn adversarial_run(
    bundle: &ModelBundle,
    spec: &SpecNode,
    delta: f64,
    horizon: f64,
    dt: f64,
) -> Result<Trajectory, CliError> {
    let preds = spec.all_predicates();
    let traj = integrate_with_feedback(
        &bundle.system,
        &bundle.init_state,
        horizon,
        dt,
        |k, x, d| {
            d.fill(0.0);
            let Some(p) = preds.iter().min_by(|a, b| a.eval(x).total_cmp(&b.eval(x))) else {
                return Ok(());
            };
            let g = gradient(p, x).map_err(|e| DynamicsError::Feedback {
                step: k,
                msg: e.to_string(),
            })?;
            let len = norm(&g);
            if len > 0.0 {
                d.iter_mut()
                    .zip(&g)
                    .for_each(|(di, gi)| *di = -delta * gi / len);
            }
            Ok(())
        },
    )?;
    Ok(traj)
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<i32, CliError> {
    let (bundle, spec) = prepare(cfg)?;
    let sim = &cfg.simulation;
    let horizon = sim.horizon.unwrap_or(spec.horizon());
    let nominal = integrate(&bundle.system, &bundle.init_state, horizon, cfg.dt, None)?;
    let disturbed = if sim.adversarial {
        adversarial_run(&bundle, &spec, sim.delta, horizon, cfg.dt)?
    } else {
        let kind = sim.distribution.unwrap_or(cfg.validation.distribution);
        let d = sample_disturbance(
            bundle.system.dim(),
            sim.delta,
            horizon,
            cfg.dt,
            kind,
            cfg.seed,
        )?;
        integrate(
            &bundle.system,
            &bundle.init_state,
            horizon,
            cfg.dt,
            Some(&d),
        )?
    };
    let rho = |t: &Trajectory| -> Result<f64, CliError> {
        if t.exited_domain_at.is_some() {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(robustness(&spec, t, 0.0)?)
    };
    let (rho_nominal, rho_disturbed) = (rho(&nominal)?, rho(&disturbed)?);

    let dir = &cfg.output_dir;
    fs::write(dir.join("nominal.csv"), nominal.to_csv())?;
    fs::write(dir.join("disturbed.csv"), disturbed.to_csv())?;
    let goal = (bundle.name == "single-integrator").then_some((SI_GOAL, 0.1));
    let title = format!(
        "{}: nominal ρ = {rho_nominal:.4}, disturbed ρ = {rho_disturbed:.4}",
        bundle.name
    );
    fs::write(
        dir.join("overlay.svg"),
        svg::overlay(&nominal, &disturbed, goal, &title, &provenance(cfg)),
    )?;
    fs::write(
        dir.join("disturbed.svg"),
        svg::time_series(
            &disturbed,
            &state_labels(bundle.system.dim()),
            "disturbed run",
            &provenance(cfg),
        ),
    )?;
    println!("nominal rho = {rho_nominal:.6e}");
    println!(
        "disturbed rho = {rho_disturbed:.6e} (delta = {}, {})",
        sim.delta,
        if sim.adversarial {
            "adversarial"
        } else {
            "sampled"
        }
    );
    Ok(EXIT_OK)
}
