//! Monte-Carlo and adversarial checks of certified bounds.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certifier::{gradient, margin_e, CertConfig, CertError, GRADIENT_FLOOR};
use crate::dynamics::{
    integrate, integrate_with_feedback, sample_disturbance, step_count, ClosedLoopSystem,
    DisturbanceKind, DisturbanceSignal, DynamicsError, StateBox, Trajectory,
};
use crate::fmt::{dist, extended_f64, norm, sci17};
use crate::spec_lang::{predicates_of, robustness, ConjunctiveClause, SpecError, SpecNode};

/// Slack added to the deviation envelope for integration error.
pub const GRONWALL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("spec horizon {spec}s exceeds the configured horizon {configured}s")]
    HorizonTooShort { spec: f64, configured: f64 },
    #[error("gradient of `{predicate}` vanished at t = {t}")]
    VanishingGradient { predicate: String, t: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Cert(#[from] CertError),
}

/// Where each trial starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    Fixed(Vec<f64>),
    /// Uniform in the box, drawn from the trial's seed.
    Region(StateBox),
}

/// Temporal structure of the disturbance within one trial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisturbanceMode {
    /// A fresh draw every integration step.
    #[default]
    PerStep,
    /// One draw held for the whole run.
    Constant,
}

impl std::str::FromStr for DisturbanceMode {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-step" => Ok(Self::PerStep),
            "constant" => Ok(Self::Constant),
            other => Err(ValidationError::InvalidArgument(format!(
                "unknown disturbance mode `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialSetup {
    pub delta: f64,
    pub trials: usize,
    pub kind: DisturbanceKind,
    pub mode: DisturbanceMode,
    pub dt: f64,
    pub seed: u64,
    /// Integration horizon; the spec horizon when absent.
    pub horizon: Option<f64>,
}

impl TrialSetup {
    pub fn new(delta: f64, trials: usize, seed: u64) -> Self {
        Self {
            delta,
            trials,
            kind: DisturbanceKind::UniformBall,
            mode: DisturbanceMode::PerStep,
            dt: crate::dynamics::DEFAULT_DT,
            seed,
            horizon: None,
        }
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(trial as u64)
    }

    fn check(&self, spec_horizon: f64) -> Result<f64, ValidationError> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(ValidationError::InvalidArgument(format!(
                "delta must be finite and nonnegative, got {}",
                self.delta
            )));
        }
        if self.trials == 0 {
            return Err(ValidationError::InvalidArgument(
                "need at least one trial".into(),
            ));
        }
        let horizon = self.horizon.unwrap_or(spec_horizon);
        if spec_horizon > horizon + 1e-12 {
            return Err(ValidationError::HorizonTooShort {
                spec: spec_horizon,
                configured: horizon,
            });
        }
        Ok(horizon)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub num_trials: usize,
    pub num_violations: usize,
    pub robustness_values: Vec<f64>,
    pub exited_early: Vec<bool>,
    #[serde(with = "extended_f64")]
    pub min_robustness: f64,
    pub seed: u64,
    pub delta_used: f64,
    pub fairness_violations: usize,
    /// Trials with `|ρ|` below the largest single-step state displacement.
    pub near_boundary: usize,
    pub near_boundary_tolerance: f64,
    /// Trial with the smallest robustness (lowest index on ties).
    pub worst_trial: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub num_trials: usize,
    pub num_violations: usize,
    #[serde(with = "extended_f64")]
    pub min_robustness: f64,
    #[serde(with = "extended_f64")]
    pub mean_robustness: f64,
    pub seed: u64,
    pub delta_used: f64,
    pub fairness_violations: usize,
    pub near_boundary: usize,
    pub near_boundary_tolerance: f64,
    pub worst_trial: usize,
}

impl TrialStats {
    pub fn seed_of(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(trial as u64)
    }

    pub fn summary(&self) -> TrialSummary {
        let mean = self.robustness_values.iter().sum::<f64>() / self.num_trials as f64;
        TrialSummary {
            num_trials: self.num_trials,
            num_violations: self.num_violations,
            min_robustness: self.min_robustness,
            mean_robustness: mean,
            seed: self.seed,
            delta_used: self.delta_used,
            fairness_violations: self.fairness_violations,
            near_boundary: self.near_boundary,
            near_boundary_tolerance: self.near_boundary_tolerance,
            worst_trial: self.worst_trial,
        }
    }

    /// Rows of `trial,seed,rho,exited_early`, ρ with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "trial,seed,rho,exited_early")?;
        for (i, (rho, exited)) in self
            .robustness_values
            .iter()
            .zip(&self.exited_early)
            .enumerate()
        {
            writeln!(w, "{i},{},{},{exited}", self.seed_of(i), sci17(*rho))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Initial state and disturbance of trial `trial`.
pub fn trial_inputs(
    system: &ClosedLoopSystem,
    x0: &InitialState,
    setup: &TrialSetup,
    horizon: f64,
    trial: usize,
) -> Result<(Vec<f64>, DisturbanceSignal), ValidationError> {
    let seed = setup.trial_seed(trial);
    let n = system.dim();
    let start = match x0 {
        InitialState::Fixed(x) => x.clone(),
        InitialState::Region(b) => {
            if b.dim() != n {
                return Err(DynamicsError::Dimension {
                    expected: n,
                    got: b.dim(),
                }
                .into());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            (0..n)
                .map(|i| b.lower[i] + rng.random::<f64>() * b.width(i))
                .collect()
        }
    };
    let signal = match setup.mode {
        DisturbanceMode::PerStep => {
            sample_disturbance(n, setup.delta, horizon, setup.dt, setup.kind, seed)?
        }
        DisturbanceMode::Constant => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = setup.kind.draw(&mut rng, n, setup.delta);
            DisturbanceSignal::constant(d, step_count(horizon, setup.dt)?, setup.dt, setup.delta)?
        }
    };
    Ok((start, signal))
}

/// Disturbed trajectory of trial `trial`, as used by [`run_trials`].
pub fn trial_trajectory(
    system: &ClosedLoopSystem,
    spec: &SpecNode,
    x0: &InitialState,
    setup: &TrialSetup,
    trial: usize,
) -> Result<Trajectory, ValidationError> {
    let horizon = setup.check(spec.horizon())?;
    let (start, signal) = trial_inputs(system, x0, setup, horizon, trial)?;
    Ok(integrate(system, &start, horizon, setup.dt, Some(&signal))?)
}

/// Runs `setup.trials` disturbed simulations and records `ρ(ψ, φ^d(x₀), 0)` for each.
///
/// Trial `i` is seeded with `seed + i`, so results do not depend on scheduling. A
/// trial that leaves the domain before the horizon gets `ρ = −∞` and counts as a
/// violation as well as a fairness violation.
pub fn run_trials(
    system: &ClosedLoopSystem,
    spec: &SpecNode,
    x0: &InitialState,
    setup: &TrialSetup,
) -> Result<TrialStats, ValidationError> {
    let horizon = setup.check(spec.horizon())?;
    let results = (0..setup.trials)
        .into_par_iter()
        .map(|i| -> Result<(f64, bool, f64), ValidationError> {
            let (start, signal) = trial_inputs(system, x0, setup, horizon, i)?;
            let traj = integrate(system, &start, horizon, setup.dt, Some(&signal))?;
            let max_step = traj
                .states
                .windows(2)
                .map(|w| dist(&w[0], &w[1]))
                .fold(0.0, f64::max);
            if traj.exited_domain_at.is_some() {
                return Ok((f64::NEG_INFINITY, true, max_step));
            }
            Ok((robustness(spec, &traj, 0.0)?, false, max_step))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let tol = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let robustness_values: Vec<f64> = results.iter().map(|r| r.0).collect();
    let exited_early: Vec<bool> = results.iter().map(|r| r.1).collect();
    let mut worst_trial = 0;
    for (i, rho) in robustness_values.iter().enumerate() {
        if *rho < robustness_values[worst_trial] {
            worst_trial = i;
        }
    }
    Ok(TrialStats {
        num_trials: setup.trials,
        num_violations: robustness_values.iter().filter(|r| **r < 0.0).count(),
        min_robustness: robustness_values[worst_trial],
        near_boundary: robustness_values.iter().filter(|r| r.abs() < tol).count(),
        near_boundary_tolerance: tol,
        fairness_violations: exited_early.iter().filter(|e| **e).count(),
        robustness_values,
        exited_early,
        seed: setup.seed,
        delta_used: setup.delta,
        worst_trial,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdversarialOutcome {
    /// `(label, min h)` per clause member along the run.
    pub min_h_per_predicate: Vec<(String, f64)>,
    pub tolerance: f64,
    pub pass: bool,
    pub trajectory: Trajectory,
}

/// Integrates under the worst-case push `d(x) = −δ·∇h_β/‖∇h_β‖`, with `β` the member
/// of smallest barrier margin at the start of each step.
///
/// Passes when every member stays above `−tol`, `tol = 10·dt·(sup‖f_cl‖ + δ)` with the
/// sup taken along the run.
pub fn adversarial_check(
    system: &ClosedLoopSystem,
    clause: &ConjunctiveClause,
    config: &CertConfig,
    delta: f64,
    x0: &[f64],
    horizon: f64,
    dt: f64,
) -> Result<AdversarialOutcome, ValidationError> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(ValidationError::InvalidArgument(format!(
            "delta must be finite and nonnegative, got {delta}"
        )));
    }
    if !clause.holds(x0) {
        return Err(ValidationError::InvalidArgument(format!(
            "x0 = {x0:?} is not in C_ω of {clause}"
        )));
    }
    let preds = predicates_of(clause);
    let alphas = preds
        .iter()
        .map(|p| config.alpha_for(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut failure: Option<ValidationError> = None;

    let trajectory = integrate_with_feedback(system, x0, horizon, dt, |k, x, d| {
        d.fill(0.0);
        if delta == 0.0 || preds.is_empty() {
            return Ok(());
        }
        let mut beta = 0;
        let mut lowest = f64::INFINITY;
        for (j, (p, a)) in preds.iter().zip(&alphas).enumerate() {
            let m = margin_e(x, p, a, system).map_err(|e| DynamicsError::Feedback {
                step: k,
                msg: e.to_string(),
            })?;
            if m < lowest {
                lowest = m;
                beta = j;
            }
        }
        let g = gradient(&preds[beta], x).map_err(|e| DynamicsError::Feedback {
            step: k,
            msg: e.to_string(),
        })?;
        let len = norm(&g);
        if len < GRADIENT_FLOOR {
            failure = Some(ValidationError::VanishingGradient {
                predicate: preds[beta].label(),
                t: k as f64 * dt,
            });
            return Err(DynamicsError::Feedback {
                step: k,
                msg: "vanishing gradient".into(),
            });
        }
        d.iter_mut()
            .zip(&g)
            .for_each(|(di, gi)| *di = -delta * gi / len);
        Ok(())
    });
    let trajectory = match (trajectory, failure) {
        (_, Some(e)) => return Err(e),
        (t, None) => t?,
    };

    let sup_f = trajectory
        .states
        .iter()
        .map(|x| norm(&system.eval(x)))
        .fold(0.0, f64::max);
    let tolerance = 10.0 * dt * (sup_f + delta);
    let min_h_per_predicate: Vec<(String, f64)> = preds
        .iter()
        .map(|p| {
            (
                p.label(),
                trajectory
                    .states
                    .iter()
                    .map(|x| p.eval(x))
                    .fold(f64::INFINITY, f64::min),
            )
        })
        .collect();
    let pass = trajectory.exited_domain_at.is_none()
        && min_h_per_predicate.iter().all(|(_, h)| *h >= -tolerance);
    Ok(AdversarialOutcome {
        min_h_per_predicate,
        tolerance,
        pass,
        trajectory,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GronwallOutcome {
    pub pass: bool,
    /// Largest `deviation − δ·t·e^{Lt}` seen; nonpositive when the envelope holds exactly.
    pub worst_excess: f64,
    pub worst_trial: usize,
}

/// Checks `‖φ_t(x₀) − φ^d_t(x₀)‖ ≤ δ·t·e^{Lt} + tol` at every sample of every trial.
///
/// Even trials hold one fixed-magnitude direction for the whole run (the aligned
/// worst case for linear fields); odd trials redraw uniform-ball samples every step.
#[allow(clippy::too_many_arguments)]
pub fn gronwall_check(
    system: &ClosedLoopSystem,
    x0: &[f64],
    delta: f64,
    num_trials: usize,
    horizon: f64,
    dt: f64,
    lipschitz: f64,
    seed: u64,
) -> Result<GronwallOutcome, ValidationError> {
    if num_trials == 0 {
        return Err(ValidationError::InvalidArgument(
            "need at least one trial".into(),
        ));
    }
    let nominal = integrate(system, x0, horizon, dt, None)?;
    let excesses = (0..num_trials)
        .into_par_iter()
        .map(|i| -> Result<f64, ValidationError> {
            let mut setup = TrialSetup::new(delta, num_trials, seed);
            setup.dt = dt;
            (setup.kind, setup.mode) = if i % 2 == 0 {
                (DisturbanceKind::FixedMagnitude, DisturbanceMode::Constant)
            } else {
                (DisturbanceKind::UniformBall, DisturbanceMode::PerStep)
            };
            let (_, signal) = trial_inputs(
                system,
                &InitialState::Fixed(x0.to_vec()),
                &setup,
                horizon,
                i,
            )?;
            let disturbed = integrate(system, x0, horizon, dt, Some(&signal))?;
            let shared = nominal.len().min(disturbed.len());
            Ok((0..shared)
                .map(|k| {
                    let t = nominal.time(k);
                    dist(&nominal.states[k], &disturbed.states[k])
                        - delta * t * (lipschitz * t).exp()
                })
                .fold(f64::NEG_INFINITY, f64::max))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut worst_trial = 0;
    for (i, e) in excesses.iter().enumerate() {
        if *e > excesses[worst_trial] {
            worst_trial = i;
        }
    }
    let worst_excess = excesses[worst_trial];
    Ok(GronwallOutcome {
        pass: worst_excess <= GRONWALL_TOLERANCE,
        worst_excess,
        worst_trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certifier::ClassKappaInf;
    use crate::spec_lang::{parse_spec, PredicateDef, PredicateRegistry};

    fn decay(rate: f64) -> ClosedLoopSystem {
        ClosedLoopSystem::new(
            "decay",
            StateBox::new(vec![-3.0; 2], vec![3.0; 2]).unwrap(),
            move |x, o| {
                o[0] = -rate * x[0];
                o[1] = -rate * x[1];
            },
        )
        .unwrap()
    }

    fn registry() -> PredicateRegistry {
        PredicateRegistry::new()
            .with(
                PredicateDef::new("disc", |x| 1.0 - x[0] * x[0] - x[1] * x[1])
                    .with_gradient(|x| Some(vec![-2.0 * x[0], -2.0 * x[1]])),
            )
            .unwrap()
            .with(PredicateDef::new("near", |x| 0.5 - norm(x)))
            .unwrap()
    }

    fn disc_config() -> CertConfig {
        CertConfig {
            alpha: [("disc".to_string(), ClassKappaInf::default())].into(),
            ..CertConfig::default()
        }
    }

    #[test]
    fn zero_delta_matches_nominal() {
        let sys = decay(1.0);
        let spec = parse_spec("F[0,2](near)", &registry()).unwrap();
        let x0 = vec![1.0, 0.5];
        let stats = run_trials(
            &sys,
            &spec,
            &InitialState::Fixed(x0.clone()),
            &TrialSetup::new(0.0, 10, 7),
        )
        .unwrap();
        let nominal =
            robustness(&spec, &integrate(&sys, &x0, 2.0, 1e-3, None).unwrap(), 0.0).unwrap();
        assert!(stats.robustness_values.iter().all(|r| *r == nominal));
        assert_eq!(stats.min_robustness, nominal);
        assert_eq!(stats.num_violations, 0);
    }

    #[test]
    fn violations_count_negative_rho() {
        let sys = decay(1.0);
        let spec = parse_spec("F[0,1](near)", &registry()).unwrap();
        let setup = TrialSetup {
            kind: DisturbanceKind::FixedMagnitude,
            mode: DisturbanceMode::Constant,
            ..TrialSetup::new(0.8, 40, 3)
        };
        let stats = run_trials(&sys, &spec, &InitialState::Fixed(vec![1.0, 0.0]), &setup).unwrap();
        assert_eq!(stats.robustness_values.len(), 40);
        assert_eq!(
            stats.num_violations,
            stats.robustness_values.iter().filter(|r| **r < 0.0).count()
        );
        assert!(stats.num_violations > 0);
        assert_eq!(
            stats.min_robustness,
            stats.robustness_values[stats.worst_trial]
        );
    }

    #[test]
    fn bad_setups_rejected() {
        let sys = decay(1.0);
        let spec = parse_spec("F[0,2](near)", &registry()).unwrap();
        let x0 = InitialState::Fixed(vec![0.0, 0.0]);
        assert!(run_trials(&sys, &spec, &x0, &TrialSetup::new(0.1, 0, 0)).is_err());
        assert!(run_trials(&sys, &spec, &x0, &TrialSetup::new(-0.1, 3, 0)).is_err());
        let short = TrialSetup {
            horizon: Some(1.0),
            ..TrialSetup::new(0.1, 3, 0)
        };
        assert!(matches!(
            run_trials(&sys, &spec, &x0, &short),
            Err(ValidationError::HorizonTooShort { .. })
        ));
    }

    #[test]
    fn region_sampling_is_seeded_and_in_box() {
        let sys = decay(1.0);
        let region = StateBox::new(vec![0.0, -0.5], vec![0.5, 0.5]).unwrap();
        let setup = TrialSetup::new(0.1, 5, 9);
        let a = trial_inputs(&sys, &InitialState::Region(region.clone()), &setup, 1.0, 3).unwrap();
        let b = trial_inputs(&sys, &InitialState::Region(region.clone()), &setup, 1.0, 3).unwrap();
        assert_eq!(a, b);
        assert!(region.contains(&a.0));
        let c = trial_inputs(&sys, &InitialState::Region(region), &setup, 1.0, 4).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn constant_mode_holds_one_draw() {
        let sys = decay(1.0);
        let setup = TrialSetup {
            mode: DisturbanceMode::Constant,
            ..TrialSetup::new(0.3, 1, 1)
        };
        let (_, d) =
            trial_inputs(&sys, &InitialState::Fixed(vec![0.0; 2]), &setup, 1.0, 0).unwrap();
        assert_eq!(d.len(), 1000);
        assert!(d.samples().iter().all(|s| s == d.sample(0)));
    }

    #[test]
    fn csv_round_trips_robustness() {
        let sys = decay(1.0);
        let spec = parse_spec("F[0,1](near)", &registry()).unwrap();
        let stats = run_trials(
            &sys,
            &spec,
            &InitialState::Fixed(vec![1.0, 0.0]),
            &TrialSetup::new(0.2, 25, 5),
        )
        .unwrap();
        let csv = stats.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("trial,seed,rho,exited_early"));
        for (i, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[0].parse::<usize>().unwrap(), i);
            assert_eq!(cols[1].parse::<u64>().unwrap(), 5 + i as u64);
            assert_eq!(
                cols[2].parse::<f64>().unwrap().to_bits(),
                stats.robustness_values[i].to_bits()
            );
        }
    }

    #[test]
    fn adversarial_boundary_equilibrium() {
        let spec = parse_spec("G[0,5](disc)", &registry()).unwrap();
        let (_, clause) = spec.as_invariance().unwrap();
        let sys = decay(1.0);
        let ok =
            adversarial_check(&sys, clause, &disc_config(), 1.0, &[1.0, 0.0], 5.0, 1e-3).unwrap();
        assert!(ok.pass, "{:?}", ok.min_h_per_predicate);
        let bad =
            adversarial_check(&sys, clause, &disc_config(), 1.5, &[1.0, 0.0], 5.0, 1e-3).unwrap();
        assert!(!bad.pass);
        assert!(bad.min_h_per_predicate[0].1 < -1.0);
        let none =
            adversarial_check(&sys, clause, &disc_config(), 0.0, &[0.3, 0.3], 1.0, 1e-3).unwrap();
        assert!(none.pass);
    }

    #[test]
    fn adversarial_reports_vanishing_gradient() {
        let spec = parse_spec("G[0,1](disc)", &registry()).unwrap();
        let (_, clause) = spec.as_invariance().unwrap();
        let still = ClosedLoopSystem::new(
            "still",
            StateBox::new(vec![-2.0; 2], vec![2.0; 2]).unwrap(),
            |_, o| o.fill(0.0),
        )
        .unwrap();
        let err = adversarial_check(&still, clause, &disc_config(), 0.1, &[0.0, 0.0], 1.0, 1e-3)
            .unwrap_err();
        assert!(matches!(err, ValidationError::VanishingGradient { .. }));
    }

    #[test]
    fn gronwall_envelope() {
        let sys = decay(1.0);
        assert!(
            gronwall_check(&sys, &[0.5, 0.5], 0.0, 4, 2.0, 1e-3, 1.0, 0)
                .unwrap()
                .pass
        );
        assert!(
            gronwall_check(&sys, &[0.5, 0.5], 0.2, 20, 2.0, 1e-3, 1.0, 0)
                .unwrap()
                .pass
        );
        let growth = ClosedLoopSystem::new(
            "growth",
            StateBox::new(vec![-50.0; 2], vec![50.0; 2]).unwrap(),
            |x, o| {
                o[0] = 2.0 * x[0];
                o[1] = 2.0 * x[1];
            },
        )
        .unwrap();
        assert!(
            gronwall_check(&growth, &[0.1, 0.0], 0.1, 10, 2.0, 1e-3, 2.0, 1)
                .unwrap()
                .pass
        );
        assert!(
            !gronwall_check(&growth, &[0.1, 0.0], 0.1, 10, 2.0, 1e-3, 0.2, 1)
                .unwrap()
                .pass
        );
    }
}
