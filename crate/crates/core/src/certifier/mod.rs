//! Disturbance bounds for specifications in the fragment.
//!
//! * `G[0,b](ω)` leaves get the invariance bound `δ⁰`: the smallest, over the grid
//!   points of `C_ω`, of the largest disturbance norm that keeps every member's
//!   barrier condition `ḣ ≥ −α(h)` satisfied.
//! * Every other leaf gets `δ¹ = Δ / (L_ρ · b · e^{L_f·b})`, where `Δ` is the worst
//!   nominal robustness over a grid of initial states.
//! * The composite bound is the minimum over leaves and holds on `C_ψ`, the
//!   intersection of the invariance leaves' `C_ω`.

mod alpha;
mod grid;
mod margin;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    estimate_lipschitz, integrate, ClosedLoopSystem, DynamicsError, StateBox, DEFAULT_DT,
    LIPSCHITZ_INFLATION,
};
use crate::fmt::extended_f64;
use crate::spec_lang::{
    decompose, predicates_of, robustness, ConjunctiveClause, Interval, PredicateDef, SpecError,
    SpecNode,
};

pub use alpha::ClassKappaInf;
pub use grid::GridSampler;
pub use margin::{
    finite_difference_gradient, gradient, gradient_mismatch, margin_e, GRADIENT_FLOOR,
    GRADIENT_MISMATCH_TOL,
};

/// Points per axis used when a grid is left unspecified.
pub const DEFAULT_POINTS_PER_AXIS: usize = 41;

const REFINE_ITERATIONS: usize = 50;
const GRADIENT_CHECK_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no class-K function configured for predicate `{0}`")]
    MissingAlpha(String),
    #[error("`{0}` is not of the form G[0,b](ω)")]
    NotInvariance(String),
    #[error("no grid point of the state grid lies in C_ω for `{0}`")]
    EmptyFeasibleSet(String),
    #[error("every initial state left the domain before the horizon of `{0}`")]
    AllFairnessViolated(String),
    #[error("non-finite evaluation: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertConfig {
    /// Class-K function per predicate; `!name` entries override `name` for negations.
    pub alpha: BTreeMap<String, ClassKappaInf>,
    /// Lipschitz constant of `f_cl` in 1/s. Estimated by sampling when absent.
    pub lipschitz_f: Option<f64>,
    /// Lipschitz constant of the robustness in the sup-norm on signals.
    pub lipschitz_rho: f64,
    /// Theorem-1 grid: points per axis (one entry broadcasts) and optional box.
    pub state_grid: Vec<usize>,
    pub state_box: Option<StateBox>,
    /// Points per axis of the initial-state grid for the nominal-robustness minimum.
    pub init_grid: Vec<usize>,
    pub dt: f64,
    /// Coordinate-descent polish of the Theorem-1 grid minimizer.
    pub refine: bool,
    pub lipschitz_pairs: usize,
    pub seed: u64,
}

impl Default for CertConfig {
    fn default() -> Self {
        Self {
            alpha: BTreeMap::new(),
            lipschitz_f: None,
            lipschitz_rho: 1.0,
            state_grid: vec![DEFAULT_POINTS_PER_AXIS],
            state_box: None,
            init_grid: vec![5],
            dt: DEFAULT_DT,
            refine: true,
            lipschitz_pairs: 20_000,
            seed: 0,
        }
    }
}

impl CertConfig {
    pub fn validate(&self) -> Result<(), CertError> {
        if !(self.lipschitz_rho > 0.0 && self.lipschitz_rho.is_finite()) {
            return Err(CertError::Config(format!(
                "lipschitz_rho must be positive, got {}",
                self.lipschitz_rho
            )));
        }
        if let Some(l) = self.lipschitz_f {
            if !(l > 0.0 && l.is_finite()) {
                return Err(CertError::Config(format!(
                    "lipschitz_f must be positive, got {l}"
                )));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CertError::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if let Some(b) = &self.state_box {
            b.validate()?;
        }
        Ok(())
    }

    pub fn alpha_for(&self, pred: &PredicateDef) -> Result<ClassKappaInf, CertError> {
        self.alpha
            .get(&pred.label())
            .or_else(|| self.alpha.get(pred.name()))
            .copied()
            .ok_or_else(|| CertError::MissingAlpha(pred.label()))
    }

    fn state_sampler(&self, system: &ClosedLoopSystem) -> Result<GridSampler, CertError> {
        let bounds = self
            .state_box
            .clone()
            .unwrap_or_else(|| system.domain().clone());
        if bounds.dim() != system.dim() {
            return Err(CertError::Config(format!(
                "state_box has {} axes, system has {}",
                bounds.dim(),
                system.dim()
            )));
        }
        GridSampler::new(
            bounds,
            resolve_points(&self.state_grid, system.dim(), "state_grid")?,
        )
    }
}

fn resolve_points(points: &[usize], dim: usize, what: &str) -> Result<Vec<usize>, CertError> {
    match points.len() {
        0 => Ok(vec![DEFAULT_POINTS_PER_AXIS; dim]),
        1 => Ok(vec![points[0]; dim]),
        n if n == dim => Ok(points.to_vec()),
        n => Err(CertError::Config(format!(
            "{what} has {n} entries for a {dim}-dimensional state"
        ))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Barrier-condition bound for `G[0,b](ω)`.
    Theorem1,
    /// Robustness-margin bound through the trajectory deviation estimate.
    Theorem2,
}

/// Result of the invariance bound for one clause.
#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceBound {
    pub bound: f64,
    pub argmin_state: Vec<f64>,
    pub binding_predicate: Option<String>,
    /// Grid points inside `C_ω`.
    pub feasible_points: usize,
    pub grid_points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NominalMargin {
    pub value: f64,
    pub argmin_state: Vec<f64>,
    pub fairness_violations: usize,
    pub grid_points: usize,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    value: f64,
    index: usize,
    tag: usize,
}

/// Lower value wins; ties go to the lower grid index so parallel reduction is
/// reproducible.
fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            if b.value < a.value || (b.value == a.value && b.index < a.index) {
                Some(b)
            } else {
                Some(a)
            }
        }
    }
}

/// Minimum over members of the closed-form margin, with the index of the minimizer.
fn clause_margin(
    x: &[f64],
    preds: &[PredicateDef],
    alphas: &[ClassKappaInf],
    system: &ClosedLoopSystem,
) -> Result<(f64, usize), CertError> {
    let mut best = (f64::INFINITY, 0);
    for (j, (p, a)) in preds.iter().zip(alphas).enumerate() {
        let m = margin_e(x, p, a, system)?;
        if m < best.0 {
            best = (m, j);
        }
    }
    Ok(best)
}

/// Invariance bound `δ⁰` of `G[0,b](clause)`.
///
/// Minimizes the clause margin over grid points of `C_ω = box ∩ 𝒳 ∩ {h_μ ≥ 0}` and,
/// with `config.refine`, polishes the minimizer by coordinate descent inside `C_ω`.
/// A negative result is returned as is; the caller treats it as infeasible.
pub fn compute_delta0(
    clause: &ConjunctiveClause,
    interval: Interval,
    system: &ClosedLoopSystem,
    config: &CertConfig,
) -> Result<InvarianceBound, CertError> {
    if interval.start() != 0.0 {
        return Err(CertError::NotInvariance(
            SpecNode::Always(interval, clause.clone()).to_string(),
        ));
    }
    let preds = predicates_of(clause);
    let alphas = preds
        .iter()
        .map(|p| config.alpha_for(p))
        .collect::<Result<Vec<_>, _>>()?;
    let sampler = config.state_sampler(system)?.with_filter(clause.clone());
    let domain = system.domain();
    let inside = |x: &[f64]| sampler.bounds().contains(x) && domain.contains(x) && clause.holds(x);

    let (best, feasible) = (0..sampler.total())
        .into_par_iter()
        .map(|i| -> Result<(Option<Candidate>, usize), CertError> {
            let x = sampler.point(i);
            if !inside(&x) {
                return Ok((None, 0));
            }
            let (value, tag) = clause_margin(&x, &preds, &alphas, system)?;
            Ok((
                Some(Candidate {
                    value,
                    index: i,
                    tag,
                }),
                1,
            ))
        })
        .try_reduce(|| (None, 0), |a, b| Ok((better(a.0, b.0), a.1 + b.1)))?;

    let best = best.ok_or_else(|| CertError::EmptyFeasibleSet(clause.to_string()))?;
    let mut argmin = sampler.point(best.index);
    let (mut value, mut tag) = (best.value, best.tag);

    if config.refine && value.is_finite() && !preds.is_empty() {
        let mut steps = sampler.spacing();
        for _ in 0..REFINE_ITERATIONS {
            let mut improved = false;
            for axis in 0..argmin.len() {
                for sign in [-1.0, 1.0] {
                    let mut y = argmin.clone();
                    y[axis] += sign * steps[axis];
                    if steps[axis] == 0.0 || !inside(&y) {
                        continue;
                    }
                    let (v, t) = clause_margin(&y, &preds, &alphas, system)?;
                    if v < value {
                        argmin = y;
                        value = v;
                        tag = t;
                        improved = true;
                    }
                }
            }
            if !improved {
                steps.iter_mut().for_each(|s| *s *= 0.5);
            }
        }
    }

    Ok(InvarianceBound {
        bound: value,
        argmin_state: argmin,
        binding_predicate: preds.get(tag).map(PredicateDef::label),
        feasible_points: feasible,
        grid_points: sampler.total(),
    })
}

/// Worst nominal robustness `Δ` of `subspec` at time 0 over a grid of initial states.
///
/// Trajectories that leave the domain before the horizon count as `−∞`.
pub fn compute_capital_delta(
    subspec: &SpecNode,
    system: &ClosedLoopSystem,
    config: &CertConfig,
    init_region: &StateBox,
) -> Result<NominalMargin, CertError> {
    if matches!(subspec, SpecNode::And(..)) {
        return Err(CertError::Config("expected a single temporal leaf".into()));
    }
    if !system.domain().contains_box(init_region) {
        return Err(CertError::Config(format!(
            "init region {init_region} is not inside the domain"
        )));
    }
    let sampler = GridSampler::new(
        init_region.clone(),
        resolve_points(&config.init_grid, system.dim(), "init_grid")?,
    )?;
    let horizon = subspec.horizon();

    let (best, exits) = (0..sampler.total())
        .into_par_iter()
        .map(|i| -> Result<(Option<Candidate>, usize), CertError> {
            let x0 = sampler.point(i);
            let traj = integrate(system, &x0, horizon, config.dt, None)?;
            let (value, exited) = if traj.exited_domain_at.is_some() {
                (f64::NEG_INFINITY, 1)
            } else {
                (robustness(subspec, &traj, 0.0)?, 0)
            };
            Ok((
                Some(Candidate {
                    value,
                    index: i,
                    tag: 0,
                }),
                exited,
            ))
        })
        .try_reduce(|| (None, 0), |a, b| Ok((better(a.0, b.0), a.1 + b.1)))?;

    if exits == sampler.total() {
        return Err(CertError::AllFairnessViolated(subspec.to_string()));
    }
    let best = best.expect("grid has at least one point");
    Ok(NominalMargin {
        value: best.value,
        argmin_state: sampler.point(best.index),
        fairness_violations: exits,
        grid_points: sampler.total(),
    })
}

/// `δ¹ = Δ / (L_ρ · b · e^{L_f·b})`. Negative `Δ` gives a negative (infeasible) bound.
pub fn compute_delta1(
    capital_delta: f64,
    lipschitz_rho: f64,
    horizon: f64,
    lipschitz_f: f64,
) -> Result<f64, CertError> {
    if !(lipschitz_rho > 0.0) {
        return Err(CertError::Config(format!(
            "L_rho must be positive, got {lipschitz_rho}"
        )));
    }
    if !(horizon > 0.0) {
        return Err(CertError::Config(format!(
            "b must be positive, got {horizon}"
        )));
    }
    if !(lipschitz_f >= 0.0) {
        return Err(CertError::Config(format!(
            "L_f must be nonnegative, got {lipschitz_f}"
        )));
    }
    Ok(capital_delta / (lipschitz_rho * horizon * (lipschitz_f * horizon).exp()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspecBound {
    pub subspec: String,
    pub method: Method,
    #[serde(with = "extended_f64")]
    pub bound: f64,
    pub feasible: bool,
    /// Nominal robustness minimum, for the Theorem-2 path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capital_delta: Option<f64>,
    pub argmin_state: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding_predicate: Option<String>,
    pub grid_points: usize,
    #[serde(default)]
    pub fairness_violations: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub lipschitz_f_used: f64,
    /// `asserted` or `estimated`.
    pub lipschitz_f_source: String,
    /// Sampled estimate (never a certificate).
    pub lipschitz_f_estimate: Option<f64>,
    /// Set when some sampled difference quotient exceeds the asserted `L_f`.
    pub lipschitz_f_unverified: bool,
    pub lipschitz_rho: f64,
    pub state_grid_points: usize,
    pub init_grid_points: usize,
    pub gradient_warnings: Vec<String>,
    pub fairness_violations: usize,
    /// Wall-clock time; not serialized so reports stay reproducible.
    #[serde(skip)]
    pub runtime: Duration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub system: String,
    pub spec: String,
    pub per_subspec: Vec<SubspecBound>,
    #[serde(with = "extended_f64")]
    pub delta_t: f64,
    pub feasible: bool,
    /// Human-readable description of `C_ψ`.
    pub region: String,
    pub region_box: StateBox,
    pub region_predicates: Vec<String>,
    #[serde(skip)]
    pub region_clause: ConjunctiveClause,
    pub init_region: StateBox,
    pub config: CertConfig,
    pub diagnostics: Diagnostics,
}

impl CertificateReport {
    /// Membership in the certified region `C_ψ`.
    ///
    /// Reports read back from JSON carry only predicate names; call
    /// [`CertificateReport::attach_region`] before testing membership on them.
    pub fn region_contains(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite())
            && self.region_box.contains(x)
            && self.region_clause.holds(x)
    }

    pub fn attach_region(&mut self, clause: ConjunctiveClause) {
        self.region_clause = clause;
    }
}

/// Certifies `spec`: per-leaf bounds, their minimum, and the region it holds on.
pub fn certify(
    spec: &SpecNode,
    system: &ClosedLoopSystem,
    config: &CertConfig,
    init_region: &StateBox,
) -> Result<CertificateReport, CertError> {
    let started = Instant::now();
    config.validate()?;
    let leaves = decompose(spec);
    let state_sampler = config.state_sampler(system)?;

    let estimate = if state_sampler.bounds().has_volume() {
        Some(estimate_lipschitz(
            system,
            state_sampler.bounds(),
            config.lipschitz_pairs.max(1000),
            config.seed,
        )?)
    } else {
        None
    };
    let (l_f, source) = match (config.lipschitz_f, estimate) {
        (Some(l), _) => (l, "asserted"),
        (None, Some(e)) => (e, "estimated"),
        (None, None) => {
            return Err(CertError::Config(
                "lipschitz_f must be given when the state box has no volume".into(),
            ));
        }
    };

    let mut per_subspec = Vec::with_capacity(leaves.len());
    let mut region_preds: Vec<PredicateDef> = Vec::new();
    let mut warnings = Vec::new();
    let mut fairness = 0;
    let mut init_points = 0;

    for leaf in &leaves {
        if let Some((iv, clause)) = leaf.as_invariance() {
            let res = compute_delta0(clause, iv, system, config)?;
            for p in predicates_of(clause) {
                if !region_preds.contains(&p) {
                    region_preds.push(p);
                }
            }
            warnings.extend(gradient_warnings(clause, &res.argmin_state, &state_sampler));
            per_subspec.push(SubspecBound {
                subspec: leaf.to_string(),
                method: Method::Theorem1,
                bound: res.bound,
                feasible: res.bound >= 0.0,
                capital_delta: None,
                argmin_state: res.argmin_state,
                binding_predicate: res.binding_predicate,
                grid_points: res.feasible_points,
                fairness_violations: 0,
            });
        } else {
            let res = compute_capital_delta(leaf, system, config, init_region)?;
            let bound = compute_delta1(res.value, config.lipschitz_rho, leaf.horizon(), l_f)?;
            fairness += res.fairness_violations;
            init_points = res.grid_points;
            per_subspec.push(SubspecBound {
                subspec: leaf.to_string(),
                method: Method::Theorem2,
                bound,
                feasible: bound >= 0.0,
                capital_delta: Some(res.value),
                argmin_state: res.argmin_state,
                binding_predicate: None,
                grid_points: res.grid_points,
                fairness_violations: res.fairness_violations,
            });
        }
    }

    let delta_t = per_subspec
        .iter()
        .map(|s| s.bound)
        .fold(f64::INFINITY, f64::min);
    let feasible = per_subspec.iter().all(|s| s.feasible);
    let has_invariance = per_subspec.iter().any(|s| s.method == Method::Theorem1);
    let region_box = if has_invariance {
        state_sampler.bounds().clone()
    } else {
        system.domain().clone()
    };
    let region_clause = ConjunctiveClause::new(region_preds);
    let region = if region_clause.is_truth() {
        format!("{region_box}")
    } else {
        format!("{region_box} ∩ {{{region_clause}}}")
    };

    Ok(CertificateReport {
        system: system.label().to_string(),
        spec: spec.to_string(),
        per_subspec,
        delta_t,
        feasible,
        region,
        region_box,
        region_predicates: region_clause
            .predicates
            .iter()
            .map(PredicateDef::label)
            .collect(),
        region_clause,
        init_region: init_region.clone(),
        config: config.clone(),
        diagnostics: Diagnostics {
            lipschitz_f_used: l_f,
            lipschitz_f_source: source.to_string(),
            lipschitz_f_estimate: estimate,
            lipschitz_f_unverified: matches!(estimate, Some(e) if config.lipschitz_f.is_some() && e / LIPSCHITZ_INFLATION > l_f),
            lipschitz_rho: config.lipschitz_rho,
            state_grid_points: state_sampler.total(),
            init_grid_points: init_points,
            gradient_warnings: warnings,
            fairness_violations: fairness,
            runtime: started.elapsed(),
        },
    })
}

/// Analytic-vs-numeric gradient check at the minimizer and at a strided sample of
/// clause-feasible grid points.
fn gradient_warnings(
    clause: &ConjunctiveClause,
    argmin: &[f64],
    sampler: &GridSampler,
) -> Vec<String> {
    let stride = (sampler.total() / GRADIENT_CHECK_SAMPLES).max(1);
    let probes = std::iter::once(argmin.to_vec()).chain(
        (0..sampler.total())
            .step_by(stride)
            .map(|i| sampler.point(i))
            .filter(|x| clause.holds(x)),
    );
    let mut out = Vec::new();
    for x in probes {
        for p in predicates_of(clause) {
            if let Some(m) = gradient_mismatch(&p, &x) {
                if m > GRADIENT_MISMATCH_TOL {
                    out.push(format!(
                        "gradient of `{}` at {x:?} differs from finite differences by {m:.3e}",
                        p.label()
                    ));
                }
            }
        }
    }
    out
}
