//! Closed-loop systems `ẋ = f_cl(x) (+ d)`, fixed-step RK4 integration on a uniform
//! grid, bounded disturbance generation and sampling-based Lipschitz estimates.

mod disturbance;
mod lipschitz;

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fmt::{dist, sci17};

pub use disturbance::{sample_disturbance, DisturbanceKind, DisturbanceSignal};
pub use lipschitz::{estimate_lipschitz, LIPSCHITZ_INFLATION};

/// Default integration step in seconds.
pub const DEFAULT_DT: f64 = 1e-3;

/// Each side of the domain is pushed out by this fraction of its width before a
/// trajectory counts as having left it.
pub const DOMAIN_EXIT_INFLATION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("initial state {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),
    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("disturbance norm {norm} exceeds bound {bound} at sample {index}")]
    BoundViolated { index: usize, norm: f64, bound: f64 },
    #[error("disturbance covers {have} steps but {need} are required")]
    DisturbanceTooShort { have: usize, need: usize },
    #[error("disturbance step {disturbance} does not match integrator step {integrator}")]
    StepMismatch { disturbance: f64, integrator: f64 },
    #[error("trajectories are not on the same grid")]
    GridMismatch,
    #[error("trajectory does not cover [{a}, {b}]")]
    Coverage { a: f64, b: f64 },
    #[error("disturbance feedback failed at step {step}: {msg}")]
    Feedback { step: usize, msg: String },
}

/// Axis-aligned box `[lower, upper]` in state space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl StateBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, DynamicsError> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    /// The degenerate box containing only `x`.
    pub fn point(x: &[f64]) -> Self {
        Self {
            lower: x.to_vec(),
            upper: x.to_vec(),
        }
    }

    /// Box with the same half-width on every axis around `center`.
    pub fn around(center: &[f64], half_widths: &[f64]) -> Result<Self, DynamicsError> {
        if center.len() != half_widths.len() {
            return Err(DynamicsError::Dimension {
                expected: center.len(),
                got: half_widths.len(),
            });
        }
        Self::new(
            center.iter().zip(half_widths).map(|(c, h)| c - h).collect(),
            center.iter().zip(half_widths).map(|(c, h)| c + h).collect(),
        )
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.lower.len() != self.upper.len() {
            return Err(DynamicsError::Dimension {
                expected: self.lower.len(),
                got: self.upper.len(),
            });
        }
        if self.lower.is_empty() {
            return Err(DynamicsError::InvalidBox("zero-dimensional".into()));
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(DynamicsError::InvalidBox(format!("axis {i}: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    pub fn contains_box(&self, other: &StateBox) -> bool {
        self.contains(&other.lower) && self.contains(&other.upper)
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn diameter(&self) -> f64 {
        dist(&self.lower, &self.upper)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn has_volume(&self) -> bool {
        (0..self.dim()).all(|i| self.width(i) > 0.0)
    }

    /// Extends each side by `fraction` of that axis' width.
    pub fn inflated(&self, fraction: f64) -> Self {
        let pad: Vec<f64> = (0..self.dim()).map(|i| fraction * self.width(i)).collect();
        Self {
            lower: self.lower.iter().zip(&pad).map(|(v, p)| v - p).collect(),
            upper: self.upper.iter().zip(&pad).map(|(v, p)| v + p).collect(),
        }
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

impl fmt::Display for StateBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if i > 0 {
                f.write_str(" x ")?;
            }
            write!(f, "[{lo}, {hi}]")?;
        }
        Ok(())
    }
}

/// `out ← f_cl(x)`.
pub type VectorField = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A system with its controller already composed in: `ẋ = f_cl(x)` on a box domain.
#[derive(Clone)]
pub struct ClosedLoopSystem {
    label: String,
    domain: StateBox,
    field: Arc<VectorField>,
}

impl ClosedLoopSystem {
    pub fn new(
        label: impl Into<String>,
        domain: StateBox,
        field: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self, DynamicsError> {
        domain.validate()?;
        Ok(Self {
            label: label.into(),
            domain,
            field: Arc::new(field),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &StateBox {
        &self.domain
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.field)(x, out)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        (self.field)(x, &mut out);
        out
    }
}

impl fmt::Debug for ClosedLoopSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedLoopSystem")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

/// Uniformly sampled state signal: sample `k` is the state at `t0 + k·dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<Vec<f64>>,
    /// Index of the first step whose state left the inflated domain. That state is not
    /// stored, so every retained sample lies inside.
    pub exited_domain_at: Option<usize>,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, states: Vec<Vec<f64>>) -> Self {
        Self {
            t0,
            dt,
            states,
            exited_domain_at: None,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// CSV with header `t,x1,...,xn`, 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = String::from("t");
        for i in 1..=self.dim() {
            header.push_str(&format!(",x{i}"));
        }
        writeln!(w, "{header}")?;
        for (k, x) in self.states.iter().enumerate() {
            let mut line = sci17(self.time(k));
            for v in x {
                line.push(',');
                line.push_str(&sci17(*v));
            }
            writeln!(w, "{line}")?;
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

fn sample_count(horizon: f64, dt: f64) -> Result<usize, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(DynamicsError::InvalidArgument(format!(
            "horizon must be nonnegative, got {horizon}"
        )));
    }
    Ok((horizon / dt + 1e-9).floor() as usize + 1)
}

/// Number of integration steps taken over `[0, horizon]` at step `dt`.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize, DynamicsError> {
    Ok(sample_count(horizon, dt)? - 1)
}

/// Integrates `ẋ = f_cl(x) + d_k` with classical RK4 at fixed step `dt`.
///
/// The disturbance sample `d_k` is held over `[k·dt, (k+1)·dt)` and added at every
/// stage. Returns `⌊T/dt⌋ + 1` samples unless the state leaves the inflated domain,
/// in which case integration stops and the exit step is recorded.
pub fn integrate(
    system: &ClosedLoopSystem,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    disturbance: Option<&DisturbanceSignal>,
) -> Result<Trajectory, DynamicsError> {
    let steps = step_count(horizon, dt)?;
    if let Some(d) = disturbance {
        if d.dim() != system.dim() {
            return Err(DynamicsError::Dimension {
                expected: system.dim(),
                got: d.dim(),
            });
        }
        if (d.dt() - dt).abs() > 1e-12 * dt.max(1.0) {
            return Err(DynamicsError::StepMismatch {
                disturbance: d.dt(),
                integrator: dt,
            });
        }
        if d.len() < steps {
            return Err(DynamicsError::DisturbanceTooShort {
                have: d.len(),
                need: steps,
            });
        }
    }
    integrate_with_feedback(system, x0, horizon, dt, |k, _x, out| {
        match disturbance {
            Some(d) => out.copy_from_slice(d.sample(k)),
            None => out.fill(0.0),
        }
        Ok(())
    })
}

/// RK4 integration with a disturbance chosen at the start of each step from the
/// current state, `feedback(k, x_k, d_k)`, and held over the step.
pub fn integrate_with_feedback<F>(
    system: &ClosedLoopSystem,
    x0: &[f64],
    horizon: f64,
    dt: f64,
    mut feedback: F,
) -> Result<Trajectory, DynamicsError>
where
    F: FnMut(usize, &[f64], &mut [f64]) -> Result<(), DynamicsError>,
{
    let n = system.dim();
    if x0.len() != n {
        return Err(DynamicsError::Dimension {
            expected: n,
            got: x0.len(),
        });
    }
    if !system.domain().contains(x0) {
        return Err(DynamicsError::OutsideDomain(x0.to_vec()));
    }
    let samples = sample_count(horizon, dt)?;
    let exit_box = system.domain().inflated(DOMAIN_EXIT_INFLATION);

    let mut states = Vec::with_capacity(samples);
    states.push(x0.to_vec());
    let mut d = vec![0.0; n];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut exited = None;

    for step in 0..samples - 1 {
        let x = &states[step];
        feedback(step, x, &mut d)?;
        let stage = |input: &[f64], out: &mut [f64]| {
            system.eval_into(input, out);
            out.iter_mut().zip(&d).for_each(|(o, di)| *o += di);
        };
        stage(x, &mut k1);
        tmp.iter_mut()
            .zip(x.iter().zip(&k1))
            .for_each(|(t, (xi, ki))| *t = xi + 0.5 * dt * ki);
        stage(&tmp, &mut k2);
        tmp.iter_mut()
            .zip(x.iter().zip(&k2))
            .for_each(|(t, (xi, ki))| *t = xi + 0.5 * dt * ki);
        stage(&tmp, &mut k3);
        tmp.iter_mut()
            .zip(x.iter().zip(&k3))
            .for_each(|(t, (xi, ki))| *t = xi + dt * ki);
        stage(&tmp, &mut k4);
        let next: Vec<f64> = (0..n)
            .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite { step: step + 1 });
        }
        if !exit_box.contains(&next) {
            exited = Some(step + 1);
            break;
        }
        states.push(next);
    }
    Ok(Trajectory {
        t0: 0.0,
        dt,
        states,
        exited_domain_at: exited,
    })
}

/// `max_{t ∈ [a,b]} ‖s1(t) − s2(t)‖` over the shared sample grid.
pub fn signal_seminorm(
    s1: &Trajectory,
    s2: &Trajectory,
    a: f64,
    b: f64,
) -> Result<f64, DynamicsError> {
    if (s1.dt - s2.dt).abs() > 1e-12 || (s1.t0 - s2.t0).abs() > 1e-12 || s1.dim() != s2.dim() {
        return Err(DynamicsError::GridMismatch);
    }
    if !(a <= b) || a < s1.t0 - 1e-9 {
        return Err(DynamicsError::Coverage { a, b });
    }
    let lo = ((a - s1.t0) / s1.dt - 1e-9).ceil() as usize;
    let hi = ((b - s1.t0) / s1.dt + 1e-9).floor() as usize;
    if hi >= s1.len().min(s2.len()) {
        return Err(DynamicsError::Coverage { a, b });
    }
    Ok((lo..=hi)
        .map(|k| dist(&s1.states[k], &s2.states[k]))
        .fold(0.0, f64::max))
}
