use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{step_count, DynamicsError};
use crate::fmt::norm;

/// Piecewise-constant disturbance: sample `k` acts on `[k·dt, (k+1)·dt)`.
///
/// Every sample satisfies `‖d_k‖ ≤ bound`; this is checked on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DisturbanceSignal {
    dt: f64,
    dim: usize,
    samples: Vec<Vec<f64>>,
    bound: f64,
}

impl DisturbanceSignal {
    pub fn new(dt: f64, samples: Vec<Vec<f64>>, bound: f64) -> Result<Self, DynamicsError> {
        if !(bound >= 0.0 && bound.is_finite()) {
            return Err(DynamicsError::InvalidArgument(format!(
                "bound must be finite and nonnegative, got {bound}"
            )));
        }
        let dim = samples.first().map_or(0, Vec::len);
        for (index, d) in samples.iter().enumerate() {
            if d.len() != dim {
                return Err(DynamicsError::Dimension {
                    expected: dim,
                    got: d.len(),
                });
            }
            let n = norm(d);
            if !(n <= bound) {
                return Err(DynamicsError::BoundViolated {
                    index,
                    norm: n,
                    bound,
                });
            }
        }
        Ok(Self {
            dt,
            dim,
            samples,
            bound,
        })
    }

    pub fn zero(dim: usize, steps: usize, dt: f64) -> Self {
        Self {
            dt,
            dim,
            samples: vec![vec![0.0; dim]; steps],
            bound: 0.0,
        }
    }

    /// The same vector held for `steps` steps.
    pub fn constant(d: Vec<f64>, steps: usize, dt: f64, bound: f64) -> Result<Self, DynamicsError> {
        Self::new(dt, vec![d; steps], bound)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.samples[k]
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisturbanceKind {
    /// Uniform in the ball of radius `δ`.
    UniformBall,
    /// Per-component `N(0, (δ/3)²)`, resampled until inside the ball.
    TruncatedGaussian,
    /// Uniform direction with norm exactly `δ`.
    FixedMagnitude,
}

impl DisturbanceKind {
    pub fn tag(self) -> &'static str {
        match self {
            DisturbanceKind::UniformBall => "uniform-ball",
            DisturbanceKind::TruncatedGaussian => "truncated-gaussian",
            DisturbanceKind::FixedMagnitude => "fixed-magnitude",
        }
    }

    /// One draw with `‖d‖ ≤ bound`.
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R, dim: usize, bound: f64) -> Vec<f64> {
        if bound == 0.0 {
            return vec![0.0; dim];
        }
        let d = match self {
            DisturbanceKind::UniformBall => {
                let u: f64 = rng.random();
                let r = bound * u.powf(1.0 / dim as f64);
                scaled(unit_direction(rng, dim), r)
            }
            DisturbanceKind::FixedMagnitude => scaled(unit_direction(rng, dim), bound),
            DisturbanceKind::TruncatedGaussian => loop {
                let d: Vec<f64> = (0..dim)
                    .map(|_| rng.sample::<f64, _>(StandardNormal) * bound / 3.0)
                    .collect();
                if norm(&d) <= bound {
                    break d;
                }
            },
        };
        clamp_to_ball(d, bound)
    }
}

impl fmt::Display for DisturbanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DisturbanceKind {
    type Err = DynamicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform-ball" => Ok(Self::UniformBall),
            "truncated-gaussian" => Ok(Self::TruncatedGaussian),
            "fixed-magnitude" => Ok(Self::FixedMagnitude),
            other => Err(DynamicsError::InvalidArgument(format!(
                "unknown disturbance distribution `{other}`"
            ))),
        }
    }
}

fn unit_direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = norm(&v);
        if n > 1e-150 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn scaled(v: Vec<f64>, r: f64) -> Vec<f64> {
    v.into_iter().map(|x| x * r).collect()
}

/// Shrinks `d` by a few ulps if rounding pushed its norm past `bound`.
fn clamp_to_ball(mut d: Vec<f64>, bound: f64) -> Vec<f64> {
    while norm(&d) > bound {
        d.iter_mut().for_each(|x| *x *= 1.0 - 4.0 * f64::EPSILON);
    }
    d
}

/// One independent draw per integration step over `[0, horizon]`, deterministic in
/// `seed`.
pub fn sample_disturbance(
    dim: usize,
    bound: f64,
    horizon: f64,
    dt: f64,
    kind: DisturbanceKind,
    seed: u64,
) -> Result<DisturbanceSignal, DynamicsError> {
    if !(bound >= 0.0 && bound.is_finite()) {
        return Err(DynamicsError::InvalidArgument(format!(
            "bound must be finite and nonnegative, got {bound}"
        )));
    }
    let steps = step_count(horizon, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..steps)
        .map(|_| kind.draw(&mut rng, dim, bound))
        .collect();
    DisturbanceSignal::new(dt, samples, bound)
}
