//! Bundled closed-loop systems with their predicates, specifications and settings.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certifier::{CertConfig, ClassKappaInf};
use crate::dynamics::{ClosedLoopSystem, DynamicsError, StateBox};
use crate::fmt::{dist, norm};
use crate::spec_lang::{parse_spec, PredicateDef, PredicateRegistry, SpecError, SpecNode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown model `{0}` (expected single-integrator or segway)")]
    Unknown(String),
    #[error("invalid model definition: {0}")]
    Invalid(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// A system together with everything needed to certify and validate it.
#[derive(Clone, Debug)]
pub struct ModelBundle {
    pub name: String,
    pub system: ClosedLoopSystem,
    pub registry: PredicateRegistry,
    pub spec_text: String,
    pub config: CertConfig,
    /// Representative start used by the trials.
    pub init_state: Vec<f64>,
    /// Initial states swept for the nominal-robustness minimum.
    pub init_region: StateBox,
}

impl ModelBundle {
    pub fn spec(&self) -> Result<SpecNode, SpecError> {
        parse_spec(&self.spec_text, &self.registry)
    }
}

pub const MODEL_NAMES: [&str; 2] = ["single-integrator", "segway"];

pub fn by_name(name: &str) -> Result<ModelBundle, ModelError> {
    match name {
        "single-integrator" => Ok(single_integrator_example()),
        "segway" => Ok(segway_model()),
        other => Err(ModelError::Unknown(other.to_string())),
    }
}

pub const SI_GOAL: [f64; 2] = [0.75, 0.75];
pub const SI_GAIN: f64 = 2.0;
pub const SI_INPUT_LIMIT: f64 = 0.5;
const SI_GOAL_RADIUS: f64 = 0.1;

/// Planar single integrator `ẋ = u`, `u = sat(K·(g − x))`, asked to reach the goal
/// disc within 2 s.
pub fn single_integrator_example() -> ModelBundle {
    let domain = StateBox::new(vec![-1.0; 2], vec![1.0; 2]).expect("static box");
    let system = ClosedLoopSystem::new("single-integrator", domain, |x, out| {
        for i in 0..2 {
            out[i] = (SI_GAIN * (SI_GOAL[i] - x[i])).clamp(-SI_INPUT_LIMIT, SI_INPUT_LIMIT);
        }
    })
    .expect("two-dimensional field");
    let goal =
        PredicateDef::new("mu_g", |x| SI_GOAL_RADIUS - dist(x, &SI_GOAL)).with_gradient(|x| {
            let r = dist(x, &SI_GOAL);
            (r > 1e-12).then(|| {
                x.iter()
                    .zip(&SI_GOAL)
                    .map(|(xi, gi)| -(xi - gi) / r)
                    .collect()
            })
        });
    let registry = PredicateRegistry::new()
        .with(goal)
        .expect("single predicate");
    ModelBundle {
        name: "single-integrator".into(),
        system,
        registry,
        spec_text: "F[0,2](mu_g)".into(),
        config: CertConfig {
            lipschitz_f: Some(SI_GAIN),
            lipschitz_rho: 1.0,
            init_grid: vec![1],
            ..CertConfig::default()
        },
        init_state: vec![0.0, 0.0],
        init_region: StateBox::point(&[0.0, 0.0]),
    }
}

/// Cart mass in kg.
pub const SEGWAY_CART_MASS: f64 = 10.0;
/// Pendulum mass in kg.
pub const SEGWAY_POLE_MASS: f64 = 5.0;
/// Pendulum length in m.
pub const SEGWAY_LENGTH: f64 = 0.5;
pub const GRAVITY: f64 = 9.81;

/// State feedback `F = −K·x` for `x = [x, v, θ, θ̇]`.
///
/// Continuous-time LQR on the upright linearization with `Q = diag(100, 10, 100, 1)`,
/// `R = 0.01`, solved offline with a Schur-based Riccati solver. Linear closed-loop
/// poles are `−6.02 ± 1.36i` and `−1.90 ± 1.25i`.
pub const SEGWAY_LQR_GAIN: [f64; 4] = [
    -100.00000000000196,
    -105.28018033475077,
    -641.766098013119,
    -131.8086507209892,
];

/// Upright linearization `(A, B)` used for the gain synthesis.
pub fn segway_linearization() -> ([[f64; 4]; 4], [f64; 4]) {
    let (mc, mp, l, g) = (SEGWAY_CART_MASS, SEGWAY_POLE_MASS, SEGWAY_LENGTH, GRAVITY);
    let a = [
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, -mp * g / mc, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, (mc + mp) * g / (mc * l), 0.0],
    ];
    let b = [0.0, 1.0 / mc, 0.0, -1.0 / (mc * l)];
    (a, b)
}

fn segway_field(x: &[f64], out: &mut [f64]) {
    let (mc, mp, l, g) = (SEGWAY_CART_MASS, SEGWAY_POLE_MASS, SEGWAY_LENGTH, GRAVITY);
    let force = -SEGWAY_LQR_GAIN
        .iter()
        .zip(x)
        .map(|(k, xi)| k * xi)
        .sum::<f64>();
    let (s, c) = x[2].sin_cos();
    let accel = (force + mp * s * (l * x[3] * x[3] - g * c)) / (mc + mp * s * s);
    out[0] = x[1];
    out[1] = accel;
    out[2] = x[3];
    out[3] = (g * s - accel * c) / l;
}

/// Wheeled inverted pendulum under LQR with the full nonlinear dynamics.
///
/// `μ₁`: the state is within 0.25 of the origin. `μ₂`: a barrier on the tilt,
/// `10(0.3² − θ²) − 2θθ̇ ≥ 0`.
pub fn segway_model() -> ModelBundle {
    let domain =
        StateBox::new(vec![-1.0, -1.0, -0.4, -1.5], vec![1.0, 1.0, 0.4, 1.5]).expect("static box");
    let system =
        ClosedLoopSystem::new("segway", domain, segway_field).expect("four-dimensional field");
    let mu1 = PredicateDef::new("mu1", |x| 0.25 - norm(x)).with_gradient(|x| {
        let r = norm(x);
        (r > 1e-12).then(|| x.iter().map(|v| -v / r).collect())
    });
    let mu2 = PredicateDef::new("mu2", |x| 10.0 * (0.09 - x[2] * x[2]) - 2.0 * x[2] * x[3])
        .with_gradient(|x| Some(vec![0.0, 0.0, -20.0 * x[2] - 2.0 * x[3], -2.0 * x[2]]));
    let registry = PredicateRegistry::new()
        .with(mu1)
        .and_then(|r| r.with(mu2))
        .expect("distinct names");
    let init_state = vec![0.4, 0.0, 0.1, 0.0];
    ModelBundle {
        name: "segway".into(),
        system,
        registry,
        spec_text: "F[0,2](mu1) & G[0,2](mu2)".into(),
        config: CertConfig {
            alpha: [(
                "mu2".to_string(),
                ClassKappaInf::linear(50.0).expect("positive gain"),
            )]
            .into(),
            lipschitz_f: Some(1.0),
            lipschitz_rho: 1.0,
            state_grid: vec![21, 21, 81, 121],
            state_box: Some(
                StateBox::new(vec![-0.5, -0.5, -0.4, -1.5], vec![0.5, 0.5, 0.4, 1.5])
                    .expect("static box"),
            ),
            init_grid: vec![5],
            refine: true,
            ..CertConfig::default()
        },
        init_region: StateBox::around(&init_state, &[0.05; 4]).expect("valid box"),
        init_state,
    }
}

/// A parameterized external model: `ẋ = A·x` with ball and half-space predicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearModelDef {
    pub name: String,
    pub a: Vec<Vec<f64>>,
    pub domain: StateBox,
    pub spec: String,
    pub init_state: Vec<f64>,
    #[serde(default)]
    pub init_region: Option<StateBox>,
    #[serde(default)]
    pub predicates: Vec<LinearPredicateDef>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LinearPredicateDef {
    /// `radius − ‖x − center‖`.
    Ball {
        name: String,
        center: Vec<f64>,
        radius: f64,
    },
    /// `offset − normal·x`.
    HalfSpace {
        name: String,
        normal: Vec<f64>,
        offset: f64,
    },
}

impl LinearModelDef {
    pub fn build(&self) -> Result<ModelBundle, ModelError> {
        let n = self.domain.dim();
        if self.a.len() != n || self.a.iter().any(|row| row.len() != n) {
            return Err(ModelError::Invalid(format!("A must be {n}×{n}")));
        }
        let a = self.a.clone();
        let system =
            ClosedLoopSystem::new(self.name.clone(), self.domain.clone(), move |x, out| {
                for (o, row) in out.iter_mut().zip(&a) {
                    *o = row.iter().zip(x).map(|(r, v)| r * v).sum();
                }
            })?;
        let mut registry = PredicateRegistry::new();
        for p in &self.predicates {
            registry.insert(p.build(n)?)?;
        }
        if self.init_state.len() != n || !self.domain.contains(&self.init_state) {
            return Err(ModelError::Invalid(format!(
                "init_state {:?} is not in the domain",
                self.init_state
            )));
        }
        let bundle = ModelBundle {
            name: self.name.clone(),
            system,
            registry,
            spec_text: self.spec.clone(),
            config: CertConfig::default(),
            init_region: self
                .init_region
                .clone()
                .unwrap_or_else(|| StateBox::point(&self.init_state)),
            init_state: self.init_state.clone(),
        };
        bundle.spec()?;
        Ok(bundle)
    }
}

impl LinearPredicateDef {
    fn build(&self, dim: usize) -> Result<PredicateDef, ModelError> {
        match self.clone() {
            LinearPredicateDef::Ball {
                name,
                center,
                radius,
            } => {
                if center.len() != dim {
                    return Err(ModelError::Invalid(format!(
                        "center of `{name}` has {} entries",
                        center.len()
                    )));
                }
                let c = center.clone();
                Ok(
                    PredicateDef::new(name, move |x| radius - dist(x, &center)).with_gradient(
                        move |x| {
                            let r = dist(x, &c);
                            (r > 1e-12)
                                .then(|| x.iter().zip(&c).map(|(xi, ci)| -(xi - ci) / r).collect())
                        },
                    ),
                )
            }
            LinearPredicateDef::HalfSpace {
                name,
                normal,
                offset,
            } => {
                if normal.len() != dim {
                    return Err(ModelError::Invalid(format!(
                        "normal of `{name}` has {} entries",
                        normal.len()
                    )));
                }
                let g: Vec<f64> = normal.iter().map(|v| -v).collect();
                Ok(PredicateDef::new(name, move |x| {
                    offset - normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                })
                .with_gradient(move |_| Some(g.clone())))
            }
        }
    }
}
