//! Certified disturbance bounds for closed-loop systems under Signal Temporal Logic
//! specifications.
//!
//! Given a closed-loop vector field `f_cl`, a specification built from the fragment
//!
//! ```text
//! ω := true | μ | !μ | ω & ω
//! ψ := G[a,b](ω) | F[a,b](ω) | (ω) U[a,b] (ω) | ψ & ψ
//! ```
//!
//! and a set of predicate functions `h_μ`, the [`certifier`] computes a two-norm bound
//! `δ` such that every additive disturbance `‖d(t)‖ ≤ δ` is rejected: the perturbed
//! system `ẋ = f_cl(x) + d` still satisfies the specification from every initial state
//! in the certified region. Invariance leaves `G[0,b](ω)` are certified with a
//! barrier-function argument, every other leaf through a trajectory-deviation bound on
//! the nominal robustness margin, and the composite bound is the minimum over leaves.
//!
//! The [`validation`] module falsifies certificates by Monte-Carlo and adversarial
//! simulation, and [`models`] bundles a saturated single integrator and an LQR-stabilized
//! Segway as worked examples.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certifier;
pub mod cli;
pub mod dynamics;
pub mod models;
pub mod spec_lang;
pub mod validation;

mod fmt;

pub use certifier::{certify, CertConfig, CertificateReport, ClassKappaInf};
pub use dynamics::{integrate, ClosedLoopSystem, DisturbanceSignal, StateBox, Trajectory};
pub use spec_lang::{parse_spec, robustness, satisfies, PredicateDef, PredicateRegistry, SpecNode};
