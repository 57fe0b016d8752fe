//! The specification fragment: predicates, conjunctive clauses, temporal leaves and
//! their conjunctions, together with a parser and two sample-grid monitors.

mod monitor;
mod parser;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use monitor::{robustness, satisfies};
pub use parser::parse_spec;

/// Robustness assigned to the empty conjunction `true`.
pub const TRUE_ROBUSTNESS: f64 = 1e30;

/// Scalar margin `h: ℝⁿ → ℝ`; the predicate holds where it is nonnegative.
pub type MarginFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Analytic gradient of a margin. Returning `None` marks a point where the gradient is
/// not available in closed form (a kink, say), and callers fall back to finite
/// differences there.
pub type GradientFn = dyn Fn(&[f64]) -> Option<Vec<f64>> + Send + Sync;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown predicate `{name}` at position {pos}")]
    UnknownPredicate { name: String, pos: usize },
    #[error("invalid interval [{a}, {b}]: {reason}")]
    Interval {
        a: f64,
        b: f64,
        reason: &'static str,
    },
    #[error("duplicate predicate name `{0}`")]
    DuplicatePredicate(String),
    #[error("signal too short: specification needs samples up to t = {required}, signal ends at t = {available}")]
    SignalTooShort { required: f64, available: f64 },
    #[error("time {t} is not within half a step of the signal grid")]
    Misaligned { t: f64 },
}

/// A named predicate `μ` with margin `h_μ`, optionally negated.
///
/// Negation is carried by the flag and realized as `-h_μ`, so `!μ` holds on
/// `h_μ ≤ 0` rather than `h_μ < 0`. The two differ only on the level set `h_μ = 0`.
#[derive(Clone)]
pub struct PredicateDef {
    name: String,
    margin: Arc<MarginFn>,
    gradient: Option<Arc<GradientFn>>,
    negated: bool,
}

impl PredicateDef {
    pub fn new(
        name: impl Into<String>,
        margin: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            margin: Arc::new(margin),
            gradient: None,
            negated: false,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&[f64]) -> Option<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_negated(&self) -> bool {
        self.negated
    }

    /// `name` or `!name`.
    pub fn label(&self) -> String {
        if self.negated {
            format!("!{}", self.name)
        } else {
            self.name.clone()
        }
    }

    pub fn negate(&self) -> Self {
        Self {
            negated: !self.negated,
            ..self.clone()
        }
    }

    /// Signed margin at `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let v = (self.margin)(x);
        if self.negated {
            -v
        } else {
            v
        }
    }

    pub fn holds(&self, x: &[f64]) -> bool {
        self.eval(x) >= 0.0
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Signed analytic gradient, if one was supplied and is defined at `x`.
    pub fn analytic_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut g = (self.gradient.as_ref()?)(x)?;
        if self.negated {
            g.iter_mut().for_each(|v| *v = -*v);
        }
        Some(g)
    }
}

impl fmt::Debug for PredicateDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PredicateDef")
            .field("name", &self.name)
            .field("negated", &self.negated)
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

/// Predicates are identified by name and polarity.
impl PartialEq for PredicateDef {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.negated == other.negated
    }
}

/// Name-unique collection of predicates that specification text is resolved against.
#[derive(Clone, Debug, Default)]
pub struct PredicateRegistry {
    predicates: BTreeMap<String, PredicateDef>,
}

impl PredicateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pred: PredicateDef) -> Result<(), SpecError> {
        if pred.is_negated() {
            return Err(SpecError::Syntax {
                pos: 0,
                msg: format!("registry entries must be positive; got `{}`", pred.label()),
            });
        }
        if self.predicates.contains_key(pred.name()) {
            return Err(SpecError::DuplicatePredicate(pred.name().to_string()));
        }
        self.predicates.insert(pred.name().to_string(), pred);
        Ok(())
    }

    pub fn with(mut self, pred: PredicateDef) -> Result<Self, SpecError> {
        self.insert(pred)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&PredicateDef> {
        self.predicates.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.predicates.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }
}

/// Conjunction of (possibly negated) predicates. The empty clause is `true`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConjunctiveClause {
    pub predicates: Vec<PredicateDef>,
}

impl ConjunctiveClause {
    pub fn new(predicates: Vec<PredicateDef>) -> Self {
        Self { predicates }
    }

    pub fn truth() -> Self {
        Self::default()
    }

    pub fn is_truth(&self) -> bool {
        self.predicates.is_empty()
    }

    /// Minimum signed margin over the members, `TRUE_ROBUSTNESS` for `true`.
    pub fn robustness_at(&self, x: &[f64]) -> f64 {
        self.predicates
            .iter()
            .map(|p| p.eval(x))
            .fold(TRUE_ROBUSTNESS, f64::min)
    }

    pub fn holds(&self, x: &[f64]) -> bool {
        self.predicates.iter().all(|p| p.holds(x))
    }
}

impl fmt::Display for ConjunctiveClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.predicates.is_empty() {
            return f.write_str("true");
        }
        for (i, p) in self.predicates.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            f.write_str(&p.label())?;
        }
        Ok(())
    }
}

/// Time window `[a, b]` in seconds with `0 ≤ a < b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self, SpecError> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(SpecError::Interval {
                a,
                b,
                reason: "endpoints must be finite",
            });
        }
        if a < 0.0 || b < 0.0 {
            return Err(SpecError::Interval {
                a,
                b,
                reason: "endpoints must be nonnegative",
            });
        }
        if a >= b {
            return Err(SpecError::Interval {
                a,
                b,
                reason: "lower endpoint must be below upper",
            });
        }
        Ok(Self { a, b })
    }

    pub fn start(&self) -> f64 {
        self.a
    }

    pub fn end(&self) -> f64 {
        self.b
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.a, self.b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpecNode {
    Always(Interval, ConjunctiveClause),
    Eventually(Interval, ConjunctiveClause),
    Until(Interval, ConjunctiveClause, ConjunctiveClause),
    And(Box<SpecNode>, Box<SpecNode>),
}

impl SpecNode {
    pub fn and(left: SpecNode, right: SpecNode) -> Self {
        SpecNode::And(Box::new(left), Box::new(right))
    }

    /// Latest time offset the specification looks at: the max upper endpoint over leaves.
    pub fn horizon(&self) -> f64 {
        match self {
            SpecNode::Always(iv, _) | SpecNode::Eventually(iv, _) | SpecNode::Until(iv, _, _) => {
                iv.end()
            }
            SpecNode::And(l, r) => l.horizon().max(r.horizon()),
        }
    }

    pub fn interval(&self) -> Option<Interval> {
        match self {
            SpecNode::Always(iv, _) | SpecNode::Eventually(iv, _) | SpecNode::Until(iv, _, _) => {
                Some(*iv)
            }
            SpecNode::And(..) => None,
        }
    }

    /// `G[0,b](ω)`: the leaf shape handled by the invariance certificate.
    pub fn as_invariance(&self) -> Option<(Interval, &ConjunctiveClause)> {
        match self {
            SpecNode::Always(iv, clause) if iv.start() == 0.0 => Some((*iv, clause)),
            _ => None,
        }
    }

    /// Every predicate mentioned anywhere in the specification, deduplicated.
    pub fn all_predicates(&self) -> Vec<PredicateDef> {
        let mut out: Vec<PredicateDef> = Vec::new();
        let mut push = |c: &ConjunctiveClause| {
            for p in predicates_of(c) {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        };
        for leaf in decompose(self) {
            match &leaf {
                SpecNode::Always(_, c) | SpecNode::Eventually(_, c) => push(c),
                SpecNode::Until(_, c1, c2) => {
                    push(c1);
                    push(c2);
                }
                SpecNode::And(..) => unreachable!("decompose returns leaves"),
            }
        }
        out
    }
}

impl fmt::Display for SpecNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecNode::Always(iv, c) => write!(f, "G{iv}({c})"),
            SpecNode::Eventually(iv, c) => write!(f, "F{iv}({c})"),
            SpecNode::Until(iv, c1, c2) => write!(f, "({c1}) U{iv} ({c2})"),
            SpecNode::And(l, r) => write!(f, "{l} & {r}"),
        }
    }
}

/// Distinct members of a clause, in first-occurrence order.
pub fn predicates_of(clause: &ConjunctiveClause) -> Vec<PredicateDef> {
    let mut out: Vec<PredicateDef> = Vec::with_capacity(clause.predicates.len());
    for p in &clause.predicates {
        if !out.contains(p) {
            out.push(p.clone());
        }
    }
    out
}

/// Flattens the conjunction tree into its temporal leaves, left to right. Duplicates
/// are kept.
pub fn decompose(spec: &SpecNode) -> Vec<SpecNode> {
    fn walk(node: &SpecNode, out: &mut Vec<SpecNode>) {
        match node {
            SpecNode::And(l, r) => {
                walk(l, out);
                walk(r, out);
            }
            leaf => out.push(leaf.clone()),
        }
    }
    let mut out = Vec::new();
    walk(spec, &mut out);
    out
}
