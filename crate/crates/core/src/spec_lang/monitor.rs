//! Offline monitors evaluated on the sample grid of a uniformly sampled trajectory.
//!
//! [`robustness`] computes space robustness: predicate margins combined with min for
//! conjunction and Always, max for Eventually, and the usual max-min for Until.
//! [`satisfies`] is a separate boolean monitor over the same grid and never calls into
//! the quantitative one; the two agree in sign by construction, which the tests check.

use super::{ConjunctiveClause, Interval, SpecError, SpecNode};
use crate::dynamics::Trajectory;

/// Slack used when converting window endpoints to sample indices.
const INDEX_EPS: f64 = 1e-9;

fn anchor_index(signal: &Trajectory, t: f64) -> Result<usize, SpecError> {
    let offset = (t - signal.t0) / signal.dt;
    let k = offset.round();
    if k < 0.0 || (offset - k).abs() > 0.5 + INDEX_EPS {
        return Err(SpecError::Misaligned { t });
    }
    Ok(k as usize)
}

/// Inclusive index range of the samples in `[t + a, t + b]`.
fn window(signal: &Trajectory, anchor: usize, iv: Interval) -> Result<(usize, usize), SpecError> {
    let lo = anchor + (iv.start() / signal.dt - INDEX_EPS).ceil().max(0.0) as usize;
    let hi = anchor + (iv.end() / signal.dt + INDEX_EPS).floor() as usize;
    if hi >= signal.len() {
        return Err(SpecError::SignalTooShort {
            required: signal.time(anchor) + iv.end(),
            available: signal.end_time(),
        });
    }
    Ok((lo, hi))
}

fn clause_rho(clause: &ConjunctiveClause, signal: &Trajectory, k: usize) -> f64 {
    clause.robustness_at(&signal.states[k])
}

/// Space robustness of `spec` on `signal` at time `t`.
pub fn robustness(spec: &SpecNode, signal: &Trajectory, t: f64) -> Result<f64, SpecError> {
    let anchor = anchor_index(signal, t)?;
    rho_at(spec, signal, anchor)
}

fn rho_at(spec: &SpecNode, signal: &Trajectory, anchor: usize) -> Result<f64, SpecError> {
    match spec {
        SpecNode::Always(iv, c) => {
            let (lo, hi) = window(signal, anchor, *iv)?;
            Ok((lo..=hi)
                .map(|k| clause_rho(c, signal, k))
                .fold(f64::INFINITY, f64::min))
        }
        SpecNode::Eventually(iv, c) => {
            let (lo, hi) = window(signal, anchor, *iv)?;
            Ok((lo..=hi)
                .map(|k| clause_rho(c, signal, k))
                .fold(f64::NEG_INFINITY, f64::max))
        }
        SpecNode::Until(iv, lhs, rhs) => {
            let (lo, hi) = window(signal, anchor, *iv)?;
            let mut prefix_min = f64::INFINITY;
            let mut best = f64::NEG_INFINITY;
            for k in anchor..=hi {
                prefix_min = prefix_min.min(clause_rho(lhs, signal, k));
                if k >= lo {
                    best = best.max(clause_rho(rhs, signal, k).min(prefix_min));
                }
            }
            Ok(best)
        }
        SpecNode::And(l, r) => Ok(rho_at(l, signal, anchor)?.min(rho_at(r, signal, anchor)?)),
    }
}

/// Boolean satisfaction of `spec` on `signal` at time `t`.
pub fn satisfies(spec: &SpecNode, signal: &Trajectory, t: f64) -> Result<bool, SpecError> {
    let anchor = anchor_index(signal, t)?;
    holds_at(spec, signal, anchor)
}

fn holds_at(spec: &SpecNode, signal: &Trajectory, anchor: usize) -> Result<bool, SpecError> {
    let truth = |c: &ConjunctiveClause, k: usize| c.holds(&signal.states[k]);
    match spec {
        SpecNode::Always(iv, c) => {
            let (lo, hi) = window(signal, anchor, *iv)?;
            Ok((lo..=hi).all(|k| truth(c, k)))
        }
        SpecNode::Eventually(iv, c) => {
            let (lo, hi) = window(signal, anchor, *iv)?;
            Ok((lo..=hi).any(|k| truth(c, k)))
        }
        SpecNode::Until(iv, lhs, rhs) => {
            let (lo, hi) = window(signal, anchor, *iv)?;
            for k in lo..=hi {
                if truth(rhs, k) && (anchor..=k).all(|j| truth(lhs, j)) {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        SpecNode::And(l, r) => Ok(holds_at(l, signal, anchor)? && holds_at(r, signal, anchor)?),
    }
}
