use crate::dynamics::ClosedLoopSystem;
use crate::fmt::{dot, norm};
use crate::spec_lang::PredicateDef;

use super::{CertError, ClassKappaInf};

/// Gradients with a smaller norm are treated as zero.
pub const GRADIENT_FLOOR: f64 = 1e-12;

/// Relative analytic-vs-numeric mismatch above which a warning is raised.
pub const GRADIENT_MISMATCH_TOL: f64 = 1e-4;

/// `∇h(x)`: the analytic gradient where one is defined, else central differences with
/// step `1e-6 · max(1, |x_i|)` on each axis.
pub fn gradient(pred: &PredicateDef, x: &[f64]) -> Result<Vec<f64>, CertError> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(CertError::NonFinite(format!(
            "gradient of `{}` requested at {x:?}",
            pred.label()
        )));
    }
    let g = match pred.analytic_gradient(x) {
        Some(g) => g,
        None => finite_difference_gradient(pred, x),
    };
    if g.len() != x.len() || g.iter().any(|v| !v.is_finite()) {
        return Err(CertError::NonFinite(format!(
            "gradient of `{}` at {x:?} is {g:?}",
            pred.label()
        )));
    }
    Ok(g)
}

pub fn finite_difference_gradient(pred: &PredicateDef, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let up = pred.eval(&probe);
            probe[i] = x[i] - h;
            let down = pred.eval(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative difference between the analytic and finite-difference gradients, if an
/// analytic gradient is defined at `x`.
pub fn gradient_mismatch(pred: &PredicateDef, x: &[f64]) -> Option<f64> {
    let analytic = pred.analytic_gradient(x)?;
    let numeric = finite_difference_gradient(pred, x);
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    Some(norm(&diff) / norm(&analytic).max(1.0))
}

/// Largest disturbance magnitude `e` with `∇hᵀf_cl − ‖∇h‖·e ≥ −α(h)` at `x`.
///
/// The left side is affine and decreasing in `e`, so the maximizer is
/// `(∇hᵀf_cl + α(h)) / ‖∇h‖`. Where `∇h` vanishes the constraint no longer involves
/// `e`: the result is `+∞` when it holds and `−∞` otherwise.
pub fn margin_e(
    x: &[f64],
    pred: &PredicateDef,
    alpha: &ClassKappaInf,
    system: &ClosedLoopSystem,
) -> Result<f64, CertError> {
    let h = pred.eval(x);
    if !h.is_finite() {
        return Err(CertError::NonFinite(format!(
            "h_{}({x:?}) = {h}",
            pred.label()
        )));
    }
    let f = system.eval(x);
    if f.iter().any(|v| !v.is_finite()) {
        return Err(CertError::NonFinite(format!("f_cl({x:?}) = {f:?}")));
    }
    let grad = gradient(pred, x)?;
    Ok(closed_form_margin(&grad, &f, alpha.eval(h)))
}

pub(crate) fn closed_form_margin(grad: &[f64], f: &[f64], alpha_h: f64) -> f64 {
    let slack = dot(grad, f) + alpha_h;
    let gnorm = norm(grad);
    if gnorm < GRADIENT_FLOOR {
        if slack >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        slack / gnorm
    }
}
