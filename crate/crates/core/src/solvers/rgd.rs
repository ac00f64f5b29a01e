//! Riemannian gradient descent with Barzilai–Borwein steps and an Armijo safeguard.

use serde::{Deserialize, Serialize};

use crate::error::{Error, FailureContext, Result};
use crate::manifold::{retract_qr, riemannian_gradient, StiefelPoint, TangentVector};
use crate::numeric::DenseMatrix;

/// Smooth function on the ambient space whose restriction to St(n, r) is minimized.
pub trait SmoothObjective {
    fn value(&self, x: &DenseMatrix) -> Result<f64>;
    fn value_and_grad(&self, x: &DenseMatrix) -> Result<(f64, DenseMatrix)>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerExit {
    /// Riemannian gradient norm fell to the tolerance.
    Tolerance,
    /// Iteration cap reached.
    MaxIters,
    /// Backtracking could not find a decrease; the current iterate is returned.
    LineSearchStall,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RgdOptions {
    /// Trial step for the first iteration (no BB pair available yet).
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub armijo_slope: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
}

impl Default for RgdOptions {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            min_step: 1e-10,
            max_step: 1e10,
            armijo_slope: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RgdOutcome {
    pub x: StiefelPoint,
    pub iters: usize,
    pub grad_norm: f64,
    pub value: f64,
    pub exit: InnerExit,
    /// Last accepted step length, reusable as the next solve's initial step.
    pub last_step: f64,
    /// ψ at every accepted iterate, starting with X₀.
    pub values: Vec<f64>,
}

fn failure(reason: &str, x: &DenseMatrix) -> Error {
    Error::NumericalFailure {
        reason: reason.to_string(),
        context: Box::new(FailureContext { iterate: x.clone(), trace: Vec::new() }),
    }
}

/// Minimizes `obj` over St(n, r) from `x0` until `‖grad‖_F <= eps` or `max_iters` steps.
///
/// Each step tries the BB1 length `⟨s,s⟩/⟨s,y⟩` (ambient differences, clamped to
/// `[min_step, max_step]`) and backtracks until the Armijo condition holds, so
/// the returned value never exceeds the value at `x0`.
pub fn rgd_bb_solve(
    obj: &dyn SmoothObjective,
    x0: &StiefelPoint,
    eps: f64,
    max_iters: usize,
    opts: &RgdOptions,
) -> Result<RgdOutcome> {
    if !(eps > 0.0) {
        return Err(Error::contract(format!("inner tolerance must be > 0, got {eps}")));
    }
    let mut x = x0.clone();
    let (mut fx, egrad) = obj.value_and_grad(x.value())?;
    let mut grad = riemannian_gradient(&x, &egrad)?;
    let mut gnorm = grad.norm();
    if !fx.is_finite() || !gnorm.is_finite() {
        return Err(failure("non-finite objective or gradient at the initial point", x.value()));
    }

    let mut values = vec![fx];
    let mut prev: Option<(DenseMatrix, TangentVector)> = None;
    let mut last_step = opts.initial_step.clamp(opts.min_step, opts.max_step);
    let mut iters = 0;

    let exit = loop {
        if gnorm <= eps {
            break InnerExit::Tolerance;
        }
        if iters >= max_iters {
            break InnerExit::MaxIters;
        }

        let mut alpha = match &prev {
            Some((xp, gp)) => {
                let s = x.value() - xp;
                let y = grad.value() - gp.value();
                let sy = s.dot(&y);
                if sy > 0.0 {
                    (s.norm_squared() / sy).clamp(opts.min_step, opts.max_step)
                } else {
                    last_step
                }
            }
            None => last_step,
        };

        let direction = grad.scaled(-1.0);
        let decrease = opts.armijo_slope * gnorm * gnorm;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            if let Ok(candidate) = retract_qr(&x, &direction.scaled(alpha)) {
                let fc = obj.value(candidate.value())?;
                if fc.is_finite() && fc <= fx - alpha * decrease {
                    accepted = Some(candidate);
                    break;
                }
            }
            alpha *= opts.backtrack_factor;
        }
        let Some(next) = accepted else {
            break InnerExit::LineSearchStall;
        };

        let (f_next, egrad) = obj.value_and_grad(next.value())?;
        let g_next = riemannian_gradient(&next, &egrad)?;
        let g_norm_next = g_next.norm();
        if !f_next.is_finite() || !g_norm_next.is_finite() {
            return Err(failure("non-finite objective or gradient", next.value()));
        }
        prev = Some((std::mem::replace(&mut x, next).into_inner(), std::mem::replace(&mut grad, g_next)));
        fx = f_next;
        gnorm = g_norm_next;
        last_step = alpha;
        iters += 1;
        values.push(fx);
    };

    Ok(RgdOutcome { x, iters, grad_norm: gnorm, value: fx, exit, last_step, values })
}
