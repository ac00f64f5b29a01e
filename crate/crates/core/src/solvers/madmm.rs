//! Manifold ADMM baseline with a fixed penalty β.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::kkt::kkt_residual;
use super::mialm::attach_trace;
use super::psi::{augmented_lagrangian, y_step};
use super::rgd::{rgd_bb_solve, RgdOptions, SmoothObjective};
use super::{IterateSnapshot, SolveResult, Termination, TraceRecord};
use crate::error::{Error, Result};
use crate::manifold::StiefelPoint;
use crate::numeric::{max_abs, DenseMatrix};
use crate::problems::{objective, sparsity, CompositeProblem, DEFAULT_SPARSITY_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MadmmConfig {
    /// Fixed penalty; `None` takes the problem's default.
    pub beta: Option<f64>,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    pub max_outer: usize,
    pub outer_tol: f64,
    /// Optional extra stop once `F(X^k) <= target_objective`.
    pub target_objective: Option<f64>,
    pub sparsity_threshold: f64,
    pub record_iterates: bool,
}

impl Default for MadmmConfig {
    fn default() -> Self {
        Self {
            beta: None,
            inner_tol: 1e-5,
            inner_max_iters: 20,
            max_outer: 500,
            outer_tol: 1e-9,
            target_objective: None,
            sparsity_threshold: DEFAULT_SPARSITY_THRESHOLD,
            record_iterates: false,
        }
    }
}

impl MadmmConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(beta) = self.beta {
            if !(beta > 0.0) {
                return Err(Error::config(format!("beta must be > 0, got {beta}")));
            }
        }
        if !(self.inner_tol > 0.0) || !(self.outer_tol >= 0.0) || !(self.sparsity_threshold > 0.0) {
            return Err(Error::config("tolerances must be positive"));
        }
        if self.max_outer == 0 || self.inner_max_iters == 0 {
            return Err(Error::config("iteration caps must be positive"));
        }
        Ok(())
    }
}

/// `X ↦ L_β(X, Y; Λ)` with `Y` and `Λ` frozen.
struct XSubproblem<'a> {
    p: &'a CompositeProblem,
    beta: f64,
    y: &'a DenseMatrix,
    lambda: &'a DenseMatrix,
}

impl SmoothObjective for XSubproblem<'_> {
    fn value(&self, x: &DenseMatrix) -> Result<f64> {
        augmented_lagrangian(self.p, self.beta, self.lambda, x, self.y)
    }

    fn value_and_grad(&self, x: &DenseMatrix) -> Result<(f64, DenseMatrix)> {
        let value = self.value(x)?;
        let res = self.p.apply_a(x) - self.y;
        let grad = self.p.f_grad(x) + self.p.apply_at(&(res * self.beta - self.lambda));
        Ok((value, grad))
    }
}

pub fn madmm_solve(p: &CompositeProblem, cfg: &MadmmConfig, x0: &StiefelPoint) -> Result<SolveResult> {
    cfg.validate()?;
    p.check_x(x0.value())?;
    let start = Instant::now();
    let beta = cfg.beta.unwrap_or(p.default_rho0());

    let mut lambda = DenseMatrix::zeros(p.d(), p.r());
    let mut x = x0.clone();
    let mut y = y_step(p, beta, &lambda, x.value())?;
    let mut residual_prev = max_abs(&(p.apply_a(x.value()) - &y));

    let opts = RgdOptions::default();
    let mut step = opts.initial_step;
    let mut trace = Vec::new();
    let mut inner_total = 0;
    let mut termination = Termination::MaxOuter;

    for k in 0..cfg.max_outer {
        let sub = XSubproblem { p, beta, y: &y, lambda: &lambda };
        let inner = rgd_bb_solve(&sub, &x, cfg.inner_tol, cfg.inner_max_iters, &RgdOptions { initial_step: step, ..opts })
            .map_err(|e| attach_trace(e, &trace))?;
        step = inner.last_step;
        inner_total += inner.iters;
        x = inner.x;

        y = y_step(p, beta, &lambda, x.value())?;
        let residual = p.apply_a(x.value()) - &y;
        let lambda_next = &lambda - &residual * beta;
        let residual_inf = max_abs(&residual);
        let feas_sq = residual.norm_squared();
        let f_value = objective(p, x.value())?;

        trace.push(TraceRecord {
            k,
            objective: f_value,
            feasibility: feas_sq.sqrt(),
            residual_inf,
            residual_prev,
            rho: beta,
            rho_next: beta,
            eps: cfg.inner_tol,
            inner_iters: inner.iters,
            inner_exit: inner.exit,
            inner_grad_norm: inner.grad_norm,
            z_bar_min: lambda_next.min(),
            z_bar_max: lambda_next.max(),
            stiefel_feasibility: x.feasibility(),
            elapsed: start.elapsed().as_secs_f64(),
            snapshot: cfg.record_iterates.then(|| IterateSnapshot {
                x: x.value().clone(),
                y: y.clone(),
                z_used: lambda.clone(),
                z_next: lambda_next.clone(),
            }),
        });
        residual_prev = residual_inf;
        lambda = lambda_next;

        if feas_sq <= cfg.outer_tol {
            termination = Termination::Feasible;
            break;
        }
        if cfg.target_objective.is_some_and(|t| f_value <= t) {
            termination = Termination::TargetObjective;
            break;
        }
    }

    let wall_time = start.elapsed().as_secs_f64();
    let kkt = kkt_residual(p, &x, &y, &lambda)?;
    Ok(SolveResult {
        solver: "madmm",
        objective: objective(p, x.value())?,
        sparsity: sparsity(x.value(), cfg.sparsity_threshold)?,
        kkt,
        outer_iters: trace.len(),
        inner_iter_total: inner_total,
        wall_time,
        termination,
        trace,
        x,
        z_bar: lambda.clone(),
        z: lambda,
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::build_cms;
    use crate::solvers::initial_point;

    #[test]
    fn multiplier_is_fixed_when_feasible() {
        // with μ = 0 the Y step returns AX − Λ/β, so Λ − β(AX − Y) = 0 = Λ⁰
        let p = build_cms(16, 2, 0.0).unwrap();
        let x0 = initial_point(16, 2, 1).unwrap();
        let cfg = MadmmConfig { record_iterates: true, ..Default::default() };
        let res = madmm_solve(&p, &cfg, &x0).unwrap();
        let snap = res.trace[0].snapshot.as_ref().unwrap();
        assert_eq!(snap.z_next, snap.z_used);
        assert_eq!(res.termination, Termination::Feasible);
    }

    #[test]
    fn target_objective_stops_early() {
        let p = build_cms(32, 2, 0.2).unwrap();
        let x0 = initial_point(32, 2, 2).unwrap();
        let cfg = MadmmConfig { target_objective: Some(f64::INFINITY), ..Default::default() };
        let res = madmm_solve(&p, &cfg, &x0).unwrap();
        assert_eq!(res.outer_iters, 1);
        assert_eq!(res.termination, Termination::TargetObjective);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(MadmmConfig { beta: Some(-1.0), ..Default::default() }.validate().is_err());
        assert!(MadmmConfig { inner_tol: 0.0, ..Default::default() }.validate().is_err());
    }
}
