//! Manifold inexact augmented Lagrangian method.
//!
//! Each outer iteration approximately minimizes ψ_Z̄(X) over the manifold to
//! tolerance ε_k, takes the closed-form Y step, updates and box-projects the
//! multiplier, and grows the penalty when the constraint residual does not
//! shrink by the factor τ.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::kkt::kkt_residual;
use super::psi::{psi_value, psi_value_and_grad, y_step};
use super::rgd::{rgd_bb_solve, RgdOptions, SmoothObjective};
use super::{IterateSnapshot, SolveResult, Termination, TraceRecord};
use crate::error::{Error, Result};
use crate::manifold::StiefelPoint;
use crate::numeric::{max_abs, DenseMatrix};
use crate::problems::{objective, sparsity, CompositeProblem, DEFAULT_SPARSITY_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MialmConfig {
    /// Initial penalty; `None` takes the problem's default.
    pub rho0: Option<f64>,
    pub sigma: f64,
    pub tau: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// ε_k = max(eps_min, eps0 · eps_decay^k).
    pub eps0: f64,
    pub eps_decay: f64,
    pub eps_min: f64,
    pub max_outer: usize,
    /// Stop once `‖AX − Y‖²_F` is at or below this.
    pub outer_tol: f64,
    pub inner_max_iters: usize,
    pub sparsity_threshold: f64,
    /// Keep X, Y and multipliers for every outer iteration in the trace.
    pub record_iterates: bool,
}

impl Default for MialmConfig {
    fn default() -> Self {
        Self {
            rho0: None,
            sigma: 1.05,
            tau: 0.99,
            z_min: -100.0,
            z_max: 100.0,
            eps0: 1.0,
            eps_decay: 0.9,
            eps_min: 1e-5,
            max_outer: 500,
            outer_tol: 1e-9,
            inner_max_iters: 20,
            sparsity_threshold: DEFAULT_SPARSITY_THRESHOLD,
            record_iterates: false,
        }
    }
}

impl MialmConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(rho0) = self.rho0 {
            if !(rho0 > 0.0) {
                return Err(Error::config(format!("rho0 must be > 0, got {rho0}")));
            }
        }
        if !(self.sigma > 1.0) {
            return Err(Error::config(format!("sigma must be > 1, got {}", self.sigma)));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::config(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if !(self.z_min < self.z_max) {
            return Err(Error::config("z_min must be below z_max"));
        }
        if !(self.eps0 > 0.0) || !(self.eps_decay > 0.0 && self.eps_decay <= 1.0) || !(self.eps_min >= 0.0) {
            return Err(Error::config("eps schedule needs eps0 > 0, 0 < eps_decay <= 1, eps_min >= 0"));
        }
        if !(self.outer_tol >= 0.0) || !(self.sparsity_threshold > 0.0) {
            return Err(Error::config("outer_tol must be >= 0 and sparsity_threshold > 0"));
        }
        if self.max_outer == 0 || self.inner_max_iters == 0 {
            return Err(Error::config("iteration caps must be positive"));
        }
        Ok(())
    }

    /// Inner tolerance for outer iteration `k`.
    pub fn eps_at(&self, k: usize) -> f64 {
        let decayed = self.eps0 * self.eps_decay.powi(k.min(i32::MAX as usize) as i32);
        // the inner solver needs a strictly positive tolerance
        decayed.max(self.eps_min).max(f64::MIN_POSITIVE)
    }
}

struct Psi<'a> {
    p: &'a CompositeProblem,
    rho: f64,
    z_bar: &'a DenseMatrix,
}

impl SmoothObjective for Psi<'_> {
    fn value(&self, x: &DenseMatrix) -> Result<f64> {
        psi_value(self.p, self.rho, self.z_bar, x)
    }

    fn value_and_grad(&self, x: &DenseMatrix) -> Result<(f64, DenseMatrix)> {
        psi_value_and_grad(self.p, self.rho, self.z_bar, x)
    }
}

pub(crate) fn attach_trace(err: Error, trace: &[TraceRecord]) -> Error {
    match err {
        Error::NumericalFailure { reason, mut context } => {
            context.trace = trace.to_vec();
            Error::NumericalFailure { reason, context }
        }
        other => other,
    }
}

pub fn mialm_solve(p: &CompositeProblem, cfg: &MialmConfig, x0: &StiefelPoint) -> Result<SolveResult> {
    cfg.validate()?;
    p.check_x(x0.value())?;
    let start = Instant::now();
    let (d, r) = (p.d(), p.r());

    let mut rho = cfg.rho0.unwrap_or(p.default_rho0());
    let mut z_bar = DenseMatrix::zeros(d, r);
    let mut z = z_bar.clone();
    let mut x = x0.clone();
    let mut y = y_step(p, rho, &z_bar, x.value())?;
    let mut residual_prev = max_abs(&(p.apply_a(x.value()) - &y));

    let opts = RgdOptions::default();
    let mut step = opts.initial_step;
    let mut trace = Vec::new();
    let mut inner_total = 0;
    let mut termination = Termination::MaxOuter;

    for k in 0..cfg.max_outer {
        let eps = cfg.eps_at(k);
        let psi = Psi { p, rho, z_bar: &z_bar };
        let inner = rgd_bb_solve(&psi, &x, eps, cfg.inner_max_iters, &RgdOptions { initial_step: step, ..opts })
            .map_err(|e| attach_trace(e, &trace))?;
        step = inner.last_step;
        inner_total += inner.iters;
        x = inner.x;

        let ax = p.apply_a(x.value());
        y = y_step(p, rho, &z_bar, x.value())?;
        let residual = &ax - &y;
        z = &z_bar - &residual * rho;
        let z_bar_next = z.map(|v| v.clamp(cfg.z_min, cfg.z_max));

        let residual_inf = max_abs(&residual);
        let rho_next = if residual_inf <= cfg.tau * residual_prev { rho } else { cfg.sigma * rho };
        let feas_sq = residual.norm_squared();

        trace.push(TraceRecord {
            k,
            objective: objective(p, x.value())?,
            feasibility: feas_sq.sqrt(),
            residual_inf,
            residual_prev,
            rho,
            rho_next,
            eps,
            inner_iters: inner.iters,
            inner_exit: inner.exit,
            inner_grad_norm: inner.grad_norm,
            z_bar_min: z_bar_next.min(),
            z_bar_max: z_bar_next.max(),
            stiefel_feasibility: x.feasibility(),
            elapsed: start.elapsed().as_secs_f64(),
            snapshot: cfg.record_iterates.then(|| IterateSnapshot {
                x: x.value().clone(),
                y: y.clone(),
                z_used: z_bar.clone(),
                z_next: z.clone(),
            }),
        });

        residual_prev = residual_inf;
        rho = rho_next;
        z_bar = z_bar_next;

        if feas_sq <= cfg.outer_tol {
            termination = Termination::Feasible;
            break;
        }
    }

    let wall_time = start.elapsed().as_secs_f64();
    let kkt = kkt_residual(p, &x, &y, &z)?;
    Ok(SolveResult {
        solver: "mialm",
        objective: objective(p, x.value())?,
        sparsity: sparsity(x.value(), cfg.sparsity_threshold)?,
        kkt,
        outer_iters: trace.len(),
        inner_iter_total: inner_total,
        wall_time,
        termination,
        trace,
        x,
        y,
        z,
        z_bar,
    })
}
