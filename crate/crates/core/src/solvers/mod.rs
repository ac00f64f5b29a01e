//! Augmented Lagrangian (MIALM) and ADMM (MADMM) solvers for `min f(X) + g(AX)` on St(n, r).

mod kkt;
mod madmm;
mod mialm;
mod psi;
mod rgd;

use serde::{Deserialize, Serialize};

pub use kkt::{kkt_residual, KktResidual};
pub use madmm::{madmm_solve, MadmmConfig};
pub use mialm::{mialm_solve, MialmConfig};
pub use psi::{augmented_lagrangian, psi_euclid_grad, psi_value, psi_value_and_grad, y_step};
pub use rgd::{rgd_bb_solve, InnerExit, RgdOptions, RgdOutcome, SmoothObjective};

use crate::error::Result;
use crate::manifold::StiefelPoint;
use crate::numeric::{gaussian_matrix, DenseMatrix, RngStream};

/// RNG sub-stream used for initial iterates.
pub const INIT_STREAM: u64 = 1;

/// `qr_positive` of a seeded Gaussian `n × r` matrix.
pub fn initial_point(n: usize, r: usize, seed: u64) -> Result<StiefelPoint> {
    let mut rng = RngStream::with_stream(seed, INIT_STREAM);
    StiefelPoint::orthonormalize(&gaussian_matrix(&mut rng, n, r))
}

/// Why the outer loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `‖AX − Y‖²_F` fell to the outer tolerance.
    Feasible,
    /// `F(X) <= target` (cross-solver criterion).
    TargetObjective,
    MaxOuter,
}

/// Iterates captured when `record_iterates` is on.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateSnapshot {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
    /// Multiplier used in this step's subproblem (Z̄^k, or Λ^k for MADMM).
    pub z_used: DenseMatrix,
    /// Multiplier produced by this step before projection.
    pub z_next: DenseMatrix,
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub objective: f64,
    /// `‖AX^{k+1} − Y^{k+1}‖_F`.
    pub feasibility: f64,
    /// `‖AX^{k+1} − Y^{k+1}‖_∞`.
    pub residual_inf: f64,
    /// `‖AX^k − Y^k‖_∞`, the reference for the penalty test.
    pub residual_prev: f64,
    /// Penalty used in this iteration and the one chosen for the next.
    pub rho: f64,
    pub rho_next: f64,
    /// Inner tolerance ε_k.
    pub eps: f64,
    pub inner_iters: usize,
    pub inner_exit: InnerExit,
    pub inner_grad_norm: f64,
    /// Elementwise range of the projected multiplier Z̄^{k+1}.
    pub z_bar_min: f64,
    pub z_bar_max: f64,
    pub stiefel_feasibility: f64,
    /// Seconds since the start of the solve.
    pub elapsed: f64,
    pub snapshot: Option<IterateSnapshot>,
}

impl TraceRecord {
    pub const CSV_HEADER: &'static str = "k,F,feasibility,rho,eps,inner_iters,elapsed";

    /// `k,F,feasibility,rho,eps,inner_iters,elapsed`.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{},{:.6}",
            self.k, self.objective, self.feasibility, self.rho, self.eps, self.inner_iters, self.elapsed
        )
    }
}

pub fn trace_to_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::from(TraceRecord::CSV_HEADER);
    out.push('\n');
    for row in trace {
        out.push_str(&row.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub solver: &'static str,
    pub x: StiefelPoint,
    pub y: DenseMatrix,
    /// Final multiplier before box projection.
    pub z: DenseMatrix,
    /// Final projected multiplier (equal to `z` for MADMM).
    pub z_bar: DenseMatrix,
    pub objective: f64,
    pub sparsity: f64,
    pub kkt: KktResidual,
    pub outer_iters: usize,
    pub inner_iter_total: usize,
    pub wall_time: f64,
    pub termination: Termination,
    pub trace: Vec<TraceRecord>,
}
