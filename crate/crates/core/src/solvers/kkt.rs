use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::manifold::{tangent_project, StiefelPoint};
use crate::numeric::DenseMatrix;
use crate::problems::CompositeProblem;
use crate::prox::l1_subdiff_distance;

/// Residuals of the KKT system at `(X, Y, Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    /// `‖Proj_{T_X}(∇f(X) − A'Z)‖_F`
    pub stationarity: f64,
    /// Distance of `−Z` from `∂g(Y)`.
    pub subdiff: f64,
    /// `‖AX − Y‖_F`
    pub feasibility: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.subdiff).max(self.feasibility)
    }
}

/// The subdifferential term assumes `g = μ‖·‖₁`, the only shipped regularizer.
pub fn kkt_residual(
    p: &CompositeProblem,
    x: &StiefelPoint,
    y: &DenseMatrix,
    z: &DenseMatrix,
) -> Result<KktResidual> {
    p.check_x(x.value())?;
    p.check_y(y)?;
    p.check_y(z)?;
    let lagrange_grad = p.f_grad(x.value()) - p.apply_at(z);
    let stationarity = tangent_project(x, &lagrange_grad)?.norm();
    let subdiff = l1_subdiff_distance(y, z, p.mu())?;
    let feasibility = (p.apply_a(x.value()) - y).norm();
    Ok(KktResidual { stationarity, subdiff, feasibility })
}
