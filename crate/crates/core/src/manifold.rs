//! Geometry of the Stiefel manifold St(n, r) = { X : X'X = I_r } with the
//! embedded Euclidean metric.

use crate::error::{Error, Result};
use crate::numeric::{ensure_shape, qr_positive, sym, DenseMatrix};

/// Maximum `‖X'X − I‖_F` accepted for a stored iterate.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// `‖X'X − I_r‖_F`.
pub fn stiefel_feasibility(x: &DenseMatrix) -> f64 {
    let r = x.ncols();
    (x.transpose() * x - DenseMatrix::identity(r, r)).norm()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    value: DenseMatrix,
}

impl StiefelPoint {
    /// Accepts `x` if it is orthonormal to [`ORTHONORMALITY_TOL`].
    pub fn new(x: DenseMatrix) -> Result<Self> {
        if x.nrows() < x.ncols() {
            return Err(Error::contract(format!(
                "Stiefel point needs n >= r, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        let drift = stiefel_feasibility(&x);
        if !(drift <= ORTHONORMALITY_TOL) {
            return Err(Error::contract(format!(
                "matrix is not orthonormal: ‖X'X − I‖_F = {drift:e}"
            )));
        }
        Ok(Self { value: x })
    }

    /// Orthonormalizes an arbitrary full-rank matrix through the positive-diagonal QR.
    pub fn orthonormalize(x: &DenseMatrix) -> Result<Self> {
        Ok(Self { value: qr_positive(x)? })
    }

    /// First `r` columns of the identity.
    pub fn identity_columns(n: usize, r: usize) -> Result<Self> {
        Self::new(DenseMatrix::identity(n, r))
    }

    pub fn value(&self) -> &DenseMatrix {
        &self.value
    }

    pub fn into_inner(self) -> DenseMatrix {
        self.value
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn feasibility(&self) -> f64 {
        stiefel_feasibility(&self.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    value: DenseMatrix,
}

impl TangentVector {
    pub fn value(&self) -> &DenseMatrix {
        &self.value
    }

    pub fn into_inner(self) -> DenseMatrix {
        self.value
    }

    pub fn norm(&self) -> f64 {
        self.value.norm()
    }

    pub fn scaled(&self, t: f64) -> TangentVector {
        TangentVector {
            value: &self.value * t,
        }
    }

    /// `‖sym(X'ξ)‖_F`, zero for an exact tangent vector at `x`.
    pub fn tangency_residual(&self, x: &StiefelPoint) -> f64 {
        sym(&(x.value().transpose() * &self.value)).norm()
    }
}

/// Orthogonal projection onto T_X St: `V − X·sym(X'V)`.
pub fn tangent_project(x: &StiefelPoint, v: &DenseMatrix) -> Result<TangentVector> {
    let (n, r) = x.shape();
    ensure_shape(v, n, r)?;
    let xv = x.value().transpose() * v;
    let value = v - x.value() * sym(&xv);
    Ok(TangentVector { value })
}

/// QR retraction `R_X(η) = qf(X + η)`. `R_X(0) = X` holds exactly.
pub fn retract_qr(x: &StiefelPoint, eta: &TangentVector) -> Result<StiefelPoint> {
    ensure_shape(eta.value(), x.shape().0, x.shape().1)?;
    if eta.value.iter().all(|v| *v == 0.0) {
        return Ok(x.clone());
    }
    StiefelPoint::orthonormalize(&(x.value() + eta.value()))
}

/// Riemannian gradient for the embedded metric: the tangent projection of the Euclidean gradient.
pub fn riemannian_gradient(x: &StiefelPoint, euclid_grad: &DenseMatrix) -> Result<TangentVector> {
    tangent_project(x, euclid_grad)
}
