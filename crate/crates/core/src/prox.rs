//! Proximal operators and Moreau envelopes of closed convex regularizers.

use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;

/// A proper closed convex function accessed only through its value and prox.
pub trait ProxFn: Debug + Send + Sync {
    fn name(&self) -> &str;

    fn value(&self, v: &DenseMatrix) -> f64;

    /// `argmin_Y g(Y) + ‖Y − V‖²_F / (2t)` for `t > 0`.
    fn prox(&self, v: &DenseMatrix, t: f64) -> Result<DenseMatrix>;
}

/// `g(X) = weight · ‖X‖₁` (entrywise).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Norm {
    pub weight: f64,
}

impl L1Norm {
    pub fn new(weight: f64) -> Result<Self> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::contract(format!("L1 weight must be >= 0, got {weight}")));
        }
        Ok(Self { weight })
    }
}

impl ProxFn for L1Norm {
    fn name(&self) -> &str {
        "l1"
    }

    fn value(&self, v: &DenseMatrix) -> f64 {
        self.weight * v.iter().map(|x| x.abs()).sum::<f64>()
    }

    fn prox(&self, v: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
        prox_l1(v, t, self.weight)
    }
}

/// Soft thresholding `sign(v)·max(|v| − tμ, 0)`.
pub fn prox_l1(v: &DenseMatrix, t: f64, mu: f64) -> Result<DenseMatrix> {
    if !(t > 0.0) {
        return Err(Error::contract(format!("prox parameter must be > 0, got {t}")));
    }
    if !(mu >= 0.0) {
        return Err(Error::contract(format!("L1 weight must be >= 0, got {mu}")));
    }
    let kappa = t * mu;
    Ok(v.map(|x| soft_threshold(x, kappa)))
}

#[inline]
pub fn soft_threshold(x: f64, kappa: f64) -> f64 {
    if x > kappa {
        x - kappa
    } else if x < -kappa {
        x + kappa
    } else {
        0.0
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0) {
        return Err(Error::contract(format!("Moreau parameter must be > 0, got {mu}")));
    }
    Ok(())
}

/// `M_{μg}(V) = g(P) + ‖P − V‖²/(2μ)` with `P = prox_{μg}(V)`.
pub fn moreau_value(g: &dyn ProxFn, mu: f64, v: &DenseMatrix) -> Result<f64> {
    check_mu(mu)?;
    let p = g.prox(v, mu)?;
    Ok(g.value(&p) + (&p - v).norm_squared() / (2.0 * mu))
}

/// `∇M_{μg}(V) = (V − prox_{μg}(V)) / μ`.
pub fn moreau_gradient(g: &dyn ProxFn, mu: f64, v: &DenseMatrix) -> Result<DenseMatrix> {
    check_mu(mu)?;
    let p = g.prox(v, mu)?;
    Ok((v - p) / mu)
}

/// Distance from `−Z` to `μ·∂‖·‖₁(Y)`, entrywise then Frobenius.
pub fn l1_subdiff_distance(y: &DenseMatrix, z: &DenseMatrix, mu: f64) -> Result<f64> {
    if y.shape() != z.shape() {
        return Err(Error::shape(y.shape(), z.shape()));
    }
    let sq: f64 = y
        .iter()
        .zip(z.iter())
        .map(|(&yi, &zi)| {
            let d = if yi != 0.0 {
                (-zi - mu * yi.signum()).abs()
            } else {
                (zi.abs() - mu).max(0.0)
            };
            d * d
        })
        .sum();
    Ok(sq.sqrt())
}
