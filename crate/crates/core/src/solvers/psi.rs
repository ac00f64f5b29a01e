//! The smoothed subproblem ψ_Z̄(X) = min_Y L_ρ(X, Y; Z̄) and its gradients.

use crate::error::{Error, Result};
use crate::numeric::DenseMatrix;
use crate::problems::CompositeProblem;

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0) {
        return Err(Error::contract(format!("penalty must be > 0, got {rho}")));
    }
    Ok(())
}

/// Shifted argument `U = AX − Z̄/ρ` and its prox `P = prox_{g/ρ}(U)`.
fn shifted_prox(
    p: &CompositeProblem,
    rho: f64,
    z_bar: &DenseMatrix,
    x: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    check_rho(rho)?;
    p.check_x(x)?;
    p.check_y(z_bar)?;
    let u = p.apply_a(x) - z_bar / rho;
    let prox = p.g().prox(&u, 1.0 / rho)?;
    Ok((u, prox))
}

/// `L_ρ(X, Y; Z) = f(X) + g(Y) − ⟨Z, AX − Y⟩ + (ρ/2)‖AX − Y‖²`.
pub fn augmented_lagrangian(
    p: &CompositeProblem,
    rho: f64,
    z: &DenseMatrix,
    x: &DenseMatrix,
    y: &DenseMatrix,
) -> Result<f64> {
    check_rho(rho)?;
    p.check_x(x)?;
    p.check_y(y)?;
    p.check_y(z)?;
    let res = p.apply_a(x) - y;
    Ok(p.f_value(x) + p.g().value(y) - z.dot(&res) + 0.5 * rho * res.norm_squared())
}

/// Minimizer of `L_ρ(X, ·; Z̄)`: `prox_{g/ρ}(AX − Z̄/ρ)`.
pub fn y_step(p: &CompositeProblem, rho: f64, z_bar: &DenseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(shifted_prox(p, rho, z_bar, x)?.1)
}

pub fn psi_value(p: &CompositeProblem, rho: f64, z_bar: &DenseMatrix, x: &DenseMatrix) -> Result<f64> {
    let (u, prox) = shifted_prox(p, rho, z_bar, x)?;
    Ok(p.f_value(x) + p.g().value(&prox) + 0.5 * rho * (&u - &prox).norm_squared()
        - z_bar.norm_squared() / (2.0 * rho))
}

/// `∇f(X) + ρA'(U − prox_{g/ρ}(U))`.
pub fn psi_euclid_grad(
    p: &CompositeProblem,
    rho: f64,
    z_bar: &DenseMatrix,
    x: &DenseMatrix,
) -> Result<DenseMatrix> {
    Ok(psi_value_and_grad(p, rho, z_bar, x)?.1)
}

pub fn psi_value_and_grad(
    p: &CompositeProblem,
    rho: f64,
    z_bar: &DenseMatrix,
    x: &DenseMatrix,
) -> Result<(f64, DenseMatrix)> {
    let (u, prox) = shifted_prox(p, rho, z_bar, x)?;
    let diff = &u - &prox;
    let value = p.f_value(x) + p.g().value(&prox) + 0.5 * rho * diff.norm_squared()
        - z_bar.norm_squared() / (2.0 * rho);
    let grad = p.f_grad(x) + p.apply_at(&diff) * rho;
    Ok((value, grad))
}
