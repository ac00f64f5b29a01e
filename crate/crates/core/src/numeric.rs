//! Dense linear algebra helpers and seeded randomness.
//!
//! Matrices are plain `nalgebra` column-major `DMatrix<f64>` values; the
//! helpers here add the checks the solvers rely on (finite entries,
//! positive-diagonal thin QR, symmetric largest eigenvalue).

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;

/// Diagonal entries of R below this magnitude are treated as rank deficiency.
pub const QR_SINGULAR_TOL: f64 = 1e-12;

/// Above this dimension `lambda_max_sym` switches to power iteration.
pub const DENSE_EIGEN_LIMIT: usize = 2048;

/// Builds a matrix from row-major data, rejecting empty shapes and non-finite entries.
pub fn matrix_from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<DenseMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::contract(format!("empty shape {rows}x{cols}")));
    }
    if data.len() != rows * cols {
        return Err(Error::contract(format!(
            "expected {} entries for {rows}x{cols}, got {}",
            rows * cols,
            data.len()
        )));
    }
    let m = DenseMatrix::from_row_slice(rows, cols, data);
    ensure_finite(&m)?;
    Ok(m)
}

pub fn ensure_finite(m: &DenseMatrix) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn ensure_shape(m: &DenseMatrix, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::shape((rows, cols), m.shape()));
    }
    Ok(())
}

/// Frobenius inner product.
pub fn inner(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.dot(b)
}

/// Symmetric part `(A + A')/2` of a square matrix.
pub fn sym(a: &DenseMatrix) -> DenseMatrix {
    (a + a.transpose()) * 0.5
}

pub fn max_abs(m: &DenseMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Thin QR factor with strictly positive diagonal in R, so the factorization is unique.
pub fn qr_positive(m: &DenseMatrix) -> Result<DenseMatrix> {
    let (n, r) = m.shape();
    if n < r {
        return Err(Error::contract(format!("qr_positive needs rows >= cols, got {n}x{r}")));
    }
    ensure_finite(m)?;
    let qr = m.clone().qr();
    let rf = qr.r();
    let mut q = qr.q();
    for j in 0..r {
        let d = rf[(j, j)];
        if d.abs() < QR_SINGULAR_TOL {
            return Err(Error::Singular { index: j, value: d });
        }
        if d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

fn check_symmetric(s: &DenseMatrix) -> Result<()> {
    let (n, c) = s.shape();
    if n != c {
        return Err(Error::contract(format!("expected square matrix, got {n}x{c}")));
    }
    let scale = max_abs(s).max(1.0);
    for j in 0..n {
        for i in (j + 1)..n {
            if (s[(i, j)] - s[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::contract(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Largest eigenvalue of a symmetric matrix.
///
/// Uses a dense symmetric eigendecomposition up to [`DENSE_EIGEN_LIMIT`] and
/// shifted power iteration (relative tolerance `tol`) above it.
pub fn lambda_max_sym(s: &DenseMatrix, tol: f64) -> Result<f64> {
    lambda_max_with_limit(s, tol, DENSE_EIGEN_LIMIT)
}

pub(crate) fn lambda_max_with_limit(s: &DenseMatrix, tol: f64, dense_limit: usize) -> Result<f64> {
    check_symmetric(s)?;
    ensure_finite(s)?;
    if s.nrows() <= dense_limit {
        let eig = SymmetricEigen::new(s.clone());
        return Ok(eig.eigenvalues.max());
    }
    Ok(power_lambda_max(s, tol))
}

fn power_lambda_max(s: &DenseMatrix, tol: f64) -> f64 {
    let n = s.nrows();
    // Gershgorin bound makes S + shift*I positive semidefinite, so the
    // dominant eigenvalue of the shifted matrix is the largest algebraic one.
    let shift = (0..n)
        .map(|i| s.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    if shift == 0.0 {
        return 0.0;
    }
    let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let mut w = s * &v + &v * shift;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return -shift;
        }
        w /= norm;
        v = w;
        if (next - lambda).abs() <= tol * next.abs().max(1e-300) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda - shift
}

/// Seeded ChaCha20 stream; identical `(seed, stream)` pairs yield identical samples everywhere.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent sub-stream of the same seed (used to separate data from initialization).
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm(&self) -> &'static str {
        "chacha20"
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

/// I.i.d. standard normal matrix, filled in row-major order.
pub fn gaussian_matrix(rng: &mut RngStream, rows: usize, cols: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.standard_normal();
        }
    }
    m
}
