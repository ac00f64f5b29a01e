//! Composite problems `min f(X) + g(AX)` over St(n, r), plus the compressed
//! modes and sparse PCA instances.

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ensure_shape, gaussian_matrix, lambda_max_sym, DenseMatrix, RngStream};
use crate::prox::{L1Norm, ProxFn};

/// Length of the 1-D domain discretized for compressed modes.
pub const CMS_DOMAIN_LENGTH: f64 = 50.0;

/// Entries with magnitude at or below this count as zero in the sparsity metric.
pub const DEFAULT_SPARSITY_THRESHOLD: f64 = 1e-5;

/// Tolerance passed to `lambda_max_sym` when deriving default penalties.
const LAMBDA_TOL: f64 = 1e-8;

/// Smooth part `f` of the composite objective.
pub trait SmoothFn: Debug + Send + Sync {
    fn value(&self, x: &DenseMatrix) -> f64;
    fn grad(&self, x: &DenseMatrix) -> DenseMatrix;
}

/// `f(X) = tr(X'QX)` for symmetric `Q`.
#[derive(Debug, Clone)]
pub struct TraceQuadratic {
    pub q: DenseMatrix,
}

impl SmoothFn for TraceQuadratic {
    fn value(&self, x: &DenseMatrix) -> f64 {
        x.dot(&(&self.q * x))
    }

    fn grad(&self, x: &DenseMatrix) -> DenseMatrix {
        (&self.q * x) * 2.0
    }
}

/// `f(X) = −tr(X'B'BX) = −‖BX‖²_F`.
#[derive(Debug, Clone)]
pub struct NegativeGram {
    pub b: DenseMatrix,
}

impl SmoothFn for NegativeGram {
    fn value(&self, x: &DenseMatrix) -> f64 {
        -(&self.b * x).norm_squared()
    }

    fn grad(&self, x: &DenseMatrix) -> DenseMatrix {
        self.b.tr_mul(&(&self.b * x)) * -2.0
    }
}

/// Build parameters of a shipped problem, serializable for reproducible runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "lowercase")]
pub enum ProblemSpec {
    Cms { n: usize, r: usize, mu: f64 },
    Spca { m: usize, n: usize, r: usize, mu: f64, seed: u64 },
    Custom { name: String, n: usize, r: usize, mu: f64 },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<CompositeProblem> {
        match *self {
            ProblemSpec::Cms { n, r, mu } => build_cms(n, r, mu),
            ProblemSpec::Spca { m, n, r, mu, seed } => build_spca(m, n, r, mu, seed),
            ProblemSpec::Custom { .. } => Err(Error::config("custom problems cannot be rebuilt from a spec")),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            ProblemSpec::Cms { .. } => "cms",
            ProblemSpec::Spca { .. } => "spca",
            ProblemSpec::Custom { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompositeProblem {
    n: usize,
    r: usize,
    d: usize,
    /// `None` stands for the identity map (d = n).
    a: Option<DenseMatrix>,
    f: Arc<dyn SmoothFn>,
    g: Arc<dyn ProxFn>,
    mu: f64,
    default_rho0: f64,
    spec: ProblemSpec,
}

impl CompositeProblem {
    /// General constructor; `a = None` means `A = I`. `default_rho0` seeds solver penalties.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        spec: ProblemSpec,
        n: usize,
        r: usize,
        a: Option<DenseMatrix>,
        f: Arc<dyn SmoothFn>,
        g: Arc<dyn ProxFn>,
        mu: f64,
        default_rho0: f64,
    ) -> Result<Self> {
        if n == 0 || r == 0 || r > n {
            return Err(Error::contract(format!("need 1 <= r <= n, got n={n}, r={r}")));
        }
        let d = match &a {
            Some(a) => {
                if a.ncols() != n {
                    return Err(Error::shape((a.nrows(), n), a.shape()));
                }
                a.nrows()
            }
            None => n,
        };
        if !(default_rho0 > 0.0) {
            return Err(Error::contract(format!("default penalty must be > 0, got {default_rho0}")));
        }
        Ok(Self { n, r, d, a, f, g, mu, default_rho0, spec })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }
    pub fn name(&self) -> &str {
        self.spec.name()
    }
    pub fn g(&self) -> &dyn ProxFn {
        self.g.as_ref()
    }
    pub fn default_rho0(&self) -> f64 {
        self.default_rho0
    }
    pub fn linear_map(&self) -> Option<&DenseMatrix> {
        self.a.as_ref()
    }

    pub fn f_value(&self, x: &DenseMatrix) -> f64 {
        self.f.value(x)
    }

    pub fn f_grad(&self, x: &DenseMatrix) -> DenseMatrix {
        self.f.grad(x)
    }

    /// `A·X`.
    pub fn apply_a(&self, x: &DenseMatrix) -> DenseMatrix {
        match &self.a {
            Some(a) => a * x,
            None => x.clone(),
        }
    }

    /// `A'·V`.
    pub fn apply_at(&self, v: &DenseMatrix) -> DenseMatrix {
        match &self.a {
            Some(a) => a.tr_mul(v),
            None => v.clone(),
        }
    }

    pub fn check_x(&self, x: &DenseMatrix) -> Result<()> {
        ensure_shape(x, self.n, self.r)
    }

    pub fn check_y(&self, y: &DenseMatrix) -> Result<()> {
        ensure_shape(y, self.d, self.r)
    }
}

/// `F(X) = f(X) + g(AX)`.
pub fn objective(p: &CompositeProblem, x: &DenseMatrix) -> Result<f64> {
    p.check_x(x)?;
    Ok(p.f_value(x) + p.g().value(&p.apply_a(x)))
}

/// Fraction of entries with `|x| <= threshold`.
pub fn sparsity(x: &DenseMatrix, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(Error::contract(format!("sparsity threshold must be > 0, got {threshold}")));
    }
    let zeros = x.iter().filter(|v| v.abs() <= threshold).count();
    Ok(zeros as f64 / x.len() as f64)
}

/// Discretized `−(1/2)∂xx` with periodic boundary on `n` nodes of `[0, 50]`.
#[derive(Debug, Clone)]
pub struct CmsInstance {
    pub n: usize,
    pub r: usize,
    pub mu: f64,
    pub domain_length: f64,
    pub h: DenseMatrix,
}

impl CmsInstance {
    pub fn new(n: usize, r: usize, mu: f64) -> Result<Self> {
        if n < 4 || r == 0 || r > n {
            return Err(Error::contract(format!("compressed modes needs n >= 4, 1 <= r <= n; got n={n}, r={r}")));
        }
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::contract(format!("mu must be >= 0, got {mu}")));
        }
        Ok(Self { n, r, mu, domain_length: CMS_DOMAIN_LENGTH, h: schrodinger_operator(n, CMS_DOMAIN_LENGTH) })
    }

    /// Grid spacing `domain_length / n`.
    pub fn mesh(&self) -> f64 {
        self.domain_length / self.n as f64
    }

    pub fn into_problem(self) -> Result<CompositeProblem> {
        let rho0 = lambda_max_sym(&self.h, LAMBDA_TOL)? / 2.0;
        let spec = ProblemSpec::Cms { n: self.n, r: self.r, mu: self.mu };
        CompositeProblem::new(
            spec,
            self.n,
            self.r,
            None,
            Arc::new(TraceQuadratic { q: self.h }),
            Arc::new(L1Norm::new(self.mu)?),
            self.mu,
            rho0,
        )
    }
}

/// Periodic `−(1/2)` second-difference matrix with mesh `length / n`.
pub fn schrodinger_operator(n: usize, length: f64) -> DenseMatrix {
    let h = length / n as f64;
    let diag = 1.0 / (h * h);
    let off = -0.5 / (h * h);
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = diag;
        m[(i, (i + 1) % n)] += off;
        m[(i, (i + n - 1) % n)] += off;
    }
    m
}

pub fn build_cms(n: usize, r: usize, mu: f64) -> Result<CompositeProblem> {
    CmsInstance::new(n, r, mu)?.into_problem()
}

/// Column-centered, column-normalized Gaussian data for sparse PCA.
#[derive(Debug, Clone)]
pub struct SpcaInstance {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub mu: f64,
    pub b: DenseMatrix,
    pub seed: u64,
}

impl SpcaInstance {
    pub fn new(m: usize, n: usize, r: usize, mu: f64, seed: u64) -> Result<Self> {
        if m < 2 || r == 0 || r > n {
            return Err(Error::contract(format!("sparse PCA needs m >= 2, 1 <= r <= n; got m={m}, n={n}, r={r}")));
        }
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::contract(format!("mu must be >= 0, got {mu}")));
        }
        let mut rng = RngStream::with_stream(seed, DATA_STREAM);
        let mut b = gaussian_matrix(&mut rng, m, n);
        for j in 0..n {
            let mut col = b.column_mut(j);
            let mean = col.mean();
            col.add_scalar_mut(-mean);
            let norm = col.norm();
            if norm <= 1e-12 {
                return Err(Error::DegenerateData(format!("column {j} has zero variance")));
            }
            col.unscale_mut(norm);
        }
        Ok(Self { m, n, r, mu, b, seed })
    }

    pub fn into_problem(self) -> Result<CompositeProblem> {
        let gram = self.b.tr_mul(&self.b);
        let lmax = lambda_max_sym(&gram, LAMBDA_TOL)?;
        let spec = ProblemSpec::Spca { m: self.m, n: self.n, r: self.r, mu: self.mu, seed: self.seed };
        CompositeProblem::new(
            spec,
            self.n,
            self.r,
            None,
            Arc::new(NegativeGram { b: self.b }),
            Arc::new(L1Norm::new(self.mu)?),
            self.mu,
            lmax * lmax / 2.0,
        )
    }
}

/// RNG sub-stream reserved for problem data; initial points use [`crate::solvers::INIT_STREAM`].
pub const DATA_STREAM: u64 = 0;

pub fn build_spca(m: usize, n: usize, r: usize, mu: f64, seed: u64) -> Result<CompositeProblem> {
    SpcaInstance::new(m, n, r, mu, seed)?.into_problem()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::StiefelPoint;
    use nalgebra::SymmetricEigen;

    #[test]
    fn small_stencil() {
        let h = schrodinger_operator(4, 50.0);
        let s = 1.0 / (12.5f64 * 12.5);
        let expected = [s, -0.5 * s, 0.0, -0.5 * s];
        for (j, e) in expected.iter().enumerate() {
            assert!((h[(0, j)] - e).abs() < 1e-18);
        }
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn cms_lambda_max_closed_form() {
        let p = build_cms(128, 2, 0.1).unwrap();
        let h = 50.0 / 128.0;
        assert!((p.default_rho0() * 2.0 - 2.0 / (h * h)).abs() < 1e-9);
        assert!((2.0 / (h * h) - 13.1072).abs() < 1e-12);
    }

    #[test]
    fn cms_objective_at_selector() {
        let p = build_cms(16, 3, 0.0).unwrap();
        let inst = CmsInstance::new(16, 3, 0.0).unwrap();
        let x = DenseMatrix::identity(16, 3);
        let tr: f64 = (0..3).map(|i| inst.h[(i, i)]).sum();
        assert!((objective(&p, &x).unwrap() - tr).abs() < 1e-12);
        // mu adds weight * ‖X‖₁ = weight * 3
        let p = build_cms(16, 3, 0.5).unwrap();
        assert!((objective(&p, &x).unwrap() - tr - 1.5).abs() < 1e-12);
    }

    #[test]
    fn cms_smooth_objective_at_eigenvectors() {
        let inst = CmsInstance::new(32, 3, 0.0).unwrap();
        let eig = SymmetricEigen::new(inst.h.clone());
        let mut idx: Vec<usize> = (0..32).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let cols: Vec<_> = idx[..3].iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
        let x = DenseMatrix::from_columns(&cols);
        let expected: f64 = idx[..3].iter().map(|&i| eig.eigenvalues[i]).sum();
        let p = inst.into_problem().unwrap();
        assert!((objective(&p, &x).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn spca_data_postconditions() {
        let a = SpcaInstance::new(50, 40, 2, 0.6, 7).unwrap();
        for j in 0..40 {
            let c = a.b.column(j);
            assert!(c.mean().abs() <= 1e-12);
            assert!((c.norm() - 1.0).abs() <= 1e-12);
        }
        let b = SpcaInstance::new(50, 40, 2, 0.6, 7).unwrap();
        assert_eq!(a.b, b.b);
        assert_ne!(a.b, SpcaInstance::new(50, 40, 2, 0.6, 8).unwrap().b);
    }

    #[test]
    fn spca_objective_bounded_by_top_eigenvalues() {
        let inst = SpcaInstance::new(20, 15, 3, 0.0, 3).unwrap();
        let gram = inst.b.tr_mul(&inst.b);
        let mut ev: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let bound = -ev[..3].iter().sum::<f64>();
        let p = inst.into_problem().unwrap();
        for s in 0..10 {
            let mut rng = RngStream::new(s);
            let x = StiefelPoint::orthonormalize(&gaussian_matrix(&mut rng, 15, 3)).unwrap();
            assert!(objective(&p, x.value()).unwrap() >= bound - 1e-10);
        }
        assert_eq!(objective(&p, &DenseMatrix::zeros(15, 3)).unwrap(), 0.0);
    }

    #[test]
    fn sparsity_counts() {
        assert_eq!(sparsity(&DenseMatrix::zeros(3, 2), 1e-5).unwrap(), 1.0);
        assert_eq!(sparsity(&DenseMatrix::from_element(3, 2, 1.0), 1e-5).unwrap(), 0.0);
        let x = DenseMatrix::from_row_slice(2, 2, &[0.0, 1e-6, 0.5, -2e-5]);
        assert_eq!(sparsity(&x, 1e-5).unwrap(), 0.5);
        assert!(sparsity(&x, 0.0).is_err());
    }

    #[test]
    fn invalid_dimensions() {
        assert!(build_cms(3, 1, 0.1).is_err());
        assert!(build_cms(8, 9, 0.1).is_err());
        assert!(build_cms(8, 2, -0.1).is_err());
        assert!(build_spca(1, 10, 2, 0.1, 0).is_err());
        assert!(build_spca(10, 3, 4, 0.1, 0).is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = ProblemSpec::Spca { m: 50, n: 200, r: 2, mu: 0.6, seed: 4 };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"problem\":\"spca\""));
        let back: ProblemSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.build().unwrap().name(), "spca");
    }
}
