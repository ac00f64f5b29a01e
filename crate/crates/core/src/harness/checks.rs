//! Built-in verification suites, runnable from the CLI with fixed seeds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::manifold::{retract_qr, riemannian_gradient, tangent_project, StiefelPoint};
use crate::numeric::{gaussian_matrix, DenseMatrix, RngStream};
use crate::problems::{build_cms, build_spca, objective, CompositeProblem};
use crate::prox::{moreau_gradient, moreau_value, L1Norm, ProxFn};
use crate::solvers::{initial_point, kkt_residual, mialm_solve, psi_euclid_grad, psi_value, MialmConfig};

const FD_REL_TOL: f64 = 1e-6;
const FD_POINTS: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckSuite {
    Gradients,
    Manifold,
    Prox,
    Oracle,
}

impl CheckSuite {
    pub const ALL: [CheckSuite; 4] = [CheckSuite::Gradients, CheckSuite::Manifold, CheckSuite::Prox, CheckSuite::Oracle];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckSuite::Gradients => "gradients",
            CheckSuite::Manifold => "manifold",
            CheckSuite::Prox => "prox",
            CheckSuite::Oracle => "oracle",
        }
    }
}

impl FromStr for CheckSuite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        CheckSuite::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown suite '{s}' (expected gradients, manifold, prox or oracle)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    /// Worst observed value against the threshold.
    pub observed: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub suite: CheckSuite,
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    fn push(&mut self, name: impl Into<String>, observed: f64, threshold: f64) {
        self.lines.push(CheckLine {
            name: name.into(),
            passed: observed <= threshold,
            observed,
            threshold,
        });
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(
                f,
                "[{}] {}/{}: {:.3e} (limit {:.1e})",
                if l.passed { "PASS" } else { "FAIL" },
                self.suite.as_str(),
                l.name,
                l.observed,
                l.threshold
            )?;
        }
        Ok(())
    }
}

pub fn run_checks(suite: CheckSuite) -> CheckReport {
    let mut report = CheckReport { suite, lines: Vec::new() };
    let outcome = match suite {
        CheckSuite::Gradients => gradients(&mut report),
        CheckSuite::Manifold => manifold(&mut report),
        CheckSuite::Prox => prox(&mut report),
        CheckSuite::Oracle => oracle(&mut report),
    };
    if let Err(e) = outcome {
        report.lines.push(CheckLine { name: format!("error: {e}"), passed: false, observed: f64::NAN, threshold: 0.0 });
    }
    report
}

fn random_point(seed: u64, n: usize, r: usize) -> crate::Result<StiefelPoint> {
    StiefelPoint::orthonormalize(&gaussian_matrix(&mut RngStream::with_stream(seed, 7), n, r))
}

/// Entrywise central differences of `f` at `x`.
pub(crate) fn central_differences(
    x: &DenseMatrix,
    step: f64,
    f: impl Fn(&DenseMatrix) -> crate::Result<f64>,
) -> crate::Result<DenseMatrix> {
    let mut fd = DenseMatrix::zeros(x.nrows(), x.ncols());
    let mut probe = x.clone();
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            let orig = probe[(i, j)];
            probe[(i, j)] = orig + step;
            let up = f(&probe)?;
            probe[(i, j)] = orig - step;
            let down = f(&probe)?;
            probe[(i, j)] = orig;
            fd[(i, j)] = (up - down) / (2.0 * step);
        }
    }
    Ok(fd)
}

fn rel_err(approx: &DenseMatrix, exact: &DenseMatrix) -> f64 {
    (approx - exact).norm() / exact.norm().max(1e-300)
}

fn gradient_problems() -> crate::Result<Vec<CompositeProblem>> {
    Ok(vec![build_cms(32, 3, 0.2)?, build_spca(12, 24, 2, 0.4, 5)?])
}

fn gradients(report: &mut CheckReport) -> crate::Result<()> {
    for p in gradient_problems()? {
        let mut worst_f: f64 = 0.0;
        let mut worst_psi: f64 = 0.0;
        let rho = p.default_rho0();
        for s in 0..FD_POINTS {
            let x = random_point(s, p.n(), p.r())?;
            let fd = central_differences(x.value(), 1e-6, |v| Ok(p.f_value(v)))?;
            worst_f = worst_f.max(rel_err(&fd, &p.f_grad(x.value())));

            let z_bar = gaussian_matrix(&mut RngStream::with_stream(s, 8), p.d(), p.r()) * p.mu();
            let fd = central_differences(x.value(), 1e-6, |v| psi_value(&p, rho, &z_bar, v))?;
            worst_psi = worst_psi.max(rel_err(&fd, &psi_euclid_grad(&p, rho, &z_bar, x.value())?));
        }
        report.push(format!("{} f_grad vs central differences", p.name()), worst_f, FD_REL_TOL);
        report.push(format!("{} psi gradient vs central differences", p.name()), worst_psi, FD_REL_TOL);
    }
    Ok(())
}

fn manifold(report: &mut CheckReport) -> crate::Result<()> {
    let (n, r) = (9, 3);
    let q = build_cms(n, r, 0.0)?;
    let (mut idem, mut ortho, mut retr, mut tangency, mut fd_worst) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for s in 0..FD_POINTS {
        let x = random_point(s, n, r)?;
        let v = gaussian_matrix(&mut RngStream::with_stream(s, 9), n, r);
        let pv = tangent_project(&x, &v)?;
        idem = idem.max((tangent_project(&x, pv.value())?.value() - pv.value()).norm());
        tangency = tangency.max(pv.tangency_residual(&x));
        let xi = tangent_project(&x, &gaussian_matrix(&mut RngStream::with_stream(s, 10), n, r))?;
        ortho = ortho.max((&v - pv.value()).dot(xi.value()).abs());
        retr = retr.max(retract_qr(&x, &xi.scaled(3.0))?.feasibility());

        // d/dt F(R_X(tξ)) at t = 0 against ⟨grad F, ξ⟩ for the smooth quadratic
        let t = 1e-6;
        let up = objective(&q, retract_qr(&x, &xi.scaled(t))?.value())?;
        let down = objective(&q, retract_qr(&x, &xi.scaled(-t))?.value())?;
        let fd = (up - down) / (2.0 * t);
        let exact = riemannian_gradient(&x, &q.f_grad(x.value()))?.value().dot(xi.value());
        fd_worst = fd_worst.max((fd - exact).abs() / exact.abs().max(1e-12));
    }
    report.push("projection idempotence", idem, 1e-12);
    report.push("projection output is tangent", tangency, 1e-10);
    report.push("projection residual orthogonal to tangent space", ortho, 1e-10);
    report.push("retraction lands on the manifold", retr, 1e-12);
    report.push("retraction curve derivative matches Riemannian gradient", fd_worst, FD_REL_TOL);
    Ok(())
}

fn prox(report: &mut CheckReport) -> crate::Result<()> {
    let g = L1Norm::new(0.7)?;
    let (mut lip, mut nonexp, mut opt_gap, mut upper) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for s in 0..FD_POINTS {
        let mu = 0.2 + 0.1 * s as f64;
        let u = gaussian_matrix(&mut RngStream::with_stream(s, 11), 4, 3);
        let v = gaussian_matrix(&mut RngStream::with_stream(s, 12), 4, 3);
        let duv = (&u - &v).norm();
        let dg = (moreau_gradient(&g, mu, &u)? - moreau_gradient(&g, mu, &v)?).norm();
        lip = lip.max(dg - duv / mu);
        nonexp = nonexp.max((g.prox(&u, mu)? - g.prox(&v, mu)?).norm() - duv);
        upper = upper.max(moreau_value(&g, mu, &v)? - g.value(&v));

        let w = g.prox(&v, mu)?;
        let model = |y: &DenseMatrix| g.value(y) + (y - &v).norm_squared() / (2.0 * mu);
        let base = model(&w);
        let mut rng = RngStream::with_stream(s, 13);
        for _ in 0..100 {
            let delta = gaussian_matrix(&mut rng, 4, 3) * 1e-3;
            opt_gap = opt_gap.max(base - model(&(&w + delta)));
        }
    }
    report.push("Moreau gradient is 1/mu-Lipschitz (excess)", lip.max(0.0), 1e-12);
    report.push("prox is nonexpansive (excess)", nonexp.max(0.0), 1e-12);
    report.push("prox beats random perturbations (excess)", opt_gap.max(0.0), 1e-12);
    report.push("envelope below g (excess)", upper.max(0.0), 1e-12);

    let mut grid_worst: f64 = 0.0;
    for &(w, mu, v) in &[(1.0, 1.0, 2.0), (0.3, 0.5, -0.1), (2.0, 0.25, 3.7), (0.7, 2.0, -4.2), (1.5, 0.8, 0.9)] {
        let g = L1Norm::new(w)?;
        let env = moreau_value(&g, mu, &DenseMatrix::from_element(1, 1, v))?;
        let grid = (0..=200_000)
            .map(|i| -10.0 + i as f64 * 1e-4)
            .map(|y| w * f64::abs(y) + (y - v).powi(2) / (2.0 * mu))
            .fold(f64::INFINITY, f64::min);
        grid_worst = grid_worst.max((env - grid).abs());
    }
    report.push("Moreau value vs grid minimization", grid_worst, 1e-6);
    Ok(())
}

/// MIALM settings for the unregularized case: with `g = 0` the first Y step
/// makes the constraint exact, so the single inner solve has to be tight.
pub fn smooth_oracle_config() -> MialmConfig {
    MialmConfig { eps0: 1e-6, eps_min: 1e-6, inner_max_iters: 100_000, ..MialmConfig::default() }
}

/// Sum of the `r` smallest eigenvalues of the periodic stencil, `(1 − cos(2πk/n))/h²`.
pub fn cms_smooth_optimum(n: usize, r: usize) -> f64 {
    let h = crate::problems::CMS_DOMAIN_LENGTH / n as f64;
    let mut ev: Vec<f64> = (0..n)
        .map(|k| (1.0 - (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()) / (h * h))
        .collect();
    ev.sort_by(f64::total_cmp);
    ev[..r].iter().sum()
}

fn oracle(report: &mut CheckReport) -> crate::Result<()> {
    for &(n, r) in &[(64, 2), (128, 3)] {
        let p = build_cms(n, r, 0.0)?;
        let res = mialm_solve(&p, &smooth_oracle_config(), &initial_point(n, r, 1)?)?;
        let target = cms_smooth_optimum(n, r);
        report.push(format!("mu=0 MIALM objective vs eigenvalue sum (n={n}, r={r})"), (res.objective - target).abs(), 1e-6);
        report.push(format!("mu=0 MIALM feasibility (n={n}, r={r})"), res.kkt.feasibility, 1e-6);
        let k = kkt_residual(&p, &res.x, &res.y, &res.z)?;
        report.push(format!("mu=0 KKT stationarity (n={n}, r={r})"), k.stationarity, 1e-5);
    }
    Ok(())
}
