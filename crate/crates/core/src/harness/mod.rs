//! Experiment runner: seeded solver comparisons on the benchmark problems,
//! table emission, and the built-in verification suites.

mod checks;
mod table;

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize};

pub use checks::{run_checks, smooth_oracle_config, CheckLine, CheckReport, CheckSuite};
pub use table::{emit_table, format_sig, OutputFormat, CSV_HEADER};

use crate::error::{Error, Result};
use crate::par::{map_ordered, ExecMode};
use crate::problems::{build_cms, build_spca, CompositeProblem, ProblemSpec, DEFAULT_SPARSITY_THRESHOLD};
use crate::solvers::{
    initial_point, madmm_solve, mialm_solve, KktResidual, MadmmConfig, MialmConfig, SolveResult, Termination,
};

/// Offset added to the MIALM objective when MADMM stops on the cross-solver criterion.
pub const CROSS_SOLVER_MARGIN: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Cms,
    Spca,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Cms => "cms",
            ProblemKind::Spca => "spca",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Mialm,
    Madmm,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Mialm => "mialm",
            SolverKind::Madmm => "madmm",
        }
    }
}

/// Optional overrides applied on top of the per-problem solver defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub rho0: Option<f64>,
    pub sigma: Option<f64>,
    pub tau: Option<f64>,
    pub outer_tol: Option<f64>,
    pub max_outer: Option<usize>,
    pub inner_max_iters: Option<usize>,
    pub eps0: Option<f64>,
    pub eps_min: Option<f64>,
    pub madmm_inner_tol: Option<f64>,
}

/// One point of a sweep: a single problem shape run over several seeds and solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub n: usize,
    pub r: usize,
    pub mu: f64,
    /// Sample count for sparse PCA; ignored for compressed modes.
    pub m: usize,
    pub solvers: Vec<SolverKind>,
    pub seeds: Vec<u64>,
    pub overrides: Overrides,
    pub sparsity_threshold: f64,
    /// Stop MADMM once `F <= F_MIALM + 1e-7` on the same seed.
    pub madmm_target_from_mialm: bool,
    pub exec: ExecMode,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemKind, n: usize, r: usize, mu: f64) -> Self {
        Self {
            problem,
            n,
            r,
            mu,
            m: 50,
            solvers: vec![SolverKind::Mialm, SolverKind::Madmm],
            seeds: (1..=5).collect(),
            overrides: Overrides::default(),
            sparsity_threshold: DEFAULT_SPARSITY_THRESHOLD,
            madmm_target_from_mialm: false,
            exec: ExecMode::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::config("at least one solver is required"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if !(self.sparsity_threshold > 0.0) {
            return Err(Error::config("sparsity threshold must be > 0"));
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::config(format!("mu must be >= 0, got {}", self.mu)));
        }
        if self.r == 0 || self.r > self.n {
            return Err(Error::config(format!("need 1 <= r <= n, got n={}, r={}", self.n, self.r)));
        }
        match self.problem {
            ProblemKind::Cms if self.n < 4 => return Err(Error::config("compressed modes needs n >= 4")),
            ProblemKind::Spca if self.m < 2 => return Err(Error::config("sparse PCA needs m >= 2")),
            _ => {}
        }
        self.mialm_config().validate()?;
        self.madmm_config().validate()
    }

    fn default_outer_tol(&self) -> f64 {
        match self.problem {
            ProblemKind::Cms => 1e-9,
            ProblemKind::Spca => 1e-8,
        }
    }

    pub fn mialm_config(&self) -> MialmConfig {
        let o = &self.overrides;
        let d = MialmConfig::default();
        MialmConfig {
            rho0: o.rho0,
            sigma: o.sigma.unwrap_or(d.sigma),
            tau: o.tau.unwrap_or(d.tau),
            eps0: o.eps0.unwrap_or(d.eps0),
            eps_min: o.eps_min.unwrap_or(d.eps_min),
            max_outer: o.max_outer.unwrap_or(d.max_outer),
            outer_tol: o.outer_tol.unwrap_or(self.default_outer_tol()),
            inner_max_iters: o.inner_max_iters.unwrap_or(d.inner_max_iters),
            sparsity_threshold: self.sparsity_threshold,
            ..d
        }
    }

    pub fn madmm_config(&self) -> MadmmConfig {
        let o = &self.overrides;
        let d = MadmmConfig::default();
        MadmmConfig {
            beta: o.rho0,
            inner_tol: o.madmm_inner_tol.unwrap_or(d.inner_tol),
            inner_max_iters: o.inner_max_iters.unwrap_or(d.inner_max_iters),
            max_outer: o.max_outer.unwrap_or(d.max_outer),
            outer_tol: o.outer_tol.unwrap_or(self.default_outer_tol()),
            sparsity_threshold: self.sparsity_threshold,
            ..d
        }
    }

    /// Problem instance for `seed`; only sparse PCA data depends on the seed.
    pub fn build_problem(&self, seed: u64) -> Result<CompositeProblem> {
        match self.problem {
            ProblemKind::Cms => build_cms(self.n, self.r, self.mu),
            ProblemKind::Spca => build_spca(self.m, self.n, self.r, self.mu, seed),
        }
    }

    pub fn problem_spec(&self, seed: u64) -> ProblemSpec {
        match self.problem {
            ProblemKind::Cms => ProblemSpec::Cms { n: self.n, r: self.r, mu: self.mu },
            ProblemKind::Spca => ProblemSpec::Spca { m: self.m, n: self.n, r: self.r, mu: self.mu, seed },
        }
    }
}

/// Scalar-or-list field, so config files may write `"mu": 0.1` or `"mu": [0.1, 0.2]`.
fn one_or_many<'de, D, T>(de: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

/// Flat config document; list-valued `n`, `r`, `mu` expand into a Cartesian sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub problem: ProblemKind,
    #[serde(deserialize_with = "one_or_many")]
    pub n: Vec<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub r: Vec<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub mu: Vec<f64>,
    pub m: usize,
    #[serde(deserialize_with = "one_or_many")]
    pub solver: Vec<SolverKind>,
    #[serde(deserialize_with = "one_or_many")]
    pub seeds: Vec<u64>,
    pub format: OutputFormat,
    pub sparsity_threshold: f64,
    pub madmm_target_from_mialm: bool,
    pub exec: ExecMode,
    #[serde(flatten)]
    pub overrides: Overrides,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Cms,
            n: vec![128],
            r: vec![2],
            mu: vec![0.1],
            m: 50,
            solver: vec![SolverKind::Mialm, SolverKind::Madmm],
            seeds: (1..=5).collect(),
            format: OutputFormat::Csv,
            sparsity_threshold: DEFAULT_SPARSITY_THRESHOLD,
            madmm_target_from_mialm: false,
            exec: ExecMode::default(),
            overrides: Overrides::default(),
        }
    }
}

impl SweepConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Sweep points in `n`-major, then `r`, then `mu` order.
    pub fn expand(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &n in &self.n {
            for &r in &self.r {
                for &mu in &self.mu {
                    out.push(ExperimentConfig {
                        problem: self.problem,
                        n,
                        r,
                        mu,
                        m: self.m,
                        solvers: self.solver.clone(),
                        seeds: self.seeds.clone(),
                        overrides: self.overrides.clone(),
                        sparsity_threshold: self.sparsity_threshold,
                        madmm_target_from_mialm: self.madmm_target_from_mialm,
                        exec: self.exec,
                    });
                }
            }
        }
        out
    }
}

/// Metrics of one (solver, seed) solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub objective: f64,
    pub sparsity: f64,
    pub time: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub termination: Termination,
    pub kkt: KktResidual,
    pub stiefel_feasibility: f64,
}

impl CellSummary {
    fn from_result(res: &SolveResult) -> Self {
        Self {
            objective: res.objective,
            sparsity: res.sparsity,
            time: res.wall_time,
            outer_iters: res.outer_iters,
            inner_iters: res.inner_iter_total,
            termination: res.termination,
            kkt: res.kkt,
            stiefel_feasibility: res.x.feasibility(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub seed: u64,
    pub solver: SolverKind,
    /// Error message when the solve failed.
    pub outcome: std::result::Result<CellSummary, String>,
}

/// Best-objective seed and mean time over the successful seeds of one solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverAggregate {
    pub solver: SolverKind,
    pub best_seed: Option<u64>,
    pub best: Option<CellSummary>,
    pub mean_time: f64,
    pub succeeded: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub config: ExperimentConfig,
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<SolverAggregate>,
}

impl ExperimentRecord {
    pub fn aggregate(&self, solver: SolverKind) -> Option<&SolverAggregate> {
        self.aggregates.iter().find(|a| a.solver == solver)
    }

    pub fn cell(&self, solver: SolverKind, seed: u64) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.solver == solver && c.seed == seed)
    }
}

fn run_seed(cfg: &ExperimentConfig, shared: Option<&CompositeProblem>, seed: u64) -> Vec<CellResult> {
    let owned;
    let problem = match shared {
        Some(p) => p,
        None => match cfg.build_problem(seed) {
            Ok(p) => {
                owned = p;
                &owned
            }
            Err(e) => {
                let msg = e.to_string();
                return cfg
                    .solvers
                    .iter()
                    .map(|&solver| CellResult { seed, solver, outcome: Err(msg.clone()) })
                    .collect();
            }
        },
    };
    let x0 = match initial_point(cfg.n, cfg.r, seed) {
        Ok(x) => x,
        Err(e) => {
            let msg = e.to_string();
            return cfg.solvers.iter().map(|&solver| CellResult { seed, solver, outcome: Err(msg.clone()) }).collect();
        }
    };

    let mut mialm_objective = None;
    let mut cells = Vec::with_capacity(cfg.solvers.len());
    for &solver in &cfg.solvers {
        let outcome = match solver {
            SolverKind::Mialm => mialm_solve(problem, &cfg.mialm_config(), &x0).inspect(|res| {
                mialm_objective = Some(res.objective);
            }),
            SolverKind::Madmm => {
                let mut mc = cfg.madmm_config();
                if cfg.madmm_target_from_mialm {
                    mc.target_objective = mialm_objective.map(|f| f + CROSS_SOLVER_MARGIN);
                }
                madmm_solve(problem, &mc, &x0)
            }
        };
        cells.push(CellResult {
            seed,
            solver,
            outcome: outcome.map(|r| CellSummary::from_result(&r)).map_err(|e| e.to_string()),
        });
    }
    cells
}

fn aggregate(cfg: &ExperimentConfig, cells: &[CellResult]) -> Vec<SolverAggregate> {
    let mut solvers = cfg.solvers.clone();
    solvers.dedup();
    solvers
        .into_iter()
        .map(|solver| {
            let mut best: Option<(u64, &CellSummary)> = None;
            let mut time_sum = 0.0;
            let (mut ok, mut failed) = (0, 0);
            for cell in cells.iter().filter(|c| c.solver == solver) {
                match &cell.outcome {
                    Ok(s) => {
                        ok += 1;
                        time_sum += s.time;
                        if best.is_none_or(|(_, b)| s.objective < b.objective) {
                            best = Some((cell.seed, s));
                        }
                    }
                    Err(_) => failed += 1,
                }
            }
            SolverAggregate {
                solver,
                best_seed: best.map(|(s, _)| s),
                best: best.map(|(_, b)| b.clone()),
                mean_time: if ok > 0 { time_sum / ok as f64 } else { f64::NAN },
                succeeded: ok,
                failed,
            }
        })
        .collect()
}

/// Runs every requested solver from a shared seeded start for each seed.
///
/// Seeds run concurrently under [`ExecMode::Parallel`]; per-cell failures are
/// recorded and do not abort the run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    cfg.validate()?;
    let shared = match cfg.problem {
        ProblemKind::Cms => Some(cfg.build_problem(0)?),
        ProblemKind::Spca => None,
    };
    let per_seed = map_ordered(cfg.seeds.clone(), cfg.exec, |seed| run_seed(cfg, shared.as_ref(), seed));
    let cells: Vec<CellResult> = per_seed.into_iter().flatten().collect();
    let aggregates = aggregate(cfg, &cells);
    Ok(ExperimentRecord { config: cfg.clone(), cells, aggregates })
}

/// Runs every point of a sweep in order, returning the records and total wall time.
pub fn run_sweep(configs: &[ExperimentConfig]) -> Result<(Vec<ExperimentRecord>, f64)> {
    let start = Instant::now();
    let records = configs.iter().map(run_experiment).collect::<Result<Vec<_>>>()?;
    Ok((records, start.elapsed().as_secs_f64()))
}
