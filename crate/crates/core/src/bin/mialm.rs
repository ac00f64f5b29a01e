use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mialm::harness::{emit_table, run_checks, run_sweep, CheckSuite, OutputFormat, ProblemKind, SolverKind, SweepConfig};
use mialm::par::ExecMode;
use mialm::solvers::{initial_point, madmm_solve, mialm_solve, trace_to_csv};

#[derive(Parser)]
#[command(name = "mialm", version, about = "Augmented Lagrangian solvers on the Stiefel manifold")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run a seeded solver comparison and print a table.
    Run(RunArgs),
    /// Run a built-in verification suite.
    Check {
        #[arg(long, value_parser = parse_suite)]
        suite: Vec<CheckSuite>,
    },
    /// Print the per-iteration trace of a single solve as CSV.
    Trace(TraceArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_problem)]
    problem: Option<ProblemKind>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_solver)]
    solver: Option<Vec<SolverKind>>,
    /// Comma-separated seeds; `a-b` expands to an inclusive range.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<SeedList>,
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sparsity_threshold: Option<f64>,
    /// Stop MADMM once its objective reaches the MIALM result on the same seed.
    #[arg(long)]
    madmm_target_from_mialm: bool,
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    outer_tol: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    inner_max_iters: Option<usize>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long, value_parser = parse_problem, default_value = "cms")]
    problem: ProblemKind,
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    #[arg(long, default_value_t = 50)]
    m: usize,
    #[arg(long, value_parser = parse_solver, default_value = "mialm")]
    solver: SolverKind,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
struct SeedList(Vec<u64>);

fn parse_problem(s: &str) -> Result<ProblemKind, String> {
    match s {
        "cms" => Ok(ProblemKind::Cms),
        "spca" => Ok(ProblemKind::Spca),
        _ => Err(format!("unknown problem '{s}' (expected cms or spca)")),
    }
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    match s {
        "mialm" => Ok(SolverKind::Mialm),
        "madmm" => Ok(SolverKind::Madmm),
        _ => Err(format!("unknown solver '{s}' (expected mialm or madmm)")),
    }
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "markdown" | "md" => Ok(OutputFormat::Markdown),
        "json" => Ok(OutputFormat::Json),
        _ => Err(format!("unknown format '{s}' (expected csv, markdown or json)")),
    }
}

fn parse_suite(s: &str) -> Result<CheckSuite, String> {
    s.parse()
}

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    let mut seeds = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: u64 = a.parse().map_err(|e| format!("bad seed '{a}': {e}"))?;
                let b: u64 = b.parse().map_err(|e| format!("bad seed '{b}': {e}"))?;
                if a > b {
                    return Err(format!("empty seed range {part}"));
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|e| format!("bad seed '{part}': {e}"))?),
        }
    }
    Ok(SeedList(seeds))
}

fn sweep_from_args(args: &RunArgs) -> mialm::Result<SweepConfig> {
    let mut cfg = match &args.config {
        Some(path) => SweepConfig::from_file(path)?,
        None => SweepConfig::default(),
    };
    if let Some(p) = args.problem {
        cfg.problem = p;
    }
    if let Some(v) = &args.n {
        cfg.n = v.clone();
    }
    if let Some(v) = &args.r {
        cfg.r = v.clone();
    }
    if let Some(v) = &args.mu {
        cfg.mu = v.clone();
    }
    if let Some(m) = args.m {
        cfg.m = m;
    }
    if let Some(v) = &args.solver {
        cfg.solver = v.clone();
    }
    if let Some(SeedList(v)) = &args.seeds {
        cfg.seeds = v.clone();
    }
    if let Some(f) = args.format {
        cfg.format = f;
    }
    if let Some(t) = args.sparsity_threshold {
        cfg.sparsity_threshold = t;
    }
    if args.madmm_target_from_mialm {
        cfg.madmm_target_from_mialm = true;
    }
    if args.sequential {
        cfg.exec = ExecMode::Sequential;
    }
    let o = &mut cfg.overrides;
    o.rho0 = args.rho0.or(o.rho0);
    o.sigma = args.sigma.or(o.sigma);
    o.tau = args.tau.or(o.tau);
    o.outer_tol = args.outer_tol.or(o.outer_tol);
    o.max_outer = args.max_outer.or(o.max_outer);
    o.inner_max_iters = args.inner_max_iters.or(o.inner_max_iters);
    Ok(cfg)
}

fn write_output(text: &str, out: Option<&PathBuf>) -> mialm::Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(args: RunArgs) -> mialm::Result<()> {
    let sweep = sweep_from_args(&args)?;
    let points = sweep.expand();
    for p in &points {
        p.validate()?;
    }
    let (records, _) = run_sweep(&points)?;
    for rec in &records {
        for cell in &rec.cells {
            if let Err(msg) = &cell.outcome {
                eprintln!("warning: {} seed {} failed: {msg}", cell.solver.as_str(), cell.seed);
            }
        }
    }
    write_output(&emit_table(&records, sweep.format)?, args.out.as_ref())
}

fn trace(args: TraceArgs) -> mialm::Result<()> {
    let mut cfg = mialm::harness::ExperimentConfig::new(args.problem, args.n, args.r, args.mu);
    cfg.m = args.m;
    cfg.seeds = vec![args.seed];
    cfg.solvers = vec![args.solver];
    cfg.validate()?;
    let problem = cfg.build_problem(args.seed)?;
    let x0 = initial_point(args.n, args.r, args.seed)?;
    let res = match args.solver {
        SolverKind::Mialm => mialm_solve(&problem, &cfg.mialm_config(), &x0)?,
        SolverKind::Madmm => madmm_solve(&problem, &cfg.madmm_config(), &x0)?,
    };
    write_output(&trace_to_csv(&res.trace), args.out.as_ref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Trace(args) => trace(args),
        Command::Check { suite } => {
            let suites = if suite.is_empty() { CheckSuite::ALL.to_vec() } else { suite };
            let mut ok = true;
            for s in suites {
                let report = run_checks(s);
                print!("{report}");
                ok &= report.passed();
            }
            if !ok {
                return ExitCode::FAILURE;
            }
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
