use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{ExperimentRecord, SolverKind};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "problem,n,r,mu,solver,time,F,sp,m,best_seed,seeds,failed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Markdown,
    /// Full records, including per-seed cells.
    Json,
}

/// Formats `v` with `digits` significant digits (fixed notation for moderate magnitudes).
pub fn format_sig(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return "nan".to_string();
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-4..15).contains(&exp) {
        return format!("{:.*e}", digits.saturating_sub(1), v);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding can carry into a new leading digit (9.999995 -> 10.00000)
    let carried = s.trim_start_matches(['-', '0', '.']);
    if carried.chars().filter(|c| c.is_ascii_digit()).count() > digits && decimals > 0 {
        return format!("{v:.prec$}", prec = decimals - 1);
    }
    s
}

struct Row<'a> {
    record: &'a ExperimentRecord,
    solver: SolverKind,
}

impl Row<'_> {
    fn metrics(&self) -> (String, String, String, String, usize) {
        let agg = self.record.aggregate(self.solver);
        match agg.and_then(|a| a.best.as_ref().map(|b| (a, b))) {
            Some((a, b)) => (
                format_sig(a.mean_time, 6),
                format_sig(b.objective, 6),
                format_sig(b.sparsity, 6),
                a.best_seed.map(|s| s.to_string()).unwrap_or_default(),
                a.failed,
            ),
            None => ("nan".into(), "nan".into(), "nan".into(), String::new(), agg.map_or(0, |a| a.failed)),
        }
    }
}

fn rows(records: &[ExperimentRecord]) -> Vec<Row<'_>> {
    records
        .iter()
        .flat_map(|record| record.aggregates.iter().map(move |a| Row { record, solver: a.solver }))
        .collect()
}

fn m_field(record: &ExperimentRecord) -> String {
    match record.config.problem {
        super::ProblemKind::Spca => record.config.m.to_string(),
        super::ProblemKind::Cms => String::new(),
    }
}

fn emit_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows(records) {
        let c = &row.record.config;
        let (time, f, sp, best_seed, failed) = row.metrics();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            c.problem.as_str(),
            c.n,
            c.r,
            c.mu,
            row.solver.as_str(),
            time,
            f,
            sp,
            m_field(row.record),
            best_seed,
            c.seeds.len(),
            failed
        );
    }
    out
}

fn emit_markdown(records: &[ExperimentRecord]) -> String {
    let mut solvers: Vec<SolverKind> = Vec::new();
    for rec in records {
        for a in &rec.aggregates {
            if !solvers.contains(&a.solver) {
                solvers.push(a.solver);
            }
        }
    }
    let mut out = String::new();
    let seeds = records.iter().map(|r| r.config.seeds.len()).max().unwrap_or(0);
    let _ = writeln!(out, "F and sp: best objective over {seeds} seed(s); time: mean seconds per seed.\n");
    out.push_str("| problem | n | r | mu | m |");
    for s in &solvers {
        let _ = write!(out, " {0} time | {0} F | {0} sp |", s.as_str());
    }
    out.push_str("\n|---|---|---|---|---|");
    for _ in &solvers {
        out.push_str("---|---|---|");
    }
    out.push('\n');
    for rec in records {
        let c = &rec.config;
        let _ = write!(out, "| {} | {} | {} | {} | {} |", c.problem.as_str(), c.n, c.r, c.mu, m_field(rec));
        for &solver in &solvers {
            if rec.aggregate(solver).is_some() {
                let (time, f, sp, _, _) = Row { record: rec, solver }.metrics();
                let _ = write!(out, " {time} | {f} | {sp} |");
            } else {
                out.push_str(" | | |");
            }
        }
        out.push('\n');
    }
    out
}

/// One row per (sweep point, solver) with `time`, `F` and `sp` columns, or the raw records as JSON.
pub fn emit_table(records: &[ExperimentRecord], format: OutputFormat) -> Result<String> {
    if records.is_empty() {
        return Err(Error::config("no records to emit"));
    }
    Ok(match format {
        OutputFormat::Csv => emit_csv(records),
        OutputFormat::Markdown => emit_markdown(records),
        OutputFormat::Json => serde_json::to_string_pretty(records)? + "\n",
    })
}
