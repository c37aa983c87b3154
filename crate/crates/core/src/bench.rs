//! Benchmark runner over the problem catalog and its report formats.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problems::{self, ProblemSpec};
use crate::solver::{solve, SolveStatus, SolverConfig};

pub const CSV_HEADER: [&str; 6] = [
    "problem",
    "gamma",
    "status",
    "iterations",
    "time_s",
    "residual_inf",
];

/// One `(problem, gamma)` run. Numeric fields are `None` for failed runs.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub problem_id: String,
    /// The gamma actually used, after any per-problem override.
    pub gamma: f64,
    pub status: SolveStatus,
    pub iterations: Option<usize>,
    pub wall_time_seconds: Option<f64>,
    pub final_residual_inf: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOptions {
    /// Replace gammas that are known to be degenerate for a problem.
    pub apply_gamma_overrides: bool,
    /// Use finite-difference Jacobians even where an analytic one exists.
    pub finite_differences: bool,
    pub parallel: bool,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            apply_gamma_overrides: true,
            finite_differences: true,
            parallel: true,
        }
    }
}

pub enum Selection<'a> {
    All,
    Ids(&'a [String]),
}

pub fn select(selection: Selection<'_>) -> Result<Vec<&'static ProblemSpec>> {
    match selection {
        Selection::All => Ok(problems::registry().iter().collect()),
        Selection::Ids(ids) => ids.iter().map(|id| problems::find(id)).collect(),
    }
}

pub fn run_one(
    problem: &ProblemSpec,
    gamma: f64,
    config: &SolverConfig,
    options: &BenchmarkOptions,
) -> Result<BenchmarkRow> {
    let gamma = if options.apply_gamma_overrides {
        problem.effective_gamma(gamma)
    } else {
        gamma
    };
    let x0 = problem.initial_point(gamma)?;
    let system = if options.finite_differences {
        problem.system.without_jacobian()
    } else {
        problem.system.clone()
    };
    let report = solve(&system, &problem.feasible_set(), &x0, config)?;
    let ok = report.status.is_success();
    Ok(BenchmarkRow {
        problem_id: problem.id.clone(),
        gamma,
        status: report.status,
        iterations: ok.then_some(report.iterations),
        wall_time_seconds: ok.then_some(report.wall_time),
        final_residual_inf: ok.then_some(report.final_residual_inf),
    })
}

/// Runs every `(problem, gamma)` cell. Rows come back ordered by catalog
/// position and then by the order of `gammas`, whatever the execution order.
pub fn run_benchmark(
    selection: Selection<'_>,
    gammas: &[f64],
    config: &SolverConfig,
    options: &BenchmarkOptions,
) -> Result<Vec<BenchmarkRow>> {
    config.validate()?;
    let mut chosen = select(selection)?;
    let order = |p: &ProblemSpec| {
        problems::registry()
            .iter()
            .position(|q| q.id == p.id)
            .unwrap_or(usize::MAX)
    };
    chosen.sort_by_key(|p| order(p));
    chosen.dedup_by_key(|p| p.id.clone());

    let cells: Vec<(&ProblemSpec, f64)> = chosen
        .iter()
        .flat_map(|&p| gammas.iter().map(move |&g| (p, g)))
        .collect();
    if options.parallel {
        cells
            .par_iter()
            .map(|&(p, g)| run_one(p, g, config, options))
            .collect()
    } else {
        cells
            .iter()
            .map(|&(p, g)| run_one(p, g, config, options))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Self::Table),
            "csv" => Ok(Self::Csv),
            other => Err(Error::InvalidConfig(format!("unknown format `{other}`"))),
        }
    }
}

fn sci(v: f64) -> String {
    format!("{v:.1e}")
}

pub fn emit(rows: &[BenchmarkRow], format: Format) -> String {
    match format {
        Format::Csv => emit_csv(rows),
        Format::Table => emit_table(rows),
    }
}

fn emit_csv(rows: &[BenchmarkRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.problem_id.clone(),
            r.gamma.to_string(),
            r.status.to_string(),
            r.iterations.map(|i| i.to_string()).unwrap_or_default(),
            r.wall_time_seconds.map(sci).unwrap_or_default(),
            r.final_residual_inf.map(sci).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

fn emit_table(rows: &[BenchmarkRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:>5} {:>6} {:>9} {:>9}  Status",
        "Problem", "gamma", "Iter", "Time", "|F|inf"
    );
    for r in rows {
        let iter = r
            .iterations
            .map_or_else(|| "∗".to_string(), |i| i.to_string());
        let _ = writeln!(
            out,
            "{:<8} {:>5} {:>6} {:>9} {:>9}  {}",
            r.problem_id,
            r.gamma,
            iter,
            r.wall_time_seconds.map(sci).unwrap_or_default(),
            r.final_residual_inf.map(sci).unwrap_or_default(),
            r.status
        );
    }
    out
}

/// Parses the CSV produced by [`emit`].
pub fn parse_csv(text: &str) -> Result<Vec<BenchmarkRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Csv(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Csv(format!("unexpected header {header:?}")));
    }
    let num = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| Error::Csv(format!("bad number `{s}`")))
        }
    };
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            Ok(BenchmarkRow {
                problem_id: field(0).to_string(),
                gamma: num(field(1))?.ok_or_else(|| Error::Csv("missing gamma".into()))?,
                status: field(2).parse()?,
                iterations: if field(3).is_empty() {
                    None
                } else {
                    Some(
                        field(3)
                            .parse()
                            .map_err(|_| Error::Csv(format!("bad count `{}`", field(3))))?,
                    )
                },
                wall_time_seconds: num(field(4))?,
                final_residual_inf: num(field(5))?,
            })
        })
        .collect()
}
