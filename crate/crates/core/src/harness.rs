//! Experiment driver: problem ingestion, single runs, sweeps and report rows.
//!
//! Run rows use the columns
//! `example,N,n,x0,k,i_total,R_f,R_o,R_c,rho_max,termination`; a run that
//! hit a subproblem failure prints `F` in the `k` column and leaves the
//! residual columns empty. Sweep rows prepend `algo,gamma,target` and append
//! `n_grad`, the number of field evaluations.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rand::rngs::StdRng;
use rand::SeedableRng;
use rayon::prelude::*;

use crate::diagnostics::KktResiduals;
use crate::error::{Error, Result};
use crate::library::{build_instance, builtin, BUILTIN_NAMES};
use crate::model::NgnepProblem;
use crate::outer::{solve, Algorithm, OuterConfig, Termination};
use crate::problem_file::ProblemSpec;

pub const RUN_HEADER: [&str; 11] = [
    "example",
    "N",
    "n",
    "x0",
    "k",
    "i_total",
    "R_f",
    "R_o",
    "R_c",
    "rho_max",
    "termination",
];

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "NGNEP_THREADS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProblemSource {
    Builtin(String),
    File(PathBuf),
}

impl FromStr for ProblemSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("builtin:") {
            Some(name) if builtin(name).is_some() => Ok(ProblemSource::Builtin(name.to_string())),
            Some(name) => Err(Error::InvalidConfig(format!(
                "unknown built-in problem `{name}` (known: {})",
                BUILTIN_NAMES.join(", ")
            ))),
            None if s.is_empty() => Err(Error::InvalidConfig("empty problem source".into())),
            None => Ok(ProblemSource::File(PathBuf::from(s))),
        }
    }
}

impl fmt::Display for ProblemSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSource::Builtin(name) => write!(f, "builtin:{name}"),
            ProblemSource::File(path) => write!(f, "{}", path.display()),
        }
    }
}

impl ProblemSource {
    /// Example id and built problem.
    pub fn load(&self) -> Result<(String, NgnepProblem)> {
        match self {
            ProblemSource::Builtin(name) => {
                let spec = builtin(name).ok_or_else(|| Error::InvalidConfig(format!("unknown built-in `{name}`")))?;
                Ok((name.clone(), build_instance(&spec)?))
            }
            ProblemSource::File(path) => {
                let spec = ProblemSpec::load(path)?;
                let id = spec.name.clone().unwrap_or_else(|| {
                    path.file_stem()
                        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
                });
                Ok((id, spec.build()?))
            }
        }
    }
}

/// Starting-point rule.
#[derive(Debug, Clone, PartialEq)]
pub enum StartPoint {
    /// Every coordinate set to the value, then projected.
    Fill(f64),
    Vector(Vec<f64>),
    /// A sample from `X̂` drawn with the run seed.
    Random,
}

impl StartPoint {
    pub fn label(&self) -> String {
        match self {
            StartPoint::Fill(v) => v.to_string(),
            StartPoint::Vector(_) => "vector".into(),
            StartPoint::Random => "random".into(),
        }
    }

    pub fn materialize(&self, problem: &NgnepProblem, seed: u64) -> Result<Vec<f64>> {
        match self {
            StartPoint::Fill(v) if v.is_finite() => Ok(vec![*v; problem.dim()]),
            StartPoint::Fill(v) => Err(Error::InvalidConfig(format!("starting value {v} is not finite"))),
            StartPoint::Vector(x) => {
                if x.len() != problem.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: problem.dim(),
                        actual: x.len(),
                    });
                }
                if !x.iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidConfig("starting vector has non-finite entries".into()));
                }
                Ok(x.clone())
            }
            StartPoint::Random => Ok(problem.domain().sample(&mut StdRng::seed_from_u64(seed))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Table,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "table" => Ok(OutputFormat::Table),
            other => Err(Error::InvalidConfig(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: ProblemSource,
    pub algorithm: Algorithm,
    pub outer: OuterConfig,
    pub start: StartPoint,
    pub repeat: usize,
    pub seed: u64,
}

/// One report row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub example: String,
    pub players: usize,
    pub dim: usize,
    pub x0: String,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub residuals: KktResiduals,
    pub rho_max: f64,
    pub termination: Termination,
    pub field_evals: usize,
}

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

impl RunRow {
    pub fn failed(&self) -> bool {
        self.termination == Termination::SubproblemFailure
    }

    pub fn fields(&self) -> Vec<String> {
        let failed = self.failed();
        let res = |v: f64| if failed { String::new() } else { sci(v) };
        vec![
            self.example.clone(),
            self.players.to_string(),
            self.dim.to_string(),
            self.x0.clone(),
            if failed { "F".into() } else { self.outer_iters.to_string() },
            self.inner_iters_total.to_string(),
            res(self.residuals.r_f),
            res(self.residuals.r_o),
            res(self.residuals.r_c),
            sci(self.rho_max),
            self.termination.to_string(),
        ]
    }
}

/// Solves `problem` once and summarizes the outcome as a row.
pub fn run_problem(
    example: &str,
    problem: &NgnepProblem,
    algorithm: Algorithm,
    config: &OuterConfig,
    start: &StartPoint,
    seed: u64,
) -> Result<RunRow> {
    let x0 = start.materialize(problem, seed)?;
    let report = solve(problem, algorithm, config, &x0)?;
    Ok(RunRow {
        example: example.to_string(),
        players: problem.num_players(),
        dim: problem.dim(),
        x0: start.label(),
        outer_iters: report.outer_iters,
        inner_iters_total: report.inner_iters_total,
        residuals: report.final_residuals,
        rho_max: report.rho_max,
        termination: report.termination,
        field_evals: report.field_evals,
    })
}

/// Executes `config.repeat` runs (seeds `seed, seed + 1, …`).
pub fn run(config: &RunConfig) -> Result<Vec<RunRow>> {
    let (id, problem) = config.source.load()?;
    (0..config.repeat.max(1) as u64)
        .map(|r| run_problem(&id, &problem, config.algorithm, &config.outer, &config.start, config.seed + r))
        .collect()
}

/// Cartesian product of starting points, growth ratios, algorithms and
/// accuracy targets. Each target sets the outer tolerance.
#[derive(Debug, Clone, Default)]
pub struct SweepGrid {
    pub starts: Vec<StartPoint>,
    pub gammas: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepPoint {
    pub algorithm: Algorithm,
    pub start: usize,
    pub gamma: usize,
    pub target: usize,
}

impl SweepGrid {
    /// Grid points in output order: algorithm, start, gamma, target.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &algorithm in &self.algorithms {
            for start in 0..self.starts.len() {
                for gamma in 0..self.gammas.len() {
                    for target in 0..self.targets.len() {
                        out.push(SweepPoint {
                            algorithm,
                            start,
                            gamma,
                            target,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub target: f64,
    /// `Err` holds the message of a run that could not start.
    pub run: std::result::Result<RunRow, String>,
}

pub fn sweep_header() -> Vec<&'static str> {
    let mut h = vec!["algo", "gamma", "target"];
    h.extend(RUN_HEADER);
    h.push("n_grad");
    h
}

impl SweepRow {
    pub fn fields(&self) -> Vec<String> {
        let mut f = vec![self.algorithm.to_string(), self.gamma.to_string(), sci(self.target)];
        match &self.run {
            Ok(row) => {
                f.extend(row.fields());
                f.push(row.field_evals.to_string());
            }
            Err(msg) => {
                f.extend(std::iter::repeat_n(String::new(), RUN_HEADER.len() - 1));
                f.push(format!("error: {msg}"));
                f.push(String::new());
            }
        }
        f
    }
}

fn thread_limit() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.parse::<usize>().ok().filter(|n| *n > 0)
}

/// Runs every grid point (concurrently, capped by `NGNEP_THREADS`) and
/// returns rows in grid order.
pub fn sweep(example: &str, problem: &NgnepProblem, base: &OuterConfig, grid: &SweepGrid, seed: u64) -> Result<Vec<SweepRow>> {
    let points = grid.points();
    let task = |p: &SweepPoint| {
        let config = OuterConfig {
            gamma: grid.gammas[p.gamma],
            outer_tol: grid.targets[p.target],
            ..base.clone()
        };
        SweepRow {
            algorithm: p.algorithm,
            gamma: config.gamma,
            target: config.outer_tol,
            run: run_problem(example, problem, p.algorithm, &config, &grid.starts[p.start], seed).map_err(|e| e.to_string()),
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_limit() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| points.par_iter().map(task).collect()))
}

/// Writes a header and rows as CSV.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidConfig(format!("cannot write CSV: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidConfig(format!("cannot write CSV: {e}")))
}

/// Aligned plain-text rendering of the same rows.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        s.push('\n');
        s
    };
    let mut out = line(header.to_vec());
    out.push_str(&line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

pub fn emit<W: Write>(mut out: W, format: OutputFormat, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(out, header, rows),
        OutputFormat::Table => out
            .write_all(render_table(header, rows).as_bytes())
            .map_err(|e| Error::InvalidConfig(format!("cannot write output: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_string(header: &[&str], rows: &[Vec<String>]) -> String {
        let mut buf = Vec::new();
        write_csv(&mut buf, header, rows).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn sources_parse() {
        assert_eq!(
            "builtin:cournot-active".parse::<ProblemSource>().unwrap(),
            ProblemSource::Builtin("cournot-active".into())
        );
        assert!("builtin:nope".parse::<ProblemSource>().is_err());
        assert_eq!(
            "p.toml".parse::<ProblemSource>().unwrap(),
            ProblemSource::File(PathBuf::from("p.toml"))
        );
    }

    #[test]
    fn zero_outer_budget_row() {
        let (id, p) = ProblemSource::Builtin("cournot-active".into()).load().unwrap();
        let config = OuterConfig {
            max_outer: 0,
            ..OuterConfig::default()
        };
        let row = run_problem(&id, &p, Algorithm::Ampal, &config, &StartPoint::Fill(1.0), 0).unwrap();
        let f = row.fields();
        assert_eq!(f[4], "0");
        assert_eq!(f[5], "0");
        assert_eq!(f.len(), RUN_HEADER.len());
        assert_eq!(row.termination, Termination::OuterBudget);
    }

    #[test]
    fn empty_grid_is_header_only() {
        let (id, p) = ProblemSource::Builtin("cournot-active".into()).load().unwrap();
        let rows = sweep(&id, &p, &OuterConfig::default(), &SweepGrid::default(), 0).unwrap();
        assert!(rows.is_empty());
        let text = csv_string(&sweep_header(), &[]);
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("algo,gamma,target,example,N,n,x0,k,i_total,R_f,R_o,R_c,rho_max,termination,n_grad"));
    }

    #[test]
    fn sweep_counts_and_order() {
        let (id, p) = ProblemSource::Builtin("cournot-active".into()).load().unwrap();
        let grid = SweepGrid {
            starts: vec![StartPoint::Fill(0.01), StartPoint::Fill(0.1), StartPoint::Fill(1.0)],
            gammas: vec![4.0],
            algorithms: vec![Algorithm::Ampal],
            targets: vec![1e-4],
        };
        let rows = sweep(&id, &p, &OuterConfig::default(), &grid, 0).unwrap();
        let labels: Vec<_> = rows.iter().map(|r| r.run.as_ref().unwrap().x0.clone()).collect();
        assert_eq!(labels, vec!["0.01", "0.1", "1"]);
    }

    #[test]
    fn table_aligns_columns() {
        let t = render_table(&["a", "bbb"], &[vec!["123".into(), "x".into()]]);
        let lines: Vec<_> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].len(), lines[2].len());
    }

    #[test]
    fn start_points() {
        let (_, p) = ProblemSource::Builtin("cournot-active".into()).load().unwrap();
        assert_eq!(StartPoint::Fill(0.5).materialize(&p, 0).unwrap(), vec![0.5, 0.5]);
        assert!(StartPoint::Fill(f64::NAN).materialize(&p, 0).is_err());
        assert!(StartPoint::Vector(vec![1.0]).materialize(&p, 0).is_err());
        let a = StartPoint::Random.materialize(&p, 7).unwrap();
        assert_eq!(a, StartPoint::Random.materialize(&p, 7).unwrap());
        assert!(p.domain().contains(&a, 0.0));
    }
}
