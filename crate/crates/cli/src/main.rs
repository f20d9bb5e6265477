use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ngnep::harness::{self, OutputFormat, ProblemSource, RunConfig, StartPoint, SweepGrid, RUN_HEADER};
use ngnep::library::{builtin, BUILTIN_NAMES};
use ngnep::{Algorithm, OuterConfig};

/// Solve monotone generalized Nash equilibrium problems with AMPQP or AMPAL.
#[derive(Parser)]
#[command(name = "ngnep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and print a row per repetition.
    Run(RunArgs),
    /// Solve one problem over a grid of settings.
    Sweep(SweepArgs),
    /// Write a built-in problem as a TOML problem file.
    Export {
        /// Built-in name.
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List built-in problems.
    List,
}

#[derive(Args)]
struct Common {
    /// `builtin:NAME` or a path to a TOML problem file.
    #[arg(long)]
    problem: String,
    /// Outer growth ratio (defaults to 4, or 2 for n >= 100).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long)]
    beta0: Option<f64>,
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_inner: Option<usize>,
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long)]
    outer_tol: Option<f64>,
    #[arg(long)]
    penalty_cap: Option<f64>,
    #[arg(long)]
    multiplier_cap: Option<f64>,
    /// Grow penalties every outer iteration.
    #[arg(long)]
    no_gating: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "ampal")]
    algo: String,
    /// Scalar fill value, `@FILE` with a vector, or `random`.
    #[arg(long, default_value = "0")]
    x0: String,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',', default_value = "ampal")]
    algos: Vec<String>,
    /// Comma-separated starting points. An empty list yields no rows.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    x0s: Vec<String>,
    /// Comma-separated growth ratios.
    #[arg(long, value_delimiter = ',')]
    gammas: Vec<f64>,
    /// Comma-separated outer tolerances.
    #[arg(long, value_delimiter = ',')]
    targets: Vec<f64>,
}

/// Bad input: exits with status 2.
#[derive(Debug)]
struct Usage(anyhow::Error);

fn usage<T, E: Into<anyhow::Error>>(r: std::result::Result<T, E>) -> std::result::Result<T, Usage> {
    r.map_err(|e| Usage(e.into()))
}

fn parse_start(s: &str) -> Result<StartPoint> {
    if s == "random" {
        return Ok(StartPoint::Random);
    }
    if let Some(path) = s.strip_prefix('@') {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read starting point {path}"))?;
        let x = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().with_context(|| format!("bad number `{t}` in {path}")))
            .collect::<Result<Vec<_>>>()?;
        return Ok(StartPoint::Vector(x));
    }
    let v: f64 = s.parse().with_context(|| format!("bad starting point `{s}`"))?;
    Ok(StartPoint::Fill(v))
}

fn outer_config(c: &Common, dim: usize) -> Result<OuterConfig> {
    let d = OuterConfig::for_dimension(dim);
    let config = OuterConfig {
        gamma: c.gamma.unwrap_or(d.gamma),
        delta0: c.delta0.unwrap_or(d.delta0),
        beta0: c.beta0.unwrap_or(d.beta0),
        rho0: c.rho0.unwrap_or(d.rho0),
        max_outer: c.max_outer.unwrap_or(d.max_outer),
        max_inner: c.max_inner.unwrap_or(d.max_inner),
        inner_tol: c.inner_tol.unwrap_or(d.inner_tol),
        outer_tol: c.outer_tol.unwrap_or(d.outer_tol),
        penalty_cap: c.penalty_cap.unwrap_or(d.penalty_cap),
        multiplier_cap: c.multiplier_cap.unwrap_or(d.multiplier_cap),
        adaptive_gating: !c.no_gating,
        ..d
    };
    config.validate()?;
    Ok(config)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(args: RunArgs) -> std::result::Result<(), Usage> {
    let c = &args.common;
    let format: OutputFormat = usage(c.format.parse())?;
    let source: ProblemSource = usage(c.problem.parse())?;
    let (_, problem) = usage(source.load())?;
    let config = RunConfig {
        algorithm: usage(args.algo.parse::<Algorithm>())?,
        outer: usage(outer_config(c, problem.dim()))?,
        start: usage(parse_start(&args.x0))?,
        repeat: args.repeat,
        seed: c.seed,
        source,
    };
    let rows = usage(harness::run(&config))?;
    for r in rows.iter().filter(|r| r.failed()) {
        log::warn!("{}: {}", r.example, r.termination);
    }
    let fields: Vec<_> = rows.iter().map(|r| r.fields()).collect();
    let out = usage(output(c.out.as_deref()))?;
    usage(harness::emit(out, format, &RUN_HEADER, &fields))
}

fn sweep(args: SweepArgs) -> std::result::Result<(), Usage> {
    let c = &args.common;
    let format: OutputFormat = usage(c.format.parse())?;
    let source: ProblemSource = usage(c.problem.parse())?;
    let (id, problem) = usage(source.load())?;
    let base = usage(outer_config(c, problem.dim()))?;
    let grid = SweepGrid {
        starts: usage(args.x0s.iter().filter(|s| !s.is_empty()).map(|s| parse_start(s)).collect::<Result<Vec<_>>>())?,
        gammas: if args.gammas.is_empty() { vec![base.gamma] } else { args.gammas.clone() },
        algorithms: usage(args.algos.iter().filter(|a| !a.is_empty()).map(|a| a.parse::<Algorithm>()).collect::<ngnep::Result<Vec<_>>>())?,
        targets: if args.targets.is_empty() { vec![base.outer_tol] } else { args.targets.clone() },
    };
    for g in &grid.gammas {
        usage(OuterConfig { gamma: *g, ..base.clone() }.validate())?;
    }
    for t in &grid.targets {
        usage(OuterConfig { outer_tol: *t, ..base.clone() }.validate())?;
    }
    let rows = usage(harness::sweep(&id, &problem, &base, &grid, c.seed))?;
    for r in &rows {
        if let Err(e) = &r.run {
            log::warn!("{} gamma={} target={}: {e}", r.algorithm, r.gamma, r.target);
        }
    }
    let fields: Vec<_> = rows.iter().map(|r| r.fields()).collect();
    let out = usage(output(c.out.as_deref()))?;
    usage(harness::emit(out, format, &harness::sweep_header(), &fields))
}

fn export(name: &str, out: Option<&Path>) -> std::result::Result<(), Usage> {
    let Some(spec) = builtin(name) else {
        return Err(Usage(anyhow::anyhow!(
            "unknown built-in `{name}` (known: {})",
            BUILTIN_NAMES.join(", ")
        )));
    };
    let text = usage(spec.to_problem_spec().and_then(|p| p.to_toml_string()))?;
    let mut w = usage(output(out))?;
    usage(w.write_all(text.as_bytes()).and_then(|_| w.flush()))
}

fn list() -> Result<()> {
    let mut out = io::stdout().lock();
    for name in BUILTIN_NAMES {
        writeln!(out, "{name}")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Export { name, out } => export(&name, out.as_deref()),
        Command::List => usage(list()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_points_parse() {
        assert_eq!(parse_start("random").unwrap(), StartPoint::Random);
        assert_eq!(parse_start("-1.5").unwrap(), StartPoint::Fill(-1.5));
        assert!(parse_start("abc").is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x0.txt");
        std::fs::write(&p, "1, 2\n3.5").unwrap();
        assert_eq!(
            parse_start(&format!("@{}", p.display())).unwrap(),
            StartPoint::Vector(vec![1.0, 2.0, 3.5])
        );
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
