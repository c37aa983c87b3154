use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use newton_condg::bench::{self, BenchmarkOptions, Format, Selection};
use newton_condg::majorant::MajorantModel;
use newton_condg::problems;
use newton_condg::{SolverConfig, ThetaSchedule};

/// Newton conditional-gradient benchmark runner and radius calculator.
#[derive(Debug, Parser)]
#[command(name = "ncg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the solver over catalog problems and report one row per (problem, gamma).
    Bench(BenchArgs),
    /// Convergence radii for a Hölder or Smale majorant.
    Radius(RadiusArgs),
    /// List the registered problems.
    List,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Comma-separated problem ids, or `all`.
    #[arg(long, default_value = "all")]
    problems: String,
    /// Initial-point parameters; x0 = l + 0.25 gamma (u - l).
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    gamma: Vec<f64>,
    /// Constant CondG accuracy parameter theta_k.
    #[arg(long, default_value_t = 1e-5)]
    theta: f64,
    /// Residual tolerance on ||F(x)||_inf.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Outer iteration cap.
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
    /// CondG inner iteration cap.
    #[arg(long, default_value_t = 300)]
    condg_max_iter: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Use the shipped analytic Jacobians instead of finite differences.
    #[arg(long)]
    analytic_jacobian: bool,
    /// Run the requested gammas verbatim, even where a problem overrides them.
    #[arg(long)]
    no_gamma_overrides: bool,
    /// Run cells one at a time.
    #[arg(long)]
    serial: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Table,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Holder,
    Smale,
}

#[derive(Debug, Args)]
struct RadiusArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Hölder constant K.
    #[arg(long = "K", required_if_eq("family", "holder"))]
    k: Option<f64>,
    /// Hölder exponent p in (0, 1].
    #[arg(long, required_if_eq("family", "holder"))]
    p: Option<f64>,
    /// Smale constant gamma.
    #[arg(long, required_if_eq("family", "smale"))]
    gamma_smale: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Domain radius around the root; `inf` when unconstrained.
    #[arg(long, default_value_t = f64::INFINITY)]
    kappa: f64,
}

fn run_bench(args: BenchArgs) -> Result<bool, String> {
    let config = SolverConfig {
        theta: ThetaSchedule::Constant(args.theta),
        residual_tol: args.tol,
        max_outer: args.max_iter,
        condg_max_inner: args.condg_max_iter,
        ..SolverConfig::default()
    };
    let options = BenchmarkOptions {
        apply_gamma_overrides: !args.no_gamma_overrides,
        finite_differences: !args.analytic_jacobian,
        parallel: !args.serial,
    };
    let ids: Vec<String> = args
        .problems
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    let selection = if ids.is_empty() || ids.iter().any(|s| s.eq_ignore_ascii_case("all")) {
        Selection::All
    } else {
        Selection::Ids(&ids)
    };
    let rows = bench::run_benchmark(selection, &args.gamma, &config, &options)
        .map_err(|e| e.to_string())?;
    let format = match args.format {
        OutputFormat::Table => Format::Table,
        OutputFormat::Csv => Format::Csv,
    };
    let text = bench::emit(&rows, format);
    match args.output {
        Some(path) => fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(rows.iter().all(|r| r.status.is_success()))
}

fn run_radius(args: RadiusArgs) -> Result<(), String> {
    let model = match args.family {
        Family::Holder => {
            MajorantModel::holder(args.k.unwrap_or(f64::NAN), args.p.unwrap_or(f64::NAN))
        }
        Family::Smale => MajorantModel::smale(args.gamma_smale.unwrap_or(f64::NAN)),
    }
    .map_err(|e| e.to_string())?;
    let b = model
        .radius(args.lambda, args.kappa)
        .map_err(|e| e.to_string())?;
    println!("nu     = {:.12e}", b.nu);
    println!("rho    = {:.12e}", b.rho);
    println!("r      = {:.12e}", b.r);
    println!("lambda = {}", b.lambda);
    println!("kappa  = {}", b.kappa);
    println!("theta_max = {:e}", b.lambda * b.lambda / 2.0);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Bench(args) => match run_bench(args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(2),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Radius(args) => match run_radius(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::List => {
            for p in problems::registry() {
                println!("{:<6} n={:<4} {}  [{}]", p.id, p.n, p.name, p.source);
            }
            ExitCode::SUCCESS
        }
    }
}
