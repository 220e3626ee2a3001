use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use noisytree_core::harness::{
    compare_boosting, estimate_error, hdreduce_trace, ExperimentConfig, InputDistribution, ReportFormat, Variant,
};
use noisytree_core::hdreduction::{ReductionMode, ScheduleFlavor};
use noisytree_core::querysets::{is_blocky, nand_embed, vc_dimension};
use noisytree_core::{Error, ProblemMatrix};

#[derive(Parser)]
#[command(name = "noisytree", version, about = "Noisy-tree boosting and Hamming-distance reduction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error and cost of the noisy-tree walk on a workload.
    Noisytree(TreeArgs),
    /// The HD_k reduction.
    Hdreduce(ReduceArgs),
    /// Naive per-query boosting against the noisy-tree walk.
    Compare(TreeArgs),
    /// Is a grid matrix an Equality query matrix?
    Blocky { file: PathBuf },
    /// VC dimension of a grid matrix.
    Vc { file: PathBuf },
    /// Embed a square grid matrix into a conjunction of NANDs.
    Embed { file: PathBuf },
    /// A standalone subprotocol.
    Subproto(SubprotoArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// uniform, worst-case or dist:D
    #[arg(long, default_value = "worst-case")]
    dist: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TreeArgs {
    /// adj-tree, gt, hd1-bsearch or hd1-tensor
    #[arg(long)]
    workload: String,
    #[arg(long = "c-const", default_value_t = 6.0)]
    c_const: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long, value_enum, default_value_t = Schedule::T5)]
    schedule: Schedule,
    #[arg(long, value_enum, default_value_t = Mode::Rand)]
    mode: Mode,
    /// Write the first trial's iterations here as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SubprotoArgs {
    /// eq, hd1 or hd-small
    #[arg(long)]
    proto: String,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Schedule {
    T2,
    T5,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Rand,
    Oracle,
}

enum Failure {
    Config(String),
    Invariant(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invariant(m) => Failure::Invariant(m),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn config_for(workload: &str, variant: Variant, c: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::new(workload, variant, c.n, c.k);
    cfg.delta = c.delta;
    cfg.trials = c.trials;
    cfg.seed = c.seed;
    cfg.distribution = c.dist.parse::<InputDistribution>()?;
    Ok(cfg)
}

fn format_of(c: &Common) -> ReportFormat {
    match c.format {
        Format::Csv => ReportFormat::Csv,
        Format::Json => ReportFormat::Json,
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_violations(violations: u64, examples: &[String]) -> Result<(), Failure> {
    if violations == 0 {
        return Ok(());
    }
    Err(Failure::Invariant(format!(
        "{violations} invariant violations; first: {}",
        examples.first().map(String::as_str).unwrap_or("?")
    )))
}

fn read_grid(path: &Path) -> Result<ProblemMatrix<bool>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(ProblemMatrix::parse_grid(&text)?)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Noisytree(a) => {
            let mut cfg = config_for(&a.workload, Variant::Noisy, &a.common)?;
            cfg.c = a.c_const;
            let report = estimate_error(&cfg)?;
            eprintln!("wall clock: {:.3}s", report.wall_clock.as_secs_f64());
            emit(&report.render(format_of(&a.common))?, a.common.out.as_deref())?;
            check_violations(report.violations, &report.violation_examples)
        }
        Command::Compare(a) => {
            let mut cfg = config_for(&a.workload, Variant::Noisy, &a.common)?;
            cfg.c = a.c_const;
            let report = compare_boosting(&cfg)?;
            eprintln!("wall clock: {:.3}s", report.wall_clock.as_secs_f64());
            emit(&report.render(format_of(&a.common))?, a.common.out.as_deref())?;
            check_violations(report.naive.violations, &report.naive.violation_examples)?;
            check_violations(report.noisy.violations, &report.noisy.violation_examples)
        }
        Command::Hdreduce(a) => {
            let mut cfg = config_for("hdk", Variant::Hdreduce, &a.common)?;
            cfg.schedule = match a.schedule {
                Schedule::T2 => ScheduleFlavor::Theorem2,
                Schedule::T5 => ScheduleFlavor::Theorem5,
            };
            cfg.mode = match a.mode {
                Mode::Rand => ReductionMode::Randomized,
                Mode::Oracle => ReductionMode::Oracle,
            };
            let report = estimate_error(&cfg)?;
            eprintln!("wall clock: {:.3}s", report.wall_clock.as_secs_f64());
            if let Some(path) = &a.trace {
                emit(&hdreduce_trace(&cfg, 0)?.to_json_lines(), Some(path))?;
            }
            emit(&report.render(format_of(&a.common))?, a.common.out.as_deref())?;
            check_violations(report.violations, &report.violation_examples)
        }
        Command::Subproto(a) => {
            let cfg = config_for(&a.proto, Variant::Subprotocol, &a.common)?;
            let report = estimate_error(&cfg)?;
            emit(&report.render(format_of(&a.common))?, a.common.out.as_deref())?;
            check_violations(report.violations, &report.violation_examples)
        }
        Command::Blocky { file } => {
            let m = read_grid(&file)?;
            match is_blocky(&m) {
                Some(w) => {
                    if !w.realizes(&m) {
                        return Err(Failure::Invariant("blocky witness does not realize the matrix".into()));
                    }
                    println!("blocky: yes");
                    println!("row labels: {}", join(&w.rows));
                    println!("column labels: {}", join(&w.cols));
                }
                None => println!("blocky: no"),
            }
            Ok(())
        }
        Command::Vc { file } => {
            println!("vc: {}", vc_dimension(&read_grid(&file)?)?);
            Ok(())
        }
        Command::Embed { file } => {
            let m = read_grid(&file)?;
            let e = nand_embed(&m)?;
            if !e.verifies(&m) {
                return Err(Failure::Invariant("NAND embedding does not reproduce the matrix".into()));
            }
            for (i, r) in e.rows.iter().enumerate() {
                println!("v({i}) = {}", join(r));
            }
            for (j, c) in e.cols.iter().enumerate() {
                println!("w({j}) = {}", join(c));
            }
            println!("verified: yes");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Invariant(m)) => {
            eprintln!("invariant failure: {m}");
            ExitCode::from(1)
        }
    }
}
