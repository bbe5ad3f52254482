use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tspcut::cpa::Backend;
use tspcut_cli::check::{check_complexity, check_solve, CheckReport};
use tspcut_cli::complexity::cmd_complexity;
use tspcut_cli::export::cmd_export_qubo;
use tspcut_cli::output::{write_complexity, write_solve, Format};
use tspcut_cli::solve::cmd_solve;
use tspcut_cli::{load_instance, parse_sizes, parse_variants, ExperimentSpec, INSTANCE_DIR_ENV};

/// Cutting-plane TSP experiments on TSPLIB instances.
#[derive(Parser)]
#[command(name = "tspcut", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Variable and constraint counts per prefix size.
    Complexity(Common),
    /// Solve prefixes with the exact, annealing or hybrid backend.
    Solve(SolveArgs),
    /// Write the QUBO of one prefix size as text.
    ExportQubo(ExportArgs),
}

#[derive(Args)]
struct Common {
    /// TSPLIB file; bare names are also looked up in the instance directory.
    #[arg(long, env = "TSPCUT_INSTANCE")]
    instance: Option<PathBuf>,
    /// Prefix sizes, e.g. `5-15,20,25`.
    #[arg(long, default_value = "5-15,20,25,30,35,40,45")]
    sizes: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Compare rows with the bundled berlin52 values; exit 1 on deviation.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated list of cpa, cpa-caf, cilp, cilp-caf, or `all`.
    #[arg(long, default_value = "cpa-caf")]
    variant: String,
    #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
    backend: BackendArg,
    /// Seeded runs per row; the exact backend always runs once.
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Base seed; run r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Annealing sweeps per read.
    #[arg(long)]
    sweeps: Option<usize>,
    /// Per-iteration time budget in seconds.
    #[arg(long)]
    budget_s: Option<f64>,
    /// Zero measured wall-clock times so output is reproducible.
    #[arg(long)]
    no_wall_clock: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long, env = "TSPCUT_INSTANCE")]
    instance: Option<PathBuf>,
    /// Prefix size.
    #[arg(long)]
    n: usize,
    /// cpa or cpa-caf for the cut-free model, cilp or cilp-caf for the
    /// complete formulation.
    #[arg(long, default_value = "cpa-caf")]
    variant: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    Anneal,
    HybridEmulation,
}

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn spec_from(common: &Common) -> anyhow::Result<ExperimentSpec> {
    let raw = load_instance(common.instance.as_deref())?;
    Ok(ExperimentSpec::new(raw, parse_sizes(&common.sizes)?))
}

fn format_of(f: FormatArg) -> Format {
    match f {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    }
}

fn report_check(spec: &ExperimentSpec, rep: CheckReport) -> anyhow::Result<bool> {
    if !spec.is_berlin52() {
        bail!(
            "--check needs the berlin52 instance; no reference values for {}",
            spec.instance.name
        );
    }
    for d in &rep.deviations {
        eprintln!("check: {d}");
    }
    eprintln!("check: {} compared, {} deviations", rep.checked, rep.deviations.len());
    Ok(rep.passed())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Complexity(common) => {
            let spec = spec_from(&common)?;
            let rows = cmd_complexity(&spec)?;
            let mut out = open_output(common.output.as_deref())?;
            write_complexity(&mut out, &rows, format_of(common.format))?;
            out.flush()?;
            if common.check {
                return report_check(&spec, check_complexity(&rows));
            }
        }
        Command::Solve(args) => {
            let mut spec = spec_from(&args.common)?;
            spec.variants = parse_variants(&args.variant)?;
            spec.backend = match args.backend {
                BackendArg::Exact => Backend::Exact,
                BackendArg::Anneal => Backend::Anneal,
                BackendArg::HybridEmulation => Backend::HybridEmulation,
            };
            spec.runs = args.runs;
            spec.seed = args.seed;
            spec.sweeps = args.sweeps;
            spec.budget = match args.budget_s {
                Some(s) if !(s.is_finite() && s > 0.0) => bail!("--budget-s must be positive"),
                Some(s) => Some(Duration::from_secs_f64(s)),
                None => None,
            };
            spec.wall_clock = !args.no_wall_clock;
            let report = cmd_solve(&spec)?;
            let mut out = open_output(args.common.output.as_deref())?;
            write_solve(&mut out, &report, format_of(args.common.format), spec.wall_clock)?;
            out.flush()?;
            for row in &report.rows {
                if let Some(e) = &row.error {
                    eprintln!("n={} {}: {e}", row.n, row.variant);
                }
            }
            if args.common.check {
                return report_check(&spec, check_solve(&report));
            }
        }
        Command::ExportQubo(args) => {
            let raw = load_instance(args.instance.as_deref())?;
            let variants = parse_variants(&args.variant)?;
            let [variant] = variants[..] else {
                bail!("export-qubo takes a single variant");
            };
            let text = cmd_export_qubo(&raw, args.n, variant)?;
            let mut out = open_output(args.output.as_deref())?;
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if std::env::var_os(INSTANCE_DIR_ENV).is_none() && e.to_string().contains("not found") {
                eprintln!("hint: set {INSTANCE_DIR_ENV} to the directory holding TSPLIB files");
            }
            ExitCode::from(2)
        }
    }
}
