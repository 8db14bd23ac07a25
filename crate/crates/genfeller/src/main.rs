use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use genfeller::io::read_column;
use genfeller::plots::emit_plots;
use genfeller::{run_experiment, CliError, Experiment, ExperimentConfig, RunOptions, UsageError};
use genfeller_core::analysis::compare;

/// Branching processes with interaction, their Feller-diffusion limits and
/// Ray-Knight representations.
#[derive(Parser)]
#[command(name = "genfeller", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML experiment config; defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    replicates_override: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the interaction function through its scale function.
    Classify(RunArgs),
    /// Simulate the discrete birth-death chain.
    SimulateDiscrete(RunArgs),
    /// Simulate the renormalized chain with its martingale ledger.
    SimulateRenormalized(RunArgs),
    /// Grow a planar forest and explore it.
    ExploreForest(RunArgs),
    /// Solve the generalized Feller SDE.
    SimulateSde(RunArgs),
    /// Local-time field of the reflected, drifted Brownian motion.
    RayKnight(RunArgs),
    /// Discrete-to-diffusion convergence table.
    Convergence(RunArgs),
    /// Run the experiment named in the config.
    Run(RunArgs),
    /// Two-sample KS comparison of a numeric column in two CSV files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "value")]
        column: String,
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
    },
    /// Write plot-ready tables into an artifact directory.
    EmitPlots { dir: PathBuf },
}

fn run(exp: Option<Experiment>, args: &RunArgs) -> Result<bool, CliError> {
    let (cfg, base) = match &args.config {
        Some(path) => {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (ExperimentConfig::load(path)?, base)
        }
        None => (ExperimentConfig::parse("")?, PathBuf::from(".")),
    };
    let exp = match (exp, cfg.experiment) {
        (Some(e), _) | (None, Some(e)) => e,
        (None, None) => return Err(UsageError::Config("config names no experiment".into()).into()),
    };
    let opts = RunOptions {
        seed: args.seed,
        out: args.out.clone(),
        threads: args.threads,
        replicates_override: args.replicates_override,
    };
    let outcome = run_experiment(exp, cfg, &base, &opts)?;
    if let Some(e) = &outcome.manifest.error {
        eprintln!("error: {e} (partial artifacts in {})", outcome.dir.display());
    }
    println!("{}: {} ({})", exp, outcome.manifest.verdict, outcome.dir.display());
    Ok(outcome.verdict.passed())
}

fn dispatch(cmd: Command) -> Result<bool, CliError> {
    match cmd {
        Command::Classify(a) => run(Some(Experiment::Classify), &a),
        Command::SimulateDiscrete(a) => run(Some(Experiment::Discrete), &a),
        Command::SimulateRenormalized(a) => run(Some(Experiment::Renormalized), &a),
        Command::ExploreForest(a) => run(Some(Experiment::Forest), &a),
        Command::SimulateSde(a) => run(Some(Experiment::Diffusion), &a),
        Command::RayKnight(a) => run(Some(Experiment::Rayknight), &a),
        Command::Convergence(a) => run(Some(Experiment::Convergence), &a),
        Command::Run(a) => run(None, &a),
        Command::Compare { a, b, column, threshold } => {
            let xa = read_column(&a, &column)?;
            let xb = read_column(&b, &column)?;
            let r = compare(&xa, &xb, threshold).map_err(UsageError::from)?;
            let report = serde_json::json!({
                "ks_statistic": r.ks_statistic,
                "sizes": [r.sizes.0, r.sizes.1],
                "mean_diff": r.mean_diff,
                "mean_diff_se": r.mean_diff_se,
                "threshold": r.threshold,
                "verdict": if r.verdict.passed() { "pass" } else { "fail" },
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(r.verdict.passed())
        }
        Command::EmitPlots { dir } => {
            for f in emit_plots(&dir)? {
                println!("{}", dir.join(f).display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
