use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mvscgf::data::{generate_synthetic, write_dataset, NormalizeMode, SyntheticSpec};
use mvscgf::experiment::{self, ExperimentConfig, Overrides, PRESETS};
use mvscgf::plot;
use mvscgf::{Execution, Variant};

#[derive(Parser, Debug)]
#[command(name = "mvscgf", version, about = "Multi-view subspace clustering with a consensus graph filter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment (single point or grid sweep).
    Run(RunArgs),
    /// Render a residual trace CSV as an SVG plot.
    Plot {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write a synthetic union-of-subspaces dataset with a manifest.
    Generate(GenerateArgs),
    /// List the named parameter presets.
    Presets,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON experiment config; without it the synthetic benchmark is used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset manifest, replacing the config's dataset.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// full, no_smoothing or frobenius.
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    k: Option<usize>,
    /// none, unit_row_norm or zscore_columns.
    #[arg(long)]
    normalize: Option<NormalizeMode>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Run grid points and k-means restarts on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 30)]
    n_per_cluster: usize,
    #[arg(long, default_value_t = 3)]
    subspace_dim: usize,
    /// Comma-separated view dimensions.
    #[arg(long, value_delimiter = ',', default_value = "20,30")]
    view_dims: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn run(args: RunArgs) -> ExitCode {
    let base = match &args.config {
        Some(path) => match ExperimentConfig::from_file(path) {
            Ok(cfg) => cfg,
            Err(e) => return config_error(e),
        },
        None => ExperimentConfig::default(),
    };
    let overrides = Overrides {
        alpha: args.alpha,
        beta: args.beta,
        eta: args.eta,
        max_iter: args.max_iter,
        eps: args.eps,
        seed: args.seed,
        repetitions: args.repetitions,
        variant: args.variant,
        k: args.k,
        normalize: args.normalize,
        output_dir: args.output,
        preset: args.preset,
        manifest: args.manifest,
        execution: args.sequential.then_some(Execution::Sequential),
    };
    let cfg = match base.resolve(&overrides) {
        Ok(cfg) => cfg,
        Err(e) => return config_error(e),
    };
    match experiment::run_experiment(&cfg) {
        Ok(summary) => {
            println!(
                "{}: {} grid point(s), {} failed; summary at {}",
                summary.dataset,
                summary.points.len(),
                summary.failed,
                cfg.output_dir.join("summary.json").display()
            );
            if let Some(best) = &summary.best.nmi {
                println!(
                    "best NMI {:.4} at alpha={} beta={} eta={} ({})",
                    best.value, best.alpha, best.beta, best.eta, best.hash
                );
            }
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn config_error(e: experiment::ExperimentError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(1)
}

fn generate(args: GenerateArgs) -> ExitCode {
    let spec = SyntheticSpec {
        k: args.k,
        n_per_cluster: args.n_per_cluster,
        subspace_dim: args.subspace_dim,
        view_dims: args.view_dims,
        noise_sigma: args.noise,
        seed: args.seed,
    };
    match generate_synthetic(&spec).and_then(|ds| write_dataset(&ds, &args.output)) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run(args) => run(args),
        Command::Plot { trace, output } => match plot::emit_convergence_plot(&trace, &output) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Generate(args) => generate(args),
        Command::Presets => {
            for (name, a, b, e) in PRESETS {
                println!("{name:<14} alpha={a:<8} beta={b:<8} eta={e}");
            }
            ExitCode::SUCCESS
        }
    }
}
