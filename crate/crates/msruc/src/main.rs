use clap::{Args, Parser, Subcommand};
use msruc::cli::{cmd_eval, cmd_fit, cmd_solve, cmd_tree, CliError, RunConfig};
use msruc::fleet::write_load_csv;
use msruc::synth::{synth_days, SynthParams};
use std::path::PathBuf;
use std::time::Duration;

/// Continuous-time multi-stage reserve and unit commitment toolkit.
#[derive(Parser)]
#[command(name = "msruc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PipelineArgs {
    /// Net-load CSV with day_id,minute,mw rows.
    #[arg(long)]
    load: PathBuf,
    /// Fleet TOML file.
    #[arg(long, default_value = "data/rts96.toml")]
    fleet: PathBuf,
    /// Directory for all pipeline artifacts.
    #[arg(long, default_value = "work")]
    workdir: PathBuf,
    /// Polynomial degree of the main profile.
    #[arg(long, default_value_t = 3)]
    degree: usize,
    /// Matched endpoint conditions at knots (1 value, 2 value+slope).
    #[arg(long, default_value_t = 2)]
    continuity: usize,
    /// Comma-separated per-stage node budget, one entry per hour.
    #[arg(long, value_delimiter = ',')]
    stages: Option<Vec<usize>>,
    /// Reserve margin as a multiple of the bundle error.
    #[arg(long, default_value_t = 3.0)]
    rho: f64,
    /// Relative MIP gap at which branch-and-bound stops.
    #[arg(long, default_value_t = 0.05)]
    gap: f64,
    /// Seed for splitting, clustering and any other randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of days used for tree construction.
    #[arg(long, default_value_t = 0.7)]
    train_frac: f64,
    /// Divide load values by this factor on ingest.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Resampling step in hours for plot output.
    #[arg(long, default_value_t = 1.0 / 12.0)]
    step: f64,
    /// Write the MPS files and skip solving.
    #[arg(long)]
    export_only: bool,
    /// Omit timestamp headers so outputs are byte-identical across runs.
    #[arg(long)]
    reproducible: bool,
}

impl PipelineArgs {
    fn into_config(self) -> RunConfig {
        RunConfig {
            load: self.load,
            fleet: self.fleet,
            workdir: self.workdir,
            degree: self.degree,
            continuity: self.continuity,
            stages: self.stages,
            rho: self.rho,
            gap: self.gap,
            seed: self.seed,
            train_frac: self.train_frac,
            scale: self.scale,
            step: self.step,
            export_only: self.export_only,
            reproducible: self.reproducible,
            node_limit: 5_000_000,
            time_limit: Duration::from_secs(3600),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit Bernstein splines to every complete day, for both profiles.
    Fit(PipelineArgs),
    /// Reduce the training splines to scenario trees.
    Tree(PipelineArgs),
    /// Build and solve (or export) both unit-commitment models.
    Solve(PipelineArgs),
    /// Replay the held-out days and print the comparison table.
    Eval(PipelineArgs),
    /// Generate a synthetic net-load CSV for experiments.
    GenLoad {
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 40)]
        days: usize,
        #[arg(long, default_value_t = 24)]
        hours: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(args) => cmd_fit(&args.into_config()),
        Command::Tree(args) => cmd_tree(&args.into_config()),
        Command::Solve(args) => cmd_solve(&args.into_config()),
        Command::Eval(args) => cmd_eval(&args.into_config()),
        Command::GenLoad { out, days, hours, seed } => {
            let params = SynthParams { hours, ..Default::default() };
            let generated = synth_days(days, seed, &params);
            write_load_csv(&generated, &out)
                .map_err(|e| CliError::Input(e.to_string()))?;
            println!("wrote {} days to {}", days, out.display());
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
