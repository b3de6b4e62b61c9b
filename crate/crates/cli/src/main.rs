use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};
use poolscope_cli::fixture::{write_stress, write_synthetic};
use poolscope_cli::{fetch, run_pipeline, run_stage, CliError, Overrides, RunConfig, Stage};

#[derive(Parser)]
#[command(
    name = "poolscope",
    version,
    about = "Liquidity analytics for concentrated-liquidity pools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download position/mint/burn records from the subgraph
    Fetch(RunArgs),
    /// Rebuild pool states on the snapshot grid
    Reconstruct(RunArgs),
    /// TVL, provider concentration and MCI per snapshot
    Metrics(RunArgs),
    /// Difference-in-differences estimates
    Did(RunArgs),
    /// Daily summaries, charts and the estimates table
    Report(RunArgs),
    /// reconstruct, metrics, did and report in one go
    All(RunArgs),
    /// Write the synthetic dataset and a matching config
    Synth {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Also write a stress log of this many lines under `<dir>/stress`
        #[arg(long)]
        stress_lines: Option<usize>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Restrict to these pool ids
    #[arg(long, value_delimiter = ',')]
    pools: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    #[arg(long)]
    from: Option<String>,
    #[arg(long)]
    to: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            pools: self.pools.clone(),
            levels: self.levels.clone(),
            from: self.from.clone(),
            to: self.to.clone(),
            out: self.out.clone(),
            workers: self.workers,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stage = |args: &RunArgs, s: Stage| -> Result<(), CliError> {
        let m = run_stage(s, &args.load()?)?;
        info!("{} files in manifest", m.files.len());
        Ok(())
    };
    match cli.command {
        Command::Fetch(args) => fetch(&args.load()?),
        Command::Reconstruct(args) => stage(&args, Stage::Reconstruct),
        Command::Metrics(args) => stage(&args, Stage::Metrics),
        Command::Did(args) => stage(&args, Stage::Did),
        Command::Report(args) => stage(&args, Stage::Report),
        Command::All(args) => {
            let m = run_pipeline(&args.load()?)?;
            info!("{} files in manifest", m.files.len());
            Ok(())
        }
        Command::Synth {
            dir,
            seed,
            stress_lines,
        } => {
            let path = write_synthetic(&dir, seed)?;
            info!("wrote {}", path.display());
            if let Some(n) = stress_lines {
                let counts = write_stress(&dir.join("stress"), seed, n)?;
                info!("stress log: {counts:?}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
