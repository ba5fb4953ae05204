use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gbhe::cli::{cmd_convergence, cmd_simulate, cmd_weights_dump, exit_code};
use gbhe::config::parse_config;

#[derive(Parser)]
#[command(name = "gbhe", version, about = "Burgers'-Huxley solver with memory: CR and DG schemes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Refinement study against the configured manufactured solution.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Number of levels, doubling from the first configured one.
        #[arg(long)]
        levels: Option<usize>,
        /// Seed for the random probe points of the consistency check.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Single run with VTK snapshots and per-step diagnostics.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Print the memory quadrature weights as `k,j,weight`.
    WeightsDump {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> gbhe::Result<()> {
    match cli.command {
        Command::Convergence { common, levels, seed } => {
            let cfg = parse_config(&common.config)?;
            let path = cmd_convergence(&cfg, &common.out, levels, seed)?;
            print!("{}", std::fs::read_to_string(&path)?);
        }
        Command::Simulate { common } => {
            let cfg = parse_config(&common.config)?;
            let out = cmd_simulate(&cfg, &common.out)?;
            println!(
                "{} steps, {} snapshots, diagnostics in {}",
                out.trajectory.diagnostics.len(),
                out.snapshots.len(),
                out.diagnostics.display()
            );
        }
        Command::WeightsDump { config } => {
            let cfg = parse_config(&config)?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            cmd_weights_dump(&cfg, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gbhe: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
