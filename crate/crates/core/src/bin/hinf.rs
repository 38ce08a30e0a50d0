use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hinf_core::bench::{self, CompareOptions, TrainOptions};
use hinf_core::config::Config;
use hinf_core::game::Mode;
use hinf_core::Error;

#[derive(Parser)]
#[command(name = "hinf", version, about = "H-infinity filtering with bounded noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the game (or Kalman) Riccati equation and print P and K.
    SolveGare {
        #[command(flatten)]
        common: Common,
        /// Drop the attenuation term (Kalman-Bucy filter).
        #[arg(long)]
        kalman: bool,
    },
    /// Train value, gain and noise networks by ternary policy iteration.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Monte-Carlo comparison of the learned, H-infinity and Kalman filters.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Penalty used for the attenuation ratio.
        #[arg(long)]
        mode: Option<Mode>,
        /// Checkpoint with the learned gain (overrides the config).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Write one trajectory of the plant and every filter.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::SolveGare { common, kalman } => {
            let cfg = Config::load(&common.config)?;
            let text = bench::cmd_solve_gare(&cfg, kalman.then_some(true), Some(&common.out))?;
            println!("{text}");
        }
        Command::Train {
            common,
            mode,
            seed,
            iterations,
        } => {
            let cfg = Config::load(&common.config)?;
            let opts = TrainOptions { mode, seed, iterations };
            let s = bench::cmd_train(&cfg, &opts, &common.out)?;
            if let Some(r) = s.last {
                println!(
                    "iterations {}  value loss {:.3e}  gain loss {:.3e}",
                    r.iter + 1,
                    r.value_loss,
                    r.gain_loss
                );
                if let (Some(eo), Some(et)) = (r.e_omega, r.e_theta) {
                    println!("relative errors  e_omega {eo:.3e}  e_theta {et:.3e}");
                }
            }
            println!("gain K = {:?}", s.gain.to_rows());
            println!("wrote {} and {}", s.csv.display(), s.checkpoint.display());
        }
        Command::Compare {
            common,
            trials,
            seed,
            mode,
            checkpoint,
        } => {
            let cfg = Config::load(&common.config)?;
            let opts = CompareOptions {
                trials,
                seed,
                checkpoint,
                mode,
            };
            let reports = bench::cmd_compare(&cfg, &opts, &common.out)?;
            println!("{:<16} {:<14} {:>10} {:>12} {:>10}", "noise", "filter", "RMS_beta", "RMS_omega_r", "max ratio");
            for r in &reports {
                println!(
                    "{:<16} {:<14} {:>10.4} {:>12.4} {:>10.4}",
                    r.distribution, r.filter, r.rms_beta, r.rms_omega_r, r.max_attenuation_ratio
                );
            }
            println!("wrote {}", common.out.join("compare.csv").display());
        }
        Command::Simulate {
            common,
            seed,
            mode,
            checkpoint,
        } => {
            let cfg = Config::load(&common.config)?;
            let opts = CompareOptions {
                trials: None,
                seed,
                checkpoint,
                mode,
            };
            let path = bench::cmd_simulate(&cfg, &opts, &common.out)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = e.hint() {
                eprintln!("hint: {h}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
