use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use strobespin_cli::config::FULL_TRAJECTORIES;
use strobespin_cli::{plotdata, CliError, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "strobespin", version, about = "Stroboscopic spin-noise and QND magnetometry experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trajectories: Option<usize>,
        /// Use the full 1000 trajectories per point.
        #[arg(long, conflicts_with = "trajectories")]
        full: bool,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Turn an output CSV into plot-ready data files.
    Plotdata {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            trajectories,
            full,
            threads,
        } => {
            let (mut cfg, _) = RunConfig::load(&config)?;
            Overrides {
                seed,
                out,
                trajectories: if full { Some(FULL_TRAJECTORIES) } else { trajectories },
            }
            .apply(&mut cfg);
            if let Some(n) = threads {
                if n == 0 {
                    return Err(CliError::Invalid(vec![strobespin::Violation::new(
                        "--threads",
                        "must be at least 1",
                    )]));
                }
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
            }
            let m = strobespin_cli::run(&cfg, rayon::current_num_threads())?;
            println!(
                "{}: {} files in {} ({:.1} s)",
                m.experiment,
                m.outputs.len(),
                cfg.output_dir.display(),
                m.wall_time_s
            );
            Ok(())
        }
        Command::Validate { config } => {
            let (cfg, _) = RunConfig::load(&config)?;
            cfg.validate()?;
            println!("ok");
            print!("{}", cfg.to_toml());
            Ok(())
        }
        Command::Plotdata { input, out } => {
            for f in plotdata::emit(&input, &out)? {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
