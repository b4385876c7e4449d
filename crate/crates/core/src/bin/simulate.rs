use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use twophoton::cli::{load_config, pathways_report, run, RunConfig};
use twophoton::oracle::find_benchmark;
use twophoton::signal::Mode;

#[derive(Parser)]
#[command(name = "simulate", version, about = "Two-photon coincidence signal simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "full")]
    Full,
    #[value(name = "short_Te")]
    ShortTe,
    #[value(name = "bs_removed")]
    BsRemoved,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => Mode::Full,
            ModeArg::ShortTe => Mode::ShortTe,
            ModeArg::BsRemoved => Mode::BsRemoved,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the scan described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Data file; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config file and print it with defaults filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Inspect the pathway enumeration.
    Pathways {
        #[command(subcommand)]
        action: PathwaysAction,
    },
    /// Compare the pipeline with the wavefunction oracle.
    Oracle {
        #[arg(long)]
        benchmark: String,
    },
}

#[derive(Subcommand)]
enum PathwaysAction {
    Dump,
}

fn with_overrides(mut cfg: RunConfig, mode: Option<ModeArg>, out: Option<PathBuf>) -> Result<RunConfig, String> {
    if let Some(m) = mode {
        cfg.mode = m.into();
        cfg.hom.bs_removed = cfg.mode == Mode::BsRemoved;
        // Re-resolve so that mode-dependent checks run again.
        cfg = RunConfig::from_toml(&cfg.to_toml()).map_err(|e| e.to_string())?;
    }
    if let Some(o) = out {
        cfg.output = o;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SIM_LOG", "warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), String> {
    match cmd {
        Command::Run {
            config,
            workers,
            mode,
            out,
        } => {
            let cfg = load_config(&config).map_err(|e| e.to_string())?;
            let cfg = with_overrides(cfg, mode, out)?;
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let done = run(&cfg, workers).map_err(|e| e.to_string())?;
            println!(
                "{} points -> {} ({:.3} s, {} workers)",
                done.sidecar.points,
                done.data_path.display(),
                done.sidecar.wall_time_s,
                done.sidecar.workers
            );
        }
        Command::Validate { config } => {
            let cfg = load_config(&config).map_err(|e| e.to_string())?;
            print!("{}", cfg.to_toml());
        }
        Command::Pathways {
            action: PathwaysAction::Dump,
        } => print!("{}", pathways_report()),
        Command::Oracle { benchmark } => {
            let b = find_benchmark(&benchmark).map_err(|e| e.to_string())?;
            let rows = b.run().map_err(|e| e.to_string())?;
            println!("tau_fs\tT_fs\ts_fs\tpipeline\toracle\trel_err");
            let mut worst: f64 = 0.0;
            for r in &rows {
                worst = worst.max(r.relative_error());
                println!(
                    "{:.6}\t{:.6}\t{:.6}\t{:.9e}\t{:.9e}\t{:.3e}",
                    r.tau,
                    r.big_t,
                    r.s,
                    r.pipeline,
                    r.oracle,
                    r.relative_error()
                );
            }
            println!("max relative error {worst:.3e}");
            if worst >= 1e-2 {
                return Err(format!("benchmark {benchmark} exceeds 1e-2 relative error"));
            }
        }
    }
    Ok(())
}
