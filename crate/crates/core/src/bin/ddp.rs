use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ddp::engine::{parse_phi_grid, ChainRecalc};
use ddp::synth::{write_scenario, BalloonScenario};
use ddp::{run_analyze, run_score, EngineConfig, Error, WindowSpec};

#[derive(Parser)]
#[command(name = "ddp", version, about = "Data-driven prognosis over XYZM frame sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse a directory of frame_<index>.xyzm files.
    Analyze {
        dir: PathBuf,
        /// `key = value` config file; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        stride: Option<usize>,
        /// Observation window `r0:r1,c0:c1` (inclusive).
        #[arg(long)]
        window: Option<WindowSpec>,
        #[arg(long)]
        drop_threshold: Option<f64>,
        #[arg(long, value_parser = ["every", "once"])]
        chain_recalc: Option<String>,
        /// Comma-separated mixity candidates in [0, 1].
        #[arg(long)]
        phi_grid: Option<String>,
        /// Directory for pairs.csv, triggers.log and report.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic sequence and its manifest from a scenario file.
    Synth { scenario: PathBuf, outdir: PathBuf },
    /// Score a report.txt against a manifest.txt.
    Score { report: PathBuf, manifest: PathBuf },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Analyze {
            dir,
            config,
            stride,
            window,
            drop_threshold,
            chain_recalc,
            phi_grid,
            out,
        } => {
            let mut cfg = match config {
                Some(path) => EngineConfig::from_file(&path)?,
                None => EngineConfig::default(),
            };
            if let Some(v) = stride {
                cfg.stride = v;
            }
            if window.is_some() {
                cfg.window = window;
            }
            if let Some(v) = drop_threshold {
                cfg.drop_threshold = v;
            }
            if let Some(v) = chain_recalc {
                cfg.chain_recalc = v.parse::<ChainRecalc>()?;
            }
            if let Some(v) = phi_grid {
                cfg.analysis.mixity.phi_grid = parse_phi_grid(&v)?;
            }
            let result = run_analyze(&dir, cfg, out.as_deref())?;
            print!("{}", result.engine.trigger_log());
            match result.engine.predicted_frame() {
                Some(frame) => println!("prediction at frame {frame}"),
                None => println!("no prediction"),
            }
        }
        Command::Synth { scenario, outdir } => {
            let text = std::fs::read_to_string(&scenario).map_err(|e| Error::Io {
                path: scenario.clone(),
                source: e,
            })?;
            let manifest = write_scenario(&BalloonScenario::parse(&text)?, &outdir)?;
            println!("wrote {} frames to {}", manifest.frames, outdir.display());
        }
        Command::Score { report, manifest } => {
            println!("{}", run_score(&report, &manifest)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
