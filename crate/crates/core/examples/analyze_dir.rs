//! Write a synthetic sequence to disk, analyse the directory and score the
//! report, as the `ddp` binary does.
//!
//! cargo run --release --example analyze_dir [out-dir]

use std::path::PathBuf;

use ddp::engine::ChainRecalc;
use ddp::synth::{write_scenario, BalloonScenario, MANIFEST_FILE};
use ddp::{run_analyze, run_score, EngineConfig, WindowSpec};

fn main() -> ddp::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ddp-analyze-dir"));
    let frames = root.join("frames");
    let reports = root.join("reports");

    let scenario = BalloonScenario::parse(
        "run_id = wide-control\nwidth = 16\nheight = 12\nframes = 30\ngrowth_rate = 0.02\ndeflate_after = 15\nnoise = 0.05\nseed = 4\n",
    )?;
    let manifest = write_scenario(&scenario, &frames)?;
    println!("wrote {} frames to {}", manifest.frames, frames.display());

    let cfg = EngineConfig {
        stride: 2,
        window: Some(WindowSpec::new(1, 10, 3, 12)),
        chain_recalc: ChainRecalc::Once,
        ..EngineConfig::default()
    };
    let out = run_analyze(&frames, cfg, Some(&reports))?;
    print!("{}", out.report);
    let outcome = run_score(&reports.join("report.txt"), &frames.join(MANIFEST_FILE))?;
    println!("score: {outcome}");
    Ok(())
}
