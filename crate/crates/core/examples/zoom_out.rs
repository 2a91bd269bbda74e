//! Zoom-out pyramid, residual curvature and critical chain lengths.
//!
//! cargo run --example zoom_out

use ddp::aggregate::{build_pyramid, critical_chain_length, residual_curvature, ChainVariant};
use ddp::synth::{BalloonScenario, WeakSpot};
use ddp::AnalysisConfig;

fn main() -> ddp::Result<()> {
    let scenario = BalloonScenario {
        burst_frame: Some(59),
        weak_spot: Some(WeakSpot {
            row: 4.5,
            col: 4.5,
            radius: 6.0,
            onset: 5,
            exponent: 2.0,
            strength: 1e-3,
        }),
        noise: 0.05,
        seed: 11,
        ..BalloonScenario::default()
    };
    let (prev, cur) = (scenario.frame(40)?, scenario.frame(41)?);
    let zoom = build_pyramid(&prev, &cur, &AnalysisConfig::default())?;
    for level in &zoom.levels {
        println!("level {}x{} factor {:.3}", level.grid.0, level.grid.1, level.factor);
    }

    // Grayscale, first root.
    let profile = zoom.profile(3, 0);
    print!("{}", profile.to_csv());
    println!("residual curvature {:.6}", residual_curvature(&profile));
    for variant in [ChainVariant::Short, ChainVariant::Long] {
        let n = critical_chain_length(&profile, zoom.raw_points, variant)?;
        println!("{variant:?} critical chain length {n:.2} points");
    }
    Ok(())
}
