//! Generate a bursting sequence and its control twin, run the engine on both
//! and score the outcome.
//!
//! cargo run --release --example synthetic_burst

use ddp::engine::score;
use ddp::synth::{control_twin, BalloonScenario, WeakSpot};
use ddp::{Engine, EngineConfig};

fn main() -> ddp::Result<()> {
    let burst = BalloonScenario {
        run_id: "burst-1".into(),
        frames: 61,
        burst_frame: Some(60),
        weak_spot: Some(WeakSpot {
            row: 4.5,
            col: 4.5,
            radius: 3.0,
            onset: 10,
            exponent: 2.0,
            strength: 1e-3,
        }),
        noise: 0.1,
        seed: 1,
        ..BalloonScenario::default()
    };
    for scenario in [burst.clone(), control_twin(&burst)] {
        let mut engine = Engine::new(EngineConfig::default())?;
        engine.run(scenario.generate()?.into_iter().map(Ok))?;
        let rows = engine.rows();
        println!("{}:", scenario.run_id);
        println!("  pairs analysed       {}", rows.len());
        println!("  path-dependent onset {:?}", engine.state().pdi_onset);
        println!("  energy triggers      {:?}", engine.state().energy_triggers);
        println!("  chain triggers       {:?}", engine.state().chain_triggers);
        println!(
            "  longest chain        {} (shortest critical length {:.1})",
            rows.iter().map(|r| r.chain_max).max().unwrap_or(0),
            rows.iter().map(|r| r.critical_long).fold(f64::INFINITY, f64::min)
        );
        println!("  outcome              {}", score(engine.predicted_frame(), scenario.burst_frame));
    }
    Ok(())
}
