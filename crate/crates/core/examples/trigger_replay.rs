//! Feed a hand-written trigger history through the prognosis state machine.
//!
//! cargo run --example trigger_replay

use ddp::prognosis::{lead_percentage, PrognosisState};

fn main() -> ddp::Result<()> {
    let onset = 4;
    let chains = [20, 21, 23, 24, 25];
    let energy = [2, 17, 22];

    let mut state = PrognosisState::new();
    for t in 1..=25 {
        if t == onset {
            state.observe_path_dependency(t);
        }
        let (c, e) = (chains.contains(&t), energy.contains(&t));
        if let Some(p) = state.update_gti(c, e, t) {
            println!("t={t}: prediction issued for index {p}");
        } else if c || e {
            println!("t={t}: chain={c} energy={e} gti={}", state.gti);
        }
    }
    println!("lead for frame 2099 against a burst at 2382: {:.2}%", lead_percentage(2099, 2382)?);
    Ok(())
}
