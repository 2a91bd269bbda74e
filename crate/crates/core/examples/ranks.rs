//! Datum fit, Borda counts and objective ranks for one frame pair.
//!
//! cargo run --example ranks

use ddp::normalize::{fit_datum, pair_alpha, NormalizeConfig};
use ddp::rank::{borda_scores, RankTable};
use ddp::Frame;

fn main() -> ddp::Result<()> {
    println!("alpha(2, 1; m=0) = {:.4}", pair_alpha(2.0, 1.0, 0.0)?);
    println!("Borda of [3, 1, 2] = {:?}", borda_scores(&[3.0, 1.0, 2.0])?);

    // Two 3x3 frames of a single channel pair; the centre point overtakes its
    // right-hand neighbour in the second frame.
    let before: Vec<f64> = [1.0, 2.0, 3.0, 4.0, 5.0, 5.5, 7.0, 8.0, 9.0]
        .iter()
        .flat_map(|&v| [v, 10.0 + v * v * 0.1])
        .collect();
    let mut after = before.clone();
    after[2 * 4] = 5.8;
    let prev = Frame::from_values(0, 3, 3, 2, before)?;
    let cur = Frame::from_values(1, 3, 3, 2, after)?;

    let datum = fit_datum(&cur, &NormalizeConfig::default())?;
    print!("{}", datum.diagnostics_csv());
    let table = RankTable::build(&prev, &cur, &datum, 1e-12)?;
    print!("{}", table.to_csv());
    Ok(())
}
