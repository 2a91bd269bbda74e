//! Composite curvature and path-dependency categories.
//!
//! cargo run --example curvature

use ddp::curvature::{categorize_pdi, composite_curvature};
use ddp::lengthscale::{solve_roots, MixityConfig};
use ddp::prognosis::point_path_dependent;

fn main() -> ddp::Result<()> {
    let cfg = MixityConfig::default();
    println!("{:>6} {:>6} {:>4} {:>10} {:>8} {:>8} {:>4}", "H", "R", "dH", "kappa", "1/L", "1/L~", "cat");
    for (h, r, dh) in [(1.0, 49.0, 1.0), (3.0, 40.0, 2.0), (50.0, 51.0, 1.0), (90.0, 80.0, -3.0)] {
        let l = solve_roots(h, dh, 0, 4, 0.0, &cfg)?.expect("moving point")[0];
        let lt = solve_roots(r, dh, 0, 4, 0.0, &cfg)?.expect("moving point")[0];
        let kappa = composite_curvature(h, r, l, lt).expect("finite length scales");
        let cat = categorize_pdi(kappa.abs(), 1.0 / l.abs(), 1.0 / lt.abs(), false, 1);
        println!(
            "{h:>6} {r:>6} {dh:>4} {kappa:>10.4} {:>8.4} {:>8.4} {cat:>4}",
            1.0 / l.abs(),
            1.0 / lt.abs()
        );
    }

    let mut votes = [1u8; 16];
    votes[..8].fill(5);
    println!("8 of 16 roots unstable -> path dependent: {}", point_path_dependent(&votes));
    votes[7] = 1;
    println!("7 of 16 roots unstable -> path dependent: {}", point_path_dependent(&votes));
    Ok(())
}
