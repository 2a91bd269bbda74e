//! Length-scale roots and the per-point mixity choice.
//!
//! cargo run --example roots

use ddp::curvature::composite_curvature;
use ddp::lengthscale::{select_mixity, solve_roots, MixityConfig};

fn main() -> ddp::Result<()> {
    let cfg = MixityConfig::default();
    let (h, r, dh) = (2.0, 37.5, 1.0);

    for phi in [0.0, 0.5, 1.0] {
        println!("E({phi}) = {:.4}", cfg.effective_modulus(phi));
    }

    let short = solve_roots(h, dh, 0, 4, 0.0, &cfg)?.expect("dH is non-zero");
    println!("{} short-term roots, first four {:?}", short.len(), &short[..4]);
    println!("quiescent point: {:?}", solve_roots(h, 0.0, 0, 4, 0.0, &cfg)?);

    let kappas = |phi: f64| {
        let l = solve_roots(h, dh, 0, 4, phi, &cfg).ok()??;
        let lt = solve_roots(r, dh, 0, 4, phi, &cfg).ok()??;
        Some(
            l.iter()
                .zip(&lt)
                .map(|(&a, &b)| composite_curvature(h, r, a, b).map_or(0.0, f64::abs))
                .collect(),
        )
    };
    let phi = select_mixity(&cfg.phi_grid, kappas)?;
    println!("selected phi = {phi}");
    Ok(())
}
