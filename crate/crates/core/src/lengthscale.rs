//! Dimensionless length-scale roots.
//!
//! Each dimension reduces the conservation relation to the scalar form
//! `E(phi) * value / L^2 = dH` over one analysis step, so
//! `|L| = sqrt(|E(phi) * value / dH|)`. With `D` dimensions there are `2^D`
//! sign patterns; root `k` carries the sign of bit `d` of `k` for dimension
//! `d`, so every dimension gets `2^D` roots in `+/-` pairs. The short-term
//! roots `L` use the Borda count, the long-term roots `L~` the objective rank.

use crate::curvature::composite_curvature;
use crate::error::{Error, Result};
use crate::rank::RankTable;

/// Mode mixity between pure dilatation and pure shear.
#[derive(Debug, Clone, PartialEq)]
pub struct MixityConfig {
    pub nu_volumetric: f64,
    pub nu_shear: f64,
    pub phi_grid: Vec<f64>,
    /// Replaces `E(phi)` with a constant; used to pin the length-scale relation in tests.
    pub modulus_override: Option<f64>,
    /// `|dH|` at or below this marks a point quiescent.
    pub quiescence_threshold: f64,
}

impl Default for MixityConfig {
    fn default() -> Self {
        MixityConfig {
            nu_volumetric: -1.0,
            nu_shear: 0.5,
            phi_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            modulus_override: None,
            quiescence_threshold: 1e-9,
        }
    }
}

impl MixityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.phi_grid.is_empty() {
            return Err(Error::Config("phi grid is empty".into()));
        }
        if let Some(phi) = self.phi_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Config(format!("phi {phi} outside [0, 1]")));
        }
        Ok(())
    }

    /// Effective dimensionless modulus, blending the shear factor `1/(2(1+nu_s))`
    /// and the bulk factor `1/(3(1-2nu_v))` linearly in `phi`.
    pub fn effective_modulus(&self, phi: f64) -> f64 {
        if let Some(e) = self.modulus_override {
            return e;
        }
        let shear = 1.0 / (2.0 * (1.0 + self.nu_shear));
        let bulk = 1.0 / (3.0 * (1.0 - 2.0 * self.nu_volumetric));
        phi * shear + (1.0 - phi) * bulk
    }
}

/// Sign of dimension `dim` in sign pattern `pattern`.
pub fn pattern_sign(pattern: usize, dim: usize) -> f64 {
    if (pattern >> dim) & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// The `2^dims` signed roots for one (point, dimension), or `None` when the
/// point is quiescent (`|dH|` at or below the threshold).
pub fn solve_roots(
    value: f64,
    delta_h: f64,
    dim: usize,
    dims: usize,
    phi: f64,
    cfg: &MixityConfig,
) -> Result<Option<Vec<f64>>> {
    if !value.is_finite() {
        return Err(Error::RootSolve(format!("rank value {value} is not finite")));
    }
    if !(delta_h.abs() > cfg.quiescence_threshold) {
        return Ok(None);
    }
    let ratio = cfg.effective_modulus(phi) * value / delta_h;
    if !ratio.is_finite() {
        return Err(Error::RootSolve(format!(
            "E * value / dH = {ratio} for value {value}, dH {delta_h}"
        )));
    }
    let magnitude = ratio.abs().sqrt();
    Ok(Some(
        (0..1usize << dims)
            .map(|k| pattern_sign(k, dim) * magnitude)
            .collect(),
    ))
}

/// Median of the samples; mean of the middle two for an even count.
pub fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        0.5 * (samples[n / 2 - 1] + samples[n / 2])
    }
}

/// Picks the grid value of `phi` whose roots give the smallest median `|kappa|`.
///
/// `eval` returns the `|kappa|` of every root at a candidate `phi`, or `None` if
/// the candidate cannot be evaluated. Ties go to the smaller `phi`.
pub fn select_mixity<F>(grid: &[f64], mut eval: F) -> Result<f64>
where
    F: FnMut(f64) -> Option<Vec<f64>>,
{
    let mut best: Option<(f64, f64)> = None;
    for &phi in grid {
        let Some(mut kappas) = eval(phi) else { continue };
        if kappas.is_empty() || kappas.iter().any(|k| !k.is_finite()) {
            continue;
        }
        let score = median(&mut kappas);
        best = match best {
            Some((bp, bs)) if bs < score || (bs == score && bp <= phi) => Some((bp, bs)),
            _ => Some((phi, score)),
        };
    }
    best.map(|(phi, _)| phi).ok_or(Error::MixityUnavailable)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootStatus {
    Active,
    /// `dH` vanished: no roots, zero curvature.
    Quiescent,
    /// Root solve or mixity selection failed; treated as quiescent downstream.
    Failed,
}

/// Roots of one (point, dimension).
#[derive(Debug, Clone, PartialEq)]
pub struct PointRoots {
    pub short: Vec<f64>,
    pub long: Vec<f64>,
    pub phi: f64,
    pub status: RootStatus,
}

impl PointRoots {
    fn inactive(status: RootStatus, phi: f64) -> Self {
        PointRoots {
            short: Vec::new(),
            long: Vec::new(),
            phi,
            status,
        }
    }

    pub fn is_quiescent(&self) -> bool {
        self.status != RootStatus::Active
    }
}

/// Short- and long-term roots for every (dimension, point) of a rank table.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthScaleRoots {
    pub dims: usize,
    /// Indexed `[dimension][point]`, points in rank-table order.
    pub roots: Vec<Vec<PointRoots>>,
}

impl LengthScaleRoots {
    pub fn root_count(&self) -> usize {
        1 << self.dims
    }

    pub fn get(&self, dim: usize, point: usize) -> &PointRoots {
        &self.roots[dim][point]
    }
}

/// `|kappa|` of every root at one (point, dimension) for a candidate `phi`.
pub(crate) fn root_kappas(
    h: f64,
    r: f64,
    delta_h: f64,
    dim: usize,
    dims: usize,
    phi: f64,
    cfg: &MixityConfig,
) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let short = solve_roots(h, delta_h, dim, dims, phi, cfg).ok()??;
    let long = solve_roots(r, delta_h, dim, dims, phi, cfg).ok()??;
    let kappas = short
        .iter()
        .zip(&long)
        .map(|(&l, &lt)| composite_curvature(h, r, l, lt).unwrap_or(0.0).abs())
        .collect();
    Some((short, long, kappas))
}

/// Solves every (point, dimension) of `table`, choosing the mixity per point.
pub fn build_roots(table: &RankTable, cfg: &MixityConfig) -> Result<LengthScaleRoots> {
    cfg.validate()?;
    let dims = table.dims.len();
    let fallback_phi = cfg.phi_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let mut roots = Vec::with_capacity(dims);
    for (d, ranks) in table.dims.iter().enumerate() {
        let mut per_point = Vec::with_capacity(table.len());
        for i in 0..table.len() {
            let (h, r, dh) = (ranks.h[i], ranks.r[i], ranks.delta_h[i]);
            if !(dh.abs() > cfg.quiescence_threshold) {
                per_point.push(PointRoots::inactive(RootStatus::Quiescent, fallback_phi));
                continue;
            }
            let phi = match select_mixity(&cfg.phi_grid, |phi| {
                root_kappas(h, r, dh, d, dims, phi, cfg).map(|(_, _, k)| k)
            }) {
                Ok(phi) => phi,
                Err(e) => {
                    log::debug!("point {} dim {d}: {e}", table.points[i]);
                    per_point.push(PointRoots::inactive(RootStatus::Failed, fallback_phi));
                    continue;
                }
            };
            let solved = solve_roots(h, dh, d, dims, phi, cfg)
                .and_then(|s| Ok((s, solve_roots(r, dh, d, dims, phi, cfg)?)));
            match solved {
                Ok((Some(short), Some(long))) => per_point.push(PointRoots {
                    short,
                    long,
                    phi,
                    status: RootStatus::Active,
                }),
                Ok(_) => per_point.push(PointRoots::inactive(RootStatus::Quiescent, phi)),
                Err(e) => {
                    log::debug!("point {} dim {d}: {e}", table.points[i]);
                    per_point.push(PointRoots::inactive(RootStatus::Failed, phi));
                }
            }
        }
        roots.push(per_point);
    }
    Ok(LengthScaleRoots { dims, roots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Frame;
    use crate::normalize::{fit_datum, NormalizeConfig};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn unit_modulus() -> MixityConfig {
        MixityConfig {
            modulus_override: Some(1.0),
            ..Default::default()
        }
    }

    #[test]
    fn modulus_endpoints() {
        let cfg = MixityConfig::default();
        assert_abs_diff_eq!(cfg.effective_modulus(0.0), 1.0 / 9.0);
        assert_abs_diff_eq!(cfg.effective_modulus(1.0), 1.0 / 3.0);
        assert_abs_diff_eq!(cfg.effective_modulus(0.5), 2.0 / 9.0);
    }

    #[test]
    fn single_dimension_roots_are_plus_minus_two() {
        let roots = solve_roots(4.0, 1.0, 0, 1, 0.0, &unit_modulus()).unwrap().unwrap();
        assert_eq!(roots, vec![2.0, -2.0]);
    }

    #[test]
    fn four_dimensions_give_sixteen_paired_roots() {
        for d in 0..4 {
            let roots = solve_roots(3.0, -0.5, d, 4, 0.3, &MixityConfig::default())
                .unwrap()
                .unwrap();
            assert_eq!(roots.len(), 16);
            assert_eq!(roots.iter().filter(|r| **r > 0.0).count(), 8);
            let mag = roots[0].abs();
            assert!(roots.iter().all(|r| r.abs() == mag));
        }
    }

    #[test]
    fn zero_delta_is_quiescent_and_nan_fails() {
        assert_eq!(solve_roots(4.0, 0.0, 0, 4, 0.0, &unit_modulus()).unwrap(), None);
        assert!(solve_roots(f64::NAN, 1.0, 0, 4, 0.0, &unit_modulus()).is_err());
    }

    #[test]
    fn mixity_examples() {
        let table = [0.5, 0.2, 0.9];
        let grid = [0.0, 0.5, 1.0];
        let pick = |grid: &[f64], f: &dyn Fn(f64) -> f64| {
            select_mixity(grid, |phi| Some(vec![f(phi)])).unwrap()
        };
        assert_eq!(pick(&grid, &|phi| table[(phi * 2.0) as usize]), 0.5);
        assert_eq!(pick(&grid, &|_| 0.4), 0.0);
        assert_eq!(pick(&[1.0, 0.5, 0.0], &|_| 0.4), 0.0);
        assert!(matches!(
            select_mixity(&grid, |_| Some(vec![f64::NAN])),
            Err(Error::MixityUnavailable)
        ));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    fn table_for(prev: &Frame, cur: &Frame) -> RankTable {
        let datum = fit_datum(cur, &NormalizeConfig::default()).unwrap();
        RankTable::build(prev, cur, &datum, 1e-12).unwrap()
    }

    fn frame3(t: u64, seed: u64) -> Frame {
        let mut s = seed;
        let values = (0..9 * 4)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 33) as f64 / (1u64 << 31) as f64
            })
            .collect();
        Frame::from_values(t, 3, 3, 4, values).unwrap()
    }

    #[test]
    fn constant_pair_is_all_quiescent() {
        let f = frame3(0, 7);
        let roots = build_roots(&table_for(&f, &f), &MixityConfig::default()).unwrap();
        assert!(roots.roots.iter().flatten().all(|p| p.status == RootStatus::Quiescent));
    }

    #[test]
    fn random_pair_has_sixteen_short_and_long_roots_per_active_point() {
        let (a, b) = (frame3(0, 1), frame3(1, 2));
        let roots = build_roots(&table_for(&a, &b), &MixityConfig::default()).unwrap();
        let mut active = 0;
        for p in roots.roots.iter().flatten() {
            if p.status == RootStatus::Active {
                active += 1;
                assert_eq!((p.short.len(), p.long.len()), (16, 16));
                for (s, l) in p.short.iter().zip(&p.long) {
                    assert_eq!(s.signum(), l.signum());
                }
            } else {
                assert!(p.short.is_empty() && p.long.is_empty());
            }
        }
        assert!(active > 0);
    }

    #[test]
    fn equal_rank_values_give_equal_variants() {
        let short = solve_roots(5.0, 2.0, 1, 4, 0.4, &MixityConfig::default()).unwrap();
        let long = solve_roots(5.0, 2.0, 1, 4, 0.4, &MixityConfig::default()).unwrap();
        assert_eq!(short, long);
    }

    #[test]
    fn selected_phi_is_the_grid_minimum() {
        let cfg = MixityConfig::default();
        let (a, b) = (frame3(0, 11), frame3(1, 12));
        let table = table_for(&a, &b);
        let roots = build_roots(&table, &cfg).unwrap();
        for (d, ranks) in table.dims.iter().enumerate() {
            for i in 0..table.len() {
                let p = roots.get(d, i);
                if p.status != RootStatus::Active {
                    continue;
                }
                let score = |phi: f64| {
                    let (_, _, mut k) = root_kappas(ranks.h[i], ranks.r[i], ranks.delta_h[i], d, 4, phi, &cfg).unwrap();
                    median(&mut k)
                };
                let chosen = score(p.phi);
                for &phi in &cfg.phi_grid {
                    assert!(chosen <= score(phi));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn root_magnitude_scales_with_sqrt_of_value(
            value in 0.01f64..100.0, dh in 0.5f64..10.0, c in 0.01f64..100.0, phi in 0f64..1.0,
        ) {
            let cfg = MixityConfig::default();
            let base = solve_roots(value, dh, 2, 4, phi, &cfg).unwrap().unwrap();
            let scaled = solve_roots(c * value, dh, 2, 4, phi, &cfg).unwrap().unwrap();
            for (b, s) in base.iter().zip(&scaled) {
                prop_assert!((s - b * c.sqrt()).abs() <= 1e-9 * s.abs().max(1.0));
            }
        }
    }
}
