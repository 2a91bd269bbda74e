//! Composite curvature and path-dependency categories 1 to 7.

use std::fmt::Write as _;

use crate::lengthscale::{root_kappas, LengthScaleRoots, MixityConfig, RootStatus};
use crate::rank::RankTable;

/// Curvature of the change in gradient from `H/L` to `R/L~`:
/// `(R/L~ - H/L) / (L * (1 + (H/L)^2)^1.5)`.
///
/// Returns `None` when either length scale is zero (the root is quiescent).
pub fn composite_curvature(h: f64, r: f64, l: f64, l_tilde: f64) -> Option<f64> {
    if l == 0.0 || l_tilde == 0.0 || !l.is_finite() || !l_tilde.is_finite() {
        return None;
    }
    let slope = h / l;
    let kappa = (r / l_tilde - slope) / (l * (1.0 + slope * slope).powf(1.5));
    kappa.is_finite().then_some(kappa)
}

/// Path dependency index of one root.
///
/// A ratio of exactly one does not exceed its threshold. Both thresholds
/// exceeded gives 4 when some other mixity rescues the root; otherwise 5, 6 or
/// 7 by how many dimensions at the point are unstable (`cross_dim_count`).
pub fn categorize_pdi(
    abs_kappa: f64,
    kappa_short: f64,
    kappa_long: f64,
    mixity_rescue: bool,
    cross_dim_count: usize,
) -> u8 {
    let short = abs_kappa.abs() / kappa_short.abs() > 1.0;
    let long = abs_kappa.abs() / kappa_long.abs() > 1.0;
    match (short, long) {
        (false, false) => 1,
        (true, false) => 2,
        (false, true) => 3,
        (true, true) if mixity_rescue => 4,
        (true, true) if cross_dim_count > 2 => 7,
        (true, true) if cross_dim_count > 1 => 6,
        (true, true) => 5,
    }
}

/// Curvature of one root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootCurvature {
    pub kappa: f64,
    /// `1/|L|`, zero for quiescent roots.
    pub kappa_short: f64,
    /// `1/|L~|`, zero for quiescent roots.
    pub kappa_long: f64,
    pub category: u8,
    pub quiescent: bool,
}

impl RootCurvature {
    const QUIESCENT: RootCurvature = RootCurvature {
        kappa: 0.0,
        kappa_short: 0.0,
        kappa_long: 0.0,
        category: 1,
        quiescent: true,
    };
}

/// Curvatures and categories for every (dimension, point, root).
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub dims: usize,
    pub roots_per_dim: usize,
    /// Indexed `[dimension][point][root]`.
    pub roots: Vec<Vec<Vec<RootCurvature>>>,
}

impl CurvatureField {
    pub fn point_count(&self) -> usize {
        self.roots.first().map_or(0, Vec::len)
    }

    pub fn root(&self, dim: usize, point: usize, root: usize) -> &RootCurvature {
        &self.roots[dim][point][root]
    }

    pub fn categories(&self, dim: usize, point: usize) -> Vec<u8> {
        self.roots[dim][point].iter().map(|r| r.category).collect()
    }

    /// The largest category `c` such that at least half the roots reach `c`.
    pub fn point_category(&self, dim: usize, point: usize) -> u8 {
        let mut cats = self.categories(dim, point);
        cats.sort_unstable_by(|a, b| b.cmp(a));
        cats[cats.len().div_ceil(2) - 1]
    }

    /// Fraction of points per category (1 to 9) for each dimension.
    pub fn histogram(&self) -> Vec<[f64; 9]> {
        let n = self.point_count().max(1) as f64;
        (0..self.dims)
            .map(|d| {
                let mut h = [0.0; 9];
                for p in 0..self.point_count() {
                    h[self.point_category(d, p) as usize - 1] += 1.0 / n;
                }
                h
            })
            .collect()
    }

    /// `dimension,c1,...,c9` rows of point fractions.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("dimension,c1,c2,c3,c4,c5,c6,c7,c8,c9\n");
        for (d, h) in self.histogram().iter().enumerate() {
            let _ = write!(out, "{d}");
            for v in h {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Computes curvature and categories 1 to 7 from the ranks and roots of a pair.
pub fn classify(table: &RankTable, roots: &LengthScaleRoots, cfg: &MixityConfig) -> CurvatureField {
    let dims = roots.dims;
    let per_dim = roots.root_count();
    let n = table.len();
    let mut field: Vec<Vec<Vec<RootCurvature>>> = Vec::with_capacity(dims);
    for d in 0..dims {
        let ranks = &table.dims[d];
        let mut points = Vec::with_capacity(n);
        for i in 0..n {
            let pr = roots.get(d, i);
            if pr.status != RootStatus::Active {
                points.push(vec![RootCurvature::QUIESCENT; per_dim]);
                continue;
            }
            let (h, r, dh) = (ranks.h[i], ranks.r[i], ranks.delta_h[i]);
            // Ratios at every grid mixity, for the rescue test.
            let alternatives: Vec<_> = cfg
                .phi_grid
                .iter()
                .filter_map(|&phi| root_kappas(h, r, dh, d, dims, phi, cfg))
                .collect();
            let mut curv = Vec::with_capacity(per_dim);
            for k in 0..per_dim {
                let (l, lt) = (pr.short[k], pr.long[k]);
                let Some(kappa) = composite_curvature(h, r, l, lt) else {
                    curv.push(RootCurvature::QUIESCENT);
                    continue;
                };
                let (ks, kl) = (1.0 / l.abs(), 1.0 / lt.abs());
                let exceeds_both = kappa.abs() > ks && kappa.abs() > kl;
                let rescue = exceeds_both
                    && alternatives.iter().any(|(s, lg, kap)| {
                        kap[k] * s[k].abs() <= 1.0 && kap[k] * lg[k].abs() <= 1.0
                    });
                curv.push(RootCurvature {
                    kappa,
                    kappa_short: ks,
                    kappa_long: kl,
                    category: categorize_pdi(kappa.abs(), ks, kl, rescue, 1),
                    quiescent: false,
                });
            }
            points.push(curv);
        }
        field.push(points);
    }

    // A dimension counts as unstable at a point when half its roots are category 5.
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        let unstable = (0..dims)
            .filter(|&d| {
                let fives = field[d][i].iter().filter(|r| r.category == 5).count();
                2 * fives >= per_dim
            })
            .count();
        if unstable > 1 {
            for dim in field.iter_mut() {
                for r in dim[i].iter_mut().filter(|r| r.category == 5) {
                    r.category = if unstable > 2 { 7 } else { 6 };
                }
            }
        }
    }

    CurvatureField {
        dims,
        roots_per_dim: per_dim,
        roots: field,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn curvature_examples() {
        assert_eq!(composite_curvature(0.0, 0.0, 1.0, 1.0), Some(0.0));
        assert_eq!(composite_curvature(1.0, 2.0, 2.0, 4.0), Some(0.0));
        assert_abs_diff_eq!(composite_curvature(0.0, 1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(composite_curvature(1.0, 1.0, 0.0, 1.0), None);
        assert_eq!(composite_curvature(1.0, 1.0, 1.0, 0.0), None);
    }

    #[test]
    fn category_examples() {
        assert_eq!(categorize_pdi(0.5, 1.0, 2.0, false, 1), 1);
        assert_eq!(categorize_pdi(1.5, 1.0, 2.0, false, 1), 2);
        assert_eq!(categorize_pdi(1.5, 2.0, 1.0, false, 1), 3);
        assert_eq!(categorize_pdi(3.0, 1.0, 2.0, true, 1), 4);
        assert_eq!(categorize_pdi(3.0, 1.0, 2.0, false, 1), 5);
        assert_eq!(categorize_pdi(3.0, 1.0, 2.0, false, 2), 6);
        assert_eq!(categorize_pdi(3.0, 1.0, 2.0, false, 3), 7);
        // A ratio of exactly one does not exceed.
        assert_eq!(categorize_pdi(1.0, 1.0, 1.0, false, 1), 1);
    }

    proptest! {
        #[test]
        fn curvature_vanishes_iff_gradient_unchanged(
            h in -50f64..50.0, l in 0.1f64..10.0, lt in 0.1f64..10.0, g in -5f64..5.0,
        ) {
            // Pick R so that R/L~ = g, compare with H/L.
            let r = g * lt;
            let kappa = composite_curvature(h, r, l, lt).unwrap();
            let same = (g - h / l).abs() < 1e-12;
            if same {
                prop_assert!(kappa.abs() < 1e-9);
            } else {
                prop_assert!(kappa != 0.0);
                prop_assert_eq!(kappa > 0.0, g > h / l);
            }
            let r_exact = h / l * lt;
            prop_assert!(composite_curvature(h, r_exact, l, lt).unwrap().abs() < 1e-9);
        }

        #[test]
        fn category_is_monotone_in_kappa(
            a in 0f64..10.0, b in 0f64..10.0, ks in 0.1f64..5.0, kl in 0.1f64..5.0,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let rank = |c: u8| match c { 1 => 0, 2 | 3 => 1, 5 => 2, _ => unreachable!() };
            let c_lo = categorize_pdi(lo, ks, kl, false, 1);
            let c_hi = categorize_pdi(hi, ks, kl, false, 1);
            prop_assert!(rank(c_lo) <= rank(c_hi));
            if c_lo != 1 && c_hi != 5 {
                prop_assert_eq!(c_lo, c_hi);
            }
        }
    }
}
