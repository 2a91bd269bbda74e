//! Pairwise normalisation and the datum constant.
//!
//! For two points `A`, `B` and a datum `m`, the normalised relation is
//! `alpha = (u_A - u_B) / (u_A + u_B + 2m)`. Each ordered pair gets its own
//! datum by requiring `d alpha / d u_A = 1` with `u_B` held fixed, which is the
//! quadratic `4m^2 + (4s - 2)m + (s^2 - 2u_B) = 0` with `s = u_A + u_B`. The
//! global datum is the least-squares constant through all pair data.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::frame::Frame;

/// Default guard on `|u_A + u_B + 2m|`.
pub const DENOMINATOR_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizeConfig {
    pub denominator_guard: f64,
    /// Use `m = 0` for a dimension with no fittable pair instead of failing.
    pub datum_fallback_zero: bool,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        NormalizeConfig {
            denominator_guard: DENOMINATOR_GUARD,
            datum_fallback_zero: false,
        }
    }
}

/// `alpha` for one pair, with the default denominator guard.
pub fn pair_alpha(u_a: f64, u_b: f64, m_bar: f64) -> Result<f64> {
    pair_alpha_guarded(u_a, u_b, m_bar, DENOMINATOR_GUARD)
}

pub fn pair_alpha_guarded(u_a: f64, u_b: f64, m_bar: f64, guard: f64) -> Result<f64> {
    let denominator = u_a + u_b + 2.0 * m_bar;
    if !(denominator.abs() > guard) {
        return Err(Error::DegeneratePair { denominator });
    }
    Ok((u_a - u_b) / denominator)
}

/// Solves the gradient-match quadratic for one ordered pair and returns the
/// real root of smaller magnitude.
///
/// The roots are `m = (1 - 2s +/- sqrt(1 - 4(u_A - u_B))) / 4`, the quadratic's
/// discriminant being `4 - 16(u_A - u_B)`. Equal magnitudes resolve to the
/// larger root.
pub fn pair_datum(u_a: f64, u_b: f64) -> Result<f64> {
    let discriminant = 4.0 - 16.0 * (u_a - u_b);
    if discriminant.is_nan() || discriminant < 0.0 {
        return Err(Error::NoRealDatum { discriminant });
    }
    let s = u_a + u_b;
    let base = 1.0 - 2.0 * s;
    let half_root = discriminant.sqrt() / 2.0;
    let plus = (base + half_root) / 4.0;
    let minus = (base - half_root) / 4.0;
    let m = match (plus.is_finite(), minus.is_finite()) {
        (true, true) => {
            if minus.abs() < plus.abs() {
                minus
            } else {
                plus
            }
        }
        (true, false) => plus,
        (false, true) => minus,
        (false, false) => {
            return Err(Error::DatumDropped(format!(
                "both roots non-finite for u_A={u_a}, u_B={u_b}"
            )))
        }
    };
    Ok(m)
}

/// Datum for the ordered pair `(a, b)` in dimension `dim` of `frame`.
///
/// Requires `a` to have a valid grid neighbour and the channel to vary around it;
/// otherwise there is no spatial gradient to match.
pub fn fit_pair_datum(frame: &Frame, a: usize, b: usize, dim: usize) -> Result<f64> {
    if !frame.is_valid(a) || !frame.is_valid(b) {
        return Err(Error::DatumDropped(format!("pair ({a}, {b}) has an invalid point")));
    }
    if !has_gradient(frame, a, dim) {
        return Err(Error::DatumDropped(format!(
            "channel {dim} is locally constant at point {a}"
        )));
    }
    pair_datum(frame.value(a, dim), frame.value(b, dim))
}

fn has_gradient(frame: &Frame, point: usize, dim: usize) -> bool {
    let u = frame.value(point, dim);
    let mut neighbors = frame.neighbors(point).peekable();
    neighbors.peek().is_some() && neighbors.any(|q| frame.value(q, dim) != u)
}

/// Datum for one pair, keyed by the row-major point indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDatum {
    pub a: usize,
    pub b: usize,
    pub m: f64,
}

/// Global datum of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionDatum {
    pub dimension: usize,
    pub m_bar: f64,
    /// RMS of `d alpha / d u_A - 1` over retained pairs, evaluated at `m_bar`.
    pub rms_residual: f64,
    pub pairs: Vec<PairDatum>,
    pub dropped: usize,
    /// Set when no pair could be fitted and `m = 0` was substituted.
    pub fallback: bool,
}

impl DimensionDatum {
    pub fn retained(&self) -> usize {
        self.pairs.len()
    }
}

/// Datum constants for every dimension of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DatumFit {
    pub dims: Vec<DimensionDatum>,
}

impl DatumFit {
    pub fn m_bar(&self, dim: usize) -> f64 {
        self.dims[dim].m_bar
    }

    /// `dimension,retained,dropped,m_bar,rms_residual,fallback`
    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("dimension,retained,dropped,m_bar,rms_residual,fallback\n");
        for d in &self.dims {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                d.dimension,
                d.retained(),
                d.dropped,
                d.m_bar,
                d.rms_residual,
                d.fallback
            );
        }
        out
    }
}

/// Least-squares constant through the pair data of dimension `dim`.
pub fn fit_global_datum(frame: &Frame, dim: usize, cfg: &NormalizeConfig) -> Result<DimensionDatum> {
    let points = frame.valid_points();
    let mut pairs = Vec::new();
    let mut dropped = 0;
    for &a in &points {
        for &b in &points {
            if a == b {
                continue;
            }
            match fit_pair_datum(frame, a, b, dim) {
                Ok(m) => pairs.push(PairDatum { a, b, m }),
                Err(e) => {
                    log::trace!("datum pair ({a}, {b}) dim {dim} dropped: {e}");
                    dropped += 1;
                }
            }
        }
    }
    if pairs.is_empty() {
        if cfg.datum_fallback_zero {
            log::warn!("dimension {dim}: no pair datum, falling back to m = 0");
            return Ok(DimensionDatum {
                dimension: dim,
                m_bar: 0.0,
                rms_residual: 0.0,
                pairs,
                dropped,
                fallback: true,
            });
        }
        return Err(Error::DatumUnavailable { dimension: dim });
    }
    let m_bar = least_squares_constant(pairs.iter().map(|p| p.m));
    let rms_residual = gradient_residual(frame, dim, &pairs, m_bar, cfg.denominator_guard);
    Ok(DimensionDatum {
        dimension: dim,
        m_bar,
        rms_residual,
        pairs,
        dropped,
        fallback: false,
    })
}

/// Fits every dimension of the frame.
pub fn fit_datum(frame: &Frame, cfg: &NormalizeConfig) -> Result<DatumFit> {
    let dims = (0..frame.dims())
        .map(|d| fit_global_datum(frame, d, cfg))
        .collect::<Result<_>>()?;
    Ok(DatumFit { dims })
}

/// The constant minimising the squared distance to every sample: their mean,
/// summed in input order.
pub fn least_squares_constant(samples: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = samples
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn gradient_residual(frame: &Frame, dim: usize, pairs: &[PairDatum], m_bar: f64, guard: f64) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for p in pairs {
        let (u_a, u_b) = (frame.value(p.a, dim), frame.value(p.b, dim));
        let den = u_a + u_b + 2.0 * m_bar;
        if !(den.abs() > guard) {
            continue;
        }
        let slope = (2.0 * u_b + 2.0 * m_bar) / (den * den);
        sum += (slope - 1.0).powi(2);
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn identity_gap(u_a: f64, u_b: f64, m: f64) -> f64 {
        ((2.0 * u_b + 2.0 * m) - (u_a + u_b + 2.0 * m).powi(2)).abs()
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(pair_alpha(5.0, 5.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(pair_alpha(2.0, 1.0, 0.0).unwrap(), 1.0 / 3.0);
        assert!(matches!(pair_alpha(1.0, -1.0, 0.0), Err(Error::DegeneratePair { .. })));
    }

    #[test]
    fn pair_datum_examples() {
        // 4m^2 + 2m + 1 = 0 has discriminant -12.
        match pair_datum(1.0, 0.0) {
            Err(Error::NoRealDatum { discriminant }) => assert_abs_diff_eq!(discriminant, -12.0),
            other => panic!("expected no real datum, got {other:?}"),
        }
        // 4m^2 - 2m = 0 has roots {0, 0.5}.
        assert_eq!(pair_datum(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn pair_datum_is_a_root_of_the_expanded_quadratic() {
        for &(u_a, u_b) in &[(0.1, 0.3), (3.0, 2.9), (-4.0, 7.5), (120.0, 130.0)] {
            let m = pair_datum(u_a, u_b).unwrap();
            let s: f64 = u_a + u_b;
            let poly = 4.0 * m * m + (4.0 * s - 2.0) * m + (s * s - 2.0 * u_b);
            assert!(poly.abs() < 1e-9 * (1.0 + s * s), "poly {poly} at {u_a},{u_b}");
            // The other root is farther from zero.
            let other = -(4.0 * s - 2.0) / 4.0 - m;
            assert!(m.abs() <= other.abs() + 1e-12);
        }
    }

    #[test]
    fn global_datum_of_two_pairs_is_their_mean() {
        assert_eq!(least_squares_constant([1.0, 3.0]), 2.0);
    }

    #[test]
    fn single_pair_fit_is_exact() {
        // Two points: only (A=0, B=1) with u_A <= u_B + 1/4 has a real datum.
        let f = Frame::from_values(0, 2, 1, 2, vec![0.2, 1.0, 0.9, 1.0]).unwrap();
        let fit = fit_global_datum(&f, 0, &NormalizeConfig::default()).unwrap();
        assert_eq!(fit.retained(), 1);
        assert_eq!(fit.dropped, 1);
        assert_eq!(fit.m_bar, fit.pairs[0].m);
        assert!(fit.rms_residual < 1e-12);
    }

    #[test]
    fn ramp_residual_matches_finite_difference_slopes() {
        // 3x3 linear ramp u(x) = x along the columns.
        let values: Vec<f64> = (0..9).flat_map(|p| [(p % 3) as f64, 1.0]).collect();
        let f = Frame::from_values(0, 3, 3, 2, values).unwrap();
        let fit = fit_global_datum(&f, 0, &NormalizeConfig::default()).unwrap();

        let mut sum = 0.0;
        let mut n = 0;
        let mut pair_sum = 0.0;
        for a in 0..9 {
            for b in 0..9 {
                if a == b {
                    continue;
                }
                let (u_a, u_b) = ((a % 3) as f64, (b % 3) as f64);
                let Ok(m) = pair_datum(u_a, u_b) else { continue };
                assert!(identity_gap(u_a, u_b, m) < 1e-9);
                pair_sum += m;
                n += 1;
            }
        }
        let m_bar = pair_sum / n as f64;
        assert_abs_diff_eq!(fit.m_bar, m_bar, epsilon = 1e-12);
        for a in 0..9 {
            for b in 0..9 {
                let (u_a, u_b) = ((a % 3) as f64, (b % 3) as f64);
                if a == b || pair_datum(u_a, u_b).is_err() {
                    continue;
                }
                let h = 1e-6;
                let slope = (pair_alpha(u_a + h, u_b, m_bar).unwrap()
                    - pair_alpha(u_a - h, u_b, m_bar).unwrap())
                    / (2.0 * h);
                sum += (slope - 1.0).powi(2);
            }
        }
        let oracle = (sum / n as f64).sqrt();
        assert_abs_diff_eq!(fit.rms_residual, oracle, epsilon = 1e-6);
    }

    #[test]
    fn constant_channel_has_no_datum_unless_fallback() {
        let f = Frame::from_values(0, 2, 2, 2, vec![1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]).unwrap();
        assert!(matches!(
            fit_global_datum(&f, 0, &NormalizeConfig::default()),
            Err(Error::DatumUnavailable { dimension: 0 })
        ));
        let cfg = NormalizeConfig {
            datum_fallback_zero: true,
            ..Default::default()
        };
        let fit = fit_global_datum(&f, 0, &cfg).unwrap();
        assert!(fit.fallback);
        assert_eq!(fit.m_bar, 0.0);
    }

    #[test]
    fn diagnostics_csv_lists_every_dimension() {
        let values: Vec<f64> = (0..9).flat_map(|p| [(p % 3) as f64 * 0.1, (p / 3) as f64 * 0.1]).collect();
        let f = Frame::from_values(0, 3, 3, 2, values).unwrap();
        let csv = fit_datum(&f, &NormalizeConfig::default()).unwrap().diagnostics_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("dimension,retained,dropped,m_bar,rms_residual,fallback"));
    }

    #[test]
    fn global_datum_beats_grid_scan() {
        let samples = [0.3, -1.2, 2.5, 0.7, 0.0];
        let best = least_squares_constant(samples);
        let cost = |c: f64| samples.iter().map(|m| (m - c).powi(2)).sum::<f64>();
        for k in -400..=400 {
            let c = k as f64 * 0.01;
            assert!(cost(best) <= cost(c) + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn alpha_is_antisymmetric(u_a in -1e3f64..1e3, u_b in -1e3f64..1e3, m in -1e3f64..1e3) {
            if let (Ok(ab), Ok(ba)) = (pair_alpha(u_a, u_b, m), pair_alpha(u_b, u_a, m)) {
                prop_assert_eq!(ab, -ba);
            }
        }

        #[test]
        fn alpha_is_bounded_for_positive_data(u_a in 1e-6f64..1e3, u_b in 1e-6f64..1e3, m in 0f64..1e3) {
            prop_assert!(pair_alpha(u_a, u_b, m).unwrap().abs() < 1.0);
        }

        #[test]
        fn retained_pair_datum_satisfies_identity(u_a in -50f64..50.0, u_b in -50f64..50.0) {
            if let Ok(m) = pair_datum(u_a, u_b) {
                prop_assert!(identity_gap(u_a, u_b, m) < 1e-9);
            } else {
                prop_assert!(u_a - u_b > 0.25);
            }
        }
    }
}
