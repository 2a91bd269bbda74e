//! Zoom-out: block-mean aggregation pyramid, residual curvature and the
//! critical chain length.
//!
//! Level 0 is the raw window. Level `k` averages `2^k x 2^k` blocks (the
//! leftover rows and columns join the last block) for as long as that leaves
//! more than a 3x3 grid; the last level always partitions the window into 3x3
//! blocks. Every level reruns the full pair analysis on the aggregated frames.

use std::fmt::Write as _;
use std::ops::Range;

use crate::analysis::{analyze_pair, AnalysisConfig, PairAnalysis};
use crate::error::{Error, Result};
use crate::frame::Frame;

/// Splits `len` cells into `count` blocks of `len / count`; the remainder joins the last.
pub fn block_ranges(len: usize, count: usize) -> Vec<Range<usize>> {
    let size = len / count;
    (0..count)
        .map(|b| {
            let end = if b + 1 == count { len } else { (b + 1) * size };
            b * size..end
        })
        .collect()
}

/// Block counts `(rows, cols)` of every pyramid level for a `rows x cols` window.
pub fn level_grids(rows: usize, cols: usize) -> Result<Vec<(usize, usize)>> {
    if rows < 3 || cols < 3 {
        return Err(Error::ZoomOutUnavailable(format!(
            "window {rows}x{cols} is smaller than 3x3"
        )));
    }
    let mut grids = vec![(rows, cols)];
    let mut block = 2;
    loop {
        let (r, c) = (rows / block, cols / block);
        if r < 3 || c < 3 || r * c <= 9 {
            break;
        }
        grids.push((r, c));
        block *= 2;
    }
    if grids.last() != Some(&(3, 3)) {
        grids.push((3, 3));
    }
    Ok(grids)
}

/// Averages each block of valid points; a block without valid points is invalid.
pub fn aggregate_frame(frame: &Frame, block_rows: usize, block_cols: usize) -> Result<Frame> {
    let rows = block_ranges(frame.height(), block_rows);
    let cols = block_ranges(frame.width(), block_cols);
    let dims = frame.dims();
    let mut values = Vec::with_capacity(block_rows * block_cols * dims);
    let mut valid = Vec::with_capacity(block_rows * block_cols);
    for rr in &rows {
        for cr in &cols {
            let mut sum = vec![0.0; dims];
            let mut n = 0usize;
            for r in rr.clone() {
                for c in cr.clone() {
                    let p = frame.index(r, c);
                    if frame.is_valid(p) {
                        sum.iter_mut().zip(frame.point(p)).for_each(|(s, v)| *s += v);
                        n += 1;
                    }
                }
            }
            valid.push(n > 0);
            values.extend(sum.into_iter().map(|s| if n > 0 { s / n as f64 } else { f64::NAN }));
        }
    }
    Frame::new(frame.time_index(), block_cols, block_rows, dims, values, valid)
}

/// Statistics of one zoom-out level for a single (dimension, root).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelStats {
    /// Raw points per aggregated point.
    pub factor: f64,
    pub points: usize,
    pub mean_abs_kappa: f64,
    pub mean_kappa_short: f64,
    pub mean_kappa_long: f64,
}

/// Zoom-out curve of one (dimension, root), finest level first.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoomOutProfile {
    pub levels: Vec<LevelStats>,
}

impl ZoomOutProfile {
    /// `factor,points,mean_abs_kappa,kappa_short,kappa_long`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("factor,points,mean_abs_kappa,kappa_short,kappa_long\n");
        for l in &self.levels {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                l.factor, l.points, l.mean_abs_kappa, l.mean_kappa_short, l.mean_kappa_long
            );
        }
        out
    }
}

/// One analysed pyramid level.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoomLevel {
    pub grid: (usize, usize),
    pub factor: f64,
    pub analysis: PairAnalysis,
}

/// The analysed pyramid of a frame pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoomOut {
    pub raw_points: usize,
    pub levels: Vec<ZoomLevel>,
}

/// Builds and analyses the aggregation pyramid of a frame pair.
pub fn build_pyramid(prev: &Frame, cur: &Frame, cfg: &AnalysisConfig) -> Result<ZoomOut> {
    let grids = level_grids(cur.height(), cur.width())?;
    let raw_points = cur.valid_count();
    let mut levels = Vec::with_capacity(grids.len());
    for (k, &(rows, cols)) in grids.iter().enumerate() {
        let analysis = if k == 0 {
            analyze_pair(prev, cur, cfg)?
        } else {
            let p = aggregate_frame(prev, rows, cols)?;
            let c = aggregate_frame(cur, rows, cols)?;
            analyze_pair(&p, &c, cfg)?
        };
        let points = analysis.point_count();
        levels.push(ZoomLevel {
            grid: (rows, cols),
            factor: raw_points as f64 / points as f64,
            analysis,
        });
    }
    Ok(ZoomOut { raw_points, levels })
}

impl ZoomOut {
    pub fn dims(&self) -> usize {
        self.levels[0].analysis.dims()
    }

    pub fn roots_per_dim(&self) -> usize {
        self.levels[0].analysis.roots_per_dim()
    }

    pub fn finest(&self) -> &PairAnalysis {
        &self.levels[0].analysis
    }

    /// Level curve of one (dimension, root). Quiescent roots count as zero in
    /// all three means.
    pub fn profile(&self, dim: usize, root: usize) -> ZoomOutProfile {
        let levels = self
            .levels
            .iter()
            .map(|level| {
                let field = &level.analysis.curvature;
                let n = field.point_count();
                let (mut k, mut ks, mut kl) = (0.0, 0.0, 0.0);
                for p in 0..n {
                    let r = field.root(dim, p, root);
                    k += r.kappa.abs();
                    ks += r.kappa_short.abs();
                    kl += r.kappa_long.abs();
                }
                let n_f = n as f64;
                LevelStats {
                    factor: level.factor,
                    points: n,
                    mean_abs_kappa: k / n_f,
                    mean_kappa_short: ks / n_f,
                    mean_kappa_long: kl / n_f,
                }
            })
            .collect();
        ZoomOutProfile { levels }
    }
}

/// Magnitude of the coarsest level's mean `|kappa|`.
pub fn residual_curvature(profile: &ZoomOutProfile) -> f64 {
    profile.levels.last().map_or(0.0, |l| l.mean_abs_kappa.abs())
}

/// Which threshold line the critical chain length is read against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainVariant {
    /// `1/L`
    Short,
    /// `1/L~`
    Long,
}

/// Critical chain length in raw-window points.
///
/// The level curve (mean `|kappa|` against `log(factor)`) is mirrored about the
/// raw scale and falls to zero as the factor goes to zero. The level-0
/// threshold is carried left as a horizontal line; its outermost crossing
/// `A` gives a factor `f_A`, and the chain length is `f_A * total / coarsest`,
/// clamped to `[1, total]`. A threshold above the whole curve, or a zero
/// threshold, never crosses at a finite scale and yields `total`.
pub fn critical_chain_length(profile: &ZoomOutProfile, total_points: usize, variant: ChainVariant) -> Result<f64> {
    critical_chain_length_in_base(profile, total_points, variant, std::f64::consts::E)
}

pub(crate) fn critical_chain_length_in_base(
    profile: &ZoomOutProfile,
    total_points: usize,
    variant: ChainVariant,
    base: f64,
) -> Result<f64> {
    let levels = &profile.levels;
    if levels.len() < 2 {
        return Err(Error::ZoomOutUnavailable("critical chain length needs at least 2 levels".into()));
    }
    let threshold = match variant {
        ChainVariant::Short => levels[0].mean_kappa_short,
        ChainVariant::Long => levels[0].mean_kappa_long,
    };
    if !threshold.is_finite() {
        return Err(Error::ZoomOutUnavailable(format!("level-0 threshold {threshold} is not finite")));
    }
    let total = total_points as f64;
    let coarsest = levels.last().expect("non-empty").points as f64;
    let scale = total / coarsest;
    if threshold < 0.0 {
        return Ok(1.0);
    }
    if threshold == 0.0 {
        return Ok(total);
    }
    let Some(log_factor) = outermost_crossing(levels, threshold, base) else {
        log::debug!("threshold {threshold} above the zoom-out curve; chain cannot trigger");
        return Ok(total);
    };
    Ok((base.powf(log_factor) * scale).clamp(1.0, total))
}

/// `log(f_A)` of the leftmost mirrored point whose curvature reaches `h`.
fn outermost_crossing(levels: &[LevelStats], h: f64, base: f64) -> Option<f64> {
    let log = |f: f64| f.ln() / base.ln();
    // Mirrored vertices from the coarsest (far left) to the raw level at 0.
    let verts: Vec<(f64, f64)> = levels
        .iter()
        .rev()
        .map(|l| (-log(l.factor), l.mean_abs_kappa))
        .collect();
    let (x_far, y_far) = verts[0];
    if y_far >= h {
        // Tail from zero curvature at factor 0, linear in the factor.
        return Some(-(x_far + log(h / y_far)));
    }
    for w in verts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y1 >= h {
            let t = (h - y0) / (y1 - y0);
            return Some(-(x0 + t * (x1 - x0)));
        }
    }
    None
}

/// Fractional drop of the residual curvature over one step; `None` without a
/// positive baseline.
pub fn residual_drop(prev: f64, cur: f64, eps: f64) -> Option<f64> {
    (prev > eps).then(|| (prev - cur) / prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn stats(factor: f64, points: usize, kappa: f64, threshold: f64) -> LevelStats {
        LevelStats {
            factor,
            points,
            mean_abs_kappa: kappa,
            mean_kappa_short: threshold,
            mean_kappa_long: threshold,
        }
    }

    #[test]
    fn block_ranges_absorb_remainder() {
        assert_eq!(block_ranges(10, 5), vec![0..2, 2..4, 4..6, 6..8, 8..10]);
        assert_eq!(block_ranges(10, 3), vec![0..3, 3..6, 6..10]);
        assert_eq!(block_ranges(5, 2), vec![0..2, 2..5]);
    }

    #[test]
    fn level_grid_examples() {
        assert_eq!(level_grids(10, 10).unwrap(), vec![(10, 10), (5, 5), (3, 3)]);
        assert_eq!(level_grids(3, 3).unwrap(), vec![(3, 3)]);
        assert_eq!(level_grids(6, 6).unwrap(), vec![(6, 6), (3, 3)]);
        assert_eq!(level_grids(24, 24).unwrap(), vec![(24, 24), (12, 12), (6, 6), (3, 3)]);
        assert!(matches!(level_grids(2, 10), Err(Error::ZoomOutUnavailable(_))));
    }

    #[test]
    fn aggregation_preserves_weighted_mean() {
        let values: Vec<f64> = (0..70).map(|i| (i as f64 * 0.37).sin() * 10.0).collect();
        let f = Frame::from_values(0, 7, 5, 2, values).unwrap();
        let g = aggregate_frame(&f, 3, 3).unwrap();
        let rows = block_ranges(5, 3);
        let cols = block_ranges(7, 3);
        for d in 0..2 {
            let raw: f64 = f.channel(d).iter().sum::<f64>() / 35.0;
            let mut weighted = 0.0;
            for (bi, rr) in rows.iter().enumerate() {
                for (bj, cr) in cols.iter().enumerate() {
                    weighted += g.value(g.index(bi, bj), d) * (rr.len() * cr.len()) as f64;
                }
            }
            assert_abs_diff_eq!(weighted / 35.0, raw, epsilon = 1e-12);
        }
    }

    #[test]
    fn midpoint_crossing() {
        // Mirrored curve through (log 1, 1.0) and (-log 2, 0.5); threshold 0.75.
        let profile = ZoomOutProfile {
            levels: vec![stats(1.0, 100, 1.0, 0.75), stats(2.0, 9, 0.5, 0.0)],
        };
        let expected = 2f64.sqrt() * 100.0 / 9.0;
        let got = critical_chain_length(&profile, 100, ChainVariant::Long).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-9);
    }

    #[test]
    fn zero_or_unreachable_threshold_gives_total() {
        let mut profile = ZoomOutProfile {
            levels: vec![stats(1.0, 100, 1.0, 0.0), stats(4.0, 25, 0.5, 0.0), stats(100.0 / 9.0, 9, 0.2, 0.0)],
        };
        assert_eq!(critical_chain_length(&profile, 100, ChainVariant::Short).unwrap(), 100.0);
        profile.levels[0].mean_kappa_short = 5.0;
        assert_eq!(critical_chain_length(&profile, 100, ChainVariant::Short).unwrap(), 100.0);
    }

    #[test]
    fn single_level_has_no_chain_length() {
        let profile = ZoomOutProfile {
            levels: vec![stats(1.0, 9, 1.0, 0.5)],
        };
        assert!(critical_chain_length(&profile, 9, ChainVariant::Long).is_err());
    }

    #[test]
    fn log_base_does_not_matter() {
        let profile = ZoomOutProfile {
            levels: vec![stats(1.0, 100, 0.9, 0.6), stats(4.0, 25, 0.5, 0.0), stats(100.0 / 9.0, 9, 0.3, 0.0)],
        };
        let e = critical_chain_length_in_base(&profile, 100, ChainVariant::Long, std::f64::consts::E).unwrap();
        let ten = critical_chain_length_in_base(&profile, 100, ChainVariant::Long, 10.0).unwrap();
        assert_abs_diff_eq!(e, ten, epsilon = 1e-9);
    }

    #[test]
    fn residual_examples() {
        let profile = ZoomOutProfile {
            levels: vec![stats(1.0, 100, 0.1, 0.0), stats(100.0 / 9.0, 9, 0.8, 0.0)],
        };
        assert_eq!(residual_curvature(&profile), 0.8);
        assert_abs_diff_eq!(residual_drop(10.0, 1.5, 1e-12).unwrap(), 0.85);
        assert_abs_diff_eq!(residual_drop(10.0, 9.0, 1e-12).unwrap(), 0.10);
        assert_abs_diff_eq!(residual_drop(10.0, 12.0, 1e-12).unwrap(), -0.2);
        assert_eq!(residual_drop(0.0, 1.0, 1e-12), None);
        assert_eq!(residual_drop(3.0, 3.0, 1e-12), Some(0.0));
        assert_eq!(residual_drop(3.0, 0.0, 1e-12), Some(1.0));
    }

    proptest! {
        #[test]
        fn chain_length_is_non_increasing_in_threshold(
            ys in prop::collection::vec(0.01f64..5.0, 3),
            h1 in 0.001f64..5.0,
            h2 in 0.001f64..5.0,
        ) {
            let max = ys.iter().cloned().fold(0.0, f64::max);
            prop_assume!(h1 <= max && h2 <= max);
            let (lo, hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
            let profile = |h: f64| ZoomOutProfile {
                levels: vec![stats(1.0, 100, ys[0], h), stats(4.0, 25, ys[1], 0.0), stats(100.0 / 9.0, 9, ys[2], 0.0)],
            };
            let at_lo = critical_chain_length(&profile(lo), 100, ChainVariant::Long).unwrap();
            let at_hi = critical_chain_length(&profile(hi), 100, ChainVariant::Long).unwrap();
            prop_assert!(at_hi <= at_lo + 1e-9);
            prop_assert!((1.0..=100.0).contains(&at_lo));
        }
    }
}
