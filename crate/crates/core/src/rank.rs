//! Borda counts, objective ranks and their change across a frame pair.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::normalize::{pair_alpha_guarded, DatumFit};

/// Pairwise-victory Borda count: one point per beaten value, half a point per tie.
///
/// Computed by sorting; equals the `O(N^2)` tally exactly.
pub fn borda_scores(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "Borda count needs at least 2 valid points, got {}",
            values.len()
        )));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut scores = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let v = values[order[start]];
        let end = start + order[start..].iter().take_while(|&&i| values[i] == v).count();
        let tied = (end - start) as f64;
        // beaten: everything below the run; ties: the rest of the run.
        let score = start as f64 + 0.5 * (tied - 1.0);
        for &i in &order[start..end] {
            scores[i] = score;
        }
        start = end;
    }
    Ok(scores)
}

/// Borda counts of channel `dim` over the frame's valid points.
pub fn borda_count(frame: &Frame, dim: usize) -> Result<Vec<f64>> {
    borda_scores(&frame.channel(dim))
}

/// Objective rank from normalised pairwise margins, on the Borda scale:
/// `R_A = (N - 1)/2 + 1/2 * sum_B alpha_AB`.
///
/// Degenerate pairs are skipped; the count of skipped ordered pairs is returned.
pub fn objective_scores(values: &[f64], m_bar: f64, guard: f64) -> Result<(Vec<f64>, usize)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::DegenerateInput(format!(
            "objective rank needs at least 2 valid points, got {n}"
        )));
    }
    let mut degenerate = 0;
    let mut ranks = Vec::with_capacity(n);
    for (a, &u_a) in values.iter().enumerate() {
        let mut net = 0.0;
        for (b, &u_b) in values.iter().enumerate() {
            if a == b {
                continue;
            }
            match pair_alpha_guarded(u_a, u_b, m_bar, guard) {
                Ok(alpha) => net += alpha,
                Err(_) => degenerate += 1,
            }
        }
        ranks.push((n as f64 - 1.0) / 2.0 + 0.5 * net);
    }
    if degenerate == n * (n - 1) {
        return Err(Error::RankUnavailable { dimension: usize::MAX });
    }
    Ok((ranks, degenerate))
}

pub fn objective_rank(frame: &Frame, dim: usize, m_bar: f64, guard: f64) -> Result<Vec<f64>> {
    objective_scores(&frame.channel(dim), m_bar, guard)
        .map(|(r, _)| r)
        .map_err(|e| match e {
            Error::RankUnavailable { .. } => Error::RankUnavailable { dimension: dim },
            e => e,
        })
}

/// Per-point change in Borda count between two frames.
pub fn delta_borda(prev: &[f64], cur: &[f64]) -> Result<Vec<f64>> {
    if prev.len() != cur.len() {
        return Err(Error::Alignment(format!(
            "{} points before, {} after",
            prev.len(),
            cur.len()
        )));
    }
    Ok(cur.iter().zip(prev).map(|(c, p)| c - p).collect())
}

/// Ranks of one dimension across an analysed pair. Vectors run over the
/// table's valid points.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionRanks {
    pub h_prev: Vec<f64>,
    pub h: Vec<f64>,
    pub r: Vec<f64>,
    pub delta_h: Vec<f64>,
    pub degenerate_pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    /// Row-major indices of the valid points shared by both frames.
    pub points: Vec<usize>,
    pub dims: Vec<DimensionRanks>,
}

impl RankTable {
    /// Ranks for the pair `(prev, cur)`; the objective rank uses `cur` and its datum.
    pub fn build(prev: &Frame, cur: &Frame, datum: &DatumFit, guard: f64) -> Result<Self> {
        if prev.width() != cur.width() || prev.height() != cur.height() || prev.dims() != cur.dims() {
            return Err(Error::Alignment(format!(
                "frame shapes differ: {}x{}x{} vs {}x{}x{}",
                prev.width(),
                prev.height(),
                prev.dims(),
                cur.width(),
                cur.height(),
                cur.dims()
            )));
        }
        if prev.mask() != cur.mask() {
            return Err(Error::Alignment("valid-point sets differ".into()));
        }
        let mut dims = Vec::with_capacity(cur.dims());
        for d in 0..cur.dims() {
            let h_prev = borda_count(prev, d)?;
            let h = borda_count(cur, d)?;
            let (r, degenerate_pairs) = objective_scores(&cur.channel(d), datum.m_bar(d), guard)
                .map_err(|e| match e {
                    Error::RankUnavailable { .. } => Error::RankUnavailable { dimension: d },
                    e => e,
                })?;
            let delta_h = delta_borda(&h_prev, &h)?;
            dims.push(DimensionRanks {
                h_prev,
                h,
                r,
                delta_h,
                degenerate_pairs,
            });
        }
        Ok(RankTable {
            points: cur.valid_points(),
            dims,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `point,dimension,h,r,delta_h`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point,dimension,h,r,delta_h\n");
        for (d, ranks) in self.dims.iter().enumerate() {
            for (i, p) in self.points.iter().enumerate() {
                let _ = writeln!(out, "{p},{d},{},{},{}", ranks.h[i], ranks.r[i], ranks.delta_h[i]);
            }
        }
        out
    }
}
