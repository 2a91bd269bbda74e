//! One pass of the per-pair pipeline: datum, ranks, roots, curvature.

use crate::curvature::{classify, CurvatureField};
use crate::error::Result;
use crate::frame::Frame;
use crate::lengthscale::{build_roots, LengthScaleRoots, MixityConfig};
use crate::normalize::{fit_datum, DatumFit, NormalizeConfig};
use crate::rank::RankTable;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalysisConfig {
    pub normalize: NormalizeConfig,
    pub mixity: MixityConfig,
}

/// Everything computed for one analysed frame pair at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAnalysis {
    pub datum: DatumFit,
    pub ranks: RankTable,
    pub roots: LengthScaleRoots,
    pub curvature: CurvatureField,
}

impl PairAnalysis {
    pub fn point_count(&self) -> usize {
        self.ranks.len()
    }

    pub fn dims(&self) -> usize {
        self.roots.dims
    }

    pub fn roots_per_dim(&self) -> usize {
        self.roots.root_count()
    }
}

/// Runs the pipeline on `(prev, cur)`. The datum and objective rank are taken
/// from `cur`; the Borda change spans the pair.
pub fn analyze_pair(prev: &Frame, cur: &Frame, cfg: &AnalysisConfig) -> Result<PairAnalysis> {
    if cur.valid_count() < 2 {
        return Err(crate::Error::DegenerateInput(format!(
            "pairwise analysis needs at least 2 valid points, frame has {}",
            cur.valid_count()
        )));
    }
    let datum = fit_datum(cur, &cfg.normalize)?;
    let ranks = RankTable::build(prev, cur, &datum, cfg.normalize.denominator_guard)?;
    let roots = build_roots(&ranks, &cfg.mixity)?;
    let curvature = classify(&ranks, &roots, &cfg.mixity);
    Ok(PairAnalysis {
        datum,
        ranks,
        roots,
        curvature,
    })
}
