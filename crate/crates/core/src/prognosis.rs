//! Chains, trigger bookkeeping, the global transcendation index (GTI) and the
//! composite failure prediction.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use crate::curvature::CurvatureField;
use crate::error::{Error, Result};

/// Lowest root category that marks local instability.
pub const UNSTABLE_CATEGORY: u8 = 5;

/// Longest rank-contiguous run of points whose category is at least 5.
///
/// Points are ordered by rank; among equal ranks flagged points come first so
/// ties never split a run. Returns the members (indices into `ranks`) in rank
/// order.
pub fn longest_chain(categories: &[u8], ranks: &[f64]) -> Vec<usize> {
    assert_eq!(categories.len(), ranks.len(), "one category per ranked point");
    let flagged = |i: usize| categories[i] >= UNSTABLE_CATEGORY;
    let mut order: Vec<usize> = (0..ranks.len()).collect();
    order.sort_by(|&a, &b| {
        ranks[a]
            .partial_cmp(&ranks[b])
            .unwrap_or(Ordering::Equal)
            .then_with(|| flagged(b).cmp(&flagged(a)))
    });
    let mut best: &[usize] = &[];
    let mut start = 0;
    while start < order.len() {
        if !flagged(order[start]) {
            start += 1;
            continue;
        }
        let len = order[start..].iter().take_while(|&&i| flagged(i)).count();
        if len > best.len() {
            best = &order[start..start + len];
        }
        start += len;
    }
    best.to_vec()
}

/// Chain of one (dimension, root).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainEntry {
    pub dim: usize,
    pub root: usize,
    pub max_chain_length: usize,
    /// Point indices of the longest chain, in rank order.
    pub members: Vec<usize>,
    pub triggered_short: bool,
    pub triggered_long: bool,
}

impl ChainEntry {
    pub fn new(dim: usize, root: usize, members: Vec<usize>, critical_short: f64, critical_long: f64) -> Self {
        let len = members.len();
        ChainEntry {
            dim,
            root,
            max_chain_length: len,
            members,
            triggered_short: len as f64 > critical_short,
            triggered_long: len as f64 > critical_long,
        }
    }
}

/// Chains for every (dimension, root) of a pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainReport {
    pub entries: Vec<ChainEntry>,
}

impl ChainReport {
    pub fn max_length(&self) -> usize {
        self.entries.iter().map(|e| e.max_chain_length).max().unwrap_or(0)
    }

    /// Entries whose chain exceeds the long-term critical length.
    pub fn triggered(&self) -> impl Iterator<Item = &ChainEntry> {
        self.entries.iter().filter(|e| e.triggered_long)
    }
}

/// At least half of the roots have category 5 or higher.
pub fn point_path_dependent(categories: &[u8]) -> bool {
    point_path_dependent_at(categories, 0.5)
}

/// At least `fraction` of the roots have category 5 or higher.
pub fn point_path_dependent_at(categories: &[u8], fraction: f64) -> bool {
    let unstable = categories.iter().filter(|&&c| c >= UNSTABLE_CATEGORY).count();
    !categories.is_empty() && unstable as f64 >= fraction * categories.len() as f64
}

/// Dimensions in which `point` is path-dependent.
pub fn path_dependent_dims(field: &CurvatureField, point: usize) -> usize {
    (0..field.dims)
        .filter(|&d| point_path_dependent(&field.categories(d, point)))
        .count()
}

/// Path-dependent point count per dimension.
pub fn path_dependent_counts(field: &CurvatureField) -> Vec<usize> {
    (0..field.dims)
        .map(|d| {
            (0..field.point_count())
                .filter(|&p| point_path_dependent(&field.categories(d, p)))
                .count()
        })
        .collect()
}

/// Any point is path-dependent in any dimension.
pub fn system_path_dependent(field: &CurvatureField) -> bool {
    path_dependent_counts(field).iter().any(|&c| c > 0)
}

/// Fires when more than `vote_fraction` of `total_roots` dropped by more than
/// `drop_threshold`. Undefined drops (no baseline) never count.
pub fn energy_trigger(drops: &[Option<f64>], total_roots: usize, drop_threshold: f64, vote_fraction: f64) -> bool {
    energy_votes(drops, drop_threshold) as f64 > vote_fraction * total_roots as f64
}

pub fn energy_votes(drops: &[Option<f64>], drop_threshold: f64) -> usize {
    drops.iter().flatten().filter(|&&d| d > drop_threshold).count()
}

/// Promotes unstable roots to 8 (path-dependent in one dimension) or 9 (in
/// several) once the GTI is positive. Returns the number of promoted points.
pub fn promote_categories(field: &mut CurvatureField, gti: f64) -> usize {
    if gti <= 0.0 {
        return 0;
    }
    let mut promoted = 0;
    for p in 0..field.point_count() {
        let dims = path_dependent_dims(field, p);
        if dims == 0 {
            continue;
        }
        promoted += 1;
        let category = if dims > 1 { 9 } else { 8 };
        for d in 0..field.dims {
            for r in field.roots[d][p].iter_mut().filter(|r| r.category >= UNSTABLE_CATEGORY) {
                r.category = category;
            }
        }
    }
    promoted
}

/// `(1 - predicted/actual) * 100`.
pub fn lead_percentage(predicted: u64, actual: u64) -> Result<f64> {
    if actual == 0 {
        return Err(Error::DegenerateInput("failure frame must be positive".into()));
    }
    if predicted > actual {
        return Err(Error::LatePrediction { predicted, actual });
    }
    Ok((1.0 - predicted as f64 / actual as f64) * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    PdiOnset,
    Chain,
    Energy,
    Prediction,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::PdiOnset => "pdi_onset",
            EventKind::Chain => "chain",
            EventKind::Energy => "energy",
            EventKind::Prediction => "prediction",
        })
    }
}

/// One line of the trigger log.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerEvent {
    pub t: u64,
    pub kind: EventKind,
    pub dim: Option<usize>,
    pub root: Option<usize>,
    pub value: f64,
}

impl fmt::Display for TriggerEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
        write!(
            f,
            "t={} event={} dim={} root={} value={}",
            self.t,
            self.kind,
            opt(self.dim),
            opt(self.root),
            self.value
        )
    }
}

/// Running trigger history, folded over time indices in order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PrognosisState {
    pub pdi_onset: Option<u64>,
    pub chain_triggers: BTreeSet<u64>,
    pub energy_triggers: BTreeSet<u64>,
    pub gti: f64,
    pub predicted: Option<u64>,
    /// Previous residual curvature per (dimension, root), flattened.
    pub residuals: Option<Vec<f64>>,
}

impl PrognosisState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records system path dependency at `t`; only the first call sets the onset.
    pub fn observe_path_dependency(&mut self, t: u64) -> bool {
        if self.pdi_onset.is_none() {
            self.pdi_onset = Some(t);
            return true;
        }
        false
    }

    /// Records this step's triggers, refreshes the GTI and, the first time the
    /// composite condition holds, the predicted index. Returns a newly issued
    /// prediction.
    pub fn update_gti(&mut self, chain: bool, energy: bool, t: u64) -> Option<u64> {
        if chain {
            self.chain_triggers.insert(t);
        }
        if energy {
            self.energy_triggers.insert(t);
        }
        let both = self.first_after_onset(&self.chain_triggers).is_some()
            && self.first_after_onset(&self.energy_triggers).is_some();
        self.gti = if both { 1.0 } else { 0.0 };
        if self.predicted.is_none() {
            self.predicted = self.composite_prediction();
            return self.predicted;
        }
        None
    }

    fn first_after_onset(&self, set: &BTreeSet<u64>) -> Option<u64> {
        let onset = self.pdi_onset?;
        set.range(onset..).next().copied()
    }

    /// Index by which every phenomenon has occurred after onset.
    pub fn composite_prediction(&self) -> Option<u64> {
        let chain = self.first_after_onset(&self.chain_triggers)?;
        let energy = self.first_after_onset(&self.energy_triggers)?;
        Some(chain.max(energy))
    }

    /// Swaps in this step's residuals and returns the drop of each root
    /// against the previous step (`None` on the first step or a zero baseline).
    pub fn residual_drops(&mut self, current: Vec<f64>, eps: f64) -> Vec<Option<f64>> {
        let drops = match &self.residuals {
            Some(prev) if prev.len() == current.len() => prev
                .iter()
                .zip(&current)
                .map(|(&p, &c)| crate::aggregate::residual_drop(p, c, eps))
                .collect(),
            _ => vec![None; current.len()],
        };
        self.residuals = Some(current);
        drops
    }
}
