//! Pair-by-pair orchestration, configuration and reports.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::aggregate::{build_pyramid, critical_chain_length, residual_curvature, ChainVariant};
use crate::analysis::AnalysisConfig;
use crate::error::{Error, Result};
use crate::frame::{extract_window, stride_pairs, Frame, FrameDir, WindowSpec, XYZM_DIMS};
use crate::kv::KeyValues;
use crate::prognosis::{
    energy_trigger, energy_votes, lead_percentage, longest_chain, point_path_dependent_at, promote_categories,
    ChainEntry, ChainReport, EventKind, PrognosisState, TriggerEvent,
};
use crate::synth::{Manifest, MANIFEST_FILE};

/// When the critical chain lengths are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainRecalc {
    Every,
    Once,
}

impl FromStr for ChainRecalc {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "every" => Ok(ChainRecalc::Every),
            "once" => Ok(ChainRecalc::Once),
            other => Err(Error::Config(format!("chain_recalc must be `every` or `once`, got `{other}`"))),
        }
    }
}

impl fmt::Display for ChainRecalc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChainRecalc::Every => "every",
            ChainRecalc::Once => "once",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub stride: usize,
    pub window: Option<WindowSpec>,
    /// Added to frame indices when reporting frame numbers.
    pub frame_offset: u64,
    pub drop_threshold: f64,
    /// Fraction of a point's roots that must be unstable.
    pub root_vote: f64,
    /// Fraction of all roots whose residual must drop.
    pub system_vote: f64,
    pub chain_recalc: ChainRecalc,
    pub dims: usize,
    pub residual_eps: f64,
    pub analysis: AnalysisConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            stride: 1,
            window: None,
            frame_offset: 0,
            drop_threshold: 0.80,
            root_vote: 0.5,
            system_vote: 0.20,
            chain_recalc: ChainRecalc::Every,
            dims: XYZM_DIMS,
            residual_eps: 1e-12,
            analysis: AnalysisConfig::default(),
        }
    }
}

const CONFIG_KEYS: &[&str] = &[
    "stride",
    "window",
    "frame_offset",
    "drop_threshold",
    "root_vote",
    "system_vote",
    "chain_recalc",
    "phi_grid",
    "eps_den",
    "eps_dh",
    "residual_eps",
    "dims",
    "datum_fallback_zero",
];

/// Parses `0,0.1,0.5,1`.
pub fn parse_phi_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("phi grid entry `{}`: {e}", p.trim())))
        })
        .collect()
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        for (name, v) in [
            ("drop_threshold", self.drop_threshold),
            ("root_vote", self.root_vote),
            ("system_vote", self.system_vote),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} = {v} outside (0, 1)")));
            }
        }
        if self.dims < 2 {
            return Err(Error::Config(format!("dims = {} below 2", self.dims)));
        }
        self.analysis.mixity.validate()
    }

    /// Applies the keys of a `key = value` config on top of `self`.
    pub fn apply_text(mut self, text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        kv.reject_unknown(CONFIG_KEYS)?;
        if let Some(v) = kv.parsed("stride")? {
            self.stride = v;
        }
        if let Some(v) = kv.parsed("window")? {
            self.window = Some(v);
        }
        if let Some(v) = kv.parsed("frame_offset")? {
            self.frame_offset = v;
        }
        if let Some(v) = kv.parsed("drop_threshold")? {
            self.drop_threshold = v;
        }
        if let Some(v) = kv.parsed("root_vote")? {
            self.root_vote = v;
        }
        if let Some(v) = kv.parsed("system_vote")? {
            self.system_vote = v;
        }
        if let Some(v) = kv.get("chain_recalc") {
            self.chain_recalc = v.parse()?;
        }
        if let Some(v) = kv.get("phi_grid") {
            self.analysis.mixity.phi_grid = parse_phi_grid(v)?;
        }
        if let Some(v) = kv.parsed("eps_den")? {
            self.analysis.normalize.denominator_guard = v;
        }
        if let Some(v) = kv.parsed("eps_dh")? {
            self.analysis.mixity.quiescence_threshold = v;
        }
        if let Some(v) = kv.parsed("residual_eps")? {
            self.residual_eps = v;
        }
        if let Some(v) = kv.parsed("dims")? {
            self.dims = v;
        }
        if let Some(v) = kv.parsed("datum_fallback_zero")? {
            self.analysis.normalize.datum_fallback_zero = v;
        }
        Ok(self)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        EngineConfig::default().apply_text(&text)
    }

    /// Every setting as `key = value` lines; parses back through [`EngineConfig::apply_text`].
    pub fn to_text(&self) -> String {
        let grid: Vec<String> = self.analysis.mixity.phi_grid.iter().map(f64::to_string).collect();
        let mut out = String::new();
        let _ = writeln!(out, "stride = {}", self.stride);
        if let Some(w) = &self.window {
            let _ = writeln!(out, "window = {w}");
        }
        let _ = writeln!(out, "frame_offset = {}", self.frame_offset);
        let _ = writeln!(out, "drop_threshold = {}", self.drop_threshold);
        let _ = writeln!(out, "root_vote = {}", self.root_vote);
        let _ = writeln!(out, "system_vote = {}", self.system_vote);
        let _ = writeln!(out, "chain_recalc = {}", self.chain_recalc);
        let _ = writeln!(out, "phi_grid = {}", grid.join(","));
        let _ = writeln!(out, "eps_den = {}", self.analysis.normalize.denominator_guard);
        let _ = writeln!(out, "eps_dh = {}", self.analysis.mixity.quiescence_threshold);
        let _ = writeln!(out, "residual_eps = {}", self.residual_eps);
        let _ = writeln!(out, "dims = {}", self.dims);
        let _ = writeln!(out, "datum_fallback_zero = {}", self.analysis.normalize.datum_fallback_zero);
        out
    }
}

/// One row of the per-pair CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub t: u64,
    pub frame: u64,
    pub path_dependent_points: usize,
    pub chain_max: usize,
    /// Smallest long-term critical chain length over all roots.
    pub critical_long: f64,
    pub chain_trigger: bool,
    pub energy_votes: usize,
    pub energy_trigger: bool,
    pub residual_mean: f64,
    pub gti: f64,
    /// Fraction of (point, dimension) cells per category 1 to 9.
    pub histogram: [f64; 9],
}

pub const PAIR_CSV_HEADER: &str = "t,frame,path_dependent,chain_max,critical_long,chain_trigger,energy_votes,energy_trigger,residual_mean,gti,c1,c2,c3,c4,c5,c6,c7,c8,c9";

impl fmt::Display for PairRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.frame,
            self.path_dependent_points,
            self.chain_max,
            self.critical_long,
            u8::from(self.chain_trigger),
            self.energy_votes,
            u8::from(self.energy_trigger),
            self.residual_mean,
            self.gti
        )?;
        for h in &self.histogram {
            write!(f, ",{h}")?;
        }
        Ok(())
    }
}

/// Streaming prognosis over frame pairs.
#[derive(Debug, Clone)]
pub struct Engine {
    cfg: EngineConfig,
    state: PrognosisState,
    critical: Option<Vec<(f64, f64)>>,
    frames: Vec<u64>,
    events: Vec<TriggerEvent>,
    rows: Vec<PairRow>,
    last_chains: ChainReport,
}

impl Engine {
    pub fn new(cfg: EngineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Engine {
            cfg,
            state: PrognosisState::new(),
            critical: None,
            frames: Vec::new(),
            events: Vec::new(),
            rows: Vec::new(),
            last_chains: ChainReport::default(),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn state(&self) -> &PrognosisState {
        &self.state
    }

    pub fn events(&self) -> &[TriggerEvent] {
        &self.events
    }

    pub fn rows(&self) -> &[PairRow] {
        &self.rows
    }

    pub fn last_chains(&self) -> &ChainReport {
        &self.last_chains
    }

    /// Frame number of analysed time index `t` (1-based).
    pub fn frame_of(&self, t: u64) -> Option<u64> {
        self.frames.get(usize::try_from(t).ok()?.checked_sub(1)?).copied()
    }

    pub fn predicted_frame(&self) -> Option<u64> {
        self.state.predicted.and_then(|t| self.frame_of(t))
    }

    fn window(&self, frame: &Frame) -> Result<Frame> {
        match &self.cfg.window {
            Some(w) => extract_window(frame, w),
            None => Ok(frame.clone()),
        }
    }

    /// Analyses the next pair and folds it into the prognosis state.
    pub fn step(&mut self, prev: &Frame, cur: &Frame) -> Result<&PairRow> {
        if cur.dims() != self.cfg.dims || prev.dims() != self.cfg.dims {
            return Err(Error::Config(format!(
                "configured for {} dimensions, frames carry {}",
                self.cfg.dims,
                cur.dims()
            )));
        }
        let t = self.frames.len() as u64 + 1;
        let frame = cur.time_index() + self.cfg.frame_offset;
        self.frames.push(frame);
        let (prev, cur) = (self.window(prev)?, self.window(cur)?);
        let zoom = build_pyramid(&prev, &cur, &self.cfg.analysis)?;
        let finest = zoom.finest();
        let mut field = finest.curvature.clone();
        let dims = zoom.dims();
        let per_dim = zoom.roots_per_dim();
        let n = finest.point_count();

        let pd = |field: &crate::curvature::CurvatureField, d: usize, p: usize| {
            point_path_dependent_at(&field.categories(d, p), self.cfg.root_vote)
        };
        let pd_points = (0..n).filter(|&p| (0..dims).any(|d| pd(&field, d, p))).count();
        if pd_points > 0 && self.state.observe_path_dependency(t) {
            self.events.push(TriggerEvent {
                t,
                kind: EventKind::PdiOnset,
                dim: None,
                root: None,
                value: pd_points as f64,
            });
        }

        let profiles: Vec<_> = (0..dims)
            .flat_map(|d| (0..per_dim).map(move |k| (d, k)))
            .map(|(d, k)| zoom.profile(d, k))
            .collect();
        if self.critical.is_none() || self.cfg.chain_recalc == ChainRecalc::Every {
            let critical = profiles
                .iter()
                .map(|p| {
                    Ok((
                        critical_chain_length(p, n, ChainVariant::Short)?,
                        critical_chain_length(p, n, ChainVariant::Long)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            self.critical = Some(critical);
        }
        let critical = self.critical.as_ref().expect("set above");

        let mut chains = ChainReport::default();
        for d in 0..dims {
            let ranks = &finest.ranks.dims[d].r;
            for k in 0..per_dim {
                let cats: Vec<u8> = (0..n).map(|p| field.root(d, p, k).category).collect();
                let (cs, cl) = critical[d * per_dim + k];
                chains.entries.push(ChainEntry::new(d, k, longest_chain(&cats, ranks), cs, cl));
            }
        }
        let chain_trigger = chains.triggered().next().is_some();
        for e in chains.triggered() {
            self.events.push(TriggerEvent {
                t,
                kind: EventKind::Chain,
                dim: Some(e.dim),
                root: Some(e.root),
                value: e.max_chain_length as f64,
            });
        }

        let residuals: Vec<f64> = profiles.iter().map(residual_curvature).collect();
        let residual_mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
        let drops = self.state.residual_drops(residuals, self.cfg.residual_eps);
        let votes = energy_votes(&drops, self.cfg.drop_threshold);
        let energy = energy_trigger(&drops, dims * per_dim, self.cfg.drop_threshold, self.cfg.system_vote);
        if energy {
            self.events.push(TriggerEvent {
                t,
                kind: EventKind::Energy,
                dim: None,
                root: None,
                value: votes as f64,
            });
        }

        if let Some(p) = self.state.update_gti(chain_trigger, energy, t) {
            self.events.push(TriggerEvent {
                t,
                kind: EventKind::Prediction,
                dim: None,
                root: None,
                value: p as f64,
            });
            log::info!("prediction issued at t={t} (frame {frame})");
        }
        promote_categories(&mut field, self.state.gti);

        let mut counts = [0usize; 9];
        for d in 0..dims {
            for p in 0..n {
                counts[field.point_category(d, p) as usize - 1] += 1;
            }
        }
        let histogram = counts.map(|c| c as f64 / (dims * n) as f64);
        self.last_chains = chains;
        self.rows.push(PairRow {
            t,
            frame,
            path_dependent_points: pd_points,
            chain_max: self.last_chains.max_length(),
            critical_long: critical.iter().map(|c| c.1).fold(f64::INFINITY, f64::min),
            chain_trigger,
            energy_votes: votes,
            energy_trigger: energy,
            residual_mean,
            gti: self.state.gti,
            histogram,
        });
        Ok(self.rows.last().expect("just pushed"))
    }

    /// Runs every strided pair of `frames`.
    pub fn run<I>(&mut self, frames: I) -> Result<()>
    where
        I: IntoIterator<Item = Result<Frame>>,
    {
        for pair in stride_pairs(frames, self.cfg.stride)? {
            let (prev, cur) = pair?;
            self.step(&prev, &cur)?;
        }
        Ok(())
    }

    pub fn pairs_csv(&self) -> String {
        let mut out = format!("{PAIR_CSV_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(out, "{r}");
        }
        out
    }

    pub fn trigger_log(&self) -> String {
        self.events.iter().map(|e| format!("{e}\n")).collect()
    }

    /// Threshold header followed by the prognosis summary.
    pub fn report(&self, run_id: &str, truth: Option<&Manifest>) -> String {
        let mut out = String::new();
        for line in self.cfg.to_text().lines() {
            let _ = writeln!(out, "# {line}");
        }
        let join = |s: &std::collections::BTreeSet<u64>| s.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        let opt = |v: Option<u64>| v.map_or_else(|| "none".to_string(), |v| v.to_string());
        let _ = writeln!(out, "run_id = {run_id}");
        let _ = writeln!(out, "pairs = {}", self.rows.len());
        let _ = writeln!(out, "pdi_onset = {}", opt(self.state.pdi_onset));
        let _ = writeln!(out, "chain_triggers = {}", join(&self.state.chain_triggers));
        let _ = writeln!(out, "energy_triggers = {}", join(&self.state.energy_triggers));
        let _ = writeln!(out, "gti = {}", self.state.gti);
        let _ = writeln!(out, "predicted_index = {}", opt(self.state.predicted));
        let _ = writeln!(out, "predicted_frame = {}", opt(self.predicted_frame()));
        if let Some(m) = truth {
            let _ = writeln!(out, "actual_frame = {}", opt(m.burst_frame));
            let _ = writeln!(out, "outcome = {}", score(self.predicted_frame(), m.burst_frame));
        }
        out
    }
}

/// Scored outcome of one run against its ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// Prediction before the failure with lead in `[0, 30]` percent.
    Lead(f64),
    /// Prediction more than 30 percent ahead.
    Early(f64),
    /// Prediction after the failure.
    Late,
    FalsePositive,
    Miss,
    TrueNegative,
}

impl Outcome {
    /// Lead in range, or a clean control.
    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Lead(_) | Outcome::TrueNegative)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Lead(l) => write!(f, "lead {l:.4}%"),
            Outcome::Early(l) => write!(f, "early {l:.4}%"),
            Outcome::Late => f.write_str("late"),
            Outcome::FalsePositive => f.write_str("false-positive"),
            Outcome::Miss => f.write_str("miss"),
            Outcome::TrueNegative => f.write_str("true-negative"),
        }
    }
}

pub const MAX_LEAD_PERCENT: f64 = 30.0;

pub fn score(predicted: Option<u64>, actual: Option<u64>) -> Outcome {
    match (predicted, actual) {
        (Some(_), None) => Outcome::FalsePositive,
        (None, Some(_)) => Outcome::Miss,
        (None, None) => Outcome::TrueNegative,
        (Some(p), Some(a)) => match lead_percentage(p, a) {
            Ok(l) if l <= MAX_LEAD_PERCENT => Outcome::Lead(l),
            Ok(l) => Outcome::Early(l),
            Err(_) => Outcome::Late,
        },
    }
}

/// Everything produced by an analysis run.
#[derive(Debug, Clone)]
pub struct AnalyzeOutput {
    pub run_id: String,
    pub engine: Engine,
    pub manifest: Option<Manifest>,
    pub report: String,
}

/// Analyses a frame directory; writes `pairs.csv`, `triggers.log` and
/// `report.txt` into `out` when given.
pub fn run_analyze(dir: &Path, cfg: EngineConfig, out: Option<&Path>) -> Result<AnalyzeOutput> {
    let frames = FrameDir::open(dir)?;
    if frames.len() < cfg.stride + 1 {
        return Err(Error::InsufficientFrames {
            needed: cfg.stride + 1,
            found: frames.len(),
        });
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = manifest_path.exists().then(|| Manifest::read(&manifest_path)).transpose()?;
    let run_id = manifest.as_ref().map_or_else(
        || dir.file_name().map_or_else(|| "run".to_string(), |n| n.to_string_lossy().into_owned()),
        |m| m.run_id.clone(),
    );
    let mut engine = Engine::new(cfg)?;
    engine.run(frames.frames())?;
    let report = engine.report(&run_id, manifest.as_ref());
    if let Some(out) = out {
        write_outputs(out, &engine, &report)?;
    }
    Ok(AnalyzeOutput {
        run_id,
        engine,
        manifest,
        report,
    })
}

fn write_outputs(out: &Path, engine: &Engine, report: &str) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let write = |name: &str, text: &str| -> Result<PathBuf> {
        let path = out.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    };
    write("pairs.csv", &engine.pairs_csv())?;
    write("triggers.log", &engine.trigger_log())?;
    write("report.txt", report)?;
    Ok(())
}

/// Scores a `report.txt` against a ground-truth manifest.
pub fn run_score(report: &Path, manifest: &Path) -> Result<Outcome> {
    let text = fs::read_to_string(report).map_err(|e| Error::io(report, e))?;
    let kv = KeyValues::parse(&text)?;
    let truth = Manifest::read(manifest)?;
    let run_id = kv.get("run_id").unwrap_or_default();
    if run_id != truth.run_id {
        return Err(Error::RunMismatch {
            report: run_id.to_string(),
            manifest: truth.run_id,
        });
    }
    let predicted = match kv.get("predicted_frame") {
        None | Some("none") => None,
        Some(_) => kv.parsed("predicted_frame")?,
    };
    Ok(score(predicted, truth.burst_frame))
}
