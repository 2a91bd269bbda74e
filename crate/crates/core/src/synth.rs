//! Synthetic inflating-membrane sequences with a known burst frame.
//!
//! Grid point `(i, j)` looks along a fixed direction `n(i, j)` and sits at
//! distance `r(t) * s(i, j, t)` from the origin, where `r(t) = r0 (1 + g t)`
//! and `s` is the extra stretch of an optional weak spot:
//! `s = 1 + beta * w * (t - t0)^gamma` with the bump `w = max(0, 1 - d^2/rho^2)`.
//! Grayscale thins with areal stretch: `m = m0 * (r0 / (r s))^2`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::frame::{write_frame_dir, Frame, XYZM_DIMS};
use crate::kv::KeyValues;

/// Growth used to scale noise when the scenario itself does not grow.
const STATIC_NOISE_GROWTH: f64 = 0.01;

/// Localised super-linear stretch that precedes the burst.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakSpot {
    pub row: f64,
    pub col: f64,
    /// Radius of the bump in grid cells.
    pub radius: f64,
    pub onset: u64,
    pub exponent: f64,
    /// Stretch coefficient `beta`.
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalloonScenario {
    pub run_id: String,
    pub width: usize,
    pub height: usize,
    pub frames: u64,
    pub burst_frame: Option<u64>,
    pub base_radius: f64,
    pub growth_rate: f64,
    /// Radius starts shrinking symmetrically after this frame.
    pub deflate_after: Option<u64>,
    pub weak_spot: Option<WeakSpot>,
    /// Uniform noise half-width as a fraction of each channel's nominal
    /// per-frame change.
    pub noise: f64,
    pub seed: u64,
}

impl Default for BalloonScenario {
    fn default() -> Self {
        BalloonScenario {
            run_id: "balloon".into(),
            width: 10,
            height: 10,
            frames: 60,
            burst_frame: None,
            base_radius: 100.0,
            growth_rate: 0.01,
            deflate_after: None,
            weak_spot: None,
            noise: 0.0,
            seed: 0,
        }
    }
}

const KEYS: &[&str] = &[
    "run_id",
    "width",
    "height",
    "frames",
    "burst_frame",
    "base_radius",
    "growth_rate",
    "deflate_after",
    "noise",
    "seed",
    "weak_row",
    "weak_col",
    "weak_radius",
    "weak_onset",
    "weak_exponent",
    "weak_strength",
];

impl BalloonScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if self.width == 0 || self.height == 0 {
            return bad(format!("grid {}x{} is empty", self.width, self.height));
        }
        if self.frames == 0 {
            return bad("frames must be positive".into());
        }
        if let Some(b) = self.burst_frame {
            if b >= self.frames {
                return bad(format!("burst frame {b} not below frame count {}", self.frames));
            }
            if b == 0 {
                return bad("burst frame must be positive".into());
            }
        }
        if !(self.base_radius > 0.0 && self.base_radius.is_finite()) {
            return bad(format!("base radius {} must be positive", self.base_radius));
        }
        if !(self.growth_rate >= 0.0 && self.growth_rate.is_finite()) {
            return bad(format!("growth rate {} must be non-negative", self.growth_rate));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise {} must be non-negative", self.noise));
        }
        if let Some(d) = self.deflate_after {
            let last = (self.frames - 1) as f64;
            if self.growth_rate > 0.0 && last >= 2.0 * d as f64 + 1.0 / self.growth_rate {
                return bad("deflation would collapse the radius".into());
            }
        }
        if let Some(w) = &self.weak_spot {
            if !(w.radius > 0.0 && w.exponent > 0.0 && w.strength >= 0.0) {
                return bad("weak spot needs positive radius and exponent, non-negative strength".into());
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        kv.reject_unknown(KEYS).map_err(|e| Error::Scenario(e.to_string()))?;
        let d = BalloonScenario::default();
        let get = |k: &str, default: f64| -> Result<f64> { Ok(kv.parsed(k)?.unwrap_or(default)) };
        let weak_spot = match kv.parsed::<f64>("weak_strength")? {
            None => None,
            Some(strength) => Some(WeakSpot {
                row: get("weak_row", 0.0)?,
                col: get("weak_col", 0.0)?,
                radius: get("weak_radius", 3.0)?,
                onset: kv.parsed("weak_onset")?.unwrap_or(0),
                exponent: get("weak_exponent", 2.0)?,
                strength,
            }),
        };
        let burst_frame = match kv.get("burst_frame") {
            None | Some("none") => None,
            Some(_) => kv.parsed("burst_frame")?,
        };
        let s = BalloonScenario {
            run_id: kv.get("run_id").unwrap_or(&d.run_id).to_string(),
            width: kv.parsed("width")?.unwrap_or(d.width),
            height: kv.parsed("height")?.unwrap_or(d.height),
            frames: kv.parsed("frames")?.unwrap_or(d.frames),
            burst_frame,
            base_radius: get("base_radius", d.base_radius)?,
            growth_rate: get("growth_rate", d.growth_rate)?,
            deflate_after: kv.parsed("deflate_after")?,
            weak_spot,
            noise: get("noise", d.noise)?,
            seed: kv.parsed("seed")?.unwrap_or(d.seed),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "run_id = {}", self.run_id);
        let _ = writeln!(out, "width = {}", self.width);
        let _ = writeln!(out, "height = {}", self.height);
        let _ = writeln!(out, "frames = {}", self.frames);
        if let Some(b) = self.burst_frame {
            let _ = writeln!(out, "burst_frame = {b}");
        }
        let _ = writeln!(out, "base_radius = {}", self.base_radius);
        let _ = writeln!(out, "growth_rate = {}", self.growth_rate);
        if let Some(d) = self.deflate_after {
            let _ = writeln!(out, "deflate_after = {d}");
        }
        let _ = writeln!(out, "noise = {}", self.noise);
        let _ = writeln!(out, "seed = {}", self.seed);
        if let Some(w) = &self.weak_spot {
            let _ = writeln!(out, "weak_row = {}", w.row);
            let _ = writeln!(out, "weak_col = {}", w.col);
            let _ = writeln!(out, "weak_radius = {}", w.radius);
            let _ = writeln!(out, "weak_onset = {}", w.onset);
            let _ = writeln!(out, "weak_exponent = {}", w.exponent);
            let _ = writeln!(out, "weak_strength = {}", w.strength);
        }
        out
    }

    /// Frames actually emitted: the sequence ends just before the burst.
    pub fn emitted_frames(&self) -> u64 {
        self.burst_frame.unwrap_or(self.frames)
    }

    /// Nominal radius `r(t)`.
    pub fn radius(&self, t: u64) -> f64 {
        let t = match self.deflate_after {
            Some(d) if t > d => 2.0 * d as f64 - t as f64,
            _ => t as f64,
        };
        self.base_radius * (1.0 + self.growth_rate * t)
    }

    /// Weak-spot stretch factor of grid point `(row, col)` at frame `t`.
    pub fn stretch(&self, row: usize, col: usize, t: u64) -> f64 {
        let Some(w) = &self.weak_spot else { return 1.0 };
        if t <= w.onset {
            return 1.0;
        }
        let d2 = (row as f64 - w.row).powi(2) + (col as f64 - w.col).powi(2);
        let bump = (1.0 - d2 / (w.radius * w.radius)).max(0.0);
        1.0 + w.strength * bump * ((t - w.onset) as f64).powf(w.exponent)
    }

    /// Viewing direction of grid point `(row, col)`. The two axes use distinct
    /// spacings so no two points share a coordinate.
    pub fn direction(&self, row: usize, col: usize) -> [f64; 3] {
        let u = 0.35 + 0.05 * col as f64;
        let v = 0.30 + 0.0437 * row as f64;
        let norm = (u * u + v * v + 1.0).sqrt();
        [u / norm, v / norm, 1.0 / norm]
    }

    /// Base grayscale per point: a seeded shuffle of evenly spaced levels in [80, 230].
    fn base_gray(&self) -> Vec<f64> {
        let n = self.width * self.height;
        let mut levels: Vec<f64> = (0..n)
            .map(|k| if n > 1 { 80.0 + 150.0 * k as f64 / (n - 1) as f64 } else { 155.0 })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        levels.shuffle(&mut rng);
        levels
    }

    fn noise_rng(&self, t: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t + 1);
        rng
    }

    /// Frame `t`, with noise.
    pub fn frame(&self, t: u64) -> Result<Frame> {
        self.frame_with(t, &self.base_gray())
    }

    fn frame_with(&self, t: u64, gray: &[f64]) -> Result<Frame> {
        let n = self.width * self.height;
        let r = self.radius(t);
        let g = if self.growth_rate > 0.0 { self.growth_rate } else { STATIC_NOISE_GROWTH };
        let scale = 1.0 + g * t as f64;
        let mut rng = self.noise_rng(t);
        let mut values = Vec::with_capacity(n * XYZM_DIMS);
        for row in 0..self.height {
            for col in 0..self.width {
                let p = row * self.width + col;
                let s = self.stretch(row, col, t);
                let dir = self.direction(row, col);
                let m0 = gray[p];
                // Nominal per-frame change of each channel without the weak spot.
                let dx = |c: f64| self.base_radius * g * c;
                let dm = m0 * 2.0 * g / scale.powi(3);
                let nominal = [dx(dir[0]), dx(dir[1]), dx(dir[2]), dm];
                let clean = [
                    r * s * dir[0],
                    r * s * dir[1],
                    r * s * dir[2],
                    m0 * (self.base_radius / (r * s)).powi(2),
                ];
                for (d, (&v, &step)) in clean.iter().zip(&nominal).enumerate() {
                    let jitter = if self.noise > 0.0 {
                        rng.gen_range(-1.0..=1.0) * self.noise * step
                    } else {
                        0.0
                    };
                    let mut out = v + jitter;
                    if d == 3 {
                        out = out.clamp(0.0, 255.0);
                    }
                    values.push(out);
                }
            }
        }
        Frame::from_values(t, self.width, self.height, XYZM_DIMS, values)
    }

    /// Every emitted frame, in order.
    pub fn generate(&self) -> Result<Vec<Frame>> {
        self.validate()?;
        let gray = self.base_gray();
        (0..self.emitted_frames()).map(|t| self.frame_with(t, &gray)).collect()
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            run_id: self.run_id.clone(),
            burst_frame: self.burst_frame,
            frames: self.emitted_frames(),
            seed: self.seed,
        }
    }
}

/// A bursting scenario with its weak spot and burst removed.
pub fn control_twin(s: &BalloonScenario) -> BalloonScenario {
    BalloonScenario {
        run_id: format!("{}-control", s.run_id),
        burst_frame: None,
        weak_spot: None,
        ..s.clone()
    }
}

/// Frames of a scenario that must not fail.
pub fn control_sequence(s: &BalloonScenario) -> Result<Vec<Frame>> {
    if s.burst_frame.is_some() || s.weak_spot.is_some() {
        return Err(Error::Scenario("control scenarios carry neither burst nor weak spot".into()));
    }
    s.generate()
}

/// Ground truth written alongside a synthetic sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub run_id: String,
    /// `None` is the no-failure label.
    pub burst_frame: Option<u64>,
    pub frames: u64,
    pub seed: u64,
}

pub const MANIFEST_FILE: &str = "manifest.txt";

impl Manifest {
    pub fn to_text(&self) -> String {
        let burst = self.burst_frame.map_or_else(|| "no-failure".to_string(), |b| b.to_string());
        format!(
            "run_id = {}\nburst_frame = {burst}\nframes = {}\nseed = {}\n",
            self.run_id, self.frames, self.seed
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        let run_id = kv
            .get("run_id")
            .ok_or_else(|| Error::Config("manifest lacks run_id".into()))?
            .to_string();
        let burst_frame = match kv.get("burst_frame") {
            None | Some("no-failure") => None,
            Some(_) => kv.parsed("burst_frame")?,
        };
        Ok(Manifest {
            run_id,
            burst_frame,
            frames: kv.parsed("frames")?.unwrap_or(0),
            seed: kv.parsed("seed")?.unwrap_or(0),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// Writes the sequence and its manifest into `dir`.
pub fn write_scenario(s: &BalloonScenario, dir: &Path) -> Result<Manifest> {
    let frames = s.generate()?;
    write_frame_dir(dir, &frames)?;
    let manifest = s.manifest();
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
