//! Run configuration files.
//!
//! ```toml
//! [scenario]
//! kind = "ex1"
//! gamma_per_s = 1.0
//! omega_rad_per_s = 100.0
//! plane_time_s = 30.0
//!
//! [detector]
//! kind = "ideal"            # or "grid" with cell_size_m and cutoff_hz
//!
//! [run]
//! trials = 100000
//! seed = 7
//! grid = "0:10:512"         # start_s:stop_s:steps, optional
//! out_dir = "out/ex1"
//! observables = ["atom:excited"]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detection::{DetectorMode, DetectorPlane};
use crate::error::{Error, Result};
use crate::scenarios::{ScenarioConfig, ScenarioKind};

pub const DEFAULT_GRID_STEPS: usize = 512;
pub const DEFAULT_HISTOGRAM_BINS: usize = 64;

/// Uniform time grid `start:stop:steps`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(start: f64, stop: f64, steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::Config(format!("time grid needs at least 2 steps, got {steps}")));
        }
        if !(start.is_finite() && stop.is_finite() && stop > start) {
            return Err(Error::Config(format!("time grid needs start < stop, got {start}:{stop}")));
        }
        Ok(Self { start, stop, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| if i + 1 == self.steps { self.stop } else { self.start + h * i as f64 }).collect()
    }
}

impl FromStr for TimeGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let bad = || Error::Config(format!("time grid `{s}` is not start:stop:steps"));
        let [a, b, n] = parts.as_slice() else { return Err(bad()) };
        Self::new(a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?)
    }
}

impl TryFrom<String> for TimeGrid {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TimeGrid> for String {
    fn from(g: TimeGrid) -> String {
        g.to_string()
    }
}

impl fmt::Display for TimeGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.steps)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    #[default]
    Ideal,
    Grid,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    #[serde(default)]
    pub kind: DetectorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_size_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_hz: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitFlags {
    #[serde(default = "yes")]
    pub detections: bool,
    #[serde(default = "yes")]
    pub trajectories: bool,
    #[serde(default = "yes")]
    pub histograms: bool,
    #[serde(default = "yes")]
    pub summary: bool,
}

fn yes() -> bool {
    true
}

impl Default for EmitFlags {
    fn default() -> Self {
        Self { detections: true, trajectories: true, histograms: true, summary: true }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<TimeGrid>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub emit: EmitFlags,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    /// `site:operator` pairs; scenario defaults when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<String>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_trials() -> u64 {
    1000
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_bins() -> usize {
    DEFAULT_HISTOGRAM_BINS
}

fn default_threshold() -> f64 {
    crate::beables::DEFAULT_THRESHOLD
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            seed: 0,
            grid: None,
            out_dir: default_out(),
            emit: EmitFlags::default(),
            format: OutputFormat::default(),
            histogram_bins: default_bins(),
            observables: Vec::new(),
            threshold: default_threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default)]
    pub run: RunSection,
}

impl RunConfig {
    pub fn new(scenario: ScenarioConfig) -> Self {
        Self { scenario, detector: DetectorSection::default(), run: RunSection::default() }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.run.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.run.histogram_bins == 0 {
            return Err(Error::Config("histogram_bins must be at least 1".into()));
        }
        if !(self.run.threshold > 0.0 && self.run.threshold < 1.0) {
            return Err(Error::Config(format!("threshold must lie in (0, 1), got {}", self.run.threshold)));
        }
        self.detector_plane()?;
        for o in &self.run.observables {
            parse_observable(o)?;
        }
        Ok(())
    }

    pub fn detector_plane(&self) -> Result<DetectorPlane> {
        let t = self.scenario.plane_time_s;
        let mode = match self.detector.kind {
            DetectorKind::Ideal => DetectorMode::Ideal,
            DetectorKind::Grid => DetectorMode::Grid {
                cell_size: self
                    .detector
                    .cell_size_m
                    .ok_or_else(|| Error::Config("grid detector needs cell_size_m".into()))?,
                cutoff_freq: self.detector.cutoff_hz.unwrap_or(0.0),
            },
        };
        DetectorPlane::new(t, mode).map_err(|e| Error::Config(e.to_string()))
    }

    /// Slowest decay rate of the scenario.
    pub fn slowest_rate(&self) -> Result<f64> {
        match self.scenario.kind {
            ScenarioKind::Ex3 => {
                let (g1, g2, _, _) = self.scenario.cascade_rates()?;
                Ok(g1.min(g2))
            }
            _ => self.scenario.gamma(),
        }
    }

    /// Configured grid, or 512 points over `[0, min(T, 10/Γ)]`. Query times
    /// must precede the plane, so a grid reaching `T` stops just short of it.
    pub fn time_grid(&self) -> Result<TimeGrid> {
        let big_t = self.scenario.plane_time_s;
        let g = match self.run.grid {
            Some(g) => g,
            None => TimeGrid::new(0.0, big_t.min(10.0 / self.slowest_rate()?), DEFAULT_GRID_STEPS)?,
        };
        if g.start < 0.0 {
            return Err(Error::Config(format!("time grid starts before emission at {}", g.start)));
        }
        if g.stop >= big_t {
            let stop = big_t * (1.0 - 1e-9);
            if stop <= g.start {
                return Err(Error::Config(format!("time grid {g} does not fit before T = {big_t}")));
            }
            return TimeGrid::new(g.start, stop, g.steps);
        }
        Ok(g)
    }

    /// Upper edge of the transition-time histogram.
    pub fn histogram_max(&self) -> Result<f64> {
        Ok(8.0 / self.slowest_rate()?)
    }
}

/// Split `site:operator`.
pub fn parse_observable(s: &str) -> Result<(String, String)> {
    match s.split_once(':') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.to_string(), b.to_string())),
        _ => Err(Error::Config(format!("observable `{s}` is not site:operator"))),
    }
}

/// Observables traced when the run section names none.
pub fn default_observables(kind: ScenarioKind) -> Vec<String> {
    let v: &[&str] = match kind {
        ScenarioKind::Ex1 => &["atom:excited"],
        ScenarioKind::Ex2 => &["atom_minus:e", "atom_plus:e"],
        ScenarioKind::Ex3 => &["atom:e2", "atom:e1"],
        ScenarioKind::Ex4 => &["atom:excited", "object:obj0star"],
        ScenarioKind::Ex5 => &["object:position", "atom:e"],
    };
    v.iter().map(|s| s.to_string()).collect()
}
