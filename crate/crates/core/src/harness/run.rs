//! Monte Carlo trial runner.
//!
//! Trials are independent: trial `i` draws from the stream `(seed, i)`.
//! Chunks of trials run in parallel and are reduced in trial order, so the
//! output does not depend on the number of worker threads.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{default_observables, parse_observable, RunConfig};
use super::stats::{ks_one_sample, pearson, Histogram, KsResult};
use crate::beables::{abl_expectation, conditional_expectation, first_crossing, named_operator, FinalOutcome};
use crate::density::LocalOperator;
use crate::detection::{DetectionRecord, RngStream};
use crate::error::{Error, Result};
use crate::scenarios::{build_scenario, Scenario, ScenarioKind, Setup};
use crate::spacetime::{DetectionKind, Event};

const CHUNK: u64 = 2048;

/// Bisection tolerance for transition times, relative to the plane time.
pub const REFINE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub label: String,
    pub op: LocalOperator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: u64,
    pub family: usize,
    pub record: DetectionRecord,
    pub redraws: u32,
    /// The record matched no branch family.
    pub inconsistent: bool,
    /// Latent times recovered from the record.
    pub pinned: Vec<Option<f64>>,
    /// Transition time per observable.
    pub transitions: Vec<Option<f64>>,
    /// Expectation values per observable on the time grid, when requested.
    pub trajectories: Vec<Vec<f64>>,
}

/// Prepared scenario, grid and observables for one run configuration.
#[derive(Debug, Clone)]
pub struct Runner {
    pub cfg: RunConfig,
    pub scenario: Scenario,
    pub grid: Vec<f64>,
    pub observables: Vec<Observable>,
    refine_tol: f64,
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl Runner {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let scenario = build_scenario(&cfg.scenario).and_then(|s| s.with_detector(cfg.detector_plane()?)).map_err(config_err)?;
        let grid = cfg.time_grid()?.points();
        let names = if cfg.run.observables.is_empty() { default_observables(cfg.scenario.kind) } else { cfg.run.observables.clone() };
        let observables = names
            .iter()
            .map(|label| {
                let (site, name) = parse_observable(label)?;
                Ok(Observable { label: label.clone(), op: named_operator(&scenario, &site, &name).map_err(config_err)? })
            })
            .collect::<Result<Vec<_>>>()?;
        let refine_tol = REFINE_RTOL * scenario.plane_time();
        Ok(Self { cfg: cfg.clone(), scenario, grid, observables, refine_tol })
    }

    fn abl_mode(&self) -> bool {
        self.scenario.kind == ScenarioKind::Ex5
    }

    /// Beable value of an observable at time `t` at its site.
    pub fn expectation(&self, obs: &Observable, rec: &DetectionRecord, t: f64) -> Result<f64> {
        let site = self.scenario.site_index(&obs.op.site)?;
        let x = Event::new(t, self.scenario.sites[site].position)?;
        if self.abl_mode() {
            abl_expectation(&x, &obs.op, &final_outcome(rec), &self.scenario)
        } else {
            conditional_expectation(&x, &obs.op, rec, &self.scenario)
        }
    }

    pub fn run_trial(&self, trial: u64, with_trajectories: bool) -> Result<TrialResult> {
        let mut rng = RngStream::new(self.cfg.run.seed, trial);
        let t = self.scenario.sample(&mut rng)?;
        let mut out = TrialResult {
            trial,
            family: t.family,
            record: t.record,
            redraws: t.redraws,
            inconsistent: false,
            pinned: Vec::new(),
            transitions: vec![None; self.observables.len()],
            trajectories: Vec::new(),
        };
        if !self.abl_mode() {
            match self.scenario.pin_branch(&out.record) {
                Ok(h) => out.pinned = h.latents.iter().map(|p| p.exact()).collect(),
                Err(Error::InconsistentRecord(_)) => {
                    out.inconsistent = true;
                    return Ok(out);
                }
                Err(e) => return Err(e),
            }
        }
        let threshold = self.cfg.run.threshold;
        for (k, obs) in self.observables.iter().enumerate() {
            if with_trajectories {
                let values = self.grid.iter().map(|&t| self.expectation(obs, &out.record, t)).collect::<Result<Vec<_>>>();
                match values {
                    Ok(v) => {
                        if obs.op.is_projector() {
                            out.transitions[k] = self.crossing_from(obs, &out.record, &v, threshold)?;
                        }
                        out.trajectories.push(v);
                    }
                    Err(Error::InconsistentRecord(_)) => {
                        out.inconsistent = true;
                        out.trajectories.clear();
                        return Ok(out);
                    }
                    Err(e) => return Err(e),
                }
            } else if obs.op.is_projector() {
                match first_crossing(&self.grid, threshold, self.refine_tol, |t| self.expectation(obs, &out.record, t)) {
                    Ok(v) => out.transitions[k] = v,
                    Err(Error::InconsistentRecord(_)) => {
                        out.inconsistent = true;
                        return Ok(out);
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(out)
    }

    fn crossing_from(&self, obs: &Observable, rec: &DetectionRecord, values: &[f64], threshold: f64) -> Result<Option<f64>> {
        let Some(i) = values.iter().position(|&v| v < threshold) else { return Ok(None) };
        if i == 0 {
            return Ok(Some(self.grid[0]));
        }
        first_crossing(&self.grid[i - 1..=i], threshold, self.refine_tol, |t| self.expectation(obs, rec, t))
    }

    /// Index of the observable whose transition times are histogrammed.
    pub fn primary(&self) -> Option<usize> {
        self.observables.iter().position(|o| o.op.is_projector())
    }

    /// Law of the primary transition time, when it is a pure exponential.
    fn reference_rate(&self) -> Option<f64> {
        let starts_excited = self.primary().map(|i| self.observables[i].op.diagonal_values()[0]) == Some(1.0);
        match self.scenario.setup {
            Setup::Single(p) if starts_excited => Some(p.gamma),
            Setup::Cascade(cp) if starts_excited => Some(cp.gamma1),
            _ => None,
        }
    }
}

/// Post-selected outcome read off a momentum-mode record.
pub fn final_outcome(rec: &DetectionRecord) -> FinalOutcome {
    rec.detections
        .iter()
        .find_map(|d| match d.kind {
            DetectionKind::Momentum(k) => Some(FinalOutcome::Photon { momentum: k }),
            DetectionKind::Position => None,
        })
        .unwrap_or(FinalOutcome::NoPhoton)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedKs {
    pub name: String,
    pub rate_per_s: f64,
    pub ks: KsResult,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Statistics {
    pub trials: u64,
    pub branch_counts: BTreeMap<String, u64>,
    pub branch_frequencies: BTreeMap<String, f64>,
    pub detections: u64,
    pub null_outcomes: u64,
    pub inconsistent_records: u64,
    pub cascade_redraws: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition_observable: Option<String>,
    pub transitions: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition_histogram: Option<Histogram>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<KsResult>,
    /// Pearson correlation of the two cascade delays.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub latent_ks: Vec<NamedKs>,
    /// Frequencies of the object position beable values in momentum mode.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub abl_frequencies: BTreeMap<String, f64>,
    /// Largest change of the first observable along any trajectory in momentum mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abl_max_drift: Option<f64>,
    #[serde(skip)]
    pub wall_time: f64,
}

struct Accumulator {
    trials: u64,
    counts: BTreeMap<String, u64>,
    detections: u64,
    null_outcomes: u64,
    inconsistent: u64,
    redraws: u64,
    transitions: Vec<f64>,
    histogram: Option<Histogram>,
    latents: Vec<Vec<f64>>,
    abl_counts: BTreeMap<String, u64>,
    abl_drift: f64,
}

fn exp_cdf(rate: f64, lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
    let f = move |t: f64| -(-rate * t).exp_m1();
    let (flo, fhi) = (f(lo), f(hi));
    move |t| ((f(t.clamp(lo, hi)) - flo) / (fhi - flo)).clamp(0.0, 1.0)
}

/// Run every trial, feeding results to `sink` in trial order.
pub fn run_trials_with<F>(runner: &Runner, with_trajectories: bool, mut sink: F) -> Result<Statistics>
where
    F: FnMut(&TrialResult) -> Result<()>,
{
    let start = Instant::now();
    let cfg = &runner.cfg;
    let primary = runner.primary();
    let mut acc = Accumulator {
        trials: 0,
        counts: runner.scenario.families.iter().map(|f| (f.label.clone(), 0)).collect(),
        detections: 0,
        null_outcomes: 0,
        inconsistent: 0,
        redraws: 0,
        transitions: Vec::new(),
        histogram: primary.map(|_| Histogram::new(0.0, cfg.histogram_max().unwrap_or(8.0), cfg.run.histogram_bins)),
        latents: Vec::new(),
        abl_counts: BTreeMap::new(),
        abl_drift: 0.0,
    };
    let offset = match runner.scenario.setup {
        Setup::Absorber { offset, .. } => offset,
        _ => 0.0,
    };
    let n = cfg.run.trials;
    let mut lo = 0;
    while lo < n {
        let hi = (lo + CHUNK).min(n);
        let chunk = (lo..hi).into_par_iter().map(|i| runner.run_trial(i, with_trajectories)).collect::<Result<Vec<_>>>()?;
        for r in &chunk {
            acc.trials += 1;
            *acc.counts.entry(runner.scenario.families[r.family].label.clone()).or_default() += 1;
            acc.detections += r.record.detections.len() as u64;
            acc.null_outcomes += u64::from(r.record.is_empty());
            acc.redraws += u64::from(r.redraws);
            if r.inconsistent {
                acc.inconsistent += 1;
            }
            if let Some(t) = primary.and_then(|p| r.transitions[p]) {
                acc.transitions.push(t);
                if let Some(h) = acc.histogram.as_mut() {
                    h.fill(t);
                }
            }
            if acc.latents.len() < r.pinned.len() {
                acc.latents.resize(r.pinned.len(), Vec::new());
            }
            if r.pinned.iter().all(Option::is_some) {
                let mut prev = 0.0;
                for (k, v) in r.pinned.iter().flatten().enumerate() {
                    acc.latents[k].push(v - prev);
                    prev = *v;
                }
            }
            if runner.abl_mode() {
                if let Some(v) = r.trajectories.first().and_then(|v| v.first()).copied() {
                    let class = if v > 0.5 * offset { "far" } else { "origin" };
                    *acc.abl_counts.entry(class.to_string()).or_default() += 1;
                    let drift = r.trajectories[0].iter().map(|x| (x - v).abs()).fold(0.0, f64::max);
                    acc.abl_drift = acc.abl_drift.max(drift);
                }
            }
            sink(r)?;
        }
        lo = hi;
    }
    Ok(finish(runner, acc, start.elapsed().as_secs_f64()))
}

fn finish(runner: &Runner, acc: Accumulator, wall_time: f64) -> Statistics {
    let total = acc.trials as f64;
    let branch_frequencies = acc.counts.iter().map(|(k, &v)| (k.clone(), v as f64 / total)).collect();
    let grid = &runner.grid;
    let (g0, g1) = (grid[0], grid[grid.len() - 1]);
    let ks = match (runner.reference_rate(), acc.transitions.is_empty()) {
        (Some(rate), false) => Some(ks_one_sample(&acc.transitions, exp_cdf(rate, g0, g1))),
        _ => None,
    };
    let big_t = runner.scenario.plane_time();
    let (latent_ks, correlation) = match runner.scenario.setup {
        Setup::Single(p) if !acc.latents.is_empty() && !acc.latents[0].is_empty() => (
            vec![NamedKs { name: "tau".into(), rate_per_s: p.gamma, ks: ks_one_sample(&acc.latents[0], exp_cdf(p.gamma, 0.0, big_t)) }],
            None,
        ),
        Setup::Cascade(cp) if acc.latents.len() == 2 && acc.latents[0].len() > 1 => (
            vec![
                NamedKs { name: "tau1".into(), rate_per_s: cp.gamma1, ks: ks_one_sample(&acc.latents[0], exp_cdf(cp.gamma1, 0.0, f64::INFINITY)) },
                NamedKs { name: "tau2".into(), rate_per_s: cp.gamma2, ks: ks_one_sample(&acc.latents[1], exp_cdf(cp.gamma2, 0.0, f64::INFINITY)) },
            ],
            Some(pearson(&acc.latents[0], &acc.latents[1])),
        ),
        _ => (Vec::new(), None),
    };
    let abl_frequencies = acc.abl_counts.iter().map(|(k, &v)| (k.clone(), v as f64 / total)).collect();
    Statistics {
        trials: acc.trials,
        branch_counts: acc.counts,
        branch_frequencies,
        detections: acc.detections,
        null_outcomes: acc.null_outcomes,
        inconsistent_records: acc.inconsistent,
        cascade_redraws: acc.redraws,
        transition_observable: runner.primary().map(|p| runner.observables[p].label.clone()),
        transitions: acc.transitions.len() as u64,
        transition_histogram: acc.histogram,
        ks_statistic: ks.map(|k| k.statistic),
        ks_pass: ks.map(|k| k.passes_01()),
        ks,
        correlation,
        latent_ks,
        abl_frequencies,
        abl_max_drift: runner.abl_mode().then_some(acc.abl_drift),
        wall_time,
    }
}

/// Run trials without writing any files.
pub fn run_statistics(cfg: &RunConfig) -> Result<Statistics> {
    let runner = Runner::new(cfg)?;
    run_trials_with(&runner, runner.abl_mode(), |_| Ok(()))
}
