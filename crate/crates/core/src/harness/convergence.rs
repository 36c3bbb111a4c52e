//! Convergence studies in the plane time `T` and the detector cell size `L`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::stats::{ks_two_sample, log_log_slope, mean, KsResult};
use crate::detection::{coarsen_event, DetectionRecord, DetectorPlane, RngStream};
use crate::error::{Error, Result};
use crate::scenarios::{build_scenario, Scenario, ScenarioConfig, ScenarioKind, Setup};
use crate::spacetime::correlated_transition_time;

/// Mean error of the asymptotic correlated transition time at one `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneTimeRow {
    pub plane_time_s: f64,
    pub samples: u64,
    pub mean_error_s: f64,
    pub max_error_s: f64,
}

/// Coarse-versus-ideal transition times at one cell size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSizeRow {
    pub cell_size_m: f64,
    pub samples: u64,
    pub mean_abs_diff_s: f64,
    pub max_abs_diff_s: f64,
    /// Half-diagonal bound `(√3/2)L/c`.
    pub bound_s: f64,
    pub within_bound: bool,
}

/// Two-sample KS between transition times at consecutive plane times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneTimeKs {
    pub plane_time_a_s: f64,
    pub plane_time_b_s: f64,
    pub ks: KsResult,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub plane_time_rows: Vec<PlaneTimeRow>,
    /// Error ratio between consecutive plane times.
    pub plane_time_ratios: Vec<f64>,
    /// Fitted exponent `p` of `error ∝ T^p`.
    pub plane_time_exponent: Option<f64>,
    pub cell_size_rows: Vec<CellSizeRow>,
    /// Fitted exponent `p` of `mean |Δt₀| ∝ L^p`.
    pub cell_size_exponent: Option<f64>,
    pub plane_time_independence: Vec<PlaneTimeKs>,
}

fn at_plane_time(base: &ScenarioConfig, big_t: f64) -> ScenarioConfig {
    ScenarioConfig { plane_time_s: big_t, ..base.clone() }
}

/// Single-emitter configuration with the base configuration's rate, frequency and `c`.
pub fn single_emitter(base: &ScenarioConfig) -> Result<ScenarioConfig> {
    let (g, w) = match base.kind {
        ScenarioKind::Ex3 => {
            let (g1, _, w1, _) = base.cascade_rates()?;
            (g1, w1)
        }
        _ => (base.gamma()?, base.omega()?),
    };
    Ok(ScenarioConfig::ex1(g, w, base.plane_time_s).with_c(base.c_m_per_s))
}

/// Per `T`: mean `|t′_exact − t′_asymptotic|` over sampled two-site detections.
pub fn plane_time_study(base: &ScenarioConfig, plane_times: &[f64], trials: u64, seed: u64) -> Result<Vec<PlaneTimeRow>> {
    if base.kind != ScenarioKind::Ex2 {
        return Err(Error::Config("the correlated-time study needs a two-site (ex2) scenario".into()));
    }
    plane_times
        .iter()
        .map(|&big_t| {
            let scn = build_scenario(&at_plane_time(base, big_t))?;
            let errors = (0..trials).into_par_iter().map(|i| correlated_error(&scn, seed, i)).collect::<Result<Vec<_>>>()?;
            let errors: Vec<f64> = errors.into_iter().flatten().collect();
            Ok(PlaneTimeRow {
                plane_time_s: big_t,
                samples: errors.len() as u64,
                mean_error_s: mean(&errors),
                max_error_s: errors.iter().copied().fold(0.0, f64::max),
            })
        })
        .collect()
}

fn correlated_error(scn: &Scenario, seed: u64, trial: u64) -> Result<Option<f64>> {
    let t = scn.sample(&mut RngStream::new(seed, trial))?;
    let Some(d) = t.record.detections.first() else { return Ok(None) };
    let here = scn.sites[t.family].position;
    let there = scn.sites[1 - t.family].position;
    let tau = t.record.plane_time - (d.position - here).norm() / scn.frame.c;
    Ok(Some(correlated_transition_time(tau, d, &here, &there, &scn.frame)?.error()))
}

fn pinned_time(scn: &Scenario, rec: &DetectionRecord) -> Result<Option<f64>> {
    Ok(scn.pin_branch(rec)?.latents.first().and_then(|p| p.exact()))
}

/// Per `L`: pinned transition times from coarse cells against the ideal detector.
pub fn cell_size_study(base: &ScenarioConfig, cell_sizes: &[f64], trials: u64, seed: u64) -> Result<Vec<CellSizeRow>> {
    let cfg = single_emitter(base)?;
    let ideal = build_scenario(&cfg)?;
    let Setup::Single(p) = ideal.setup else { unreachable!("single-emitter configuration") };
    let big_t = cfg.plane_time_s;
    cell_sizes
        .iter()
        .map(|&l| {
            let plane = DetectorPlane::grid(big_t, l, 0.0)?;
            let coarse = build_scenario(&cfg)?.with_detector(plane)?;
            let diffs = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let t = ideal.sample(&mut RngStream::new(seed, i))?;
                    let mut rec = DetectionRecord::empty(big_t);
                    for d in &t.record.detections {
                        rec.detections.extend(coarsen_event(d, &plane, p.frequency())?);
                    }
                    match (pinned_time(&ideal, &t.record)?, pinned_time(&coarse, &rec)?) {
                        (Some(a), Some(b)) => Ok(Some((a - b).abs())),
                        _ => Ok(None),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let diffs: Vec<f64> = diffs.into_iter().flatten().collect();
            let bound = 0.5 * 3f64.sqrt() * l / cfg.c_m_per_s;
            let max = diffs.iter().copied().fold(0.0, f64::max);
            Ok(CellSizeRow {
                cell_size_m: l,
                samples: diffs.len() as u64,
                mean_abs_diff_s: mean(&diffs),
                max_abs_diff_s: max,
                bound_s: bound,
                within_bound: max <= bound * (1.0 + 1e-12) + ideal.frame.cone_eps(big_t) / cfg.c_m_per_s,
            })
        })
        .collect()
}

/// Two-sample KS of pinned transition times between consecutive plane times.
pub fn plane_time_independence(base: &ScenarioConfig, plane_times: &[f64], trials: u64, seed: u64) -> Result<Vec<PlaneTimeKs>> {
    let cfg = single_emitter(base)?;
    let samples = plane_times
        .iter()
        .enumerate()
        .map(|(k, &big_t)| {
            let scn = build_scenario(&at_plane_time(&cfg, big_t))?;
            let v = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let t = scn.sample(&mut RngStream::new(seed, k as u64 * trials + i))?;
                    pinned_time(&scn, &t.record)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(v.into_iter().flatten().collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(plane_times
        .windows(2)
        .zip(samples.windows(2))
        .map(|(t, s)| PlaneTimeKs { plane_time_a_s: t[0], plane_time_b_s: t[1], ks: ks_two_sample(&s[0], &s[1]) })
        .collect())
}

fn exponent(x: &[f64], y: &[f64]) -> Option<f64> {
    (x.len() >= 2 && y.iter().all(|&v| v > 0.0)).then(|| log_log_slope(x, y))
}

/// Sweep `T` and `L` with the run's trial count and seed.
pub fn convergence_study(cfg: &RunConfig, plane_times: &[f64], cell_sizes: &[f64]) -> Result<ConvergenceTable> {
    if plane_times.len() == 1 || cell_sizes.len() == 1 {
        return Err(Error::Config("each swept axis needs at least two values".into()));
    }
    let (n, seed) = (cfg.run.trials, cfg.run.seed);
    let base = &cfg.scenario;
    let mut table = ConvergenceTable::default();
    if !plane_times.is_empty() {
        if base.kind == ScenarioKind::Ex2 {
            table.plane_time_rows = plane_time_study(base, plane_times, n, seed)?;
            let errs: Vec<f64> = table.plane_time_rows.iter().map(|r| r.mean_error_s).collect();
            table.plane_time_ratios = errs.windows(2).map(|w| w[0] / w[1]).collect();
            table.plane_time_exponent = exponent(plane_times, &errs);
        }
        table.plane_time_independence = plane_time_independence(base, plane_times, n, seed)?;
    }
    if !cell_sizes.is_empty() {
        table.cell_size_rows = cell_size_study(base, cell_sizes, n, seed)?;
        let diffs: Vec<f64> = table.cell_size_rows.iter().map(|r| r.mean_abs_diff_s).collect();
        table.cell_size_exponent = exponent(cell_sizes, &diffs);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn ex2() -> ScenarioConfig {
        let c = |v: f64| Complex64::new(v, 0.0);
        ScenarioConfig::ex2(10.0, 1000.0, c(0.3f64.sqrt()), c(0.7f64.sqrt()), 1.0, 10.0)
    }

    #[test]
    fn correlated_error_shrinks_like_inverse_t() {
        let rows = plane_time_study(&ex2(), &[10.0, 20.0, 40.0], 2000, 1).unwrap();
        for w in rows.windows(2) {
            let r = w[0].mean_error_s / w[1].mean_error_s;
            assert!((r - 2.0).abs() < 0.3, "ratio {r}");
        }
    }

    #[test]
    fn cell_bound_holds() {
        let cfg = ScenarioConfig::ex1(1.0, 100.0, 30.0);
        for row in cell_size_study(&cfg, &[0.5, 2.0], 500, 4).unwrap() {
            assert!(row.within_bound, "{row:?}");
            assert_eq!(row.samples, 500);
        }
    }

    #[test]
    fn sweep_needs_two_values() {
        let cfg = RunConfig::new(ex2());
        assert!(convergence_study(&cfg, &[10.0], &[]).is_err());
        assert!(plane_time_study(&ScenarioConfig::ex1(1.0, 100.0, 30.0), &[10.0, 20.0], 10, 0).is_err());
    }
}
