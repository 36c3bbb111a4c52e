//! Result files.
//!
//! * `detections.csv`: `trial, branch, photon_id, x_m, y_m, z_m, T_s` plus
//!   `cell_i, cell_j, cell_k` for a grid detector. Momentum-mode runs write
//!   `px, py, pz` in place of the position columns.
//! * `beables.csv`: `trial, site, operator, t_s, expectation`.
//! * `histogram.csv`: `bin_lo_s, bin_hi_s, count`.
//! * `summary.json`: configuration echo, statistics, seed and version.
//!
//! With `--format json` the two per-trial tables are written as
//! `detections.json` and `beables.json` instead.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{OutputFormat, RunConfig};
use super::convergence::ConvergenceTable;
use super::run::{run_trials_with, Runner, Statistics, TrialResult};
use crate::density::DensityMatrix;
use crate::detection::DetectionRecord;
use crate::error::{Error, Result};
use crate::spacetime::DetectionKind;

pub const DETECTIONS_CSV: &str = "detections.csv";
pub const BEABLES_CSV: &str = "beables.csv";
pub const HISTOGRAM_CSV: &str = "histogram.csv";
pub const SUMMARY_JSON: &str = "summary.json";

/// Shortest decimal that round-trips.
fn num(v: f64) -> String {
    format!("{v}")
}

pub fn detection_header(grid: bool, momentum: bool) -> Vec<&'static str> {
    let mut h = vec!["trial", "branch", "photon_id"];
    h.extend(if momentum { ["px", "py", "pz"] } else { ["x_m", "y_m", "z_m"] });
    h.push("T_s");
    if grid {
        h.extend(["cell_i", "cell_j", "cell_k"]);
    }
    h
}

pub fn detection_rows(trial: u64, rec: &DetectionRecord, grid: bool) -> Vec<Vec<String>> {
    rec.detections
        .iter()
        .map(|d| {
            let v = match d.kind {
                DetectionKind::Momentum(k) => k,
                DetectionKind::Position => d.position,
            };
            let mut row = vec![trial.to_string(), d.branch.clone().unwrap_or_default(), d.photon_id.to_string()];
            row.extend(v.iter().map(|&x| num(x)));
            row.push(num(rec.plane_time));
            if grid {
                match d.cell {
                    Some(c) => row.extend(c.iter().map(i64::to_string)),
                    None => row.extend(std::iter::repeat_n(String::new(), 3)),
                }
            }
            row
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub branch: String,
    pub record: DetectionRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeableRow {
    pub trial: u64,
    pub site: String,
    pub operator: String,
    pub t_s: f64,
    pub expectation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub warnings: Vec<String>,
    pub statistics: Statistics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceTable>,
}

/// Configuration echo without the output directory, so that identical runs
/// written to different places produce identical summaries.
pub fn config_echo(cfg: &RunConfig) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(cfg)?;
    if let Some(run) = v.get_mut("run").and_then(|r| r.as_object_mut()) {
        run.remove("out_dir");
    }
    Ok(v)
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| io(path, e))?))
}

enum Table {
    Csv(Box<csv::Writer<BufWriter<File>>>),
    Json { out: BufWriter<File>, first: bool },
}

impl Table {
    fn open(path: PathBuf, format: OutputFormat, header: &[&str]) -> Result<Self> {
        let out = create(&path)?;
        Ok(match format {
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(header)?;
                Table::Csv(Box::new(w))
            }
            OutputFormat::Json => {
                let mut out = out;
                out.write_all(b"[")?;
                Table::Json { out, first: true }
            }
        })
    }

    fn row(&mut self, fields: &[String]) -> Result<()> {
        if let Table::Csv(w) = self {
            w.write_record(fields)?;
        }
        Ok(())
    }

    fn item<T: Serialize>(&mut self, value: &T) -> Result<()> {
        if let Table::Json { out, first } = self {
            if !*first {
                out.write_all(b",")?;
            }
            *first = false;
            out.write_all(b"\n")?;
            serde_json::to_writer(&mut *out, value)?;
        }
        Ok(())
    }

    fn close(self) -> Result<()> {
        match self {
            Table::Csv(mut w) => w.flush()?,
            Table::Json { mut out, .. } => {
                out.write_all(b"\n]\n")?;
                out.flush()?;
            }
        }
        Ok(())
    }
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub statistics: Statistics,
    pub files: Vec<PathBuf>,
}

fn table_path(dir: &Path, stem: &str, format: OutputFormat) -> PathBuf {
    dir.join(match format {
        OutputFormat::Csv => format!("{stem}.csv"),
        OutputFormat::Json => format!("{stem}.json"),
    })
}

/// Run trials and write the configured files into `cfg.run.out_dir`.
pub fn run_trials(cfg: &RunConfig) -> Result<RunOutput> {
    let runner = Runner::new(cfg)?;
    let dir = &cfg.run.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let emit = cfg.run.emit;
    let format = cfg.run.format;
    let grid_mode = runner.scenario.detector.cell_size().is_some();
    let momentum = runner.scenario.kind == crate::scenarios::ScenarioKind::Ex5;
    let mut files = Vec::new();

    let mut detections = if emit.detections {
        let p = table_path(dir, "detections", format);
        files.push(p.clone());
        Some(Table::open(p, format, &detection_header(grid_mode, momentum))?)
    } else {
        None
    };
    let mut beables = if emit.trajectories {
        let p = table_path(dir, "beables", format);
        files.push(p.clone());
        Some(Table::open(p, format, &["trial", "site", "operator", "t_s", "expectation"])?)
    } else {
        None
    };

    let labels: Vec<String> = runner.scenario.families.iter().map(|f| f.label.clone()).collect();
    let statistics = run_trials_with(&runner, emit.trajectories, |r: &TrialResult| {
        if let Some(t) = detections.as_mut() {
            for row in detection_rows(r.trial, &r.record, grid_mode) {
                t.row(&row)?;
            }
            t.item(&TrialRecord { trial: r.trial, branch: labels[r.family].clone(), record: r.record.clone() })?;
        }
        if let Some(t) = beables.as_mut() {
            for (obs, values) in runner.observables.iter().zip(&r.trajectories) {
                for (&time, &v) in runner.grid.iter().zip(values) {
                    t.row(&[r.trial.to_string(), obs.op.site.clone(), obs.op.name.clone(), num(time), num(v)])?;
                    t.item(&BeableRow {
                        trial: r.trial,
                        site: obs.op.site.clone(),
                        operator: obs.op.name.clone(),
                        t_s: time,
                        expectation: v,
                    })?;
                }
            }
        }
        Ok(())
    })?;
    if let Some(t) = detections {
        t.close()?;
    }
    if let Some(t) = beables {
        t.close()?;
    }

    if emit.histograms {
        if let Some(h) = &statistics.transition_histogram {
            let p = dir.join(HISTOGRAM_CSV);
            let mut w = csv::Writer::from_writer(create(&p)?);
            w.write_record(["bin_lo_s", "bin_hi_s", "count"])?;
            let width = (h.hi - h.lo) / h.counts.len() as f64;
            for (i, c) in h.counts.iter().enumerate() {
                w.write_record([num(h.lo + width * i as f64), num(h.lo + width * (i + 1) as f64), c.to_string()])?;
            }
            w.flush()?;
            files.push(p);
        }
    }
    if emit.summary {
        let mut stats = statistics.clone();
        if !emit.histograms {
            stats.transition_histogram = None;
        }
        let summary = Summary {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.run.seed,
            config: config_echo(cfg)?,
            warnings: runner.scenario.warnings.clone(),
            statistics: stats,
            convergence: None,
        };
        let p = dir.join(SUMMARY_JSON);
        write_json(&p, &summary)?;
        files.push(p);
    }
    Ok(RunOutput { statistics, files })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// One row of a single-trial trajectory table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub time_s: f64,
    pub site: String,
    pub operator: String,
    pub expectation: f64,
    pub trace_distance_to_excited: f64,
}

impl TrajectoryRow {
    pub fn new(time_s: f64, site: &str, operator: &str, expectation: f64, rho: &DensityMatrix) -> Self {
        Self {
            time_s,
            site: site.to_string(),
            operator: operator.to_string(),
            expectation,
            trace_distance_to_excited: rho.trace_distance(&DensityMatrix::pure_basis(rho.dim(), 0)),
        }
    }
}

pub fn write_trajectory_csv<W: Write>(out: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["time_s", "site", "operator", "expectation", "trace_distance_to_excited"])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::ScenarioConfig;

    fn cfg(dir: &Path) -> RunConfig {
        let mut c = RunConfig::new(ScenarioConfig::ex1(1.0, 100.0, 30.0));
        c.run.trials = 20;
        c.run.seed = 3;
        c.run.grid = Some("0:4:9".parse().unwrap());
        c.run.out_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn csv_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_trials(&cfg(dir.path())).unwrap();
        assert_eq!(out.files.len(), 4);
        let mut r = csv::Reader::from_path(dir.path().join(DETECTIONS_CSV)).unwrap();
        assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), detection_header(false, false));
        let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
        assert_eq!(rows.len() as u64, out.statistics.detections);
        let x: f64 = rows[0][3].parse().unwrap();
        assert!(x.is_finite());
        let mut b = csv::Reader::from_path(dir.path().join(BEABLES_CSV)).unwrap();
        let parsed: Vec<BeableRow> = b.deserialize().map(|x| x.unwrap()).collect();
        assert_eq!(parsed.len(), 20 * 9);
        let s: Summary = serde_json::from_reader(File::open(dir.path().join(SUMMARY_JSON)).unwrap()).unwrap();
        assert_eq!(s.statistics, Statistics { wall_time: 0.0, ..out.statistics });
        assert!(s.config["run"].get("out_dir").is_none());
    }

    #[test]
    fn json_format_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(dir.path());
        c.run.format = OutputFormat::Json;
        run_trials(&c).unwrap();
        let recs: Vec<TrialRecord> = serde_json::from_reader(File::open(dir.path().join("detections.json")).unwrap()).unwrap();
        assert_eq!(recs.len(), 20);
        let rows: Vec<BeableRow> = serde_json::from_reader(File::open(dir.path().join("beables.json")).unwrap()).unwrap();
        assert_eq!(rows.len(), 180);
    }
}
