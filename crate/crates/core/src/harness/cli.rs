//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for configuration or usage errors, 2 for
//! runtime failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::config::{DetectorKind, OutputFormat, RunConfig, TimeGrid};
use super::convergence::convergence_study;
use super::output::{config_echo, run_trials, write_json, write_trajectory_csv, Summary, TrajectoryRow, SUMMARY_JSON};
use super::run::{final_outcome, run_statistics, Runner};
use super::stats::binomial_sigma;
use crate::beables::{abl_beable, beable_trajectory};
use crate::error::{Error, Result};
use crate::photon_wave::{overlap_closed_form, overlap_numeric, EmitterParams};
use crate::scenarios::{PosteriorMode, ScenarioKind, Setup};
use crate::spacetime::{Event, Frame};

#[derive(Debug, Parser)]
#[command(name = "beable-sim", version, about = "Light-cone conditioned beables for photon emission toy models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Paper,
    Exact,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Time grid as start:stop:steps (seconds).
    #[arg(long)]
    pub grid: Option<TimeGrid>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub detector: Option<DetectorKind>,
    /// Grid cell size in metres.
    #[arg(long)]
    pub cell: Option<f64>,
    /// Lowest detectable frequency in hertz.
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample trials and write detections, beable trajectories and a summary.
    Simulate(Common),
    /// Print the beable trajectories of a single trial.
    Beables {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Compare the closed-form and numerical two-site overlap.
    Overlap {
        #[arg(long = "d-over-lambda", value_delimiter = ',', num_args = 1.., required = true)]
        d_over_lambda: Vec<f64>,
        /// Skip the numerical quadrature.
        #[arg(long)]
        closed_only: bool,
    },
    /// Sweep the plane time and detector cell size.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Plane times in seconds.
        #[arg(long = "t-values", value_delimiter = ',')]
        t_values: Vec<f64>,
        /// Cell sizes in metres.
        #[arg(long = "l-values", value_delimiter = ',')]
        l_values: Vec<f64>,
    },
    /// Two-time beables of the momentum readout.
    Abl(Common),
    /// Print run statistics as JSON without writing files.
    Stats(Common),
}

fn load(c: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&c.scenario)?;
    if let Some(n) = c.trials {
        cfg.run.trials = n;
    }
    if let Some(s) = c.seed {
        cfg.run.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.run.out_dir = o.clone();
    }
    if c.grid.is_some() {
        cfg.run.grid = c.grid;
    }
    if let Some(m) = c.mode {
        cfg.scenario.mode = match m {
            ModeArg::Paper => PosteriorMode::Paper,
            ModeArg::Exact => PosteriorMode::Exact,
        };
    }
    if let Some(d) = c.detector {
        cfg.detector.kind = d;
    }
    if c.cell.is_some() {
        cfg.detector.cell_size_m = c.cell;
    }
    if c.cutoff.is_some() {
        cfg.detector.cutoff_hz = c.cutoff;
    }
    if let Some(f) = c.format {
        cfg.run.format = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(c: &Common, out: &mut dyn Write) -> Result<()> {
    let cfg = load(c)?;
    let r = run_trials(&cfg)?;
    let s = &r.statistics;
    writeln!(out, "trials {} detections {} null {} inconsistent {}", s.trials, s.detections, s.null_outcomes, s.inconsistent_records)?;
    for (k, v) in &s.branch_frequencies {
        writeln!(out, "branch {k} {v}")?;
    }
    if let (Some(d), Some(pass)) = (s.ks_statistic, s.ks_pass) {
        writeln!(out, "ks {d} {}", if pass { "pass" } else { "fail" })?;
    }
    if let Some(rho) = s.correlation {
        writeln!(out, "correlation {rho}")?;
    }
    writeln!(out, "wall time {:.3} s", s.wall_time)?;
    for f in &r.files {
        writeln!(out, "wrote {}", f.display())?;
    }
    Ok(())
}

fn beables(c: &Common, trial: u64, out: &mut dyn Write) -> Result<()> {
    let cfg = load(c)?;
    let runner = Runner::new(&cfg)?;
    let rec = runner.run_trial(trial, false)?.record;
    let scn = &runner.scenario;
    let mut rows = Vec::new();
    for obs in &runner.observables {
        if scn.kind == ScenarioKind::Ex5 {
            let site = scn.sites[scn.site_index(&obs.op.site)?].position;
            for &t in &runner.grid {
                let v = abl_beable(&Event::new(t, site)?, &obs.op, &final_outcome(&rec), scn)?;
                rows.push(TrajectoryRow::new(t, &obs.op.site, &obs.op.name, v.expectation, &v.density));
            }
        } else {
            let traj = beable_trajectory(&obs.op, &rec, scn, &runner.grid)?;
            for (&t, v) in traj.times.iter().zip(&traj.values) {
                rows.push(TrajectoryRow::new(t, &obs.op.site, &obs.op.name, v.expectation, &v.density));
            }
        }
    }
    match &c.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let p = dir.join(format!("trajectory_{trial}.csv"));
            write_trajectory_csv(std::fs::File::create(&p)?, &rows)?;
            writeln!(out, "wrote {}", p.display())?;
        }
        None => write_trajectory_csv(&mut *out, &rows)?,
    }
    Ok(())
}

fn overlap(d_over_lambda: &[f64], closed_only: bool, out: &mut dyn Write) -> Result<()> {
    let p = EmitterParams::at_origin(1e-9, 2.0 * std::f64::consts::PI, Frame::new(1.0)?)?;
    let lambda = p.wavelength();
    writeln!(out, "d_over_lambda\tclosed_form\tnumeric\trel_diff")?;
    for &r in d_over_lambda {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::Config(format!("d/lambda must be non-negative, got {r}")));
        }
        let closed = overlap_closed_form(r * lambda, lambda);
        if closed_only {
            writeln!(out, "{r}\t{closed}\t-\t-")?;
        } else {
            let num = overlap_numeric(&p, r * lambda, 20.0 / p.gamma)?.value.re;
            let rel = if closed.abs() > 0.0 { (num - closed).abs() / closed.abs() } else { (num - closed).abs() };
            writeln!(out, "{r}\t{closed}\t{num}\t{rel:.3e}")?;
        }
    }
    Ok(())
}

fn convergence(c: &Common, t_values: &[f64], l_values: &[f64], out: &mut dyn Write) -> Result<()> {
    let cfg = load(c)?;
    let table = convergence_study(&cfg, t_values, l_values)?;
    for (i, r) in table.plane_time_rows.iter().enumerate() {
        let ratio = i.checked_sub(1).map(|j| table.plane_time_ratios[j]);
        writeln!(out, "T {} samples {} mean_error {} ratio {}", r.plane_time_s, r.samples, r.mean_error_s, ratio.map_or("-".into(), |v| v.to_string()))?;
    }
    if let Some(p) = table.plane_time_exponent {
        writeln!(out, "T exponent {p}")?;
    }
    for r in &table.plane_time_independence {
        writeln!(out, "T {} vs {} ks {} {}", r.plane_time_a_s, r.plane_time_b_s, r.ks.statistic, if r.ks.passes_01() { "pass" } else { "fail" })?;
    }
    for r in &table.cell_size_rows {
        writeln!(
            out,
            "L {} samples {} mean_abs_diff {} max_abs_diff {} bound {} {}",
            r.cell_size_m,
            r.samples,
            r.mean_abs_diff_s,
            r.max_abs_diff_s,
            r.bound_s,
            if r.within_bound { "ok" } else { "violated" }
        )?;
    }
    if let Some(p) = table.cell_size_exponent {
        writeln!(out, "L exponent {p}")?;
    }
    if let Some(dir) = &c.out {
        std::fs::create_dir_all(dir)?;
        let p = dir.join("convergence.json");
        write_json(&p, &table)?;
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(())
}

fn abl(c: &Common, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load(c)?;
    if cfg.scenario.kind != ScenarioKind::Ex5 {
        return Err(Error::Config("abl needs a momentum-readout (ex5) scenario".into()));
    }
    if cfg.run.observables.is_empty() {
        cfg.run.observables = vec!["object:position".into(), "atom:e".into()];
    }
    let runner = Runner::new(&cfg)?;
    let Setup::Absorber { alpha, beta, .. } = runner.scenario.setup else { unreachable!("ex5 is an absorber setup") };
    let stats = run_statistics(&cfg)?;
    let n = stats.trials as usize;
    let expect = [("origin", alpha.norm_sqr()), ("far", beta.norm_sqr())];
    let mut all_ok = true;
    for (k, p) in expect {
        let f = stats.abl_frequencies.get(k).copied().unwrap_or(0.0);
        let sigma = binomial_sigma(p, n);
        let ok = (f - p).abs() <= 3.0 * sigma;
        all_ok &= ok;
        writeln!(out, "object {k} frequency {f} expected {p} sigma {sigma} {}", if ok { "ok" } else { "off" })?;
    }
    writeln!(out, "object beable max drift {}", stats.abl_max_drift.unwrap_or(0.0))?;
    if let Some(dir) = &c.out {
        std::fs::create_dir_all(dir)?;
        let summary = Summary {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.run.seed,
            config: config_echo(&cfg)?,
            warnings: runner.scenario.warnings.clone(),
            statistics: stats,
            convergence: None,
        };
        write_json(&dir.join(SUMMARY_JSON), &summary)?;
    }
    if !all_ok {
        writeln!(out, "warning: object frequencies outside 3 sigma")?;
    }
    Ok(())
}

fn stats(c: &Common, out: &mut dyn Write) -> Result<()> {
    let cfg = load(c)?;
    let s = run_statistics(&cfg)?;
    serde_json::to_writer_pretty(&mut *out, &s)?;
    writeln!(out)?;
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Simulate(c) => simulate(c, out),
        Command::Beables { common, trial } => beables(common, *trial, out),
        Command::Overlap { d_over_lambda, closed_only } => overlap(d_over_lambda, *closed_only, out),
        Command::Convergence { common, t_values, l_values } => convergence(common, t_values, l_values, out),
        Command::Abl(c) => abl(c, out),
        Command::Stats(c) => stats(c, out),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        1
    } else {
        2
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = main_with_args(std::iter::once("beable-sim").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn overlap_at_zero_is_one() {
        let (code, out, _) = run(&["overlap", "--d-over-lambda", "0,0.5", "--closed-only"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[1].split('\t').nth(1), Some("1"));
        let half: f64 = lines[2].split('\t').nth(1).unwrap().parse().unwrap();
        assert!((half - 3.0 / std::f64::consts::PI.powi(2)).abs() < 1e-15);
    }

    #[test]
    fn usage_and_config_errors_exit_one() {
        assert_eq!(run(&["simulate"]).0, 1);
        assert_eq!(run(&["bogus"]).0, 1);
        assert_eq!(run(&["simulate", "--scenario", "/nonexistent/ex1.toml"]).0, 1);
        assert_eq!(run(&["--help"]).0, 0);
    }

    #[test]
    fn runtime_errors_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("ex1.toml");
        std::fs::write(&cfg, "[scenario]\nkind = \"ex1\"\ngamma_per_s = 1.0\nomega_rad_per_s = 100.0\nplane_time_s = 30.0\n").unwrap();
        // a regular file where the output directory should go
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let (code, _, err) = run(&["simulate", "--scenario", cfg.to_str().unwrap(), "--trials", "2", "--out", blocker.to_str().unwrap()]);
        assert_eq!(code, 2, "{err}");
    }
}
