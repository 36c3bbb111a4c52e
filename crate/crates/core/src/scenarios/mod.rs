//! Branch decompositions of the five toy models.
//!
//! A scenario is a set of sites with finite internal bases and a list of
//! branch families. Each family carries a Born weight, continuous latent
//! times, the photons it emits and the state transitions those times drive.

mod config;
mod likelihood;
mod pin;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use config::{PosteriorMode, ScenarioConfig, ScenarioKind};
pub use likelihood::{cap_probability, inside_probability, StateWeights};
pub(crate) use likelihood::{family_weights, marginal_weights};
pub use pin::{PinnedHistory, PinnedTime, SiteTrajectory};

use crate::detection::{
    coarsen_event, sample_absorber, sample_cascade, sample_ideal_single, sample_momentum, sample_superposed,
    DetectionRecord, DetectorMode, DetectorPlane, RngStream,
};
use crate::error::{Error, Result};
use crate::photon_wave::{CascadeParams, EmitterParams};
use crate::spacetime::{DetectionEvent, Event, Frame, Vec3};

pub const MAX_LATENTS: usize = 4;
pub const MAX_BASIS: usize = 3;
const WEIGHT_TOL: f64 = 1e-12;

/// A basis state of one site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InternalState {
    pub site: usize,
    pub state: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub name: String,
    pub basis: Vec<String>,
    pub position: Vec3,
}

impl Site {
    fn new(name: &str, basis: &[&str], position: Vec3) -> Self {
        Self { name: name.into(), basis: basis.iter().map(|s| s.to_string()).collect(), position }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.basis.iter().position(|b| b == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum LatentDensity {
    Exponential { rate: f64 },
    /// Exponential conditioned on `s ≤ upper`.
    TruncatedExponential { rate: f64, upper: f64 },
    PointMass { value: f64 },
}

impl LatentDensity {
    pub fn pdf(&self, s: f64) -> f64 {
        match *self {
            LatentDensity::Exponential { rate } if s >= 0.0 => rate * (-rate * s).exp(),
            LatentDensity::TruncatedExponential { rate, upper } if (0.0..=upper).contains(&s) => {
                rate * (-rate * s).exp() / -(-rate * upper).exp_m1()
            }
            _ => 0.0,
        }
    }

    pub fn cdf(&self, s: f64) -> f64 {
        match *self {
            LatentDensity::Exponential { rate } => {
                if s <= 0.0 {
                    0.0
                } else {
                    -(-rate * s).exp_m1()
                }
            }
            LatentDensity::TruncatedExponential { rate, upper } => {
                if s <= 0.0 {
                    0.0
                } else if s >= upper {
                    1.0
                } else {
                    (-rate * s).exp_m1() / (-rate * upper).exp_m1()
                }
            }
            LatentDensity::PointMass { value } => {
                if s >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Probability mass on `[a, b]` computed without cancellation in the tail.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        match *self {
            LatentDensity::Exponential { rate } => {
                let (a, b) = (a.max(0.0), b.max(0.0));
                if b <= a {
                    return 0.0;
                }
                (-rate * a).exp() * -(-rate * (b - a)).exp_m1()
            }
            _ => (self.cdf(b) - self.cdf(a)).max(0.0),
        }
    }

    /// Largest value in the support.
    pub fn upper(&self) -> f64 {
        match *self {
            LatentDensity::Exponential { .. } => f64::INFINITY,
            LatentDensity::TruncatedExponential { upper, .. } => upper,
            LatentDensity::PointMass { value } => value,
        }
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self, LatentDensity::PointMass { .. })
    }
}

/// A latent time; its value is the parent's value (or zero) plus a draw from `density`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentVar {
    pub name: String,
    pub density: LatentDensity,
    pub after: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Emission {
    pub photon_id: u32,
    pub latent: usize,
    pub source: Vec3,
    pub dipole_axis: Vec3,
    pub gamma: f64,
    pub omega: f64,
    /// False when the photon can never reach the detector.
    pub detectable: bool,
}

impl Emission {
    pub fn frequency(&self) -> f64 {
        self.omega / (2.0 * std::f64::consts::PI)
    }
}

/// State change `from → to` at the value of a latent plus a fixed offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub site: usize,
    pub from: usize,
    pub to: usize,
    pub latent: usize,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchFamily {
    pub label: String,
    pub born_weight: f64,
    /// Initial basis index per site.
    pub initial: Vec<usize>,
    pub latents: Vec<LatentVar>,
    pub emissions: Vec<Emission>,
    pub transitions: Vec<Transition>,
}

impl BranchFamily {
    /// State of `site` at time `t` for concrete latent values.
    pub fn state_at(&self, site: usize, t: f64, latents: &[f64]) -> usize {
        let mut s = self.initial[site];
        for tr in self.transitions.iter().filter(|tr| tr.site == site) {
            if latents[tr.latent] + tr.offset <= t {
                s = tr.to;
            }
        }
        s
    }

    pub fn emission_for_photon(&self, photon_id: u32) -> Option<&Emission> {
        self.emissions.iter().find(|e| e.photon_id == photon_id)
    }
}

/// Emitter data the samplers need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setup {
    Single(EmitterParams),
    Superposed { emitter: EmitterParams, alpha: Complex64, beta: Complex64, d: f64 },
    Cascade(CascadeParams),
    Absorber { emitter: EmitterParams, alpha: Complex64, beta: Complex64, outer: f64, inner: f64, offset: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub kind: ScenarioKind,
    pub frame: Frame,
    pub mode: PosteriorMode,
    pub detector: DetectorPlane,
    pub sites: Vec<Site>,
    pub families: Vec<BranchFamily>,
    pub setup: Setup,
    pub warnings: Vec<String>,
}

/// One sampled outcome plus the ground truth that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub record: DetectionRecord,
    /// Index of the family that was realized.
    pub family: usize,
    /// True latent values, `None` where the sampler never draws them.
    pub latents: Vec<Option<f64>>,
    /// Cascade draws rejected before acceptance.
    pub redraws: u32,
}

pub fn build_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let frame = Frame::with_hbar(cfg.c_m_per_s, cfg.hbar_j_s).map_err(|e| Error::Config(e.to_string()))?;
    let big_t = cfg.plane_time_s;
    let detector = DetectorPlane::ideal(big_t)?;
    let z = Vec3::z();
    let mut warnings = Vec::new();
    let (sites, families, setup) = match cfg.kind {
        ScenarioKind::Ex1 => {
            let (g, w) = (cfg.gamma()?, cfg.omega()?);
            let p = EmitterParams::at_origin(g, w, frame)?;
            let fam = BranchFamily {
                label: "decay".into(),
                born_weight: 1.0,
                initial: vec![0],
                latents: vec![latent("tau", LatentDensity::Exponential { rate: g }, None)],
                emissions: vec![emission(0, 0, Vec3::zeros(), z, g, w)],
                transitions: vec![Transition { site: 0, from: 0, to: 1, latent: 0, offset: 0.0 }],
            };
            (vec![Site::new("atom", &["e", "g"], Vec3::zeros())], vec![fam], Setup::Single(p))
        }
        ScenarioKind::Ex2 => {
            let (g, w) = (cfg.gamma()?, cfg.omega()?);
            let (alpha, beta) = cfg.amplitudes()?;
            let d = cfg.separation()?;
            let p = EmitterParams::at_origin(g, w, frame)?;
            if d < 10.0 * p.wavelength() {
                warnings.push(format!("separation {d} is not much larger than the wavelength {}", p.wavelength()));
            }
            let rm = -0.5 * d * z;
            let rp = 0.5 * d * z;
            let sites = vec![
                Site::new("atom_minus", &["e", "g", "away"], rm),
                Site::new("atom_plus", &["e", "g", "away"], rp),
            ];
            let fam = |label: &str, weight: f64, site: usize, pos: Vec3| BranchFamily {
                label: label.into(),
                born_weight: weight,
                initial: if site == 0 { vec![0, 2] } else { vec![2, 0] },
                latents: vec![latent("tau", LatentDensity::Exponential { rate: g }, None)],
                emissions: vec![emission(0, 0, pos, z, g, w)],
                transitions: vec![Transition { site, from: 0, to: 1, latent: 0, offset: 0.0 }],
            };
            let families = vec![fam("minus", alpha.norm_sqr(), 0, rm), fam("plus", beta.norm_sqr(), 1, rp)];
            (sites, families, Setup::Superposed { emitter: p, alpha, beta, d })
        }
        ScenarioKind::Ex3 => {
            let (g1, g2, w1, w2) = cfg.cascade_rates()?;
            let cp = CascadeParams::new(g1, g2, w1, w2, Event::origin(), frame)?;
            if big_t < 10.0 * (1.0 / g1 + 1.0 / g2) {
                warnings.push(format!("plane time {big_t} is short compared with the cascade lifetimes"));
            }
            let fam = BranchFamily {
                label: "cascade".into(),
                born_weight: 1.0,
                initial: vec![0],
                latents: vec![
                    latent("tau1", LatentDensity::Exponential { rate: g1 }, None),
                    latent("tau2", LatentDensity::Exponential { rate: g2 }, Some(0)),
                ],
                emissions: vec![emission(0, 0, Vec3::zeros(), z, g1, w1), emission(1, 1, Vec3::zeros(), z, g2, w2)],
                transitions: vec![
                    Transition { site: 0, from: 0, to: 1, latent: 0, offset: 0.0 },
                    Transition { site: 0, from: 1, to: 2, latent: 1, offset: 0.0 },
                ],
            };
            (vec![Site::new("atom", &["e2", "e1", "g"], Vec3::zeros())], vec![fam], Setup::Cascade(cp))
        }
        ScenarioKind::Ex4 | ScenarioKind::Ex5 => {
            let (g, w) = (cfg.gamma()?, cfg.omega()?);
            let (alpha, beta) = cfg.amplitudes()?;
            let (outer, inner, offset) = cfg.shell()?;
            let p = EmitterParams::at_origin(g, w, frame)?;
            if outer < 10.0 * frame.c / g {
                warnings.push(format!("shell radius {outer} is not much larger than c/gamma = {}", frame.c / g));
            }
            let sites = vec![
                Site::new("atom", &["e", "g"], Vec3::zeros()),
                Site::new("object", &["obj0", "obj0star", "obj100"], Vec3::zeros()),
            ];
            let absorbed = BranchFamily {
                label: "absorbed".into(),
                born_weight: alpha.norm_sqr(),
                initial: vec![0, 0],
                latents: vec![latent("tau", LatentDensity::Exponential { rate: g }, None)],
                emissions: vec![Emission { detectable: false, ..emission(0, 0, Vec3::zeros(), z, g, w) }],
                transitions: vec![
                    Transition { site: 0, from: 0, to: 1, latent: 0, offset: 0.0 },
                    Transition { site: 1, from: 0, to: 1, latent: 0, offset: inner / frame.c },
                ],
            };
            let escape = BranchFamily {
                label: "escape".into(),
                born_weight: beta.norm_sqr(),
                initial: vec![0, 2],
                latents: vec![latent("tau", LatentDensity::TruncatedExponential { rate: g, upper: big_t }, None)],
                emissions: vec![emission(0, 0, Vec3::zeros(), z, g, w)],
                transitions: vec![Transition { site: 0, from: 0, to: 1, latent: 0, offset: 0.0 }],
            };
            (sites, vec![absorbed, escape], Setup::Absorber { emitter: p, alpha, beta, outer, inner, offset })
        }
    };
    let scn = Scenario { config: cfg.clone(), kind: cfg.kind, frame, mode: cfg.mode, detector, sites, families, setup, warnings };
    scn.check()?;
    Ok(scn)
}

fn latent(name: &str, density: LatentDensity, after: Option<usize>) -> LatentVar {
    LatentVar { name: name.into(), density, after }
}

fn emission(photon_id: u32, latent: usize, source: Vec3, axis: Vec3, gamma: f64, omega: f64) -> Emission {
    Emission { photon_id, latent, source, dipole_axis: axis, gamma, omega, detectable: true }
}

impl Scenario {
    fn check(&self) -> Result<()> {
        let total: f64 = self.families.iter().map(|f| f.born_weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Config(format!("Born weights sum to {total}")));
        }
        for f in &self.families {
            if f.latents.len() > MAX_LATENTS || f.initial.len() != self.sites.len() {
                return Err(Error::Config(format!("family `{}` is malformed", f.label)));
            }
            for (i, l) in f.latents.iter().enumerate() {
                if l.after.is_some_and(|p| p >= i) {
                    return Err(Error::Config(format!("latent `{}` depends on a later latent", l.name)));
                }
            }
            for (site, s) in self.sites.iter().enumerate() {
                let mut state = f.initial[site];
                if state >= s.dim() || s.dim() > MAX_BASIS {
                    return Err(Error::Config(format!("site `{}` basis mismatch", s.name)));
                }
                for tr in f.transitions.iter().filter(|tr| tr.site == site) {
                    if tr.from != state || tr.to >= s.dim() {
                        return Err(Error::Config(format!("family `{}` has an unordered transition", f.label)));
                    }
                    state = tr.to;
                }
            }
        }
        Ok(())
    }

    /// Replace the detector. Photons below a grid cutoff become undetectable.
    pub fn with_detector(mut self, plane: DetectorPlane) -> Result<Self> {
        if (plane.time - self.config.plane_time_s).abs() > 0.0 {
            return Err(Error::Config(format!(
                "detector plane time {} differs from scenario plane time {}",
                plane.time, self.config.plane_time_s
            )));
        }
        for f in &mut self.families {
            for e in &mut f.emissions {
                if !plane.sees(e.frequency()) {
                    e.detectable = false;
                }
            }
        }
        self.detector = plane;
        Ok(self)
    }

    pub fn plane_time(&self) -> f64 {
        self.detector.time
    }

    pub fn site_index(&self, name: &str) -> Result<usize> {
        self.sites
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown site `{name}`")))
    }

    pub fn family_index(&self, label: &str) -> Option<usize> {
        self.families.iter().position(|f| f.label == label)
    }

    /// Probability that the scenario's photons have all been emitted by `t` (single-latent families).
    pub fn emission_probability(&self, t: f64) -> f64 {
        self.families
            .iter()
            .map(|f| f.born_weight * f.latents.iter().map(|l| l.density.cdf(t)).product::<f64>())
            .sum()
    }

    /// Draw one late-time measurement outcome.
    pub fn sample(&self, rng: &mut RngStream) -> Result<Trial> {
        let plane = DetectorPlane::ideal(self.plane_time())?;
        let big_t = plane.time;
        let mut record = DetectionRecord::empty(big_t);
        let mut redraws = 0;
        let (family, latents, detections) = match self.setup {
            Setup::Single(p) => match sample_ideal_single(&p, &plane, rng)? {
                Some(d) => (0, vec![Some(d.delay)], vec![(d.event, p.omega)]),
                None => (0, vec![None], vec![]),
            },
            Setup::Superposed { emitter, alpha, beta, d } => {
                let (branch, draw) = sample_superposed(&emitter, alpha, beta, d, &plane, rng)?;
                let fam = self.family_index(branch.label()).expect("ex2 families");
                match draw {
                    Some(dr) => (fam, vec![Some(dr.delay)], vec![(dr.event, emitter.omega)]),
                    None => (fam, vec![None], vec![]),
                }
            }
            Setup::Cascade(cp) => {
                let draw = sample_cascade(&cp, &plane, rng)?;
                redraws = draw.redraws;
                (
                    0,
                    vec![Some(draw.first.delay), Some(draw.second.delay)],
                    vec![(draw.first.event, cp.omega1), (draw.second.event, cp.omega2)],
                )
            }
            Setup::Absorber { emitter, alpha, beta, .. } => match self.kind {
                ScenarioKind::Ex5 => match sample_momentum(&emitter, alpha, beta, rng)? {
                    Some(pv) => (1, vec![None], vec![(DetectionEvent::momentum(pv, big_t, 0)?, emitter.omega)]),
                    None => (0, vec![None], vec![]),
                },
                _ => match sample_absorber(&emitter, alpha, beta, &plane, rng)? {
                    Some(d) => (1, vec![Some(d.delay)], vec![(d.event, emitter.omega)]),
                    None => (0, vec![None], vec![]),
                },
            },
        };
        let label = self.families[family].label.clone();
        for (event, omega) in detections {
            let event = event.with_branch(label.clone());
            match self.detector.mode {
                DetectorMode::Ideal => record.detections.push(event),
                DetectorMode::Grid { .. } if event.momentum_vector().is_some() => record.detections.push(event),
                DetectorMode::Grid { .. } => {
                    if let Some(c) = coarsen_event(&event, &self.detector, omega / (2.0 * std::f64::consts::PI))? {
                        record.detections.push(c);
                    }
                }
            }
        }
        if record.detections.is_empty() {
            record.no_detection_branches.push(label);
        }
        Ok(Trial { record, family, latents, redraws })
    }

    /// Likelihood of `outside` (clicks already restricted to a causal region) under one family.
    pub fn branch_likelihood(&self, family: usize, outside: &[DetectionEvent], x: &Event) -> Result<f64> {
        let refs: Vec<&DetectionEvent> = outside.iter().collect();
        Ok(likelihood::family_weights(self, family, &refs, x, None)?.total())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    pub(crate) fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    pub(crate) fn ex2(mode: PosteriorMode) -> Scenario {
        let cfg = ScenarioConfig::ex2(1.0, 1000.0, c(0.3f64.sqrt()), c(0.7f64.sqrt()), 2.0, 30.0).with_mode(mode);
        build_scenario(&cfg).unwrap()
    }

    pub(crate) fn ex4() -> Scenario {
        let cfg = ScenarioConfig::absorber(ScenarioKind::Ex4, 1.0, 1000.0, c(0.6f64.sqrt()), c(0.4f64.sqrt()), 20.0, 19.0, 100.0);
        build_scenario(&cfg).unwrap()
    }

    #[test]
    fn born_weights() {
        let s = ex2(PosteriorMode::Paper);
        assert_relative_eq!(s.families[0].born_weight, 0.3, epsilon = 1e-15);
        assert_relative_eq!(s.families[1].born_weight, 0.7, epsilon = 1e-15);
        let s4 = ex4();
        assert_relative_eq!(s4.families.iter().map(|f| f.born_weight).sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ex1_emission_probability() {
        let s = build_scenario(&ScenarioConfig::ex1(1.0, 100.0, 30.0)).unwrap();
        for t in [0.5, 1.0, 3.0] {
            assert_relative_eq!(s.emission_probability(t), 1.0 - (-t).exp(), epsilon = 1e-14);
        }
    }

    #[test]
    fn config_errors() {
        let mut cfg = ScenarioConfig::ex1(1.0, 100.0, 30.0);
        cfg.gamma_per_s = None;
        assert!(matches!(build_scenario(&cfg), Err(Error::Config(_))));
        let bad = ScenarioConfig::ex2(1.0, 1000.0, c(0.5), c(0.5), 2.0, 30.0);
        assert!(matches!(build_scenario(&bad), Err(Error::Config(_))));
        let mut shell = ScenarioConfig::absorber(ScenarioKind::Ex4, 1.0, 1000.0, c(1.0), c(0.0), 20.0, 19.0, 100.0);
        shell.shell_inner_radius_m = Some(30.0);
        assert!(build_scenario(&shell).is_err());
    }

    #[test]
    fn regime_warnings() {
        let s = build_scenario(&ScenarioConfig::ex2(1.0, 1.0, c(1.0), c(0.0), 2.0, 30.0)).unwrap();
        assert_eq!(s.warnings.len(), 1);
        let s4 = build_scenario(&ScenarioConfig::absorber(ScenarioKind::Ex4, 1.0, 1000.0, c(1.0), c(0.0), 2.0, 1.0, 100.0)).unwrap();
        assert_eq!(s4.warnings.len(), 1);
        assert!(ex4().warnings.is_empty());
    }

    #[test]
    fn ex4_families() {
        let s = ex4();
        let absorbed = &s.families[0];
        assert!(!absorbed.emissions[0].detectable);
        assert_eq!(absorbed.state_at(1, 100.0, &[1.0]), 1);
        assert_eq!(absorbed.state_at(1, 19.5, &[1.0]), 0);
        assert_eq!(s.families[1].state_at(1, 50.0, &[1.0]), 2);
    }

    #[test]
    fn sampling_tags_branches() {
        let s = ex2(PosteriorMode::Paper);
        for i in 0..200 {
            let trial = s.sample(&mut RngStream::new(1, i)).unwrap();
            let d = &trial.record.detections[0];
            assert_eq!(d.branch.as_deref(), Some(s.families[trial.family].label.as_str()));
        }
        let s4 = ex4();
        for i in 0..200 {
            let trial = s4.sample(&mut RngStream::new(2, i)).unwrap();
            assert_eq!(trial.record.is_empty(), trial.family == 0);
            if trial.family == 0 {
                assert_eq!(trial.record.no_detection_branches, vec!["absorbed".to_string()]);
            }
        }
    }

    #[test]
    fn cutoff_marks_photons_undetectable() {
        let s = build_scenario(&ScenarioConfig::ex1(1.0, 100.0, 30.0)).unwrap();
        let nu = 100.0 / (2.0 * std::f64::consts::PI);
        let grid = s.clone().with_detector(DetectorPlane::grid(30.0, 0.5, 2.0 * nu).unwrap()).unwrap();
        assert!(!grid.families[0].emissions[0].detectable);
        for i in 0..50 {
            assert!(grid.sample(&mut RngStream::new(3, i)).unwrap().record.is_empty());
        }
        assert!(s.with_detector(DetectorPlane::ideal(31.0).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn latent_mass_matches_cdf(rate in 0.1..5.0f64, a in 0.0..5.0f64, w in 0.0..5.0f64, upper in 0.5..10.0f64) {
            let b = a + w;
            let ex = LatentDensity::Exponential { rate };
            prop_assert!((ex.mass(a, b) - (ex.cdf(b) - ex.cdf(a))).abs() < 1e-14);
            let tr = LatentDensity::TruncatedExponential { rate, upper };
            prop_assert!(tr.cdf(upper) == 1.0 && tr.mass(0.0, upper * 2.0) == 1.0);
            prop_assert!(tr.pdf(upper + 1e-9) == 0.0 && tr.pdf(upper * 0.5) >= ex.pdf(upper * 0.5));
        }

        #[test]
        fn trajectories_are_time_ordered(t1 in 0.0..10.0f64, gap in 0.0..10.0f64, t in 0.0..25.0f64, dt in 0.0..5.0f64) {
            let s = build_scenario(&ScenarioConfig::ex3(1.0, 2.0, 100.0, 80.0, 40.0)).unwrap();
            let f = &s.families[0];
            let lat = [t1, t1 + gap];
            // states only move forward through the basis order
            prop_assert!(f.state_at(0, t, &lat) <= f.state_at(0, t + dt, &lat));
        }
    }
}
