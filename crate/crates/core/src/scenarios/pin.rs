use serde::{Deserialize, Serialize};

use super::likelihood::family_weights;
use super::{LatentDensity, Scenario};
use crate::detection::{DetectionRecord, DetectorMode};
use crate::error::{Error, Result};
use crate::spacetime::{DetectionEvent, DetectionKind, Event};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "time", rename_all = "kebab-case")]
pub enum PinnedTime {
    Exact(f64),
    /// The photon was not emitted before the plane.
    AfterPlane,
    /// No detection constrains this time.
    Unresolved,
}

impl PinnedTime {
    pub fn exact(self) -> Option<f64> {
        match self {
            PinnedTime::Exact(t) => Some(t),
            _ => None,
        }
    }
}

/// Piecewise-constant history of one site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteTrajectory {
    pub site: usize,
    pub initial: usize,
    /// `(time, new state)` in program order.
    pub transitions: Vec<(PinnedTime, usize)>,
}

impl SiteTrajectory {
    /// State at `t`, or `None` if an unresolved transition could have happened by then.
    pub fn state_at(&self, t: f64) -> Option<usize> {
        let mut s = self.initial;
        for &(when, to) in &self.transitions {
            match when {
                PinnedTime::Exact(tt) if tt <= t => s = to,
                PinnedTime::Exact(_) | PinnedTime::AfterPlane => break,
                PinnedTime::Unresolved => return None,
            }
        }
        Some(s)
    }

    /// State after every transition has happened.
    pub fn final_state(&self) -> usize {
        self.transitions.last().map_or(self.initial, |&(_, s)| s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinnedHistory {
    pub family: usize,
    pub label: String,
    pub latents: Vec<PinnedTime>,
    pub sites: Vec<SiteTrajectory>,
}

impl Scenario {
    /// Recover the realized branch and its latent times from a full record.
    pub fn pin_branch(&self, rec: &DetectionRecord) -> Result<PinnedHistory> {
        let big_t = self.plane_time();
        let clicks: Vec<&DetectionEvent> =
            rec.detections.iter().filter(|d| matches!(d.kind, DetectionKind::Position)).collect();
        let eps = self.frame.cone_eps(big_t);
        for d in &clicks {
            let reach = self.sites.iter().map(|s| (d.position - s.position).norm()).fold(f64::INFINITY, f64::min);
            let slack = match self.detector.mode {
                DetectorMode::Ideal => eps,
                DetectorMode::Grid { cell_size, .. } => eps + 0.5 * 3f64.sqrt() * cell_size,
            };
            if reach > self.frame.c * big_t + slack {
                return Err(Error::InconsistentRecord(format!("click at radius {reach} beyond c·T")));
            }
        }
        // from the plane itself every click lies outside the cone
        let x = Event::at(big_t, 0.0, 0.0, 0.0);
        let mut best: Option<(usize, f64)> = None;
        for (k, f) in self.families.iter().enumerate() {
            let post = f.born_weight * family_weights(self, k, &clicks, &x, None)?.total();
            if post > 0.0 && best.is_none_or(|(_, b)| post > b) {
                best = Some((k, post));
            }
        }
        let Some((family, _)) = best else {
            return Err(Error::InconsistentRecord("no branch family can produce this record".into()));
        };
        let fam = &self.families[family];

        let mut latents = vec![PinnedTime::Unresolved; fam.latents.len()];
        let clamp = matches!(self.detector.mode, DetectorMode::Grid { .. });
        for (i, l) in fam.latents.iter().enumerate() {
            let base = match l.after.map(|p| latents[p]) {
                None => Some(0.0),
                Some(PinnedTime::Exact(v)) => Some(v),
                Some(_) => None,
            };
            let click = fam
                .emissions
                .iter()
                .filter(|e| e.latent == i && e.detectable)
                .find_map(|e| clicks.iter().find(|d| d.photon_id == e.photon_id).map(|d| (e, d)));
            latents[i] = match (click, l.density) {
                (Some((e, d)), _) => {
                    let mut v = big_t - (d.position - e.source).norm() / self.frame.c;
                    if clamp {
                        let lo = base.unwrap_or(0.0);
                        v = v.clamp(lo, lo + l.density.upper().min(big_t - lo));
                    }
                    PinnedTime::Exact(v)
                }
                (None, LatentDensity::PointMass { value }) => base.map_or(PinnedTime::Unresolved, |b| PinnedTime::Exact(b + value)),
                (None, _) if fam.emissions.iter().any(|e| e.latent == i && e.detectable) => PinnedTime::AfterPlane,
                (None, _) => PinnedTime::Unresolved,
            };
        }

        let sites = (0..self.sites.len())
            .map(|site| SiteTrajectory {
                site,
                initial: fam.initial[site],
                transitions: fam
                    .transitions
                    .iter()
                    .filter(|tr| tr.site == site)
                    .map(|tr| {
                        let when = match latents[tr.latent] {
                            PinnedTime::Exact(v) => PinnedTime::Exact(v + tr.offset),
                            other => other,
                        };
                        (when, tr.to)
                    })
                    .collect(),
            })
            .collect();
        Ok(PinnedHistory { family, label: fam.label.clone(), latents, sites })
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::ex4;
    use super::super::*;
    use super::*;
    use crate::detection::RngStream;
    use crate::spacetime::Vec3;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn ex1_pins_emission_time() {
        let s = build_scenario(&ScenarioConfig::ex1(1.0, 100.0, 30.0)).unwrap();
        let t0 = 2f64.ln();
        let d = DetectionEvent::position(Vec3::new(30.0 - t0, 0.0, 0.0), 30.0, 0).unwrap();
        let rec = DetectionRecord { plane_time: 30.0, detections: vec![d], no_detection_branches: vec![] };
        let h = s.pin_branch(&rec).unwrap();
        assert_relative_eq!(h.latents[0].exact().unwrap(), t0, epsilon = 1e-12);
        assert_eq!(h.sites[0].state_at(t0 - 1e-9), Some(0));
        assert_eq!(h.sites[0].state_at(t0), Some(1));
    }

    #[test]
    fn ex4_no_detection_ends_excited_object() {
        let s = ex4();
        let h = s.pin_branch(&DetectionRecord::empty(100.0)).unwrap();
        assert_eq!(h.label, "absorbed");
        assert_eq!(s.sites[1].basis[h.sites[1].final_state()], "obj0star");
    }

    #[test]
    fn ex3_orders_transitions() {
        let s = build_scenario(&ScenarioConfig::ex3(1.0, 2.0, 100.0, 80.0, 40.0)).unwrap();
        for i in 0..200 {
            let trial = s.sample(&mut RngStream::new(5, i)).unwrap();
            let h = s.pin_branch(&trial.record).unwrap();
            let tr = &h.sites[0].transitions;
            let (a, b) = (tr[0].0.exact().unwrap(), tr[1].0.exact().unwrap());
            assert!(a <= b);
            assert_eq!((tr[0].1, tr[1].1), (1, 2));
        }
    }

    #[test]
    fn rejects_impossible_click() {
        let s = build_scenario(&ScenarioConfig::ex1(1.0, 100.0, 30.0)).unwrap();
        let d = DetectionEvent::position(Vec3::new(31.0, 0.0, 0.0), 30.0, 0).unwrap();
        let rec = DetectionRecord { plane_time: 30.0, detections: vec![d], no_detection_branches: vec![] };
        assert!(matches!(s.pin_branch(&rec), Err(Error::InconsistentRecord(_))));
    }

    #[test]
    fn exactly_one_family_in_paper_mode() {
        let s = super::super::tests::ex2(PosteriorMode::Paper);
        let x = Event::at(30.0, 0.0, 0.0, 0.0);
        for i in 0..100 {
            let trial = s.sample(&mut RngStream::new(6, i)).unwrap();
            let nonzero = (0..2)
                .filter(|&k| s.branch_likelihood(k, &trial.record.detections, &x).unwrap() > 0.0)
                .count();
            assert_eq!(nonzero, 1);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn pin_inverts_sampling(seed in 0u64..1000, stream in 0u64..1000) {
            for cfg in [ScenarioConfig::ex1(1.0, 100.0, 30.0), ScenarioConfig::ex3(1.0, 2.0, 100.0, 80.0, 40.0)] {
                let s = build_scenario(&cfg).unwrap();
                let trial = s.sample(&mut RngStream::new(seed, stream)).unwrap();
                let h = s.pin_branch(&trial.record).unwrap();
                let tol = s.frame.cone_eps(30.0) / s.frame.c;
                for (truth, pinned) in trial.latents.iter().zip(&h.latents) {
                    if let Some(v) = truth {
                        prop_assert!((pinned.exact().unwrap() - v).abs() <= tol.max(1e-12 * v.abs()));
                    }
                }
            }
        }
    }
}
