//! Minkowski-geometry primitives in the single preferred (centre-of-mass) frame.
//!
//! Every causal test in the crate goes through this module. Lightlike and
//! boundary decisions use the tolerance `ε = 1e-9 · c · T`, and a detection
//! lying exactly on the future light cone of a query point counts as
//! *outside* it, so a beable transition at `t₀` is visible for all `t ≥ t₀`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Relative tolerance factor for lightlike classification.
pub const CONE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    /// Speed of light.
    pub c: f64,
    /// Reduced Planck constant, used to convert momenta to frequencies.
    pub hbar: f64,
}

impl Default for Frame {
    fn default() -> Self {
        Self { c: 1.0, hbar: 1.0 }
    }
}

impl Frame {
    pub fn new(c: f64) -> Result<Self> {
        Self::with_hbar(c, 1.0)
    }

    pub fn with_hbar(c: f64, hbar: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("speed of light must be positive, got {c}")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { c, hbar })
    }

    /// Cone tolerance for a detection plane at time `plane_time`.
    pub fn cone_eps(&self, plane_time: f64) -> f64 {
        CONE_RTOL * self.c * plane_time.abs()
    }
}

/// A spacetime point `(t; r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub r: Vec3,
}

impl Event {
    pub fn new(t: f64, r: Vec3) -> Result<Self> {
        if !t.is_finite() || !r.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("event components must be finite".into()));
        }
        Ok(Self { t, r })
    }

    pub fn origin() -> Self {
        Self { t: 0.0, r: Vec3::zeros() }
    }

    pub fn at(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, r: Vec3::new(x, y, z) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CausalClass {
    TimelikeFuture,
    TimelikePast,
    LightlikeFuture,
    LightlikePast,
    Spacelike,
}

impl CausalClass {
    pub fn reversed(self) -> Self {
        match self {
            Self::TimelikeFuture => Self::TimelikePast,
            Self::TimelikePast => Self::TimelikeFuture,
            Self::LightlikeFuture => Self::LightlikePast,
            Self::LightlikePast => Self::LightlikeFuture,
            Self::Spacelike => Self::Spacelike,
        }
    }
}

/// What a detection measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "momentum")]
pub enum DetectionKind {
    Position,
    /// Momentum detection; the position field carries no meaning.
    Momentum(Vec3),
}

/// One click of the fictitious late-time detector on the plane `t = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub position: Vec3,
    pub plane_time: f64,
    pub kind: DetectionKind,
    pub photon_id: u32,
    /// Branch family that generated the click, when known (sampler output).
    pub branch: Option<String>,
    /// Grid cell when the click was coarsened; `position` is then the cell centre.
    pub cell: Option<[i64; 3]>,
}

impl DetectionEvent {
    pub fn position(position: Vec3, plane_time: f64, photon_id: u32) -> Result<Self> {
        if !(plane_time > 0.0 && plane_time.is_finite()) {
            return Err(Error::InvalidParameter(format!("plane time must be positive, got {plane_time}")));
        }
        if !position.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("detection position must be finite".into()));
        }
        Ok(Self { position, plane_time, kind: DetectionKind::Position, photon_id, branch: None, cell: None })
    }

    pub fn momentum(momentum: Vec3, plane_time: f64, photon_id: u32) -> Result<Self> {
        if !(plane_time > 0.0 && plane_time.is_finite()) {
            return Err(Error::InvalidParameter(format!("plane time must be positive, got {plane_time}")));
        }
        Ok(Self {
            position: Vec3::zeros(),
            plane_time,
            kind: DetectionKind::Momentum(momentum),
            photon_id,
            branch: None,
            cell: None,
        })
    }

    pub fn with_branch(mut self, branch: impl Into<String>) -> Self {
        self.branch = Some(branch.into());
        self
    }

    pub fn event(&self) -> Event {
        Event { t: self.plane_time, r: self.position }
    }

    pub fn momentum_vector(&self) -> Option<Vec3> {
        match self.kind {
            DetectionKind::Momentum(p) => Some(p),
            DetectionKind::Position => None,
        }
    }
}

/// Classify `b` relative to `a`.
pub fn causal_class(a: &Event, b: &Event, frame: &Frame) -> CausalClass {
    let dt = b.t - a.t;
    let ct = frame.c * dt.abs();
    let dr = (b.r - a.r).norm();
    let eps = CONE_RTOL * frame.c * a.t.abs().max(b.t.abs()).max(1.0);
    if dt == 0.0 && dr <= eps {
        // coincident points: treat as the trivial timelike separation
        return CausalClass::TimelikeFuture;
    }
    if (ct - dr).abs() <= eps {
        if dt > 0.0 {
            CausalClass::LightlikeFuture
        } else {
            CausalClass::LightlikePast
        }
    } else if ct > dr {
        if dt > 0.0 {
            CausalClass::TimelikeFuture
        } else {
            CausalClass::TimelikePast
        }
    } else {
        CausalClass::Spacelike
    }
}

/// Whether `d` lies outside the future light cone of `x`.
///
/// The boundary (within `ε_cone`) counts as outside.
pub fn is_outside_future_lightcone(x: &Event, d: &DetectionEvent, frame: &Frame) -> Result<bool> {
    if d.plane_time < x.t {
        return Err(Error::Precondition(format!(
            "detection plane t = {} lies in the past of the query point t = {}",
            d.plane_time, x.t
        )));
    }
    Ok(outside_cone_unchecked(x, &d.position, d.plane_time, frame))
}

#[inline]
pub(crate) fn outside_cone_unchecked(x: &Event, position: &Vec3, plane_time: f64, frame: &Frame) -> bool {
    let dist = (position - x.r).norm();
    let radius = frame.c * (plane_time - x.t);
    dist >= radius - frame.cone_eps(plane_time)
}

/// Unit vector from `x` towards the detection.
pub fn asymptotic_direction(x: &Event, d: &DetectionEvent) -> Result<Vec3> {
    direction_between(&x.r, &d.position)
}

pub(crate) fn direction_between(from: &Vec3, to: &Vec3) -> Result<Vec3> {
    let sep = to - from;
    let n = sep.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::Precondition("direction undefined for coincident points".into()));
    }
    Ok(sep / n)
}

/// Exact and asymptotic correlated transition times at the other site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionTimes {
    pub exact: f64,
    pub asymptotic: f64,
}

impl TransitionTimes {
    pub fn error(&self) -> f64 {
        (self.exact - self.asymptotic).abs()
    }
}

/// Given a click lightlike from `(t, r_plus)`, the time `t′` at which the same
/// click becomes lightlike-visible from `r_minus`.
pub fn correlated_transition_time(
    t: f64,
    detection: &DetectionEvent,
    r_plus: &Vec3,
    r_minus: &Vec3,
    frame: &Frame,
) -> Result<TransitionTimes> {
    let big_t = detection.plane_time;
    let from_plus = (detection.position - r_plus).norm();
    let eps = frame.cone_eps(big_t);
    if (from_plus - frame.c * (big_t - t)).abs() > eps.max(1e-12 * from_plus) {
        return Err(Error::Precondition(format!(
            "detection at distance {from_plus} is not lightlike from emission at t = {t}"
        )));
    }
    let exact = big_t - (detection.position - r_minus).norm() / frame.c;
    let n = direction_between(r_plus, &detection.position)?;
    let asymptotic = t - n.dot(&(r_plus - r_minus)) / frame.c;
    Ok(TransitionTimes { exact, asymptotic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;
    use proptest::prelude::*;

    fn det(pos: Vec3, t: f64) -> DetectionEvent {
        DetectionEvent::position(pos, t, 0).unwrap()
    }

    #[test]
    fn classification_examples() {
        let f = Frame::default();
        let a = Event::origin();
        assert_eq!(causal_class(&a, &Event::at(1.0, 0.0, 0.0, 0.0), &f), CausalClass::TimelikeFuture);
        assert_eq!(causal_class(&a, &Event::at(1.0, 0.0, 0.0, 1.0), &f), CausalClass::LightlikeFuture);
        assert_eq!(causal_class(&a, &Event::at(0.0, 1.0, 0.0, 0.0), &f), CausalClass::Spacelike);

        let f3 = Frame::new(3.0e8).unwrap();
        assert_eq!(causal_class(&a, &Event::at(1.0, 0.0, 0.0, 3.0e8), &f3), CausalClass::LightlikeFuture);
    }

    #[test]
    fn outside_cone_examples() {
        let f = Frame::default();
        let x = Event::origin();
        assert!(is_outside_future_lightcone(&x, &det(Vec3::new(2.0, 0.0, 0.0), 1.0), &f).unwrap());
        assert!(!is_outside_future_lightcone(&x, &det(Vec3::new(0.5, 0.0, 0.0), 1.0), &f).unwrap());

        // boundary counts as outside
        for big_t in [3.0, 10.0, 1e4] {
            let t0 = 1.7;
            let x = Event::at(t0, 0.0, 0.0, 0.0);
            let d = det(Vec3::new(0.0, big_t - t0, 0.0), big_t);
            assert!(is_outside_future_lightcone(&x, &d, &f).unwrap());
        }
    }

    #[test]
    fn outside_cone_rejects_past_plane() {
        let f = Frame::default();
        let x = Event::at(5.0, 0.0, 0.0, 0.0);
        assert!(is_outside_future_lightcone(&x, &det(Vec3::zeros(), 1.0), &f).is_err());
    }

    #[test]
    fn direction_examples() {
        let x = Event::origin();
        let n = asymptotic_direction(&x, &det(Vec3::new(0.0, 0.0, 5.0), 1.0)).unwrap();
        assert_relative_eq!(n, Vec3::new(0.0, 0.0, 1.0));
        let x1 = Event::at(0.0, 0.0, 0.0, 1.0);
        let n = asymptotic_direction(&x1, &det(Vec3::new(0.0, 0.0, -4.0), 1.0)).unwrap();
        assert_relative_eq!(n, Vec3::new(0.0, 0.0, -1.0));
        let n = asymptotic_direction(&x, &det(Vec3::new(3.0, 4.0, 0.0), 1.0)).unwrap();
        assert_relative_eq!(n, Vec3::new(0.6, 0.8, 0.0), epsilon = 1e-15);
        assert!(asymptotic_direction(&x, &det(Vec3::zeros(), 1.0)).is_err());
    }

    #[test]
    fn correlated_time_collinear_and_orthogonal() {
        let f = Frame::default();
        let d = 1.0;
        let rp = Vec3::new(0.0, 0.0, d / 2.0);
        let rm = Vec3::new(0.0, 0.0, -d / 2.0);
        let (t, big_t) = (0.3, 1e3);
        let on_axis = det(rp + Vec3::new(0.0, 0.0, big_t - t), big_t);
        let tt = correlated_transition_time(t, &on_axis, &rp, &rm, &f).unwrap();
        assert_relative_eq!(tt.asymptotic, t - d, epsilon = 1e-12);
        // collinear: exact equals asymptotic
        assert_relative_eq!(tt.exact, t - d, epsilon = 1e-9);

        let sideways = det(rp + Vec3::new(big_t - t, 0.0, 0.0), big_t);
        let tt = correlated_transition_time(t, &sideways, &rp, &rm, &f).unwrap();
        assert_relative_eq!(tt.asymptotic, t, epsilon = 1e-12);
    }

    #[test]
    fn correlated_time_error_scales_inverse_t() {
        // independent evaluation of the two formulas along one fixed direction
        let f = Frame::default();
        let d = 1.0;
        let rp = Vec3::new(0.0, 0.0, d / 2.0);
        let rm = Vec3::new(0.0, 0.0, -d / 2.0);
        let n = Vec3::new(0.6, 0.0, 0.8);
        let t = 0.25;
        let errs: Vec<f64> = [10.0, 20.0, 40.0]
            .iter()
            .map(|&big_t| {
                let d = det(rp + n * (big_t - t), big_t);
                correlated_transition_time(t, &d, &rp, &rm, &f).unwrap().error()
            })
            .collect();
        // law of cosines along n, and its leading term d² sin²θ / (2c(T - t))
        let exact = |big_t: f64| {
            let r = big_t - t;
            (r * r + 2.0 * r * d * n.z + d * d).sqrt() - r - d * n.z
        };
        let leading = |big_t: f64| (d * d * 0.36) / (2.0 * (big_t - t));
        for (e, big_t) in errs.iter().zip([10.0, 20.0, 40.0]) {
            assert_relative_eq!(*e, exact(big_t), max_relative = 1e-9);
        }
        assert_relative_eq!(errs[2], leading(40.0), max_relative = 0.05);
        let r1 = errs[0] / errs[1];
        let r2 = errs[1] / errs[2];
        assert!((r1 - 2.0).abs() < 0.1 && (r2 - 2.0).abs() < 0.1, "{r1} {r2}");
    }

    #[test]
    fn correlated_time_rejects_non_lightlike() {
        let f = Frame::default();
        let rp = Vec3::new(0.0, 0.0, 0.5);
        let rm = -rp;
        let d = det(Vec3::new(0.0, 0.0, 3.0), 10.0);
        assert!(correlated_transition_time(0.0, &d, &rp, &rm, &f).is_err());
    }

    fn arb_event() -> impl Strategy<Value = Event> {
        (-50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64).prop_map(|(t, x, y, z)| Event::at(t, x, y, z))
    }

    proptest! {
        #[test]
        fn causal_class_antisymmetric(a in arb_event(), b in arb_event()) {
            let f = Frame::default();
            prop_assume!(a != b);
            prop_assert_eq!(causal_class(&a, &b, &f), causal_class(&b, &a, &f).reversed());
        }

        #[test]
        fn outside_predicate_switches_at_crossing_time(
            x in -20.0..20.0f64, y in -20.0..20.0f64, z in -20.0..20.0f64,
            px in -20.0..20.0f64, py in -20.0..20.0f64, pz in -20.0..20.0f64,
            frac in 0.0..1.0f64,
        ) {
            let f = Frame::default();
            let big_t = 100.0;
            let d = det(Vec3::new(px, py, pz), big_t);
            let r = Vec3::new(x, y, z);
            let t0 = big_t - (d.position - r).norm();
            let below = t0 - 1e-3 - frac * (t0 + 50.0);
            let above = t0 + 1e-3 + frac * (big_t - t0 - 1e-3);
            let (xb, xa, x0) = (Event::new(below, r).unwrap(), Event::new(above.min(big_t), r).unwrap(), Event::new(t0, r).unwrap());
            prop_assert!(!is_outside_future_lightcone(&xb, &d, &f).unwrap());
            prop_assert!(is_outside_future_lightcone(&xa, &d, &f).unwrap());
            prop_assert!(is_outside_future_lightcone(&x0, &d, &f).unwrap());
        }

        #[test]
        fn direction_has_unit_norm(x in arb_event(), px in -1e3..1e3f64, py in -1e3..1e3f64, pz in -1e3..1e3f64) {
            let p = Vec3::new(px, py, pz);
            prop_assume!((p - x.r).norm() > 1e-6);
            let n = asymptotic_direction(&x, &det(p, 1.0)).unwrap();
            prop_assert!((n.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn asymptotic_time_is_t_independent(t in 0.0..2.0f64, theta in 0.01..3.1f64, phi in 0.0..TAU) {
            let f = Frame::default();
            let rp = Vec3::new(0.0, 0.0, 0.5);
            let rm = -rp;
            let n = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            let a = correlated_transition_time(t, &det(rp + n * (50.0 - t), 50.0), &rp, &rm, &f).unwrap();
            let b = correlated_transition_time(t, &det(rp + n * (400.0 - t), 400.0), &rp, &rm, &f).unwrap();
            prop_assert!((a.asymptotic - b.asymptotic).abs() < 1e-12);
        }
    }
}
