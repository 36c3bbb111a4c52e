//! Closed-form photon wave functions for a decaying dipole emitter and a
//! two-photon cascade, with normalizations fixed by quadrature.
//!
//! The single-photon amplitude is
//! `γ(r, t) = K (sin θ / r) Θ(t − r/c) exp(−i(ω − iΓ/2)(t − r/c))`,
//! with `θ` measured from the dipole axis. `K` is chosen so that the norm
//! tends to one as `t → ∞`. The angular integral of `sin²θ` contributes a
//! factor 4/3, so `K² = 3Γ/(8πc)`. That is 3/4 of the frequently quoted
//! `Γ/(2πc)`; both are exposed so the discrepancy can be reported.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};
use crate::spacetime::{Event, Frame, Vec3};

/// Γ/ω below which the narrow-line regime applies.
pub const NARROW_LINE_RATIO: f64 = 1e-2;

const SERIES_SWITCH: f64 = 0.5;

fn unit_axis(axis: Vec3) -> Result<Vec3> {
    let n = axis.norm();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::InvalidParameter("dipole axis must be a nonzero vector".into()));
    }
    Ok(axis / n)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// `sin θ` of `r` relative to the unit `axis`.
#[inline]
pub(crate) fn sin_polar(r: &Vec3, axis: &Vec3) -> f64 {
    let n = r.norm();
    if n == 0.0 {
        return 0.0;
    }
    (r.cross(axis).norm() / n).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterParams {
    pub gamma: f64,
    pub omega: f64,
    pub source: Event,
    pub dipole_axis: Vec3,
    pub frame: Frame,
}

impl EmitterParams {
    pub fn new(gamma: f64, omega: f64, source: Event, dipole_axis: Vec3, frame: Frame) -> Result<Self> {
        positive("decay rate", gamma)?;
        positive("transition frequency", omega)?;
        Ok(Self { gamma, omega, source, dipole_axis: unit_axis(dipole_axis)?, frame })
    }

    /// Emitter at the origin, introduced at `t = 0`, dipole along `z`.
    pub fn at_origin(gamma: f64, omega: f64, frame: Frame) -> Result<Self> {
        Self::new(gamma, omega, Event::origin(), Vec3::z(), frame)
    }

    pub fn at(self, source: Event) -> Self {
        Self { source, ..self }
    }

    /// Wavelength `2πc/ω` (ω is an angular frequency).
    pub fn wavelength(&self) -> f64 {
        2.0 * PI * self.frame.c / self.omega
    }

    /// Ordinary frequency `ω/2π`.
    pub fn frequency(&self) -> f64 {
        self.omega / (2.0 * PI)
    }

    pub fn narrow_line(&self) -> bool {
        self.gamma / self.omega < NARROW_LINE_RATIO
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub source: Event,
    pub dipole_axis: Vec3,
    pub frame: Frame,
}

impl CascadeParams {
    pub fn new(gamma1: f64, gamma2: f64, omega1: f64, omega2: f64, source: Event, frame: Frame) -> Result<Self> {
        positive("first decay rate", gamma1)?;
        positive("second decay rate", gamma2)?;
        positive("first frequency", omega1)?;
        positive("second frequency", omega2)?;
        Ok(Self { gamma1, gamma2, omega1, omega2, source, dipole_axis: Vec3::z(), frame })
    }

    pub fn first(&self) -> EmitterParams {
        EmitterParams {
            gamma: self.gamma1,
            omega: self.omega1,
            source: self.source,
            dipole_axis: self.dipole_axis,
            frame: self.frame,
        }
    }

    pub fn second(&self) -> EmitterParams {
        EmitterParams { gamma: self.gamma2, omega: self.omega2, ..self.first() }
    }
}

/// Complex photon amplitude, dimension length^(-3/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveAmplitude(pub Complex64);

impl WaveAmplitude {
    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    /// Quadrature-derived `K`.
    pub k: f64,
    /// Error estimate of `K²`.
    pub abs_error: f64,
}

const NORM_TOL: Tolerance = Tolerance { abs: 1e-14, rel: 1e-12, max_intervals: 2000 };

/// `∫ sin³θ dθ` over `[0, π]` by quadrature.
fn angular_weight() -> Result<f64> {
    let r = integrate(|th: f64| th.sin().powi(3), 0.0, PI, &[], NORM_TOL)?;
    Ok(r.value)
}

/// Unnormalized `∫ |γ/K|² d³r` at time `t`, or its `t → ∞` limit when `t` is `None`.
fn shape_norm(p: &EmitterParams, t: Option<f64>) -> Result<(f64, f64)> {
    let c = p.frame.c;
    let g = p.gamma;
    // radial integrand in the depth s = ct − r behind the wave front; r² cancels 1/r²
    let radial = |s: f64| (-g * s / c).exp();
    let mut err = 0.0;
    let mut radial_integral = |th: f64| -> f64 {
        let r = match t {
            Some(t) if t <= 0.0 => return 0.0,
            Some(t) => integrate(radial, 0.0, c * t, &[], NORM_TOL),
            None => integrate_to_infinity(radial, 0.0, c / g, NORM_TOL),
        };
        match r {
            Ok(e) => {
                err += e.abs_error;
                th.sin().powi(3) * e.value
            }
            Err(_) => f64::NAN,
        }
    };
    let outer = integrate(&mut radial_integral, 0.0, PI, &[], NORM_TOL)?;
    if !outer.value.is_finite() {
        return Err(Error::Quadrature { estimate: f64::INFINITY, tolerance: NORM_TOL.abs });
    }
    Ok((2.0 * PI * outer.value, 2.0 * PI * outer.abs_error))
}

/// `K` with `lim_{t→∞} ∫ |γ|² d³r = 1`, by nested quadrature over `(r, θ)`.
pub fn normalization_constant(p: &EmitterParams) -> Result<Normalization> {
    let (integral, err) = shape_norm(p, None)?;
    let k2 = 1.0 / integral;
    Ok(Normalization { k: k2.sqrt(), abs_error: err * k2 * k2 })
}

/// The constant `√(Γ/2πc)`, which omits the dipole angular factor.
pub fn naive_normalization_constant(p: &EmitterParams) -> f64 {
    (p.gamma / (2.0 * PI * p.frame.c)).sqrt()
}

/// Diagnostic `K²_computed / (Γ/2πc)`; analytically 3/4.
pub fn normalization_ratio(p: &EmitterParams) -> Result<f64> {
    let k = normalization_constant(p)?.k;
    Ok(k * k / naive_normalization_constant(p).powi(2))
}

/// Emitter together with its normalization, for repeated evaluation.
#[derive(Debug, Clone, Copy)]
pub struct PhotonMode {
    pub params: EmitterParams,
    pub k: f64,
}

impl PhotonMode {
    pub fn new(params: EmitterParams) -> Result<Self> {
        let k = normalization_constant(&params)?.k;
        Ok(Self { params, k })
    }

    /// Amplitude at `(r, t)` measured relative to the source event.
    pub fn gamma_wf(&self, r: &Vec3, t: f64) -> Result<WaveAmplitude> {
        let dist = r.norm();
        if dist == 0.0 {
            return Err(Error::InvalidParameter("wave function is singular at r = 0".into()));
        }
        let p = &self.params;
        let tau = t - dist / p.frame.c;
        if tau < 0.0 {
            return Ok(WaveAmplitude(Complex64::new(0.0, 0.0)));
        }
        let envelope = self.k * sin_polar(r, &p.dipole_axis) / dist * (-0.5 * p.gamma * tau).exp();
        Ok(WaveAmplitude(Complex64::from_polar(envelope, -p.omega * tau)))
    }

    /// `∫ |γ(·, t)|² d³r` by quadrature.
    pub fn norm(&self, t: f64) -> Result<f64> {
        let (integral, _) = shape_norm(&self.params, Some(t))?;
        Ok(self.k * self.k * integral)
    }
}

/// One-shot amplitude evaluation; computes the normalization every call.
pub fn gamma_wf(p: &EmitterParams, r: &Vec3, t: f64) -> Result<WaveAmplitude> {
    PhotonMode::new(*p)?.gamma_wf(r, t)
}

/// Density of the emission delay `τ = T − r/c` of a detection.
pub fn radial_delay_density(p: &EmitterParams, tau: f64) -> f64 {
    if tau < 0.0 {
        0.0
    } else {
        p.gamma * (-p.gamma * tau).exp()
    }
}

/// `3(sin x − x cos x)/x³` with `x = 2πd/λ`.
pub fn overlap_closed_form(d: f64, lambda: f64) -> f64 {
    let x = 2.0 * PI * d.abs() / lambda;
    if x < SERIES_SWITCH {
        let x2 = x * x;
        return 1.0 - x2 / 10.0 * (1.0 - x2 / 28.0 * (1.0 - x2 / 54.0 * (1.0 - x2 / 88.0 * (1.0 - x2 / 130.0 * (1.0 - x2 / 180.0)))));
    }
    3.0 * (x.sin() - x * x.cos()) / (x * x * x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub value: Complex64,
    pub abs_error: f64,
}

/// `∫ γ*(r − r₋, t) γ(r − r₊, t) d³r` for two copies of the emitter displaced by
/// `∓d/2` along its dipole axis, by nested quadrature over `(r, θ)` about the midpoint.
pub fn overlap_numeric(p: &EmitterParams, d: f64, t: f64) -> Result<Overlap> {
    if !p.narrow_line() {
        return Err(Error::Precondition(format!(
            "overlap requires Γ ≪ ω, got Γ/ω = {}",
            p.gamma / p.omega
        )));
    }
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::InvalidParameter(format!("separation must be non-negative, got {d}")));
    }
    if 1.0 - (-p.gamma * t).exp() <= 0.99 {
        return Err(Error::Precondition(format!("t = {t} too early: norm below 0.99")));
    }
    let k = normalization_constant(p)?.k;
    let k2 = k * k;
    let c = p.frame.c;
    let (g, w) = (p.gamma, p.omega);
    let h = 0.5 * d;
    let front = c * t;

    let integrand = |r: f64, th: f64| -> Complex64 {
        let (s, co) = th.sin_cos();
        let base = r * r + h * h;
        let rp = (base - r * d * co).max(0.0).sqrt();
        let rm = (base + r * d * co).max(0.0).sqrt();
        if rp >= front || rm >= front || rp == 0.0 || rm == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let rho = r * s;
        let amp = rho * rho / (rp * rp * rm * rm);
        let diff = if rp + rm > 0.0 { -2.0 * r * d * co / (rp + rm) } else { 0.0 };
        let decay = (-g * t + 0.5 * g * (rp + rm) / c).exp();
        let vol = 2.0 * PI * r * r * s;
        Complex64::from_polar(k2 * amp * decay * vol, w * diff / c)
    };

    let inner_tol = |r: f64| {
        let scale = 2.0 * PI * k2 * (-g * (t - (r + h) / c).max(0.0)).exp();
        Tolerance { abs: 1e-13 * scale.max(1e-300), rel: 1e-11, max_intervals: 4000 }
    };

    let mut failure = None;
    let mut inner_err = 0.0;
    let outer_fn = |r: f64| -> Complex64 {
        match integrate(|th| integrand(r, th), 0.0, PI, &[], inner_tol(r)) {
            Ok(e) => {
                inner_err += e.abs_error;
                e.value
            }
            Err(e) => {
                failure.get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    };

    let upper = front + h;
    let mut cuts = Vec::new();
    let start = h.max(front * 1e-12);
    let mut x = start;
    while x < front - h {
        cuts.push(x);
        x *= 2.0;
    }
    if h > 0.0 {
        cuts.push(front - h);
        cuts.push(front);
    }
    // the weight e^{-Γ(t - r/c)} lives within a few c/Γ of the front
    for j in 1..=40 {
        let y = front - j as f64 * c / g;
        if y > start {
            cuts.push(y);
        }
    }
    let outer = integrate(outer_fn, 0.0, upper, &cuts, Tolerance { abs: 1e-10, rel: 1e-10, max_intervals: 4000 })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Overlap { value: outer.value, abs_error: outer.abs_error })
}

/// Two-photon cascade amplitude with its quadrature-derived normalization `K′`.
#[derive(Debug, Clone, Copy)]
pub struct CascadeMode {
    pub params: CascadeParams,
    pub k_prime: f64,
}

/// `K′` with `∫∫ |ψ(r₁,T; r₂,T)|² d³r₁ d³r₂ → 1` as `T → ∞`.
pub fn cascade_normalization(p: &CascadeParams) -> Result<Normalization> {
    let c = p.frame.c;
    let angular = 2.0 * PI * angular_weight()?;
    // delays of the first emission and of the gap between emissions
    let mut err = 0.0;
    let gap = |tau1: f64| -> f64 {
        match integrate_to_infinity(|u: f64| (-p.gamma2 * u).exp(), 0.0, 1.0 / p.gamma2, NORM_TOL) {
            Ok(e) => {
                err += e.abs_error;
                (-p.gamma1 * tau1).exp() * e.value
            }
            Err(_) => f64::NAN,
        }
    };
    let radial = integrate_to_infinity(gap, 0.0, 1.0 / p.gamma1, NORM_TOL)?;
    if !radial.value.is_finite() {
        return Err(Error::Quadrature { estimate: f64::INFINITY, tolerance: NORM_TOL.abs });
    }
    // both emission orderings contribute; dr = c dτ for each photon
    let total = 2.0 * angular * angular * c * c * radial.value;
    let k2 = 1.0 / total;
    Ok(Normalization { k: k2.sqrt(), abs_error: radial.abs_error * k2 })
}

impl CascadeMode {
    pub fn new(params: CascadeParams) -> Result<Self> {
        Ok(Self { params, k_prime: cascade_normalization(&params)?.k })
    }

    fn ordered(&self, a: (&Vec3, f64), b: (&Vec3, f64)) -> Complex64 {
        let p = &self.params;
        let c = p.frame.c;
        let (ra, rb) = (a.0.norm(), b.0.norm());
        let tau_a = a.1 - ra / c;
        let tau_b = b.1 - rb / c;
        if tau_a < 0.0 || tau_b < tau_a {
            return Complex64::new(0.0, 0.0);
        }
        let gap = tau_b - tau_a;
        let env = sin_polar(a.0, &p.dipole_axis) / ra * sin_polar(b.0, &p.dipole_axis) / rb
            * (-0.5 * p.gamma1 * tau_a - 0.5 * p.gamma2 * gap).exp();
        Complex64::from_polar(env, -p.omega1 * tau_a - p.omega2 * gap)
    }

    /// Symmetrized amplitude at `(r₁, t₁; r₂, t₂)` relative to the source.
    pub fn two_photon_wf(&self, r1: &Vec3, t1: f64, r2: &Vec3, t2: f64) -> Result<WaveAmplitude> {
        if r1.norm() == 0.0 || r2.norm() == 0.0 {
            return Err(Error::InvalidParameter("two-photon amplitude is singular at r = 0".into()));
        }
        let v = self.ordered((r1, t1), (r2, t2)) + self.ordered((r2, t2), (r1, t1));
        Ok(WaveAmplitude(v * self.k_prime))
    }
}

/// Truncated Lorentzian on `[0, ∞)` centred at `ω` with half-width `Γ/2`.
fn lorentz_lower_cdf(p: &EmitterParams) -> f64 {
    0.5 + (-2.0 * p.omega / p.gamma).atan() / PI
}

/// Normalized line shape in angular frequency.
pub fn line_shape(p: &EmitterParams, w: f64) -> f64 {
    if w < 0.0 {
        return 0.0;
    }
    let hw = 0.5 * p.gamma;
    let z = 1.0 - lorentz_lower_cdf(p);
    hw / (PI * ((w - p.omega).powi(2) + hw * hw)) / z
}

/// Inverse CDF of [`line_shape`].
pub fn line_shape_quantile(p: &EmitterParams, u: f64) -> f64 {
    let lo = lorentz_lower_cdf(p);
    let q = lo + u * (1.0 - lo);
    (p.omega + 0.5 * p.gamma * (PI * (q - 0.5)).tan()).max(0.0)
}

/// Momentum-space detection density per `d³p`.
pub fn momentum_density(p: &EmitterParams, pvec: &Vec3) -> f64 {
    let pm = pvec.norm();
    if pm == 0.0 {
        return 0.0;
    }
    let f = &p.frame;
    let w = pm * f.c / f.hbar;
    let s = sin_polar(pvec, &p.dipole_axis);
    line_shape(p, w) * (f.c / f.hbar) * 3.0 / (8.0 * PI) * s * s / (pm * pm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn emitter(gamma: f64, omega: f64) -> EmitterParams {
        EmitterParams::at_origin(gamma, omega, Frame::default()).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(EmitterParams::at_origin(0.0, 1.0, Frame::default()).is_err());
        assert!(EmitterParams::at_origin(1.0, -1.0, Frame::default()).is_err());
        assert!(EmitterParams::new(1.0, 1.0, Event::origin(), Vec3::zeros(), Frame::default()).is_err());
    }

    #[test]
    fn amplitude_vanishes_outside_cone_and_on_axis() {
        let m = PhotonMode::new(emitter(1.0, 50.0)).unwrap();
        assert_eq!(m.gamma_wf(&Vec3::new(2.0, 0.0, 0.0), 1.0).unwrap().norm_sqr(), 0.0);
        assert_eq!(m.gamma_wf(&Vec3::new(0.0, 0.0, 0.5), 3.0).unwrap().norm_sqr(), 0.0);
        assert!(m.gamma_wf(&Vec3::zeros(), 3.0).is_err());
    }

    #[test]
    fn amplitude_density_at_one_lifetime() {
        let p = emitter(2.0, 80.0);
        let m = PhotonMode::new(p).unwrap();
        let r = 1.3;
        let t = r + 1.0 / p.gamma;
        let got = m.gamma_wf(&Vec3::new(r, 0.0, 0.0), t).unwrap().norm_sqr();
        assert_relative_eq!(got, m.k * m.k / (r * r) * (-1.0f64).exp(), max_relative = 1e-13);
    }

    #[test]
    fn normalization_matches_closed_form_and_ratio() {
        for (g, c) in [(1.0, 1.0), (3.0e7, 3.0e8), (1e-6, 1.0)] {
            let p = EmitterParams::at_origin(g, 10.0 * g, Frame::new(c).unwrap()).unwrap();
            let n = normalization_constant(&p).unwrap();
            assert_relative_eq!(n.k * n.k, 3.0 * g / (8.0 * PI * c), max_relative = 1e-10);
            assert_relative_eq!(normalization_ratio(&p).unwrap(), 0.75, epsilon = 1e-9);
        }
    }

    #[test]
    fn norm_grows_as_one_minus_exp() {
        let p = emitter(1.5, 100.0);
        let m = PhotonMode::new(p).unwrap();
        for gt in [0.5, 1.0, 3.0] {
            let t = gt / p.gamma;
            assert_relative_eq!(m.norm(t).unwrap(), 1.0 - (-gt).exp(), max_relative = 1e-6);
        }
        assert_relative_eq!(m.norm(40.0 / p.gamma).unwrap(), 1.0, max_relative = 1e-9);
        assert_eq!(m.norm(-1.0).unwrap(), 0.0);
    }

    #[test]
    fn delay_density() {
        let p = emitter(2.5, 100.0);
        assert_eq!(radial_delay_density(&p, 0.0), 2.5);
        assert_eq!(radial_delay_density(&p, -0.1), 0.0);
        let r = integrate_to_infinity(|t| radial_delay_density(&p, t), 0.0, 1.0, Tolerance::new(1e-13, 1e-12)).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn overlap_closed_form_values() {
        assert_eq!(overlap_closed_form(0.0, 1.0), 1.0);
        assert_relative_eq!(overlap_closed_form(0.5, 1.0), 3.0 / (PI * PI), max_relative = 1e-14);
        assert!(overlap_closed_form(20.0, 1.0).abs() < 1e-3);
        // power series of 3 j1(x) / x summed to convergence
        let oracle = |x: f64| {
            let (mut term, mut sum, mut n) = (1.0f64, 1.0f64, 0.0f64);
            while term.abs() > 1e-18 {
                n += 1.0;
                term *= -x * x / ((2.0 * n) * (2.0 * n + 3.0));
                sum += term;
            }
            sum
        };
        for x in [1e-6, 1e-3, 0.05, 0.3, 0.4999, 0.5, 0.5001, 1.0] {
            let v = overlap_closed_form(x / (2.0 * PI), 1.0);
            assert!((v - oracle(x)).abs() < 1e-14, "x = {x}: {v} vs {}", oracle(x));
        }
    }

    proptest! {
        #[test]
        fn overlap_closed_form_bounds(d in 0.0..50.0f64) {
            let v = overlap_closed_form(d, 1.0);
            let x = 2.0 * PI * d;
            prop_assert!(v <= 1.0);
            prop_assert_eq!(v, overlap_closed_form(-d, 1.0));
            if x > 1e-3 {
                prop_assert!(v < 1.0);
                prop_assert!(v >= -3.0 / (x * x) * (1.0 + 1.0 / x));
            }
        }

        #[test]
        fn amplitude_causal_support(x in -5.0..5.0f64, y in -5.0..5.0f64, z in -5.0..5.0f64, t in -1.0..8.0f64) {
            let m = PhotonMode { params: emitter(1.0, 100.0), k: 0.3 };
            let r = Vec3::new(x, y, z);
            prop_assume!(r.norm() > 1e-9);
            let a = m.gamma_wf(&r, t).unwrap();
            if t < r.norm() {
                prop_assert_eq!(a.norm_sqr(), 0.0);
            }
        }

        #[test]
        fn momentum_density_axisymmetric(pm in 0.5..1.5f64, th in 0.0..PI, phi1 in 0.0..TAU, phi2 in 0.0..TAU) {
            let p = emitter(0.05, 1.0);
            let v = |phi: f64| Vec3::new(pm * th.sin() * phi.cos(), pm * th.sin() * phi.sin(), pm * th.cos());
            let a = momentum_density(&p, &v(phi1));
            let b = momentum_density(&p, &v(phi2));
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn overlap_numeric_zero_displacement_is_norm() {
        let p = emitter(1e-4, 1.0);
        let t = 6.0 / p.gamma;
        let o = overlap_numeric(&p, 0.0, t).unwrap();
        assert_relative_eq!(o.value.re, 1.0 - (-6.0f64).exp(), max_relative = 1e-8);
        assert!(o.value.im.abs() < 1e-10);
    }

    #[test]
    fn overlap_numeric_matches_closed_form_at_one_wavelength() {
        let p = emitter(1e-9, 1.0);
        let lambda = p.wavelength();
        let o = overlap_numeric(&p, lambda, 20.0 / p.gamma).unwrap();
        let closed = overlap_closed_form(lambda, lambda);
        assert_relative_eq!(o.value.re, closed, max_relative = 1e-3);
        assert!(o.value.im.abs() < 1e-6 * o.value.norm());
    }

    #[test]
    fn overlap_numeric_preconditions() {
        assert!(overlap_numeric(&emitter(1.0, 10.0), 1.0, 100.0).is_err());
        assert!(overlap_numeric(&emitter(1e-4, 1.0), 1.0, 1.0).is_err());
        assert!(overlap_numeric(&emitter(1e-4, 1.0), -1.0, 1e5).is_err());
    }

    #[test]
    fn cascade_normalization_closed_form() {
        let p = CascadeParams::new(1.0, 2.5, 30.0, 40.0, Event::origin(), Frame::new(2.0).unwrap()).unwrap();
        let n = cascade_normalization(&p).unwrap();
        let a = 8.0 * PI / 3.0;
        let expect = p.gamma1 * p.gamma2 / (2.0 * a * a * 4.0);
        assert_relative_eq!(n.k * n.k, expect, max_relative = 1e-10);
    }

    #[test]
    fn cascade_amplitude_examples() {
        let p = CascadeParams::new(1.0, 2.0, 30.0, 40.0, Event::origin(), Frame::default()).unwrap();
        let m = CascadeMode::new(p).unwrap();
        let a = Vec3::new(3.0, 0.0, 0.0);
        let b = Vec3::new(0.0, 2.0, 0.0);
        // both retarded times negative
        assert_eq!(m.two_photon_wf(&a, 1.0, &b, 1.0).unwrap().norm_sqr(), 0.0);
        // symmetric under exchange
        let x = m.two_photon_wf(&a, 5.0, &b, 5.0).unwrap();
        let y = m.two_photon_wf(&b, 5.0, &a, 5.0).unwrap();
        assert_eq!(x, y);
        // equal-time plane, r₂ < r₁ in the equatorial plane
        let big_t = 5.0;
        let (r1, r2) = (3.0, 2.0);
        let got = x.norm_sqr();
        let expect = m.k_prime.powi(2) * (-p.gamma1 * (big_t - r1)).exp() * (-p.gamma2 * (r1 - r2)).exp() / (r1 * r1 * r2 * r2);
        assert_relative_eq!(got, expect, max_relative = 1e-12);
    }
}
