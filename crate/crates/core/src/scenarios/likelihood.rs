//! Per-family weights `E[Π photon factors · 1{site state = k}]` given the
//! clicks that lie outside the future light cone of a query event.
//!
//! Clicked photons pin their latent time at `T − |p − s|/c`. Photons without
//! an outside click contribute the probability that their click (if any) lands
//! inside the cone. The remaining latents are integrated piecewise between
//! global breakpoints: analytically where the integrand is constant, by
//! adaptive quadrature elsewhere.

use std::f64::consts::PI;

use super::{BranchFamily, Emission, PosteriorMode, Scenario, MAX_BASIS, MAX_LATENTS};
use crate::detection::DetectorMode;
use crate::error::{Error, Result};
use crate::photon_wave::sin_polar;
use crate::quadrature::{integrate, QuadValue, Tolerance, Vec4};
use crate::spacetime::{DetectionEvent, Event, Vec3};

const MAX_OPEN: usize = 8;
const MAX_BREAKS: usize = 40;

/// Unnormalized weight of each basis state of the queried site.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateWeights(pub [f64; MAX_BASIS]);

impl StateWeights {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Probability that a `sin²θ` direction about `axis` lies in the cap `n · û ≥ κ`.
pub fn cap_probability(axis: &Vec3, u_hat: &Vec3, kappa: f64) -> f64 {
    let k = kappa.clamp(-1.0, 1.0);
    let e2 = axis.dot(u_hat).powi(2);
    let v = 0.75 * (0.5 * (1.0 + e2) * (1.0 - k) - (3.0 * e2 - 1.0) / 6.0 * (1.0 - k * k * k));
    v.clamp(0.0, 1.0)
}

/// Probability that a photon emitted from `source` with sphere radius `radius`
/// lands strictly closer than `rho` to `x`.
pub fn inside_probability(source: &Vec3, axis: &Vec3, radius: f64, x: &Vec3, rho: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let diff = source - x;
    let dist = diff.norm();
    if dist <= 1e-12 * (1.0 + rho) || radius <= 0.0 {
        return if radius.max(dist) < rho { 1.0 } else { 0.0 };
    }
    let kappa = (rho * rho - radius * radius - dist * dist) / (2.0 * radius * dist);
    if kappa >= 1.0 {
        return 1.0;
    }
    if kappa <= -1.0 {
        return 0.0;
    }
    1.0 - cap_probability(axis, &(diff / dist), kappa)
}

struct Breaks {
    v: [f64; MAX_BREAKS],
    n: usize,
}

impl Breaks {
    fn push(&mut self, x: f64) {
        if x.is_finite() && self.n < MAX_BREAKS {
            self.v[self.n] = x;
            self.n += 1;
        }
    }

    fn finish(&mut self) {
        let s = &mut self.v[..self.n];
        s.sort_by(f64::total_cmp);
        let mut k = 0;
        for i in 0..self.n {
            if k == 0 || self.v[i] > self.v[k - 1] {
                self.v[k] = self.v[i];
                k += 1;
            }
        }
        self.n = k;
    }

    fn all(&self) -> &[f64] {
        &self.v[..self.n]
    }
}

struct Ctx<'a> {
    fam: &'a BranchFamily,
    c: f64,
    big_t: f64,
    t: f64,
    x: Vec3,
    rho: f64,
    site: Option<usize>,
    pinned: [Option<f64>; MAX_LATENTS],
    open: [usize; MAX_OPEN],
    n_open: usize,
    /// Whether no later latent is measured from latent `i`.
    leaf_like: [bool; MAX_LATENTS],
    breaks: Breaks,
    pin_tol: f64,
    clamp: bool,
    tol: Tolerance,
}

fn zero() -> StateWeights {
    StateWeights::default()
}

/// Core entry point used by the beable engines and `branch_likelihood`.
pub(crate) fn family_weights(
    scn: &Scenario,
    family: usize,
    outside: &[&DetectionEvent],
    x: &Event,
    site: Option<usize>,
) -> Result<StateWeights> {
    weights_impl(scn, family, outside, x, site, false)
}

/// Weights with every photon ignored (the unconditioned reduced state).
pub(crate) fn marginal_weights(scn: &Scenario, family: usize, x: &Event, site: Option<usize>) -> Result<StateWeights> {
    weights_impl(scn, family, &[], x, site, true)
}

fn weights_impl(
    scn: &Scenario,
    family: usize,
    outside: &[&DetectionEvent],
    x: &Event,
    site: Option<usize>,
    marginal: bool,
) -> Result<StateWeights> {
    let fam = &scn.families[family];
    let c = scn.frame.c;
    let big_t = scn.plane_time();
    let eps = scn.frame.cone_eps(big_t);
    let mut ctx = Ctx {
        fam,
        c,
        big_t,
        t: x.t,
        x: x.r,
        rho: c * (big_t - x.t) - eps,
        site,
        pinned: [None; MAX_LATENTS],
        open: [0; MAX_OPEN],
        n_open: 0,
        leaf_like: [true; MAX_LATENTS],
        breaks: Breaks { v: [0.0; MAX_BREAKS], n: 0 },
        pin_tol: 10.0 * eps / c,
        clamp: matches!(scn.detector.mode, DetectorMode::Grid { .. }),
        tol: Tolerance::new(1e-300, 1e-10).max_intervals(400),
    };
    for l in fam.latents.iter() {
        if let Some(p) = l.after {
            ctx.leaf_like[p] = false;
        }
    }

    let mut pin_factor = 1.0;
    for d in outside {
        let Some(pos) = (match d.kind {
            crate::spacetime::DetectionKind::Position => Some(d.position),
            crate::spacetime::DetectionKind::Momentum(_) => None,
        }) else {
            return Err(Error::Precondition("momentum outcomes are handled by the ABL engine".into()));
        };
        if scn.mode == PosteriorMode::Paper && d.branch.as_deref().is_some_and(|b| b != fam.label) {
            return Ok(zero());
        }
        let Some(e) = fam.emission_for_photon(d.photon_id).filter(|e| e.detectable) else {
            return Ok(zero());
        };
        if ctx.pinned[e.latent].is_some() {
            return Ok(zero());
        }
        let rel = pos - e.source;
        let radius = rel.norm();
        ctx.pinned[e.latent] = Some(big_t - radius / c);
        let r = radius.max(1e-300);
        pin_factor *= 3.0 / (8.0 * PI) * sin_polar(&rel, &e.dipole_axis).powi(2) / (c * r * r);
    }
    if pin_factor == 0.0 {
        return Ok(zero());
    }

    if !marginal {
        for (k, e) in fam.emissions.iter().enumerate() {
            if e.detectable && ctx.pinned[e.latent].is_none() {
                if ctx.n_open == MAX_OPEN {
                    return Err(Error::Precondition("too many photons in one family".into()));
                }
                ctx.open[ctx.n_open] = k;
                ctx.n_open += 1;
            }
        }
    }

    // global breakpoints in absolute time
    ctx.breaks.push(big_t);
    if let Some(s) = site {
        for tr in fam.transitions.iter().filter(|tr| tr.site == s) {
            ctx.breaks.push(x.t - tr.offset);
        }
    }
    for &k in &ctx.open[..ctx.n_open] {
        let e = &fam.emissions[k];
        let dist = (e.source - x.r).norm();
        for r_edge in [ctx.rho, ctx.rho + dist, (ctx.rho - dist).abs()] {
            ctx.breaks.push(big_t - r_edge / c);
        }
    }
    for p in ctx.pinned.iter().flatten() {
        ctx.breaks.push(*p);
    }
    ctx.breaks.finish();

    let mut vals = [0.0; MAX_LATENTS];
    let w = ctx.level(0, &mut vals)?;
    Ok(StateWeights([w.0[0] * pin_factor, w.0[1] * pin_factor, w.0[2] * pin_factor]))
}

impl Ctx<'_> {
    fn photon_factor(&self, e: &Emission, tau: f64) -> f64 {
        if tau > self.big_t {
            return 1.0;
        }
        inside_probability(&e.source, &e.dipole_axis, self.c * (self.big_t - tau), &self.x, self.rho)
    }

    /// Whether the open photons on latent `i` have a 0/1 factor at `tau`.
    fn open_is_constant(&self, i: usize, tau: f64) -> bool {
        self.open[..self.n_open].iter().all(|&k| {
            let e = &self.fam.emissions[k];
            if e.latent != i || tau > self.big_t || self.rho <= 0.0 {
                return true;
            }
            let dist = (e.source - self.x).norm();
            let r = self.c * (self.big_t - tau);
            dist <= 1e-12 * (1.0 + self.rho) || r <= (self.rho - dist).abs() || r >= self.rho + dist
        })
    }

    fn leaf(&self, vals: &[f64; MAX_LATENTS]) -> Vec4 {
        let mut f = 1.0;
        for &k in &self.open[..self.n_open] {
            let e = &self.fam.emissions[k];
            f *= self.photon_factor(e, vals[e.latent]);
            if f == 0.0 {
                return Vec4::zero();
            }
        }
        let mut out = [0.0; 4];
        let slot = self.site.map_or(0, |s| self.fam.state_at(s, self.t, vals));
        out[slot] = f;
        Vec4(out)
    }

    fn level(&self, i: usize, vals: &mut [f64; MAX_LATENTS]) -> Result<Vec4> {
        if i == self.fam.latents.len() {
            return Ok(self.leaf(vals));
        }
        let lat = &self.fam.latents[i];
        let base = lat.after.map_or(0.0, |p| vals[p]);
        let upper = lat.density.upper();

        if let Some(v) = self.pinned[i] {
            let mut s = v - base;
            if s < 0.0 && (self.clamp || s > -self.pin_tol) {
                s = 0.0;
            }
            if s > upper && (self.clamp || s - upper < self.pin_tol) {
                s = upper;
            }
            let density = match lat.density {
                super::LatentDensity::PointMass { value } => {
                    if (s - value).abs() <= self.pin_tol {
                        1.0
                    } else {
                        0.0
                    }
                }
                d => d.pdf(s),
            };
            if density == 0.0 {
                return Ok(Vec4::zero());
            }
            vals[i] = base + s;
            return Ok(self.level(i + 1, vals)? * density);
        }
        if let super::LatentDensity::PointMass { value } = lat.density {
            vals[i] = base + value;
            return self.level(i + 1, vals);
        }

        let lo = base;
        let hi = base + upper;
        let mut acc = Vec4::zero();
        let mut a = lo;
        let cuts = self.breaks.all().iter().copied().filter(|&b| b > lo && b < hi);
        let finite_end = if hi.is_finite() { Some(hi) } else { None };
        for b in cuts.chain(finite_end) {
            acc = acc + self.piece(i, base, a, b, vals)?;
            a = b;
        }
        if finite_end.is_none() {
            // beyond every breakpoint the integrand no longer changes
            vals[i] = a + 1.0 + a.abs();
            acc = acc + self.level(i + 1, vals)? * lat.density.mass(a - base, f64::INFINITY);
        }
        Ok(acc)
    }

    fn piece(&self, i: usize, base: f64, a: f64, b: f64, vals: &mut [f64; MAX_LATENTS]) -> Result<Vec4> {
        if b <= a {
            return Ok(Vec4::zero());
        }
        let density = self.fam.latents[i].density;
        let mid = 0.5 * (a + b);
        if self.leaf_like[i] && self.open_is_constant(i, mid) {
            vals[i] = mid;
            return Ok(self.level(i + 1, vals)? * density.mass(a - base, b - base));
        }
        let mut failure = None;
        let mut local = *vals;
        let est = integrate(
            |v: f64| {
                local[i] = v;
                match self.level(i + 1, &mut local) {
                    Ok(w) => w * density.pdf(v - base),
                    Err(e) => {
                        failure.get_or_insert(e);
                        Vec4::zero()
                    }
                }
            },
            a,
            b,
            &[],
            self.tol,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(est?.value)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{ex2, ex4};
    use super::super::*;
    use super::*;
    use crate::detection::RngStream;
    use crate::quadrature::integrate;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ex1() -> Scenario {
        build_scenario(&ScenarioConfig::ex1(1.0, 100.0, 30.0)).unwrap()
    }

    /// Cap probability with the azimuth integrated in closed form about the dipole axis.
    fn cap_oracle(axis: &Vec3, u: &Vec3, kappa: f64) -> f64 {
        assert_eq!(*axis, Vec3::z());
        let perp = (u.x * u.x + u.y * u.y).sqrt();
        integrate(
            |th: f64| {
                let (a, b) = (th.cos() * u.z, th.sin() * perp);
                let frac = if b < 1e-300 {
                    if a >= kappa { 1.0 } else { 0.0 }
                } else {
                    ((kappa - a) / b).clamp(-1.0, 1.0).acos() / PI
                };
                0.75 * th.sin().powi(3) * frac
            },
            0.0,
            PI,
            &[],
            Tolerance::new(1e-12, 1e-10).max_intervals(5000),
        )
        .unwrap()
        .value
    }

    #[test]
    fn cap_probability_oracle() {
        let axis = Vec3::z();
        for (u, k) in [(Vec3::z(), 0.3), (Vec3::x(), -0.2), (Vec3::new(0.6, 0.0, 0.8), 0.5)] {
            let v = cap_probability(&axis, &u, k);
            assert!((v - cap_oracle(&axis, &u, k)).abs() < 1e-5, "{u:?} {k}");
        }
        assert_eq!(cap_probability(&axis, &Vec3::x(), -1.0), 1.0);
        assert_eq!(cap_probability(&axis, &Vec3::x(), 1.0), 0.0);
    }

    #[test]
    fn ex1_no_click_likelihood_is_survival() {
        let s = ex1();
        for t in [0.0, 0.5, 2.0] {
            let l = s.branch_likelihood(0, &[], &Event::at(t, 0.0, 0.0, 0.0)).unwrap();
            assert_relative_eq!(l, (-t).exp(), max_relative = 1e-7);
        }
    }

    #[test]
    fn ex4_family_likelihoods() {
        let s = ex4();
        let x = Event::at(2.0, 0.0, 0.0, 0.0);
        let escape = s.branch_likelihood(1, &[], &x).unwrap();
        assert_relative_eq!(escape, (-2.0f64).exp(), max_relative = 1e-6);
        assert_eq!(s.branch_likelihood(0, &[], &Event::at(100.0, 0.0, 0.0, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn clicked_likelihood_is_click_density() {
        let s = ex1();
        let tau = 0.7;
        let n = Vec3::new(0.6, 0.0, 0.8);
        let r = 30.0 - tau;
        let d = DetectionEvent::position(n * r, 30.0, 0).unwrap();
        let l = s.branch_likelihood(0, &[d], &Event::at(29.0, 0.0, 0.0, 0.0)).unwrap();
        let expect = (-tau).exp() * 3.0 / (8.0 * PI) * 0.36 / (r * r);
        assert_relative_eq!(l, expect, max_relative = 1e-6);
    }

    #[test]
    fn weights_sum_over_states_to_likelihood() {
        let s = ex2(PosteriorMode::Exact);
        let x = Event::new(1.3, s.sites[0].position).unwrap();
        for fam in 0..2 {
            let w = family_weights(&s, fam, &[], &x, Some(0)).unwrap();
            let l = s.branch_likelihood(fam, &[], &x).unwrap();
            assert_relative_eq!(w.total(), l, max_relative = 1e-9);
        }
    }

    #[test]
    fn off_site_no_click_matches_monte_carlo() {
        // P(the minus photon has not left the cone of a plus-site query), by brute force
        let s = ex2(PosteriorMode::Exact);
        let t = 1.0;
        let x = Event::new(t, s.sites[1].position).unwrap();
        let l = s.branch_likelihood(0, &[], &x).unwrap();
        let n = 200_000;
        let mut hits = 0;
        let plane = crate::detection::DetectorPlane::ideal(30.0).unwrap();
        let p = crate::photon_wave::EmitterParams::at_origin(1.0, 1000.0, s.frame).unwrap().at(Event::new(0.0, s.sites[0].position).unwrap());
        for k in 0..n {
            match crate::detection::sample_ideal_single(&p, &plane, &mut RngStream::new(77, k)).unwrap() {
                None => hits += 1,
                Some(d) => {
                    if !crate::spacetime::is_outside_future_lightcone(&x, &d.event, &s.frame).unwrap() {
                        hits += 1
                    }
                }
            }
        }
        let f = hits as f64 / n as f64;
        assert!((f - l).abs() < 4.0 * (l * (1.0 - l) / n as f64).sqrt(), "{f} vs {l}");
    }

    proptest! {
        #[test]
        fn inside_probability_bounds(r in 0.0..20.0f64, dx in -5.0..5.0f64, dz in -5.0..5.0f64, rho in -1.0..20.0f64) {
            let p = inside_probability(&Vec3::new(dx, 0.0, dz), &Vec3::z(), r, &Vec3::zeros(), rho);
            prop_assert!((0.0..=1.0).contains(&p));
            // monotone in the cone radius
            let q = inside_probability(&Vec3::new(dx, 0.0, dz), &Vec3::z(), r, &Vec3::zeros(), rho + 0.5);
            prop_assert!(q >= p - 1e-12);
        }
    }
}
