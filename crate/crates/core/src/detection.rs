//! Samplers for the fictitious late-time detector.
//!
//! All draws are inverse-CDF transforms of uniforms from a per-trial
//! [`RngStream`], so a given `(seed, stream_id)` always reproduces the
//! same outcome.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photon_wave::{line_shape_quantile, CascadeParams, EmitterParams};
use crate::spacetime::{DetectionEvent, Vec3};

/// Amplitude normalization tolerance for superpositions.
pub const AMPLITUDE_TOL: f64 = 1e-12;

const NEWTON_TOL: f64 = 1e-12;
const MAX_CASCADE_REDRAWS: u32 = 1_000_000;

/// Reproducible random stream for one trial.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DetectorMode {
    Ideal,
    /// Array of cubic cells of side `cell_size` that only see photons at or above `cutoff_freq`.
    Grid { cell_size: f64, cutoff_freq: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorPlane {
    pub time: f64,
    pub mode: DetectorMode,
}

impl DetectorPlane {
    pub fn ideal(time: f64) -> Result<Self> {
        Self::new(time, DetectorMode::Ideal)
    }

    pub fn grid(time: f64, cell_size: f64, cutoff_freq: f64) -> Result<Self> {
        Self::new(time, DetectorMode::Grid { cell_size, cutoff_freq })
    }

    pub fn new(time: f64, mode: DetectorMode) -> Result<Self> {
        if !(time.is_finite() && time > 0.0) {
            return Err(Error::InvalidParameter(format!("plane time must be positive, got {time}")));
        }
        if let DetectorMode::Grid { cell_size, cutoff_freq } = mode {
            if !(cell_size.is_finite() && cell_size > 0.0) {
                return Err(Error::InvalidParameter(format!("cell size must be positive, got {cell_size}")));
            }
            if !(cutoff_freq.is_finite() && cutoff_freq >= 0.0) {
                return Err(Error::InvalidParameter(format!("cutoff must be non-negative, got {cutoff_freq}")));
            }
        }
        Ok(Self { time, mode })
    }

    /// Whether a photon of ordinary frequency `freq` can register at all.
    pub fn sees(&self, freq: f64) -> bool {
        match self.mode {
            DetectorMode::Ideal => true,
            DetectorMode::Grid { cutoff_freq, .. } => freq >= cutoff_freq,
        }
    }

    pub fn cell_size(&self) -> Option<f64> {
        match self.mode {
            DetectorMode::Ideal => None,
            DetectorMode::Grid { cell_size, .. } => Some(cell_size),
        }
    }
}

/// The full outcome of one fictitious late-time measurement.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub plane_time: f64,
    pub detections: Vec<DetectionEvent>,
    /// Branches that produced a null outcome.
    pub no_detection_branches: Vec<String>,
}

impl DetectionRecord {
    pub fn empty(plane_time: f64) -> Self {
        Self { plane_time, ..Self::default() }
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

/// A sampled detection together with the drawn emission delay.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDraw {
    pub event: DetectionEvent,
    /// Emission time measured from the source event.
    pub delay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SiteBranch {
    Minus,
    Plus,
}

impl SiteBranch {
    pub fn label(self) -> &'static str {
        match self {
            SiteBranch::Minus => "minus",
            SiteBranch::Plus => "plus",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeDraw {
    pub first: PhotonDraw,
    pub second: PhotonDraw,
    /// Gap between the two emissions.
    pub gap: f64,
    /// Draws rejected because the second photon had not reached the plane.
    pub redraws: u32,
}

/// `cos θ` from the density `(3/4)(1 − u²)` on `[−1, 1]` (i.e. `sin³θ dθ`).
pub fn sin_cubed_quantile(xi: f64) -> f64 {
    let target = xi.clamp(0.0, 1.0);
    let cdf = |u: f64| (2.0 + 3.0 * u - u * u * u) / 4.0;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut u = 2.0 * target - 1.0;
    for _ in 0..200 {
        let f = cdf(u) - target;
        if f.abs() <= NEWTON_TOL * 0.25 {
            break;
        }
        if f > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let slope = 0.75 * (1.0 - u * u);
        let mut next = u - f / slope;
        // Newton with bisection safeguard near the endpoints
        if !(slope > 0.0) || !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= NEWTON_TOL {
            u = next;
            break;
        }
        u = next;
    }
    u
}

fn orthonormal_pair(axis: &Vec3) -> (Vec3, Vec3) {
    let helper = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = axis.cross(&helper).normalize();
    let e2 = axis.cross(&e1);
    (e1, e2)
}

/// Direction distributed as `sin²θ dΩ` about `axis`.
pub fn sample_dipole_direction(axis: &Vec3, rng: &mut RngStream) -> Vec3 {
    let cos_t = sin_cubed_quantile(rng.uniform());
    let phi = 2.0 * PI * rng.uniform();
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let (e1, e2) = orthonormal_pair(axis);
    axis * cos_t + (e1 * phi.cos() + e2 * phi.sin()) * sin_t
}

fn check_amplitudes(alpha: Complex64, beta: Complex64) -> Result<()> {
    let total = alpha.norm_sqr() + beta.norm_sqr();
    if (total - 1.0).abs() > AMPLITUDE_TOL {
        return Err(Error::InvalidParameter(format!("|α|² + |β|² = {total}, expected 1")));
    }
    Ok(())
}

fn place(p: &EmitterParams, plane: &DetectorPlane, delay: f64, photon_id: u32, rng: &mut RngStream) -> Result<PhotonDraw> {
    let n = sample_dipole_direction(&p.dipole_axis, rng);
    let radius = p.frame.c * (plane.time - p.source.t - delay);
    let event = DetectionEvent::position(p.source.r + n * radius, plane.time, photon_id)?;
    Ok(PhotonDraw { event, delay })
}

fn check_plane(p: &EmitterParams, plane: &DetectorPlane) -> Result<f64> {
    let window = plane.time - p.source.t;
    if window <= 0.0 {
        return Err(Error::Precondition(format!(
            "detection plane T = {} must be later than the source time {}",
            plane.time, p.source.t
        )));
    }
    Ok(window)
}

/// Ideal single-photon detection; `None` when the photon has not been emitted by `T`.
pub fn sample_ideal_single(p: &EmitterParams, plane: &DetectorPlane, rng: &mut RngStream) -> Result<Option<PhotonDraw>> {
    let window = check_plane(p, plane)?;
    let delay = -(1.0 - rng.uniform()).ln() / p.gamma;
    if delay > window {
        return Ok(None);
    }
    place(p, plane, delay, 0, rng).map(Some)
}

/// Exponential delay conditioned on `delay ≤ window`.
fn truncated_delay(rate: f64, window: f64, u: f64) -> f64 {
    let mass = -(-rate * window).exp_m1();
    -(-u * mass).ln_1p() / rate
}

/// Emitter in the superposition `α|−d/2⟩ + β|+d/2⟩` along its dipole axis.
pub fn sample_superposed(
    p: &EmitterParams,
    alpha: Complex64,
    beta: Complex64,
    d: f64,
    plane: &DetectorPlane,
    rng: &mut RngStream,
) -> Result<(SiteBranch, Option<PhotonDraw>)> {
    check_amplitudes(alpha, beta)?;
    let branch = if rng.uniform() < alpha.norm_sqr() { SiteBranch::Minus } else { SiteBranch::Plus };
    let offset = match branch {
        SiteBranch::Minus => -0.5 * d,
        SiteBranch::Plus => 0.5 * d,
    };
    let displaced = p.at(crate::spacetime::Event { t: p.source.t, r: p.source.r + p.dipole_axis * offset });
    let draw = sample_ideal_single(&displaced, plane, rng)?
        .map(|mut d| {
            d.event.branch = Some(branch.label().to_string());
            d
        });
    Ok((branch, draw))
}

/// Two-photon cascade: first delay `Exp(Γ₁)`, gap `Exp(Γ₂)`, second photon behind the first.
pub fn sample_cascade(p: &CascadeParams, plane: &DetectorPlane, rng: &mut RngStream) -> Result<CascadeDraw> {
    let first = p.first();
    let second = p.second();
    let window = check_plane(&first, plane)?;
    let mut redraws = 0;
    loop {
        let tau1 = -(1.0 - rng.uniform()).ln() / p.gamma1;
        let gap = -(1.0 - rng.uniform()).ln() / p.gamma2;
        if tau1 + gap < window {
            let a = place(&first, plane, tau1, 0, rng)?;
            let b = place(&second, plane, tau1 + gap, 1, rng)?;
            return Ok(CascadeDraw { first: a, second: b, gap, redraws });
        }
        redraws += 1;
        if redraws >= MAX_CASCADE_REDRAWS {
            return Err(Error::Precondition(format!(
                "plane T = {} too early for the cascade: {redraws} redraws",
                plane.time
            )));
        }
    }
}

/// Whether the plane is late enough for cascades (`T` beyond ten mean lifetimes).
pub fn cascade_plane_is_late(p: &CascadeParams, plane: &DetectorPlane) -> bool {
    plane.time - p.source.t >= 10.0 * (1.0 / p.gamma1 + 1.0 / p.gamma2)
}

/// Emitter inside a perfect absorber with amplitude `α`; escapes with amplitude `β`.
pub fn sample_absorber(
    p: &EmitterParams,
    alpha: Complex64,
    beta: Complex64,
    plane: &DetectorPlane,
    rng: &mut RngStream,
) -> Result<Option<PhotonDraw>> {
    check_amplitudes(alpha, beta)?;
    let window = check_plane(p, plane)?;
    if rng.uniform() < alpha.norm_sqr() {
        return Ok(None);
    }
    let delay = truncated_delay(p.gamma, window, rng.uniform());
    place(p, plane, delay, 0, rng).map(Some)
}

/// Late-time momentum measurement; `None` when no photon is found.
pub fn sample_momentum(p: &EmitterParams, alpha: Complex64, beta: Complex64, rng: &mut RngStream) -> Result<Option<Vec3>> {
    check_amplitudes(alpha, beta)?;
    if rng.uniform() < alpha.norm_sqr() {
        return Ok(None);
    }
    let w = line_shape_quantile(p, rng.uniform());
    let n = sample_dipole_direction(&p.dipole_axis, rng);
    Ok(Some(n * (p.frame.hbar * w / p.frame.c)))
}

/// Grid cell of a detection, or `None` when the photon is below the cutoff.
pub fn coarsen(d: &DetectionEvent, plane: &DetectorPlane, photon_freq: f64) -> Result<Option<[i64; 3]>> {
    let DetectorMode::Grid { cell_size, cutoff_freq } = plane.mode else {
        return Err(Error::Precondition("coarsening requires a grid detector".into()));
    };
    if photon_freq < cutoff_freq {
        return Ok(None);
    }
    let v = d.position.map(|v| (v / cell_size).floor());
    Ok(Some([v.x as i64, v.y as i64, v.z as i64]))
}

pub fn cell_center(cell: [i64; 3], cell_size: f64) -> Vec3 {
    Vec3::new(cell[0] as f64 + 0.5, cell[1] as f64 + 0.5, cell[2] as f64 + 0.5) * cell_size
}

/// Replace a detection by its coarse version (cell centre), or drop it below the cutoff.
pub fn coarsen_event(d: &DetectionEvent, plane: &DetectorPlane, photon_freq: f64) -> Result<Option<DetectionEvent>> {
    let Some(cell) = coarsen(d, plane, photon_freq)? else {
        return Ok(None);
    };
    let size = plane.cell_size().expect("grid mode");
    let mut out = d.clone();
    out.position = cell_center(cell, size);
    out.cell = Some(cell);
    Ok(Some(out))
}
