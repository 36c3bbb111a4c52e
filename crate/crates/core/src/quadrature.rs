//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Integrands may be scalar, complex or small fixed-size vectors; the error
//! estimate of a vector integral is the largest component error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be integrated.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    /// Size used for error control.
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
}

/// Fixed-size real vector used for per-state weights.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec4(pub [f64; 4]);

impl Add for Vec4 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec4(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for Vec4 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec4(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Mul<f64> for Vec4 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Vec4(self.0.map(|v| v * s))
    }
}

impl QuadValue for Vec4 {
    fn zero() -> Self {
        Vec4([0.0; 4])
    }
    fn magnitude(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Single 15-point Kronrod estimate with embedded 7-point Gauss error.
pub fn gk15<V: QuadValue, F: FnMut(f64) -> V>(f: &mut F, a: f64, b: f64) -> (V, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        let s = f1 + f2;
        resk = resk + s * WGK[j];
        if j % 2 == 1 {
            resg = resg + s * WG[j / 2];
        }
    }
    let resk = resk * half;
    let resg = resg * half;
    let err = (resk - resg).magnitude();
    (resk, err)
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-8, rel: 1e-6, max_intervals: 2000 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, ..Self::default() }
    }

    pub fn max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<V> {
    pub value: V,
    pub abs_error: f64,
}

struct Interval<V> {
    a: f64,
    b: f64,
    value: V,
    err: f64,
}

impl<V> PartialEq for Interval<V> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<V> Eq for Interval<V> {}
impl<V> PartialOrd for Interval<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Interval<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive integration over `[a, b]` split at the given interior breakpoints.
pub fn integrate<V: QuadValue, F: FnMut(f64) -> V>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: Tolerance,
) -> Result<Estimate<V>> {
    if a == b {
        return Ok(Estimate { value: V::zero(), abs_error: 0.0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&p| p > lo && p < hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut total = V::zero();
    let mut total_err = 0.0;
    let mut left = lo;
    for right in cuts.into_iter().chain(std::iter::once(hi)) {
        let (value, err) = gk15(&mut f, left, right);
        total = total + value;
        total_err += err;
        heap.push(Interval { a: left, b: right, value, err });
        left = right;
    }

    let mut count = heap.len();
    loop {
        let mut target = tol.abs.max(tol.rel * total.magnitude());
        if total_err <= target {
            // the running sums can cancel catastrophically after a huge first estimate
            total = heap.iter().fold(V::zero(), |acc, iv| acc + iv.value);
            total_err = heap.iter().map(|iv| iv.err).sum();
            target = tol.abs.max(tol.rel * total.magnitude());
            if total_err <= target {
                break;
            }
        }
        if count >= tol.max_intervals {
            return Err(Error::Quadrature { estimate: total_err, tolerance: target });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be split in floating point
            heap.push(worst);
            return Err(Error::Quadrature { estimate: total_err, tolerance: target });
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.err;
        heap.push(Interval { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Interval { a: mid, b: worst.b, value: v2, err: e2 });
        count += 1;
    }
    // re-sum to limit drift from the incremental updates
    let mut value = V::zero();
    let mut abs_error = 0.0;
    for iv in heap.iter() {
        value = value + iv.value;
        abs_error += iv.err;
    }
    Ok(Estimate { value: value * sign, abs_error })
}

/// Integral over `[a, ∞)` via the substitution `x = a + scale · (1 - u) / u`.
pub fn integrate_to_infinity<V: QuadValue, F: FnMut(f64) -> V>(
    mut f: F,
    a: f64,
    scale: f64,
    tol: Tolerance,
) -> Result<Estimate<V>> {
    integrate(
        |u: f64| {
            if u <= 0.0 {
                return V::zero();
            }
            let x = a + scale * (1.0 - u) / u;
            f(x) * (scale / (u * u))
        },
        0.0,
        1.0,
        &[],
        tol,
    )
}
