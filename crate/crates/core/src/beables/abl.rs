//! Two-time (ABL) beables for the momentum readout of the absorber setup.
//!
//! The joint space is atom {e, g} ⊗ object {obj0, obj0*, obj100} ⊗ photon
//! {none, early, late}, where `early` and `late` record whether the photon left
//! before or after the query time. The momentum value of a detected photon
//! carries no information about the object branch, so only whether a photon
//! was found enters the post-selection.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{CMatrix, DensityMatrix, LocalOperator};
use crate::error::{Error, Result};
use crate::scenarios::{Scenario, Setup};
use crate::spacetime::{Event, Vec3};

const DIM: usize = 18;
const OBJ0: usize = 0;
const OBJ0_STAR: usize = 1;
const OBJ100: usize = 2;
const NONE: usize = 0;
const EARLY: usize = 1;
const LATE: usize = 2;

fn idx(atom: usize, object: usize, tag: usize) -> usize {
    atom * 9 + object * 3 + tag
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FinalOutcome {
    Photon { momentum: Vec3 },
    NoPhoton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblValue {
    /// `(eigenvalue, probability)` for each spectral projector of the operator.
    pub probabilities: Vec<(f64, f64)>,
    pub expectation: f64,
    pub density: DensityMatrix,
}

fn decay_rotation(a: f64, b: f64, tag: usize) -> CMatrix {
    let mut u = CMatrix::identity(DIM, DIM);
    for (from, to) in [(OBJ0, OBJ0_STAR), (OBJ100, OBJ100)] {
        let i = idx(0, from, NONE);
        let j = idx(1, to, tag);
        u[(i, i)] = Complex64::new(a, 0.0);
        u[(j, j)] = Complex64::new(a, 0.0);
        u[(j, i)] = Complex64::new(b, 0.0);
        u[(i, j)] = Complex64::new(-b, 0.0);
    }
    u
}

fn outcome_projector(outcome: &FinalOutcome) -> CMatrix {
    let photon = |k: usize| (k / 3) % 3 == OBJ100 && k % 3 != NONE;
    let keep = |k: usize| match outcome {
        FinalOutcome::Photon { .. } => photon(k),
        FinalOutcome::NoPhoton => !photon(k),
    };
    CMatrix::from_diagonal(&DVector::from_iterator(DIM, (0..DIM).map(|k| Complex64::new(f64::from(u8::from(keep(k))), 0.0))))
}

struct Setting {
    psi0: DVector<Complex64>,
    u1: CMatrix,
    u2: CMatrix,
    post: CMatrix,
    atom_site: bool,
}

fn setting(x: &Event, op: &LocalOperator, outcome: &FinalOutcome, scn: &Scenario) -> Result<Setting> {
    let Setup::Absorber { emitter, alpha, beta, .. } = scn.setup else {
        return Err(Error::Precondition("two-time beables need the absorber setup".into()));
    };
    if let FinalOutcome::Photon { momentum } = outcome {
        if !momentum.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("photon momentum must be finite".into()));
        }
    }
    let site = scn.site_index(&op.site)?;
    if scn.sites[site].dim() != op.dim() {
        return Err(Error::Operator(format!("operator `{}` does not fit site `{}`", op.name, op.site)));
    }
    let atom_site = op.dim() == 2;
    let mut psi0 = DVector::from_element(DIM, Complex64::new(0.0, 0.0));
    psi0[idx(0, OBJ0, NONE)] = alpha;
    psi0[idx(0, OBJ100, NONE)] = beta;
    let t = x.t.max(0.0);
    let survive = (-emitter.gamma * t).exp();
    Ok(Setting {
        psi0,
        u1: decay_rotation(survive.sqrt(), (1.0 - survive).sqrt(), EARLY),
        u2: decay_rotation(0.0, 1.0, LATE),
        post: outcome_projector(outcome),
        atom_site,
    })
}

fn lift(p: &CMatrix, atom_site: bool) -> CMatrix {
    let i3 = CMatrix::identity(3, 3);
    if atom_site {
        p.kronecker(&CMatrix::identity(9, 9))
    } else {
        CMatrix::identity(2, 2).kronecker(p).kronecker(&i3)
    }
}

fn weights(s: &Setting, projectors: &[CMatrix]) -> Result<Vec<f64>> {
    let v1 = &s.u1 * &s.psi0;
    let w: Vec<f64> =
        projectors.iter().map(|p| (&s.post * (&s.u2 * (lift(p, s.atom_site) * &v1))).norm_squared()).collect();
    let total: f64 = w.iter().sum();
    if !(total > 1e-300) {
        return Err(Error::ImpossibleOutcome);
    }
    Ok(w.into_iter().map(|v| v / total).collect())
}

/// ABL probabilities of each eigenvalue of `op` at `x` given the final outcome.
pub fn abl_probabilities(x: &Event, op: &LocalOperator, outcome: &FinalOutcome, scn: &Scenario) -> Result<Vec<(f64, f64)>> {
    let s = setting(x, op, outcome, scn)?;
    let spectral = op.spectral_projectors();
    let projectors: Vec<CMatrix> = spectral.iter().map(|(_, p)| p.clone()).collect();
    let probs = weights(&s, &projectors)?;
    Ok(spectral.iter().map(|(l, _)| *l).zip(probs).collect())
}

/// Expectation only; skips the basis-state density.
pub fn abl_expectation(x: &Event, op: &LocalOperator, outcome: &FinalOutcome, scn: &Scenario) -> Result<f64> {
    Ok(abl_probabilities(x, op, outcome, scn)?.iter().map(|(l, p)| l * p).sum())
}

pub fn abl_beable(x: &Event, op: &LocalOperator, outcome: &FinalOutcome, scn: &Scenario) -> Result<AblValue> {
    let probabilities = abl_probabilities(x, op, outcome, scn)?;
    let expectation = probabilities.iter().map(|(l, p)| l * p).sum();
    let s = setting(x, op, outcome, scn)?;
    let dim = op.dim();
    let basis: Vec<CMatrix> = (0..dim)
        .map(|k| CMatrix::from_fn(dim, dim, |i, j| Complex64::new(f64::from(u8::from(i == k && j == k)), 0.0)))
        .collect();
    let density = DensityMatrix::from_populations(&weights(&s, &basis)?);
    Ok(AblValue { probabilities, expectation, density })
}
