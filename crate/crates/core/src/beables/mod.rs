//! Beable engines.
//!
//! The light-cone rule conditions on clicks outside the future light cone of
//! the query event and averages the local operator over the resulting
//! posterior on branch families. The ABL engine handles the momentum readout,
//! where the late-time outcome acts as a post-selection.

mod abl;

pub use abl::{abl_beable, abl_expectation, abl_probabilities, AblValue, FinalOutcome};

use crate::density::{DensityMatrix, LocalOperator};
use crate::detection::DetectionRecord;
use crate::error::{Error, Result};
use crate::scenarios::{Scenario, StateWeights, MAX_BASIS};
use crate::spacetime::{outside_cone_unchecked, DetectionEvent, DetectionKind, Event};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct BeableValue {
    pub expectation: f64,
    pub density: DensityMatrix,
    /// Posterior probability of each family, in scenario order.
    pub posterior_weights: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeableTrajectory {
    pub site: String,
    pub operator: LocalOperator,
    pub times: Vec<f64>,
    pub values: Vec<BeableValue>,
}

impl BeableTrajectory {
    pub fn expectations(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.expectation).collect()
    }
}

/// Named local operators on a scenario's sites.
///
/// Any basis label gives its projector; `excited` is the top atomic level;
/// `position` is the object's x-coordinate and `origin` the projector on the
/// two object states centred at the origin.
pub fn named_operator(scn: &Scenario, site: &str, name: &str) -> Result<LocalOperator> {
    let idx = scn.site_index(site)?;
    let s = &scn.sites[idx];
    let dim = s.dim();
    if let Some(k) = s.index_of(name) {
        return LocalOperator::projector(site, name, dim, &[k]);
    }
    match (name, s.basis.first().map(String::as_str)) {
        ("excited", Some("e" | "e2")) => LocalOperator::projector(site, name, dim, &[0]),
        ("origin", Some("obj0")) => LocalOperator::projector(site, name, dim, &[0, 1]),
        ("position", Some("obj0")) => {
            let offset = match scn.setup {
                crate::scenarios::Setup::Absorber { offset, .. } => offset,
                _ => unreachable!("object sites only exist in absorber scenarios"),
            };
            LocalOperator::diagonal(site, name, &[0.0, 0.0, offset])
        }
        _ => Err(Error::InvalidParameter(format!("no operator `{name}` on site `{site}`"))),
    }
}

fn site_for(scn: &Scenario, op: &LocalOperator) -> Result<usize> {
    let site = scn.site_index(&op.site)?;
    if scn.sites[site].dim() != op.dim() {
        return Err(Error::Operator(format!(
            "operator `{}` has dimension {}, site `{}` has {}",
            op.name,
            op.dim(),
            op.site,
            scn.sites[site].dim()
        )));
    }
    Ok(site)
}

/// Clicks outside the future light cone of `x`.
pub fn outside_clicks<'a>(x: &Event, rec: &'a DetectionRecord, scn: &Scenario) -> Vec<&'a DetectionEvent> {
    rec.detections
        .iter()
        .filter(|d| match d.kind {
            DetectionKind::Position => outside_cone_unchecked(x, &d.position, rec.plane_time, &scn.frame),
            DetectionKind::Momentum(_) => true,
        })
        .collect()
}

struct Posterior {
    populations: [f64; MAX_BASIS],
    family: Vec<f64>,
}

fn posterior(scn: &Scenario, per_family: impl Fn(usize) -> Result<StateWeights>) -> Result<Posterior> {
    let mut populations = [0.0; MAX_BASIS];
    let mut family = Vec::with_capacity(scn.families.len());
    let mut total = 0.0;
    for (k, f) in scn.families.iter().enumerate() {
        let w = if f.born_weight > 0.0 { per_family(k)? } else { StateWeights::default() };
        let mut fam_total = 0.0;
        for (p, v) in populations.iter_mut().zip(w.0) {
            *p += f.born_weight * v;
            fam_total += f.born_weight * v;
        }
        family.push(fam_total);
        total += fam_total;
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::InconsistentRecord("every branch family has zero likelihood".into()));
    }
    populations.iter_mut().for_each(|p| *p /= total);
    family.iter_mut().for_each(|p| *p /= total);
    Ok(Posterior { populations, family })
}

fn check_query(x: &Event, rec: &DetectionRecord) -> Result<()> {
    if !(rec.plane_time > x.t) {
        return Err(Error::Precondition(format!(
            "query time {} must precede the detection plane {}",
            x.t, rec.plane_time
        )));
    }
    Ok(())
}

fn value_from(p: Posterior, op: &LocalOperator, scn: &Scenario) -> Result<BeableValue> {
    let dim = op.dim();
    let density = DensityMatrix::from_populations(&p.populations[..dim]);
    let expectation = density.expectation(op)?;
    let posterior_weights = scn.families.iter().map(|f| f.label.clone()).zip(p.family).collect();
    Ok(BeableValue { expectation, density, posterior_weights })
}

/// Light-cone conditional expectation of `op` at `x` given the late-time record.
pub fn conditional_beable(x: &Event, op: &LocalOperator, rec: &DetectionRecord, scn: &Scenario) -> Result<BeableValue> {
    check_query(x, rec)?;
    let site = site_for(scn, op)?;
    let outside = outside_clicks(x, rec, scn);
    let p = posterior(scn, |k| crate::scenarios::family_weights(scn, k, &outside, x, Some(site)))?;
    value_from(p, op, scn)
}

/// Expectation only; skips building the density matrix.
pub fn conditional_expectation(x: &Event, op: &LocalOperator, rec: &DetectionRecord, scn: &Scenario) -> Result<f64> {
    check_query(x, rec)?;
    let site = site_for(scn, op)?;
    let outside = outside_clicks(x, rec, scn);
    let p = posterior(scn, |k| crate::scenarios::family_weights(scn, k, &outside, x, Some(site)))?;
    Ok((0..op.dim()).map(|k| p.populations[k] * op.matrix[(k, k)].re).sum())
}

/// Unconditioned reduced state at `x`, computed from the branch densities.
pub fn marginal_beable(x: &Event, op: &LocalOperator, scn: &Scenario) -> Result<BeableValue> {
    let site = site_for(scn, op)?;
    let p = posterior(scn, |k| crate::scenarios::marginal_weights(scn, k, x, Some(site)))?;
    value_from(p, op, scn)
}

fn site_event(scn: &Scenario, op: &LocalOperator, t: f64) -> Result<Event> {
    Event::new(t, scn.sites[site_for(scn, op)?].position)
}

pub fn beable_trajectory(op: &LocalOperator, rec: &DetectionRecord, scn: &Scenario, grid: &[f64]) -> Result<BeableTrajectory> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    let values = grid
        .iter()
        .map(|&t| conditional_beable(&site_event(scn, op, t)?, op, rec, scn))
        .collect::<Result<Vec<_>>>()?;
    Ok(BeableTrajectory { site: op.site.clone(), operator: op.clone(), times: grid.to_vec(), values })
}

/// First grid time at which a projector expectation drops below `threshold`.
pub fn transition_time(traj: &BeableTrajectory, threshold: f64) -> Result<Option<f64>> {
    if !traj.operator.is_projector() {
        return Err(Error::Operator(format!("`{}` is not a projector", traj.operator.name)));
    }
    Ok(traj.times.iter().zip(&traj.values).find(|(_, v)| v.expectation < threshold).map(|(&t, _)| t))
}

/// First crossing below `threshold` of `f` on `grid`, refined by bisection to
/// `tol` between the last grid point at or above it and the first below.
/// Returns the first grid time when the very first value is already below.
pub fn first_crossing<F>(grid: &[f64], threshold: f64, tol: f64, mut f: F) -> Result<Option<f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut prev: Option<f64> = None;
    for &t in grid {
        if f(t)? < threshold {
            let Some(mut lo) = prev else { return Ok(Some(t)) };
            let mut hi = t;
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if f(mid)? < threshold {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(hi));
        }
        prev = Some(t);
    }
    Ok(None)
}

/// Transition time from a grid scan refined by bisection; `None` if no crossing on the grid.
pub fn extract_transition(
    op: &LocalOperator,
    rec: &DetectionRecord,
    scn: &Scenario,
    grid: &[f64],
    threshold: f64,
    tol: f64,
) -> Result<Option<f64>> {
    if !op.is_projector() {
        return Err(Error::Operator(format!("`{}` is not a projector", op.name)));
    }
    let site = scn.sites[site_for(scn, op)?].position;
    first_crossing(grid, threshold, tol, |t| conditional_expectation(&Event::new(t, site)?, op, rec, scn))
}

/// Trace distance from the state to the top basis state of the site.
pub fn distance_to_excited(v: &BeableValue) -> f64 {
    v.density.trace_distance(&DensityMatrix::pure_basis(v.density.dim(), 0))
}
