//! Small density-matrix and local-operator algebra on site bases.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;

pub type CMatrix = DMatrix<Complex64>;

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).iter().all(|z| z.norm() <= tol)
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Validated constructor: Hermitian, unit trace, positive semidefinite.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !is_hermitian(&m, HERMITIAN_TOL) {
            return Err(Error::Operator("density matrix is not Hermitian".into()));
        }
        let rho = Self(m);
        let tr = rho.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::Operator(format!("density matrix trace {tr} differs from 1")));
        }
        if !rho.is_psd(TRACE_TOL) {
            return Err(Error::Operator("density matrix has a negative eigenvalue".into()));
        }
        Ok(rho)
    }

    /// Diagonal state from populations; trusted to be a probability vector.
    pub fn from_populations(p: &[f64]) -> Self {
        Self(CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(p.len(), p.iter().map(|&v| re(v)))))
    }

    pub fn pure_basis(dim: usize, k: usize) -> Self {
        let mut p = vec![0.0; dim];
        p[k] = 1.0;
        Self::from_populations(&p)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn population(&self, k: usize) -> f64 {
        self.0[(k, k)].re
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        hermitian_eigenvalues(&self.0).first().is_none_or(|&l| l >= -tol)
    }

    pub fn expectation(&self, op: &LocalOperator) -> Result<f64> {
        if op.dim() != self.dim() {
            return Err(Error::Operator(format!(
                "operator dimension {} does not match state dimension {}",
                op.dim(),
                self.dim()
            )));
        }
        Ok((&self.0 * &op.matrix).trace().re)
    }

    /// `½ ‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        0.5 * hermitian_eigenvalues(&(&self.0 - &other.0)).iter().map(|l| l.abs()).sum::<f64>()
    }
}

/// Hermitian operator acting on one site's internal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalOperator {
    pub site: String,
    pub name: String,
    pub matrix: CMatrix,
}

impl LocalOperator {
    pub fn new(site: impl Into<String>, name: impl Into<String>, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() > 3 {
            return Err(Error::Operator(format!("site dimension {} outside 1..=3", matrix.nrows())));
        }
        if !is_hermitian(&matrix, HERMITIAN_TOL) {
            return Err(Error::Operator("operator is not Hermitian".into()));
        }
        Ok(Self { site: site.into(), name: name.into(), matrix })
    }

    pub fn diagonal(site: impl Into<String>, name: impl Into<String>, values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::new(site, name, CMatrix::from_fn(n, n, |i, j| if i == j { re(values[i]) } else { re(0.0) }))
    }

    /// Projector onto the basis states in `indices`.
    pub fn projector(site: impl Into<String>, name: impl Into<String>, dim: usize, indices: &[usize]) -> Result<Self> {
        let mut v = vec![0.0; dim];
        for &k in indices {
            if k >= dim {
                return Err(Error::Operator(format!("basis index {k} out of range for dimension {dim}")));
            }
            v[k] = 1.0;
        }
        Self::diagonal(site, name, &v)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_projector(&self) -> bool {
        (&self.matrix * &self.matrix - &self.matrix).iter().all(|z| z.norm() <= 1e-10)
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// Spectral projectors with their eigenvalues; degenerate eigenvalues are merged.
    pub fn spectral_projectors(&self) -> Vec<(f64, CMatrix)> {
        let eig = self.matrix.clone().symmetric_eigen();
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut out: Vec<(f64, CMatrix)> = Vec::new();
        for k in order {
            let lambda = eig.eigenvalues[k];
            let v = eig.eigenvectors.column(k);
            let p = v * v.adjoint();
            match out.last_mut() {
                Some((l, acc)) if (lambda - *l).abs() <= 1e-9 * (1.0 + l.abs()) => *acc += p,
                _ => out.push((lambda, p)),
            }
        }
        out
    }
}
