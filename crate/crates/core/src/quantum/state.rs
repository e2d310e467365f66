use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;

use super::operator::{CMatrix, Operator, ONE, ZERO};
use super::space::HilbertSpace;
use crate::error::{Error, Result};

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-7;

/// Density matrix over a labelled composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let rho = Self::new_unchecked(space, matrix)?;
        rho.validate(TRACE_TOL, HERMITIAN_TOL, POSITIVITY_TOL)?;
        Ok(rho)
    }

    pub(crate) fn new_unchecked(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.nrows() });
        }
        Ok(Self { space, matrix })
    }

    /// |ψ⟩⟨ψ| for a normalised state vector (normalised here).
    pub fn pure(space: HilbertSpace, amplitudes: &[Complex64]) -> Result<Self> {
        let d = space.dim();
        if amplitudes.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: amplitudes.len() });
        }
        let v = DVector::from_column_slice(amplitudes);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(crate::error::invalid("amplitudes", "zero vector"));
        }
        let v = v / Complex64::new(norm, 0.0);
        Ok(Self { space, matrix: &v * v.adjoint() })
    }

    /// Basis state given one level per factor.
    pub fn basis(space: HilbertSpace, levels: &[usize]) -> Result<Self> {
        if levels.len() != space.len() {
            return Err(Error::DimensionMismatch { expected: space.len(), found: levels.len() });
        }
        for (l, f) in levels.iter().zip(space.factors()) {
            if *l >= f.dim {
                return Err(Error::InvalidDimension(*l, f.label.clone()));
            }
        }
        let d = space.dim();
        let idx = space.flat_index(levels);
        let mut m = CMatrix::zeros(d, d);
        m[(idx, idx)] = ONE;
        Ok(Self { space, matrix: m })
    }

    pub fn maximally_mixed(space: HilbertSpace) -> Self {
        let d = space.dim();
        let m = CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0);
        Self { space, matrix: m }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ.
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.matrix[(r, c)] - self.matrix[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(h).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, trace_tol: f64, herm_tol: f64, pos_tol: f64) -> Result<()> {
        let tr = self.trace();
        if (tr - ONE).norm() > trace_tol {
            return Err(Error::TraceDrift { trace: tr.re, tolerance: trace_tol });
        }
        let herm = self.hermiticity_error();
        if herm > herm_tol {
            return Err(crate::error::invalid("rho", format!("not Hermitian (error {herm:e})")));
        }
        let min = self.min_eigenvalue();
        if min < -pos_tol {
            return Err(Error::PositivityViolation(min));
        }
        Ok(())
    }

    /// Replaces ρ by (ρ + ρ†)/2.
    pub(crate) fn hermitize(&mut self) {
        let adj = self.matrix.adjoint();
        self.matrix = (&self.matrix + adj) * Complex64::new(0.5, 0.0);
    }

    /// Diagonal of ρ.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// Tensor product ρ ⊗ σ.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        Ok(Self {
            space: self.space.product(&other.space)?,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// ρ → U ρ U†.
    pub fn transform(&self, unitary: &Operator) -> Result<Self> {
        self.space.check(unitary.space())?;
        let u = unitary.matrix();
        Ok(Self { space: self.space.clone(), matrix: u * &self.matrix * u.adjoint() })
    }

    /// Populations of one factor's basis levels.
    pub fn level_populations(&self, label: &str) -> Result<Vec<f64>> {
        Ok(partial_trace(self, &[label])?.diagonal())
    }
}

/// Tr(op · ρ).
pub fn expect(op: &Operator, rho: &DensityMatrix) -> Result<Complex64> {
    rho.space.check(op.space())?;
    let a = op.matrix();
    let d = rho.dim();
    let mut acc = ZERO;
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * rho.matrix[(k, i)];
        }
    }
    Ok(acc)
}

/// Reduced density matrix over the `keep` factors (kept in the original order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix> {
    let space = rho.space();
    let kept_space = space.subspace(keep)?;
    let n = space.len();
    let mut strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * space.factors()[k + 1].dim;
    }
    let is_kept: Vec<bool> = space.factors().iter().map(|f| keep.contains(&f.label.as_str())).collect();

    let offsets = |want_kept: bool| -> Vec<usize> {
        let mut out = vec![0usize];
        for k in 0..n {
            if is_kept[k] != want_kept {
                continue;
            }
            let dim = space.factors()[k].dim;
            let stride = strides[k];
            out = out
                .iter()
                .flat_map(|&base| (0..dim).map(move |l| base + l * stride))
                .collect();
        }
        out
    };
    let kept = offsets(true);
    let traced = offsets(false);

    let dk = kept.len();
    let mut m = CMatrix::zeros(dk, dk);
    for (a, &ka) in kept.iter().enumerate() {
        for (b, &kb) in kept.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &traced {
                acc += rho.matrix[(ka + t, kb + t)];
            }
            m[(a, b)] = acc;
        }
    }
    DensityMatrix::new_unchecked(kept_space, m)
}
