use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::space::HilbertSpace;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// A dense operator acting on a labelled Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Self { space: space.clone(), matrix: CMatrix::zeros(d, d) }
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Self { space: space.clone(), matrix: CMatrix::identity(d, d) }
    }

    /// Real diagonal operator.
    pub fn diagonal(space: &HilbertSpace, entries: &[f64]) -> Result<Self> {
        let d = space.dim();
        if entries.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: entries.len() });
        }
        let mut m = CMatrix::zeros(d, d);
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        Ok(Self { space: space.clone(), matrix: m })
    }

    /// |row⟩⟨col| on a single-factor space.
    pub fn transition(space: &HilbertSpace, row: usize, col: usize) -> Self {
        let mut op = Self::zeros(space);
        op.matrix[(row, col)] = ONE;
        op
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dagger(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, c: impl Into<Complex64>) -> Self {
        Self { space: self.space.clone(), matrix: &self.matrix * c.into() }
    }

    pub fn try_add(&self, other: &Operator) -> Result<Self> {
        self.space.check(&other.space)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix + &other.matrix })
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Self> {
        self.space.check(&other.space)?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix * &other.matrix })
    }

    /// max |A − A†|.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in 0..d {
                worst = worst.max((self.matrix[(r, c)] - self.matrix[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() < tol
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// Lifts a single-factor operator onto `space` at the factor `label`,
    /// tensoring identities on every other factor.
    pub fn embed(space: &HilbertSpace, label: &str, local: &CMatrix) -> Result<Self> {
        let idx = space.index_of(label)?;
        let dim = space.factors()[idx].dim;
        if local.nrows() != dim || local.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: local.nrows() });
        }
        let before: usize = space.factors()[..idx].iter().map(|f| f.dim).product();
        let after: usize = space.factors()[idx + 1..].iter().map(|f| f.dim).product();
        let m = kron_matrices(&kron_matrices(&CMatrix::identity(before, before), local), &CMatrix::identity(after, after));
        Ok(Self { space: space.clone(), matrix: m })
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator spaces differ")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.space.check(&rhs.space).expect("operator spaces differ");
        Operator { space: self.space.clone(), matrix: &self.matrix - &rhs.matrix }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator spaces differ")
    }
}

pub(crate) fn kron_matrices(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Tensor product of operators; the result lives on the concatenated space.
pub fn kron(parts: &[Operator]) -> Result<Operator> {
    let (first, rest) = parts.split_first().ok_or(Error::EmptyOperatorList)?;
    let mut acc = first.clone();
    for p in rest {
        acc = Operator {
            space: acc.space.product(&p.space)?,
            matrix: kron_matrices(&acc.matrix, &p.matrix),
        };
    }
    Ok(acc)
}

/// Truncated bosonic annihilation operator on `dim` levels.
pub fn annihilation(dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    m
}

pub fn number(dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for n in 0..dim {
        m[(n, n)] = Complex64::new(n as f64, 0.0);
    }
    m
}
