use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::operator::Operator;
use super::space::HilbertSpace;
use crate::error::{Error, Result};

/// Scalar time dependence of one generator term.
#[derive(Clone)]
pub enum Coefficient {
    Constant(Complex64),
    Function(Arc<dyn Fn(f64) -> Complex64 + Send + Sync>),
}

impl Coefficient {
    pub fn constant(value: impl Into<Complex64>) -> Self {
        Coefficient::Constant(value.into())
    }

    pub fn real_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Function(Arc::new(move |t| Complex64::new(f(t), 0.0)))
    }

    pub fn complex_fn(f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Coefficient::Function(Arc::new(f))
    }

    pub fn at(&self, t: f64) -> Complex64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Function(f) => f(t),
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// `coeff(t) · op`.
#[derive(Debug, Clone)]
pub struct Term {
    pub coeff: Coefficient,
    pub op: Operator,
}

impl Term {
    pub fn new(coeff: Coefficient, op: Operator) -> Self {
        Self { coeff, op }
    }
}

/// H(t) = diag(free_energies) + Σ_k h_k(t) H_k and collapse operators
/// L_j(t) = Σ_k g_jk(t) L_jk.
///
/// The static diagonal part is kept separate so the integrator can remove it
/// exactly by moving to its interaction picture.
#[derive(Debug, Clone)]
pub struct TimeDependentGenerator {
    space: HilbertSpace,
    free_energies: Vec<f64>,
    hamiltonian: Vec<Term>,
    collapse: Vec<Vec<Term>>,
}

impl TimeDependentGenerator {
    pub fn new(space: HilbertSpace) -> Self {
        let d = space.dim();
        Self { space, free_energies: vec![0.0; d], hamiltonian: Vec::new(), collapse: Vec::new() }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn set_free_energies(&mut self, energies: Vec<f64>) -> Result<()> {
        if energies.len() != self.space.dim() {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), found: energies.len() });
        }
        self.free_energies = energies;
        Ok(())
    }

    pub fn free_energies(&self) -> &[f64] {
        &self.free_energies
    }

    pub fn add_hamiltonian(&mut self, coeff: Coefficient, op: Operator) -> Result<()> {
        self.space.check(op.space())?;
        self.hamiltonian.push(Term::new(coeff, op));
        Ok(())
    }

    /// Adds one collapse operator built from a sum of terms.
    pub fn add_collapse(&mut self, terms: Vec<Term>) -> Result<()> {
        for t in &terms {
            self.space.check(t.op.space())?;
        }
        if !terms.is_empty() {
            self.collapse.push(terms);
        }
        Ok(())
    }

    pub fn hamiltonian_terms(&self) -> &[Term] {
        &self.hamiltonian
    }

    pub fn collapse_terms(&self) -> &[Vec<Term>] {
        &self.collapse
    }

    /// Full Hamiltonian at time t (Schrödinger picture of the rotating frame).
    pub fn hamiltonian_at(&self, t: f64) -> Operator {
        let mut h = Operator::diagonal(&self.space, &self.free_energies).expect("validated length");
        for term in &self.hamiltonian {
            h = &h + &term.op.scale(term.coeff.at(t));
        }
        h
    }

    pub fn collapse_at(&self, t: f64) -> Vec<Operator> {
        self.collapse
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .fold(Operator::zeros(&self.space), |acc, term| &acc + &term.op.scale(term.coeff.at(t)))
            })
            .collect()
    }
}
