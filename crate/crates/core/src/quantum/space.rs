use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// One tensor factor of a composite Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

/// Ordered tensor product of labelled factors. The first factor is the most
/// significant index of the product basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    factors: Arc<[Factor]>,
}

impl HilbertSpace {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut out: Vec<Factor> = Vec::new();
        for (label, dim) in factors {
            let label = label.into();
            if dim == 0 {
                return Err(Error::InvalidDimension(dim, label));
            }
            if out.iter().any(|f| f.label == label) {
                return Err(Error::DuplicateLabel(label));
            }
            out.push(Factor { label, dim });
        }
        Ok(Self { factors: out.into() })
    }

    /// Single-factor space.
    pub fn single(label: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new([(label.into(), dim)])
    }

    /// The trivial space of dimension one (no factors).
    pub fn scalar() -> Self {
        Self { factors: Vec::new().into() }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().map(|f| f.label.as_str())
    }

    pub fn contains(&self, label: &str) -> bool {
        self.factors.iter().any(|f| f.label == label)
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|f| f.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn factor_dim(&self, label: &str) -> Result<usize> {
        Ok(self.factors[self.index_of(label)?].dim)
    }

    /// Concatenates two spaces; labels must stay unique.
    pub fn product(&self, other: &HilbertSpace) -> Result<Self> {
        Self::new(
            self.factors
                .iter()
                .chain(other.factors.iter())
                .map(|f| (f.label.clone(), f.dim)),
        )
    }

    /// The sub-space made of the listed labels, in this space's order.
    pub fn subspace(&self, keep: &[&str]) -> Result<Self> {
        for label in keep {
            self.index_of(label)?;
        }
        Self::new(
            self.factors
                .iter()
                .filter(|f| keep.contains(&f.label.as_str()))
                .map(|f| (f.label.clone(), f.dim)),
        )
    }

    /// Splits a flat basis index into per-factor digits.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, f) in out.iter_mut().zip(self.factors.iter()).rev() {
            *slot = index % f.dim;
            index /= f.dim;
        }
        out
    }

    pub fn flat_index(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(self.factors.iter())
            .fold(0, |acc, (d, f)| acc * f.dim + d)
    }

    pub(crate) fn check(&self, other: &HilbertSpace) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(|x| format!("{}({})", x.label, x.dim)).collect();
        write!(f, "{}", parts.join(" ⊗ "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_is_product() {
        let s = HilbertSpace::new([("q", 3), ("a", 2), ("b", 2)]).unwrap();
        assert_eq!(s.dim(), 12);
        assert_eq!(s.digits(7), vec![1, 1, 1]);
        assert_eq!(s.flat_index(&[2, 0, 1]), 9);
    }

    #[test]
    fn rejects_duplicates_and_zero() {
        assert_eq!(
            HilbertSpace::new([("q", 3), ("q", 2)]),
            Err(Error::DuplicateLabel("q".into()))
        );
        assert!(HilbertSpace::new([("q", 0)]).is_err());
    }
}
