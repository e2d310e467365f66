use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Least-squares fit of a + b·cos(φ − φ₀).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeStats {
    pub mean: f64,
    pub peak_to_peak: f64,
    pub visibility: f64,
    pub phase_offset: f64,
}

impl FringeStats {
    /// |b|, half the peak-to-peak swing.
    pub fn amplitude(&self) -> f64 {
        0.5 * self.peak_to_peak
    }
}

pub fn fringe_stats(phis: &[f64], values: &[f64]) -> Result<FringeStats> {
    if phis.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: phis.len(), found: values.len() });
    }
    let n = phis.len();
    if n < 8 {
        return Err(Error::DegenerateFit(format!("{n} samples, need at least 8")));
    }
    let lo = phis.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = phis.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // A uniform grid over [0, 2π) spans 2π(n−1)/n.
    if hi - lo + TAU / (n as f64) < TAU - 1e-9 {
        return Err(Error::DegenerateFit(format!("samples span {} rad, need 2π", hi - lo)));
    }
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for (&phi, &y) in phis.iter().zip(values) {
        let row = Vector3::new(1.0, phi.cos(), phi.sin());
        ata += row * row.transpose();
        atb += row * y;
    }
    let sol = ata
        .try_inverse()
        .filter(|inv| inv.iter().all(|x| x.is_finite()))
        .map(|inv| inv * atb)
        .ok_or_else(|| Error::DegenerateFit("singular normal equations".into()))?;
    let (a, c, s) = (sol[0], sol[1], sol[2]);
    let b = c.hypot(s);
    let visibility = if a.abs() > 0.0 { b / a } else { return Err(Error::DegenerateFit("zero mean".into())) };
    Ok(FringeStats { mean: a, peak_to_peak: 2.0 * b, visibility, phase_offset: s.atan2(c) })
}

/// `n` points uniformly covering [0, 2π).
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}
