//! Interdigitated transducer admittance.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Capacitance per finger pair per unit aperture on 128° Y-X lithium niobate (F/m).
pub const LINBO3_CS: f64 = 4.6e-10;
/// Electromechanical coupling k² of 128° Y-X lithium niobate.
pub const LINBO3_K2: f64 = 0.056;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdtParams {
    /// Finger pairs.
    pub n: usize,
    /// Period of one finger pair (m).
    pub pitch: f64,
    /// SAW velocity under the electrodes (m/s).
    pub velocity: f64,
    /// Static capacitance (F).
    pub c0: f64,
    /// Conductance at the centre frequency (S).
    pub ga0: f64,
    /// Reflectivity per cell, r = i·`reflectivity`.
    pub reflectivity: f64,
}

impl IdtParams {
    /// Transducer with C0 and G_a0 derived from its geometry.
    pub fn from_geometry(n: usize, pitch: f64, velocity: f64, aperture: f64, reflectivity: f64) -> Self {
        let nf = n as f64;
        let fc = velocity / pitch;
        Self {
            n,
            pitch,
            velocity,
            c0: nf * aperture * LINBO3_CS,
            ga0: 8.0 * LINBO3_K2 * LINBO3_CS * aperture * fc * nf * nf,
            reflectivity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(invalid("n", "need at least one finger pair"));
        }
        for (name, v) in [("pitch", self.pitch), ("velocity", self.velocity), ("c0", self.c0), ("ga0", self.ga0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.reflectivity.abs() < 0.1) {
            return Err(invalid("reflectivity", format!("|r| = {} is not small", self.reflectivity.abs())));
        }
        Ok(())
    }

    /// Normalized detuning X = πN(ω − ω_c)/ω_c.
    pub fn x(&self, omega: f64) -> f64 {
        let wc = center_frequency(self);
        PI * self.n as f64 * (omega - wc) / wc
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.pitch
    }
}

impl Default for IdtParams {
    fn default() -> Self {
        Self::from_geometry(20, 0.985e-6, 3911.0, 75e-6, 0.009)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmittanceModel {
    /// Reflection-free transducer.
    Uniform,
    /// Coupling-of-modes with internal reflections.
    Com,
}

/// Angular centre frequency 2πv/p.
pub fn center_frequency(idt: &IdtParams) -> f64 {
    2.0 * PI * idt.velocity / idt.pitch
}

/// Free spectral range v/L in Hz.
pub fn fsr(velocity: f64, length: f64) -> Result<f64> {
    if !(velocity > 0.0 && length > 0.0) {
        return Err(invalid("length", "velocity and length must be positive"));
    }
    Ok(velocity / length)
}

pub(crate) fn sinc2(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 3.0
    } else {
        (x.sin() / x).powi(2)
    }
}

/// (sin 2X − 2X)/(2X²), with its series near zero.
pub(crate) fn hilbert_sinc2(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        -2.0 * x / 3.0 + 2.0 * x.powi(3) / 15.0
    } else {
        ((2.0 * x).sin() - 2.0 * x) / (2.0 * x * x)
    }
}

/// Radiation conductance G_a0·sinc²X.
pub fn conductance(omega: f64, idt: &IdtParams) -> f64 {
    idt.ga0 * sinc2(idt.x(omega))
}

/// Radiation susceptance, the Hilbert partner of the conductance.
pub fn susceptance(omega: f64, idt: &IdtParams) -> f64 {
    idt.ga0 * hilbert_sinc2(idt.x(omega))
}

/// Numerical B_a(X)/G_a0 = −(1/π) PV∫ sinc²(X')/(X − X') dX'.
///
/// Trapezoidal rule on |X'| ≤ `half_window` with the singular part removed
/// analytically.
pub fn hilbert_oracle(x: f64, half_window: f64, step: f64) -> f64 {
    let n = (2.0 * half_window / step).round() as usize;
    let h = 2.0 * half_window / n as f64;
    let g = sinc2(x);
    let mut sum = 0.0;
    for k in 0..=n {
        let xp = -half_window + k as f64 * h;
        let d = x - xp;
        let f = if d.abs() < 1e-9 { -dsinc2(x) } else { (sinc2(xp) - g) / d };
        sum += if k == 0 || k == n { 0.5 * f } else { f };
    }
    let pv = g * ((x + half_window) / (half_window - x)).ln();
    -(sum * h + pv) / PI
}

fn dsinc2(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        -2.0 * x / 3.0
    } else {
        2.0 * x.sin() * (x * x.cos() - x.sin()) / x.powi(3)
    }
}

/// Transducer admittance Y_a(ω).
pub fn idt_admittance(omega: f64, idt: &IdtParams, model: AdmittanceModel) -> Complex64 {
    match model {
        AdmittanceModel::Uniform => {
            Complex64::new(conductance(omega, idt), omega * idt.c0 + susceptance(omega, idt))
        }
        AdmittanceModel::Com => com_admittance(omega, idt),
    }
}

/// Coupling-of-modes solution for a uniform transducer driven at unit voltage
/// with no incoming waves.
///
/// R' = −iδR + iκS + iαV, S' = −iκ*R + iδS − iα*V, I' = −2iα*R − 2iαS + iωcV,
/// integrated across the transducer with a matrix exponential.
fn com_admittance(omega: f64, idt: &IdtParams) -> Complex64 {
    let l = idt.length();
    let delta = (omega - center_frequency(idt)) / idt.velocity;
    // A cell of length p reflects iκp, so r = i·reflectivity gives a real κ.
    let kappa = Complex64::new(idt.reflectivity / idt.pitch, 0.0);
    let alpha = Complex64::new((idt.ga0 / 2.0).sqrt() / l, 0.0);
    let c = idt.c0 / l;
    let i = Complex64::i();
    let z = Complex64::new(0.0, 0.0);
    let m = Matrix4::new(
        -i * delta, i * kappa, z, i * alpha,
        -i * kappa.conj(), i * delta, z, -i * alpha.conj(),
        -2.0 * i * alpha.conj(), -2.0 * i * alpha, z, i * omega * c,
        z, z, z, z,
    );
    let phi = (m * Complex64::new(l, 0.0)).exp();
    let s0 = -phi[(1, 3)] / phi[(1, 1)];
    phi[(2, 1)] * s0 + phi[(2, 3)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ideal() -> IdtParams {
        IdtParams { reflectivity: 0.0, ..IdtParams::default() }
    }

    #[test]
    fn default_geometry() {
        let idt = IdtParams::default();
        assert!((center_frequency(&idt) / (2.0 * PI) - 3.9706e9).abs() < 1e6);
        assert!((idt.c0 - 0.69e-12).abs() < 1e-15);
        assert!((idt.ga0 - 0.0245).abs() < 1e-3);
    }

    #[test]
    fn center_frequency_scales_with_pitch() {
        let idt = IdtParams::default();
        let wide = IdtParams { pitch: 2.0 * idt.pitch, ..idt };
        assert!((center_frequency(&wide) - center_frequency(&idt) / 2.0).abs() < 1e-3);
        let free = IdtParams { velocity: 4034.0, ..idt };
        assert!((center_frequency(&free) / (2.0 * PI) - 4.0954e9).abs() < 1e6);
    }

    #[test]
    fn conductance_zeros_and_half_point() {
        let idt = ideal();
        let wc = center_frequency(&idt);
        let n = idt.n as f64;
        assert!((conductance(wc, &idt) - idt.ga0).abs() < 1e-15);
        for w in [wc * (1.0 + 1.0 / n), wc * (1.0 - 1.0 / n)] {
            assert!(conductance(w, &idt) < 1e-28);
        }
        let half = conductance(wc * (1.0 + 0.5 / n), &idt) / idt.ga0;
        assert!((half - (2.0 / PI).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn susceptance_vanishes_at_center() {
        let idt = ideal();
        assert_eq!(susceptance(center_frequency(&idt), &idt), 0.0);
    }

    #[test]
    fn susceptance_matches_hilbert_oracle() {
        let step = PI * 20.0 * 1e-3;
        let mut worst: f64 = 0.0;
        for k in -60..=60 {
            let x = k as f64 * 3.0 * PI / 60.0 + 1e-3;
            worst = worst.max((hilbert_oracle(x, 40.0 * PI, step) - hilbert_sinc2(x)).abs());
        }
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn reflection_free_com_matches_uniform() {
        let idt = ideal();
        let wc = center_frequency(&idt);
        for k in 0..=200 {
            let w = wc * (0.9 + 0.2 * k as f64 / 200.0);
            let a = idt_admittance(w, &idt, AdmittanceModel::Uniform);
            let b = idt_admittance(w, &idt, AdmittanceModel::Com);
            assert!((a - b).norm() < 1e-9 * a.norm().max(idt.ga0), "{w}: {a} vs {b}");
        }
    }

    #[test]
    fn reflections_skew_the_conductance() {
        let idt = IdtParams::default();
        let flipped = IdtParams { reflectivity: -idt.reflectivity, ..idt };
        let wc = center_frequency(&idt);
        let d = 0.5 / idt.n as f64;
        let g = |p: &IdtParams, w: f64| idt_admittance(w, p, AdmittanceModel::Com).re;
        let skew = g(&idt, wc * (1.0 + d)) - g(&idt, wc * (1.0 - d));
        assert!(skew.abs() > 1e-3 * idt.ga0);
        // Opposite reflectivity mirrors the response about ω_c.
        let mirrored = g(&flipped, wc * (1.0 - d)) - g(&flipped, wc * (1.0 + d));
        assert!((skew - mirrored).abs() < 1e-9 * idt.ga0, "{skew} vs {mirrored}");
    }

    #[test]
    fn fsr_of_the_cavity() {
        let f = fsr(4034.0, 2029.6e-6).unwrap();
        assert!((f - 1.9876e6).abs() < 1e3);
        assert!((f - 1.97e6).abs() / 1.97e6 < 0.02);
        assert!((f - 1.0 / 500e-9).abs() / 2e6 < 0.02);
        assert!((fsr(4034.0, 2.0 * 2029.6e-6).unwrap() - f / 2.0).abs() < 1e-6);
        assert!(fsr(0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn conductance_even_susceptance_odd(x in 0.0f64..20.0) {
            prop_assert!((sinc2(x) - sinc2(-x)).abs() < 1e-15);
            prop_assert!((hilbert_sinc2(x) + hilbert_sinc2(-x)).abs() < 1e-12);
        }

        #[test]
        fn admittance_is_passive(f in 3.0e9f64..5.0e9, r in -0.05f64..0.05) {
            let idt = IdtParams { reflectivity: r, ..IdtParams::default() };
            let w = 2.0 * PI * f;
            prop_assert!(idt_admittance(w, &idt, AdmittanceModel::Com).re >= -1e-12);
            prop_assert!(idt_admittance(w, &idt, AdmittanceModel::Uniform).re >= 0.0);
        }
    }
}
