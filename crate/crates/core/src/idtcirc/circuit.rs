//! Qubit–coupler–transducer network and its effective series RLC.
//!
//! Network seen from a series port at the qubit SQUID (terminals A-B):
//!
//! ```text
//!   Q ──L_q── N ──L_c── K
//!   │         │         │
//!  C_q       L_g       L_i ≈M≈ L_i ── Y_a
//!   │         │         │
//!  gnd       gnd       gnd
//! ```
//!
//! The qubit capacitor and SQUID close the loop through the coupler grounding
//! inductance L_g, which is shunted by the coupler junction L_c in series with
//! the transducer-side winding. That winding couples through the mutual M to
//! an identical winding in series with the transducer.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::idt::{idt_admittance, AdmittanceModel, IdtParams};
use crate::error::{invalid, Error, Result};
use crate::units::{ELEMENTARY_CHARGE, HBAR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub c_q: f64,
    /// SQUID inductance at the bias point.
    pub l_q: f64,
    pub l_coupler: f64,
    pub l_idt_ground: f64,
    pub l_coupler_ground: f64,
    pub mutual: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        Self {
            c_q: 100e-15,
            l_q: 10.4e-9,
            l_coupler: 1.19e-9,
            l_idt_ground: 0.4e-9,
            l_coupler_ground: 0.4e-9,
            mutual: 0.21e-9,
        }
    }
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_q", self.c_q),
            ("l_q", self.l_q),
            ("l_coupler", self.l_coupler),
            ("l_idt_ground", self.l_idt_ground),
            ("l_coupler_ground", self.l_coupler_ground),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.mutual >= 0.0 && self.mutual < self.l_idt_ground) {
            return Err(invalid("mutual", "must lie in [0, L_idt_ground)"));
        }
        Ok(())
    }
}

fn checked_inv(z: Complex64, what: &str) -> Result<Complex64> {
    if z.norm() < 1e-300 || !z.is_finite() {
        return Err(Error::InvalidResonance(format!("singular network: {what}")));
    }
    Ok(1.0 / z)
}

/// Impedance of everything hanging off node N: L_g ∥ (L_c + transformer).
fn coupler_impedance(omega: f64, c: &CircuitParams, ya: Complex64) -> Result<Complex64> {
    let i = Complex64::i();
    let z_idt = checked_inv(ya, "transducer admittance vanishes")?;
    let loop_idt = i * omega * c.l_idt_ground + z_idt;
    let reflected = (omega * c.mutual).powi(2) * checked_inv(loop_idt, "transducer loop resonance")?;
    let branch = i * omega * (c.l_coupler + c.l_idt_ground) + reflected;
    let ground = i * omega * c.l_coupler_ground;
    Ok(ground * branch * checked_inv(ground + branch, "coupler loop resonance")?)
}

/// Series impedance Z(ω) around the qubit loop for a given transducer admittance.
pub fn circuit_impedance(omega: f64, c: &CircuitParams, ya: Complex64) -> Result<Complex64> {
    if !(omega > 0.0) {
        return Err(invalid("omega", "must be positive"));
    }
    let i = Complex64::i();
    Ok(1.0 / (i * omega * c.c_q) + i * omega * c.l_q + coupler_impedance(omega, c, ya)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Loss {
    /// Full transducer admittance.
    Lossy,
    /// Re Y_a forced to zero.
    Lossless,
}

/// Z(ω) with the transducer admittance from `model`.
pub fn network_impedance(
    omega: f64,
    c: &CircuitParams,
    idt: &IdtParams,
    model: AdmittanceModel,
    loss: Loss,
) -> Result<Complex64> {
    let mut ya = idt_admittance(omega, idt, model);
    if loss == Loss::Lossless {
        ya.re = 0.0;
    }
    circuit_impedance(omega, c, ya)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlcEffective {
    pub omega: f64,
    pub l_eff: f64,
    pub c_eff: f64,
    pub r_eff: f64,
    pub q: f64,
    /// Anharmonicity, angular frequency.
    pub alpha: f64,
}

impl RlcEffective {
    /// Energy decay rate ω/Q.
    pub fn kappa(&self) -> f64 {
        self.omega / self.q
    }

    pub fn t1(&self) -> f64 {
        self.q / self.omega
    }
}

/// Central-difference derivative with one Richardson step.
fn derivative(z: &dyn Fn(f64) -> Result<Complex64>, omega: f64) -> Result<Complex64> {
    let d = |h: f64| -> Result<Complex64> { Ok((z(omega + h)? - z(omega - h)?) / (2.0 * h)) };
    let h = omega * 1e-4;
    Ok((4.0 * d(h / 2.0)? - d(h)?) / 3.0)
}

/// Series-RLC expansion of Z about ω_q: L = Im Z′/2, C = 1/(Lω²), R = Re Z.
///
/// `l_q` is the nonlinear (junction) share of the inductance, used for the
/// anharmonicity −e²/(2C)·(L_q/L)³.
pub fn effective_rlc(z: &dyn Fn(f64) -> Result<Complex64>, omega_q: f64, l_q: f64) -> Result<RlcEffective> {
    if !(omega_q > 0.0) {
        return Err(invalid("omega_q", "must be positive"));
    }
    let slope = derivative(z, omega_q)?.im;
    if !(slope > 0.0) {
        return Err(Error::InvalidResonance(format!("Im Z' = {slope:e} at ω = {omega_q:e}")));
    }
    let l_eff = slope / 2.0;
    let c_eff = 1.0 / (l_eff * omega_q * omega_q);
    let r_eff = z(omega_q)?.re;
    if !(r_eff > 0.0) {
        return Err(Error::InvalidResonance(format!("Re Z = {r_eff:e} is not a loss")));
    }
    let q = (l_eff / c_eff).sqrt() / r_eff;
    let alpha = -ELEMENTARY_CHARGE.powi(2) / (2.0 * c_eff * HBAR) * (l_q / l_eff).powi(3);
    Ok(RlcEffective { omega: omega_q, l_eff, c_eff, r_eff, q, alpha })
}

/// Frequencies in (lo, hi) where Im Z crosses zero from below, scanned on `n` points
/// and refined by bisection. Crossings through poles are skipped.
pub fn reactance_zeros(z: &dyn Fn(f64) -> Result<Complex64>, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    let n = n.max(2);
    let grid: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let x: Vec<f64> = grid.iter().map(|&w| z(w).map(|v| v.im)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for k in 0..n {
        if !(x[k] < 0.0 && x[k + 1] >= 0.0) {
            continue;
        }
        let (mut a, mut b) = (grid[k], grid[k + 1]);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if z(m)?.im < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let w = 0.5 * (a + b);
        // A pole flips the sign without passing through small values.
        let scale = x[k].abs().max(x[k + 1].abs());
        if z(w)?.im.abs() < 1e-6 * scale.max(1.0) {
            out.push(w);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurves {
    /// Target g-e frequencies (bare, lossless network).
    pub omega: Vec<f64>,
    /// Mode frequency with transducer loss.
    pub omega_q: Vec<f64>,
    pub kappa_ge: Vec<f64>,
    pub kappa_ef: Vec<f64>,
    /// Not predicted by the linear network.
    pub kappa_gf: Option<Vec<f64>>,
    pub alpha: Vec<f64>,
}

/// Lowest and highest grid frequency accepted by [`rate_sweep`] (Hz).
pub const SWEEP_BAND: (f64, f64) = (3.6e9, 4.4e9);

/// κ_ge, κ_ef and α across a grid of qubit frequencies.
///
/// At each point the SQUID inductance is retuned so the lossless network
/// resonates at the target, the resonance is then relocated with loss, and
/// κ_ef = 2R/L is evaluated at ω_q + α.
pub fn rate_sweep(omegas: &[f64], circuit: &CircuitParams, idt: &IdtParams, model: AdmittanceModel) -> Result<RateCurves> {
    circuit.validate()?;
    idt.validate()?;
    let band = (2.0 * PI * SWEEP_BAND.0, 2.0 * PI * SWEEP_BAND.1);
    if let Some(w) = omegas.iter().find(|&&w| !(w >= band.0 * (1.0 - 1e-12) && w <= band.1 * (1.0 + 1e-12))) {
        return Err(invalid("omega", format!("{} GHz is outside the sweep band", w / (2.0 * PI) / 1e9)));
    }
    let mut curves = RateCurves {
        omega: Vec::new(),
        omega_q: Vec::new(),
        kappa_ge: Vec::new(),
        kappa_ef: Vec::new(),
        kappa_gf: None,
        alpha: Vec::new(),
    };
    for &w in omegas {
        let mut c = *circuit;
        let x_n = network_impedance(w, &CircuitParams { l_q: 0.0, ..c }, idt, model, Loss::Lossless)?.im + 1.0 / (w * c.c_q);
        c.l_q = (1.0 / (w * c.c_q) - x_n) / w;
        if !(c.l_q > 0.0) {
            return Err(Error::InvalidResonance(format!("no positive SQUID inductance reaches {w:e}")));
        }
        let z = |v: f64| network_impedance(v, &c, idt, model, Loss::Lossy);
        let wq = relocate(&z, w)?;
        let ge = effective_rlc(&z, wq, c.l_q)?;
        let w_ef = wq + ge.alpha;
        let zef = z(w_ef)?;
        let l_ef = derivative(&z, w_ef)?.im / 2.0;
        if !(l_ef > 0.0) {
            return Err(Error::InvalidResonance(format!("Im Z' ≤ 0 at ω_ef = {w_ef:e}")));
        }
        curves.omega.push(w);
        curves.omega_q.push(wq);
        curves.kappa_ge.push(ge.kappa());
        curves.kappa_ef.push(2.0 * zef.re / l_ef);
        curves.alpha.push(ge.alpha);
    }
    Ok(curves)
}

/// Newton search for Im Z = 0 starting from `w`; keeps `w` if it wanders off.
fn relocate(z: &dyn Fn(f64) -> Result<Complex64>, w: f64) -> Result<f64> {
    let mut x = w;
    for _ in 0..20 {
        let f = z(x)?.im;
        let step = f / derivative(z, x)?.im;
        x -= step;
        if (x - w).abs() > 0.01 * w {
            return Ok(w);
        }
        if step.abs() < 1e-12 * w {
            break;
        }
    }
    Ok(x)
}
