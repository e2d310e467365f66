//! Qudits, traveling modes, coupler profiles and the Hamiltonian and
//! dissipator pieces built from them. All frequencies are angular and refer
//! to a frame rotating at phonon A's emission frequency.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quantum::{annihilation, CMatrix, Coefficient, HilbertSpace, Operator, Term, ZERO};
use crate::units::{mhz, US};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transition {
    Ge,
    Ef,
}

impl Transition {
    pub fn lower(self) -> usize {
        match self {
            Transition::Ge => 0,
            Transition::Ef => 1,
        }
    }

    pub fn upper(self) -> usize {
        self.lower() + 1
    }
}

impl std::fmt::Display for Transition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Transition::Ge => "ge",
            Transition::Ef => "ef",
        })
    }
}

impl std::str::FromStr for Transition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ge" => Ok(Transition::Ge),
            "ef" => Ok(Transition::Ef),
            other => Err(invalid("transition", format!("expected ge or ef, got {other:?}"))),
        }
    }
}

/// Intrinsic lifetimes in seconds. Infinite values switch a channel off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coherence {
    pub t1_ge: f64,
    pub t1_ef: f64,
    pub t2r_ge: f64,
    pub t2r_ef: f64,
}

impl Coherence {
    pub const IDEAL: Coherence =
        Coherence { t1_ge: f64::INFINITY, t1_ef: f64::INFINITY, t2r_ge: f64::INFINITY, t2r_ef: f64::INFINITY };

    pub fn q1() -> Self {
        Self { t1_ge: 18.0 * US, t1_ef: 11.0 * US, t2r_ge: 1.2 * US, t2r_ef: 0.4 * US }
    }

    pub fn q2() -> Self {
        Self { t2r_ge: 0.8 * US, ..Self::q1() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("t1_ge", self.t1_ge), ("t1_ef", self.t1_ef), ("t2r_ge", self.t2r_ge), ("t2r_ef", self.t2r_ef)] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter { name, reason: format!("must be positive, got {v}") });
            }
        }
        dephasing_rate(self.t2r_ge, self.t1_ge)?;
        dephasing_rate(self.t2r_ef, self.t1_ef)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Qudit {
    pub label: String,
    pub levels: usize,
    /// Δ relative to the frame.
    pub detuning: f64,
    /// α, negative for a transmon.
    pub anharmonicity: f64,
    pub coherence: Coherence,
}

impl Qudit {
    pub fn new(label: impl Into<String>, levels: usize, detuning: f64, anharmonicity: f64, coherence: Coherence) -> Result<Self> {
        let q = Self { label: label.into(), levels, detuning, anharmonicity, coherence };
        q.validate()?;
        Ok(q)
    }

    pub fn q1() -> Self {
        Self { label: "q1".into(), levels: 3, detuning: 0.0, anharmonicity: mhz(-179.0), coherence: Coherence::q1() }
    }

    pub fn q2() -> Self {
        Self { label: "q2".into(), levels: 3, detuning: 0.0, anharmonicity: mhz(-188.0), coherence: Coherence::q2() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::InvalidDimension(self.levels, self.label.clone()));
        }
        if !(self.anharmonicity < 0.0) {
            return Err(invalid("anharmonicity", format!("must be negative, got {}", self.anharmonicity)));
        }
        if !self.detuning.is_finite() {
            return Err(invalid("detuning", "must be finite"));
        }
        self.coherence.validate()
    }

    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::single(&self.label, self.levels).expect("validated level count")
    }

    /// Diagonal energies Δn + αn(n−1).
    pub fn energies(&self) -> Vec<f64> {
        (0..self.levels).map(|n| {
            let n = n as f64;
            self.detuning * n + self.anharmonicity * n * (n - 1.0)
        })
        .collect()
    }

    /// Frame frequency of a transition.
    pub fn transition_frequency(&self, tr: Transition) -> f64 {
        let e = self.energies();
        e[tr.upper()] - e[tr.lower()]
    }
}

pub fn qudit_hamiltonian(q: &Qudit) -> Operator {
    Operator::diagonal(&q.space(), &q.energies()).expect("one energy per level")
}

/// 1/T_φ = 1/T2R − 1/(2 T1).
pub fn dephasing_rate(t2r: f64, t1: f64) -> Result<f64> {
    let rate = 1.0 / t2r - 0.5 / t1;
    if rate < -1e-12 * (1.0 / t2r) {
        return Err(invalid("t2r", format!("T2R = {t2r} exceeds 2·T1 = {}", 2.0 * t1)));
    }
    Ok(rate.max(0.0))
}

/// Returns (s_ge, s_ef, s_full) on a 3-level qudit.
pub fn lowering_operators(q: &Qudit) -> Result<(Operator, Operator, Operator)> {
    if q.levels != 3 {
        return Err(Error::InvalidDimension(q.levels, format!("{} needs 3 levels", q.label)));
    }
    let s = q.space();
    let ge = transition_lowering(&s, Transition::Ge);
    let ef = transition_lowering(&s, Transition::Ef);
    let full = Operator::new(s, annihilation(3))?;
    Ok((ge, ef, full))
}

/// |lower⟩⟨upper| on a single-factor space.
pub fn transition_lowering(space: &HilbertSpace, tr: Transition) -> Operator {
    Operator::transition(space, tr.lower(), tr.upper())
}

/// Collapse operators for intrinsic relaxation and pure dephasing, on the
/// qudit's own space.
pub fn intrinsic_dissipators(q: &Qudit) -> Result<Vec<Operator>> {
    q.validate()?;
    let s = q.space();
    let c = &q.coherence;
    let mut out = Vec::new();
    let full = Operator::new(s.clone(), annihilation(q.levels))?;
    let g1 = 1.0 / c.t1_ge;
    if g1 > 0.0 {
        out.push(full.scale(Complex64::new(g1.sqrt(), 0.0)));
    }
    let p = |n: usize| Operator::transition(&s, n, n);
    let g_phi = dephasing_rate(c.t2r_ge, c.t1_ge)?;
    if g_phi > 0.0 {
        out.push(p(1).scale(Complex64::new(g_phi.sqrt(), 0.0)));
    }
    if q.levels >= 3 {
        let extra = 1.0 / c.t1_ef - 2.0 / c.t1_ge;
        if extra > 0.0 {
            out.push(transition_lowering(&s, Transition::Ef).scale(Complex64::new(extra.sqrt(), 0.0)));
        }
        let g_phi_ef = dephasing_rate(c.t2r_ef, c.t1_ef)?;
        if g_phi_ef > 0.0 {
            out.push(p(2).scale(Complex64::new(g_phi_ef.sqrt(), 0.0)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavepacketMode {
    pub label: String,
    pub detuning: f64,
    pub truncation: usize,
    pub kappa_c: f64,
}

impl WavepacketMode {
    pub fn new(label: impl Into<String>, detuning: f64, truncation: usize, kappa_c: f64) -> Result<Self> {
        let m = Self { label: label.into(), detuning, truncation, kappa_c };
        if m.truncation < 2 {
            return Err(Error::InvalidDimension(m.truncation, m.label));
        }
        if !(m.kappa_c > 0.0) {
            return Err(invalid("kappa_c", format!("must be positive, got {}", m.kappa_c)));
        }
        Ok(m)
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.truncation).map(|n| self.detuning * n as f64).collect()
    }
}

/// Shape of a time-dependent coupler rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CouplerShape {
    Zero,
    Constant(f64),
    /// Releases fraction `q` of an excitation into a sech wavepacket centred at `center`.
    Release { q: f64, kappa_c: f64, center: f64 },
    /// Time reverse of `Release` with the same `q`.
    Catch { q: f64, kappa_c: f64, center: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplerProfile {
    pub shape: CouplerShape,
    pub t_on: f64,
    pub t_off: f64,
}

/// Logistic function and its complement, both computed without cancellation.
pub(crate) fn logistic_pair(x: f64) -> (f64, f64) {
    if x >= 0.0 {
        let e = (-x).exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    } else {
        let e = x.exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    }
}

impl CouplerProfile {
    pub fn new(shape: CouplerShape, t_on: f64, t_off: f64) -> Result<Self> {
        if !(t_off > t_on) {
            return Err(Error::InvalidTimeSpan { t0: t_on, t1: t_off, dt: 0.0 });
        }
        match shape {
            CouplerShape::Constant(r) if !(r >= 0.0) => return Err(invalid("rate", format!("negative coupler rate {r}"))),
            CouplerShape::Release { q, kappa_c, .. } | CouplerShape::Catch { q, kappa_c, .. } => {
                if !(0.0..=1.0).contains(&q) {
                    return Err(invalid("q", format!("release fraction {q} outside [0, 1]")));
                }
                if !(kappa_c > 0.0) {
                    return Err(invalid("kappa_c", format!("must be positive, got {kappa_c}")));
                }
            }
            _ => {}
        }
        Ok(Self { shape, t_on, t_off })
    }

    pub fn zero(t_on: f64, t_off: f64) -> Result<Self> {
        Self::new(CouplerShape::Zero, t_on, t_off)
    }

    pub fn rate(&self, t: f64) -> f64 {
        if t < self.t_on || t > self.t_off {
            return 0.0;
        }
        match self.shape {
            CouplerShape::Zero => 0.0,
            CouplerShape::Constant(r) => r,
            CouplerShape::Release { q, kappa_c, center } => shaped_rate(q, kappa_c, kappa_c * (t - center)),
            CouplerShape::Catch { q, kappa_c, center } => shaped_rate(q, kappa_c, -kappa_c * (t - center)),
        }
    }
}

/// q|u|²/(1 − q∫|u|²) for the sech envelope at x = κ_c t.
fn shaped_rate(q: f64, kappa_c: f64, x: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    let (c, cbar) = logistic_pair(x);
    let denom = (1.0 - q) + q * cbar;
    if denom <= 0.0 {
        return kappa_c * c;
    }
    q * kappa_c * c * cbar / denom
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossChannel {
    pub mode: String,
    pub rate: f64,
    pub t_on: f64,
    pub t_off: f64,
}

impl LossChannel {
    pub fn new(mode: impl Into<String>, rate: f64, t_on: f64, t_off: f64) -> Result<Self> {
        if !(rate >= 0.0) {
            return Err(invalid("rate", format!("loss rate must be non-negative, got {rate}")));
        }
        Ok(Self { mode: mode.into(), rate, t_on, t_off })
    }

    pub fn active(&self, t: f64) -> bool {
        t >= self.t_on && t <= self.t_off
    }
}

/// H_D = β(s e^{i(ω_d t + ϕ)} + h.c.) on one transition, for `start ≤ t ≤ start + duration`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub qudit: String,
    pub transition: Transition,
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    pub start: f64,
    pub duration: f64,
}

impl DriveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration >= 0.0) {
            return Err(invalid("duration", format!("must be non-negative, got {}", self.duration)));
        }
        Ok(())
    }

    fn carrier(&self, t: f64) -> Complex64 {
        if t < self.start || t > self.start + self.duration {
            return ZERO;
        }
        Complex64::from_polar(self.amplitude, self.frequency * t + self.phase)
    }

    /// The two time-dependent terms of this drive embedded in `space`.
    pub fn terms(&self, space: &HilbertSpace) -> Result<Vec<Term>> {
        self.validate()?;
        let local = transition_lowering(&HilbertSpace::single(&self.qudit, space.factor_dim(&self.qudit)?)?, self.transition);
        let s = Operator::embed(space, &self.qudit, local.matrix())?;
        let sd = s.dagger();
        let a = self.clone();
        let b = self.clone();
        Ok(vec![
            Term::new(Coefficient::complex_fn(move |t| a.carrier(t)), s),
            Term::new(Coefficient::complex_fn(move |t| b.carrier(t).conj()), sd),
        ])
    }
}

/// Drive Hamiltonian on the driven qudit's own space at time t.
pub fn drive_hamiltonian(d: &DriveParams, levels: usize, t: f64) -> Result<Operator> {
    d.validate()?;
    let space = HilbertSpace::single(&d.qudit, levels)?;
    if d.transition.upper() >= levels {
        return Err(Error::InvalidDimension(levels, format!("{} transition on {}", d.transition, d.qudit)));
    }
    let s = transition_lowering(&space, d.transition);
    let c = d.carrier(t);
    Ok(&s.scale(c) + &s.dagger().scale(c.conj()))
}

/// exp(−i(θ/2)(e^{iϕ}s + e^{−iϕ}s†)) for s the transition's lowering operator.
pub fn pulse_unitary(levels: usize, tr: Transition, theta: f64, phi: f64) -> Result<CMatrix> {
    if tr.upper() >= levels {
        return Err(Error::InvalidDimension(levels, format!("{tr} pulse")));
    }
    let (l, u) = (tr.lower(), tr.upper());
    let mut m = CMatrix::identity(levels, levels);
    let (c, s) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    m[(l, l)] = Complex64::new(c, 0.0);
    m[(u, u)] = Complex64::new(c, 0.0);
    m[(l, u)] = -Complex64::i() * s * Complex64::cis(phi);
    m[(u, l)] = -Complex64::i() * s * Complex64::cis(-phi);
    Ok(m)
}

/// e^{iφ n} on a truncated mode.
pub fn phase_unitary(dim: usize, phi: f64) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(dim, (0..dim).map(|n| Complex64::cis(phi * n as f64))))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{evolve, DensityMatrix, TimeDependentGenerator};
    use crate::units::NS;
    use crate::quantum::ONE;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn hamiltonian_diagonal() {
        let mut q = Qudit { detuning: 0.0, anharmonicity: 0.0, ..Qudit::q1() };
        assert!(qudit_hamiltonian(&q).max_abs() == 0.0);
        q.anharmonicity = mhz(-179.0);
        let h = qudit_hamiltonian(&q);
        assert!((h.matrix()[(2, 2)].re - mhz(-358.0)).abs() < 1e-3);
        q.detuning = mhz(200.0);
        let h = qudit_hamiltonian(&q);
        let gap = h.matrix()[(2, 2)].re - h.matrix()[(1, 1)].re;
        assert!((gap - mhz(-158.0)).abs() < 1e-3);
        assert!((gap - q.transition_frequency(Transition::Ef)).abs() < 1e-6);
        assert!(h.matrix().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn dephasing_values() {
        assert_eq!(dephasing_rate(2.0 * US, 1.0 * US).unwrap(), 0.0);
        let t = 1.0 / dephasing_rate(1.2 * US, 18.0 * US).unwrap();
        assert!((t / US - 1.2414).abs() < 1e-4, "{t}");
        let t = 1.0 / dephasing_rate(0.4 * US, 11.0 * US).unwrap();
        assert!((t / US - 0.4075).abs() < 1e-3, "{t}");
        assert!(dephasing_rate(3.0 * US, 1.0 * US).is_err());
        assert_eq!(dephasing_rate(f64::INFINITY, f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn lowering_matrices() {
        let q = Qudit::q1();
        let (ge, ef, full) = lowering_operators(&q).unwrap();
        let s = q.space();
        let e = DensityMatrix::basis(s.clone(), &[1]).unwrap();
        let applied = ge.matrix() * e.matrix().column(1);
        assert!((applied[0] - ONE).norm() < 1e-15);
        let f_col = ef.matrix().column(2);
        assert!((f_col[1] - ONE).norm() < 1e-15);
        assert!(ef.matrix().column(1).iter().all(|z| z.norm() == 0.0));
        let mut oracle = CMatrix::zeros(3, 3);
        oracle[(0, 1)] = ONE;
        oracle[(1, 2)] = Complex64::new(2f64.sqrt(), 0.0);
        assert!((full.matrix() - &oracle).norm() < 1e-15);
        let q2 = Qudit { levels: 2, ..Qudit::q1() };
        assert!(lowering_operators(&q2).is_err());
    }

    fn ideal(levels: usize) -> Qudit {
        Qudit { levels, coherence: Coherence::IDEAL, ..Qudit::q1() }
    }

    fn run_drive(d: DriveParams, q: &Qudit, start: usize) -> DensityMatrix {
        let space = q.space();
        let mut gen = TimeDependentGenerator::new(space.clone());
        gen.set_free_energies(q.energies()).unwrap();
        for t in d.terms(&space).unwrap() {
            gen.add_hamiltonian(t.coeff, t.op).unwrap();
        }
        let rho = DensityMatrix::basis(space, &[start]).unwrap();
        evolve(&rho, &gen, 0.0, d.duration, 0.01 * NS).unwrap().last().clone()
    }

    #[test]
    fn resonant_pi_pulse_inverts() {
        let q = ideal(3);
        let beta = mhz(10.0);
        let d = DriveParams {
            qudit: "q1".into(),
            transition: Transition::Ge,
            amplitude: beta,
            frequency: q.transition_frequency(Transition::Ge),
            phase: 0.0,
            start: 0.0,
            duration: PI / (2.0 * beta),
        };
        let z = drive_hamiltonian(&DriveParams { amplitude: 0.0, ..d.clone() }, 3, 1e-9).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let q2 = Qudit { levels: 2, ..q.clone() };
        let rho = run_drive(d, &q2, 0);
        assert!(rho.matrix()[(1, 1)].re > 0.999);
    }

    #[test]
    fn ef_pulse_is_selective() {
        let q = Qudit { detuning: mhz(130.0), ..ideal(3) };
        let beta = mhz(2.0);
        let d = DriveParams {
            qudit: "q1".into(),
            transition: Transition::Ef,
            amplitude: beta,
            frequency: q.transition_frequency(Transition::Ef),
            phase: 0.3,
            start: 0.0,
            duration: PI / (2.0 * beta),
        };
        let from_e = run_drive(d.clone(), &q, 1);
        assert!(from_e.matrix()[(2, 2)].re > 0.99, "{}", from_e.matrix()[(2, 2)]);
        let from_g = run_drive(d, &q, 0);
        assert!((from_g.matrix()[(0, 0)].re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pulse_unitary_matches_drive_limit() {
        let u = pulse_unitary(3, Transition::Ge, PI, 0.0).unwrap();
        assert!((u[(1, 0)] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((&u * u.adjoint() - CMatrix::identity(3, 3)).norm() < 1e-14);
        assert!((u[(2, 2)] - ONE).norm() == 0.0);
    }

    #[test]
    fn intrinsic_decay_flows_downhill() {
        let q = Qudit::q1();
        let space = q.space();
        let mut gen = TimeDependentGenerator::new(space.clone());
        for l in intrinsic_dissipators(&q).unwrap() {
            gen.add_collapse(vec![Term::new(Coefficient::constant(1.0), l)]).unwrap();
        }
        let mixed = DensityMatrix::maximally_mixed(space.clone());
        let out = evolve(&mixed, &gen, 0.0, 1.0 * US, 1.0 * NS).unwrap();
        assert!((out.last().trace().re - 1.0).abs() < 1e-12);
        let f = DensityMatrix::basis(space, &[2]).unwrap();
        let traj = evolve(&f, &gen, 0.0, 20.0 * US, 5.0 * NS).unwrap();
        for w in traj.states.windows(2) {
            let (a, b) = (w[0].diagonal(), w[1].diagonal());
            assert!(b[2] <= a[2] + 1e-12 && b[0] >= a[0] - 1e-12);
        }
    }

    #[test]
    fn coupler_profiles() {
        let kc = 1.0 / (15.0 * NS);
        let rel = CouplerProfile::new(CouplerShape::Release { q: 1.0, kappa_c: kc, center: 0.0 }, -1.0, 1.0).unwrap();
        assert!((rel.rate(0.0) - kc / 2.0).abs() < 1e-9 * kc);
        for t in [-60.0 * NS, -3.0 * NS, 20.0 * NS, 80.0 * NS] {
            assert!((rel.rate(t) - kc / (1.0 + (-kc * t).exp())).abs() < 1e-12 * kc);
        }
        assert_eq!(rel.rate(2.0), 0.0);
        let half = CouplerProfile::new(CouplerShape::Release { q: 0.5, kappa_c: kc, center: 0.0 }, -1.0, 1.0).unwrap();
        assert!((half.rate(0.0) - kc / 6.0).abs() < 1e-9 * kc);
        let catch = CouplerProfile::new(CouplerShape::Catch { q: 1.0, kappa_c: kc, center: 0.0 }, -1.0, 1.0).unwrap();
        assert!((catch.rate(30.0 * NS) - kc / (1.0 + (kc * 30.0 * NS).exp())).abs() < 1e-12 * kc);
        assert!(CouplerProfile::new(CouplerShape::Release { q: 1.5, kappa_c: kc, center: 0.0 }, 0.0, 1.0).is_err());
        assert!(LossChannel::new("a", -1.0, 0.0, 1.0).is_err());
        assert!(WavepacketMode::new("a", 0.0, 1, kc).is_err());
    }

    proptest! {
        #[test]
        fn dephasing_monotone_in_t2r(t1 in 1e-6f64..1e-4, a in 0.01f64..1.0, b in 0.01f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let r_lo = dephasing_rate(lo * 2.0 * t1, t1).unwrap();
            let r_hi = dephasing_rate(hi * 2.0 * t1, t1).unwrap();
            prop_assert!(r_hi <= r_lo);
        }

        #[test]
        fn drive_is_hermitian(beta in -1e9f64..1e9, w in -1e9f64..1e9, phase in -4.0f64..4.0, t in 0.0f64..1e-7) {
            for tr in [Transition::Ge, Transition::Ef] {
                let d = DriveParams { qudit: "q".into(), transition: tr, amplitude: beta, frequency: w, phase, start: 0.0, duration: 1e-7 };
                let h = drive_hamiltonian(&d, 3, t).unwrap();
                prop_assert!(h.hermiticity_error() < 1e-9 * beta.abs().max(1.0));
            }
        }

        #[test]
        fn hamiltonian_real_diagonal(d in -1e10f64..1e10, a in -2e9f64..-1.0) {
            let q = Qudit { detuning: d, anharmonicity: a, ..Qudit::q1() };
            let h = qudit_hamiltonian(&q);
            for r in 0..3 { for c in 0..3 {
                let z = h.matrix()[(r, c)];
                prop_assert!(z.im == 0.0 && (r == c || z.re == 0.0));
            }}
        }
    }
}
