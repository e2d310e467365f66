//! Fixed-step RK4 integration of the Lindblad master equation
//!
//! dρ/dt = −i[H, ρ] + Σ_j (L_j ρ L_j† − ½{L_j†L_j, ρ}).
//!
//! The static diagonal part of H is removed exactly by working in its
//! interaction picture. The remaining terms are applied through sparse
//! triplet lists built once per call; state storage stays dense.

use num_complex::Complex64;

use super::generator::{Coefficient, TimeDependentGenerator};
use super::operator::{CMatrix, Operator, I, ZERO};
use super::state::DensityMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_DT: f64 = 0.05e-9;
pub const RUN_TRACE_TOL: f64 = 1e-6;
pub const RUN_POSITIVITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Requested step; the actual step divides the span evenly.
    pub dt: f64,
    /// Observer cadence in seconds; `None` calls the observer only at both ends.
    pub sample_interval: Option<f64>,
    pub trace_tol: f64,
    pub positivity_tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, sample_interval: None, trace_tol: RUN_TRACE_TOL, positivity_tol: RUN_POSITIVITY_TOL }
    }
}

impl EvolveOptions {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

/// Integrates from t0 to t1 and stores the state after every step.
pub fn evolve(
    rho0: &DensityMatrix,
    gen: &TimeDependentGenerator,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Trajectory> {
    let opts = EvolveOptions { dt, sample_interval: Some(0.0), ..EvolveOptions::default() };
    let mut times = Vec::new();
    let mut states = Vec::new();
    evolve_observed(rho0, gen, t0, t1, &opts, &mut |t, rho| {
        times.push(t);
        states.push(rho.clone());
    })?;
    Ok(Trajectory { times, states })
}

/// Integrates from t0 to t1, returning the final state. The observer sees the
/// initial state, every sample point, and the final state.
pub fn evolve_observed(
    rho0: &DensityMatrix,
    gen: &TimeDependentGenerator,
    t0: f64,
    t1: f64,
    opts: &EvolveOptions,
    observer: &mut dyn FnMut(f64, &DensityMatrix),
) -> Result<DensityMatrix> {
    if !(t1 > t0) || !(opts.dt > 0.0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidTimeSpan { t0, t1, dt: opts.dt });
    }
    rho0.space().check(gen.space())?;
    let span = t1 - t0;
    let steps = ((span / opts.dt) - 1e-9).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let stride = match opts.sample_interval {
        Some(iv) => ((iv / h).round() as usize).max(1),
        None => usize::MAX,
    };

    let system = CompiledSystem::new(gen, t0);
    let d = system.dim;
    let mut rho: Vec<Complex64> = row_major(rho0.matrix());
    let mut scratch = Scratch::new(d, system.values_len());

    observer(t0, rho0);
    for step in 0..steps {
        let t = t0 + step as f64 * h;
        rk4_step(&system, &mut rho, t, h, &mut scratch);
        let t_next = t0 + (step + 1) as f64 * h;
        let is_last = step + 1 == steps;
        if !is_last && (step + 1) % stride == 0 {
            let snapshot = system.to_schrodinger(&rho, t_next, rho0)?;
            observer(t_next, &snapshot);
        }
    }

    let mut out = system.to_schrodinger(&rho, t1, rho0)?;
    out.hermitize();
    let tr = out.trace();
    if (tr.re - 1.0).abs() > opts.trace_tol || tr.im.abs() > opts.trace_tol {
        return Err(Error::TraceDrift { trace: tr.re, tolerance: opts.trace_tol });
    }
    let min = out.min_eigenvalue();
    if min < -opts.positivity_tol {
        return Err(Error::PositivityViolation(min));
    }
    observer(t1, &out);
    Ok(out)
}

fn row_major(m: &CMatrix) -> Vec<Complex64> {
    let d = m.nrows();
    let mut v = Vec::with_capacity(d * d);
    for r in 0..d {
        for c in 0..d {
            v.push(m[(r, c)]);
        }
    }
    v
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    row: usize,
    col: usize,
    value: Complex64,
    /// E_row − E_col of the static diagonal part.
    freq: f64,
}

#[derive(Debug, Clone)]
struct SparseOp {
    entries: Vec<Entry>,
}

impl SparseOp {
    fn from_dense(m: &CMatrix, energies: &[f64]) -> Self {
        let d = m.nrows();
        let mut entries = Vec::new();
        for r in 0..d {
            for c in 0..d {
                let v = m[(r, c)];
                if v.norm_sqr() > 0.0 {
                    entries.push(Entry { row: r, col: c, value: v, freq: energies[r] - energies[c] });
                }
            }
        }
        Self { entries }
    }
}

/// value = scale · conj(v[first]) · v[second], or scale · v[first].
#[derive(Debug, Clone, Copy)]
struct Weight {
    scale: Complex64,
    first: usize,
    second: Option<usize>,
}

impl Weight {
    fn eval(&self, values: &[Complex64]) -> Complex64 {
        match self.second {
            Some(s) => self.scale * values[self.first].conj() * values[s],
            None => self.scale * values[self.first],
        }
    }
}

struct CompiledSystem {
    dim: usize,
    t_ref: f64,
    energies: Vec<f64>,
    coefficients: Vec<Coefficient>,
    /// Terms of the effective non-Hermitian Hamiltonian H − (i/2) Σ L†L.
    effective: Vec<(Weight, SparseOp)>,
    /// Each collapse operator as a list of weighted sparse terms.
    jumps: Vec<Vec<(Weight, SparseOp)>>,
}

impl CompiledSystem {
    fn new(gen: &TimeDependentGenerator, t_ref: f64) -> Self {
        let energies = gen.free_energies().to_vec();
        let mut coefficients = Vec::new();
        let mut effective = Vec::new();
        let mut jumps = Vec::new();

        for term in gen.hamiltonian_terms() {
            let idx = coefficients.len();
            coefficients.push(term.coeff.clone());
            let op = SparseOp::from_dense(term.op.matrix(), &energies);
            if !op.entries.is_empty() {
                effective.push((Weight { scale: Complex64::new(1.0, 0.0), first: idx, second: None }, op));
            }
        }
        let half_i = Complex64::new(0.0, -0.5);
        for terms in gen.collapse_terms() {
            let base = coefficients.len();
            let mut jump = Vec::new();
            for (k, term) in terms.iter().enumerate() {
                coefficients.push(term.coeff.clone());
                let op = SparseOp::from_dense(term.op.matrix(), &energies);
                if !op.entries.is_empty() {
                    jump.push((Weight { scale: Complex64::new(1.0, 0.0), first: base + k, second: None }, op));
                }
            }
            for (k, tk) in terms.iter().enumerate() {
                for (l, tl) in terms.iter().enumerate() {
                    let prod: Operator = &tk.op.dagger() * &tl.op;
                    let op = SparseOp::from_dense(prod.matrix(), &energies);
                    if !op.entries.is_empty() {
                        effective.push((Weight { scale: half_i, first: base + k, second: Some(base + l) }, op));
                    }
                }
            }
            if !jump.is_empty() {
                jumps.push(jump);
            }
        }
        Self { dim: gen.space().dim(), t_ref, energies, coefficients, effective, jumps }
    }

    fn values_len(&self) -> usize {
        self.coefficients.len()
    }

    fn to_schrodinger(&self, rho_i: &[Complex64], t: f64, template: &DensityMatrix) -> Result<DensityMatrix> {
        let d = self.dim;
        let tau = t - self.t_ref;
        let m = CMatrix::from_fn(d, d, |r, c| {
            let z = rho_i[r * d + c];
            let w = self.energies[r] - self.energies[c];
            if w == 0.0 {
                z
            } else {
                z * Complex64::cis(-w * tau)
            }
        });
        DensityMatrix::new_unchecked(template.space().clone(), m)
    }

    /// out = L(t)[rho] in the interaction picture.
    fn rhs(&self, t: f64, rho: &[Complex64], out: &mut [Complex64], scratch: &mut Work) {
        let d = self.dim;
        let tau = t - self.t_ref;
        for (v, c) in scratch.values.iter_mut().zip(&self.coefficients) {
            *v = c.at(t);
        }
        let values = &scratch.values;

        // Y = H_eff ρ
        let y = &mut scratch.y;
        y.iter_mut().for_each(|z| *z = ZERO);
        for (w, op) in &self.effective {
            let c = w.eval(values);
            if c.norm_sqr() == 0.0 {
                continue;
            }
            for e in &op.entries {
                let coef = c * e.value * phase(e.freq, tau);
                let src = &rho[e.col * d..e.col * d + d];
                let dst = &mut y[e.row * d..e.row * d + d];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += coef * s;
                }
            }
        }
        // −i H_eff ρ + i ρ H_eff† = −i Y + i Y†
        for r in 0..d {
            for c in 0..d {
                out[r * d + c] = -I * y[r * d + c] + I * y[c * d + r].conj();
            }
        }

        // Σ L ρ L†
        for jump in &self.jumps {
            let weighted = &mut scratch.entries;
            weighted.clear();
            for (w, op) in jump {
                let c = w.eval(values);
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                weighted.extend(op.entries.iter().map(|e| (e.row, e.col, c * e.value * phase(e.freq, tau))));
            }
            if weighted.is_empty() {
                continue;
            }
            let m = &mut scratch.m;
            m.iter_mut().for_each(|z| *z = ZERO);
            for &(r, c, v) in weighted.iter() {
                let src = &rho[c * d..c * d + d];
                let dst = &mut m[r * d..r * d + d];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
            // (M L†)[a, r] = Σ_c M[a, c] conj(L[r, c])
            for &(r, c, v) in weighted.iter() {
                let vc = v.conj();
                for a in 0..d {
                    out[a * d + r] += m[a * d + c] * vc;
                }
            }
        }
    }
}

#[inline]
fn phase(freq: f64, tau: f64) -> Complex64 {
    if freq == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::cis(freq * tau)
    }
}

struct Work {
    values: Vec<Complex64>,
    y: Vec<Complex64>,
    m: Vec<Complex64>,
    entries: Vec<(usize, usize, Complex64)>,
}

struct Scratch {
    work: Work,
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Scratch {
    fn new(d: usize, values: usize) -> Self {
        let z = vec![ZERO; d * d];
        Self {
            work: Work { values: vec![ZERO; values], y: z.clone(), m: z.clone(), entries: Vec::new() },
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }
}

fn rk4_step(sys: &CompiledSystem, rho: &mut [Complex64], t: f64, h: f64, s: &mut Scratch) {
    let half = 0.5 * h;
    sys.rhs(t, rho, &mut s.k1, &mut s.work);
    for ((o, r), k) in s.tmp.iter_mut().zip(rho.iter()).zip(&s.k1) {
        *o = r + k * half;
    }
    sys.rhs(t + half, &s.tmp, &mut s.k2, &mut s.work);
    for ((o, r), k) in s.tmp.iter_mut().zip(rho.iter()).zip(&s.k2) {
        *o = r + k * half;
    }
    sys.rhs(t + half, &s.tmp, &mut s.k3, &mut s.work);
    for ((o, r), k) in s.tmp.iter_mut().zip(rho.iter()).zip(&s.k3) {
        *o = r + k * h;
    }
    sys.rhs(t + h, &s.tmp, &mut s.k4, &mut s.work);
    let sixth = h / 6.0;
    for i in 0..rho.len() {
        rho[i] += (s.k1[i] + (s.k2[i] + s.k3[i]) * 2.0 + s.k4[i]) * sixth;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::operator::ONE;
    use crate::quantum::space::HilbertSpace;
    use crate::quantum::state::expect;
    use std::f64::consts::PI;

    fn qubit() -> HilbertSpace {
        HilbertSpace::single("q", 2).unwrap()
    }

    #[test]
    fn empty_generator_is_identity() {
        let s = qubit();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rho = DensityMatrix::pure(s.clone(), &[Complex64::new(h, 0.0), Complex64::new(0.0, h)]).unwrap();
        let gen = TimeDependentGenerator::new(s);
        let traj = evolve(&rho, &gen, 0.0, 10e-9, 0.05e-9).unwrap();
        assert!((traj.last().matrix() - rho.matrix()).iter().all(|z| z.norm() < 1e-14));
        assert_eq!(traj.times.len(), 201);
    }

    #[test]
    fn amplitude_damping_is_exponential() {
        let s = qubit();
        let kappa: f64 = 1.0 / 20e-9;
        let rho = DensityMatrix::basis(s.clone(), &[1]).unwrap();
        let mut gen = TimeDependentGenerator::new(s.clone());
        gen.add_collapse(vec![super::super::generator::Term::new(
            Coefficient::constant(kappa.sqrt()),
            Operator::transition(&s, 0, 1),
        )])
        .unwrap();
        let traj = evolve(&rho, &gen, 0.0, 100e-9, 0.05e-9).unwrap();
        let proj = Operator::transition(&s, 1, 1);
        for (t, r) in traj.times.iter().zip(&traj.states) {
            let pe = expect(&proj, r).unwrap().re;
            assert!((pe - (-kappa * t).exp()).abs() < 1e-6, "t = {t}, P_e = {pe}");
        }
    }

    #[test]
    fn detuned_coherence_rotates() {
        // H = Δ|e⟩⟨e| puts phase e^{−iΔt} on ρ_eg; period 2π/Δ = 100 ns.
        let s = qubit();
        let delta = 2.0 * PI * 10e6;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rho = DensityMatrix::pure(s.clone(), &[Complex64::new(h, 0.0), Complex64::new(h, 0.0)]).unwrap();
        for free in [true, false] {
            let mut gen = TimeDependentGenerator::new(s.clone());
            if free {
                gen.set_free_energies(vec![0.0, delta]).unwrap();
            } else {
                gen.add_hamiltonian(Coefficient::constant(ONE), Operator::transition(&s, 1, 1)).unwrap();
                gen.add_hamiltonian(Coefficient::constant(delta - 1.0), Operator::transition(&s, 1, 1)).unwrap();
                gen.add_hamiltonian(Coefficient::constant(1.0), Operator::transition(&s, 0, 0)).unwrap();
                gen.add_hamiltonian(Coefficient::constant(-1.0), Operator::transition(&s, 0, 0)).unwrap();
            }
            let traj = evolve(&rho, &gen, 0.0, 150e-9, 0.05e-9).unwrap();
            for (t, r) in traj.times.iter().zip(&traj.states).step_by(50) {
                let expected = Complex64::from_polar(0.5, -delta * t);
                assert!((r.matrix()[(1, 0)] - expected).norm() < 1e-6, "free={free} t={t}");
            }
        }
    }

    #[test]
    fn rejects_bad_spans_and_spaces() {
        let s = qubit();
        let rho = DensityMatrix::basis(s.clone(), &[0]).unwrap();
        let gen = TimeDependentGenerator::new(s);
        assert!(matches!(evolve(&rho, &gen, 1.0, 0.0, 0.1), Err(Error::InvalidTimeSpan { .. })));
        assert!(matches!(evolve(&rho, &gen, 0.0, 1.0, 0.0), Err(Error::InvalidTimeSpan { .. })));
        let other = TimeDependentGenerator::new(HilbertSpace::single("x", 3).unwrap());
        assert!(matches!(evolve(&rho, &other, 0.0, 1.0, 0.1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn oversized_step_reports_trace_drift() {
        let s = qubit();
        let rho = DensityMatrix::basis(s.clone(), &[1]).unwrap();
        let mut gen = TimeDependentGenerator::new(s.clone());
        gen.add_collapse(vec![super::super::generator::Term::new(
            Coefficient::constant(1e10f64.sqrt()),
            Operator::transition(&s, 0, 1),
        )])
        .unwrap();
        let err = evolve(&rho, &gen, 0.0, 10e-9, 1e-9).unwrap_err();
        assert!(matches!(err, Error::TraceDrift { .. } | Error::PositivityViolation(_)), "{err:?}");
    }
}
