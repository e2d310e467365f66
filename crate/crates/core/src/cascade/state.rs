use num_complex::Complex64;

use super::stage::{add_loss, Stage};
use crate::device::{intrinsic_dissipators, phase_unitary, pulse_unitary, LossChannel, Qudit, Transition, WavepacketMode};
use crate::error::{Error, Result};
use crate::quantum::{
    evolve_observed, partial_trace, Coefficient, DensityMatrix, EvolveOptions, HilbertSpace, Operator, Term,
    TimeDependentGenerator,
};

/// Largest occupation a mode may carry when detached without `force`.
pub const DETACH_THRESHOLD: f64 = 1e-3;

const CLOCK_TOL: f64 = 1e-12;

/// Joint state of qudits and attached traveling modes, with a clock.
#[derive(Debug, Clone)]
pub struct CascadeState {
    rho: DensityMatrix,
    clock: f64,
    qudits: Vec<Qudit>,
    modes: Vec<WavepacketMode>,
    losses: Vec<LossChannel>,
    frozen: Vec<String>,
    options: EvolveOptions,
}

impl CascadeState {
    /// Qudits start in the given basis levels; no modes are attached.
    pub fn new(qudits: Vec<Qudit>, levels: &[usize], t0: f64) -> Result<Self> {
        for q in &qudits {
            q.validate()?;
        }
        let space = HilbertSpace::new(qudits.iter().map(|q| (q.label.clone(), q.levels)))?;
        let rho = DensityMatrix::basis(space, levels)?;
        Ok(Self { rho, clock: t0, qudits, modes: Vec::new(), losses: Vec::new(), frozen: Vec::new(), options: EvolveOptions::default() })
    }

    pub fn with_options(mut self, options: EvolveOptions) -> Self {
        self.options = options;
        self
    }

    pub fn options(&self) -> &EvolveOptions {
        &self.options
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn space(&self) -> &HilbertSpace {
        self.rho.space()
    }

    pub fn qudits(&self) -> &[Qudit] {
        &self.qudits
    }

    pub fn qudit(&self, label: &str) -> Result<&Qudit> {
        self.qudits.iter().find(|q| q.label == label).ok_or_else(|| Error::UnknownQudit(label.to_string()))
    }

    pub fn modes(&self) -> &[WavepacketMode] {
        &self.modes
    }

    pub fn is_attached(&self, label: &str) -> bool {
        self.modes.iter().any(|m| m.label == label)
    }

    pub fn is_frozen(&self, label: &str) -> bool {
        self.frozen.iter().any(|f| f == label)
    }

    /// Diagonal of H₀ over the current space.
    pub fn free_energies(&self) -> Vec<f64> {
        let per_factor: Vec<Vec<f64>> = self
            .space()
            .factors()
            .iter()
            .map(|f| {
                if let Some(q) = self.qudits.iter().find(|q| q.label == f.label) {
                    q.energies()
                } else {
                    self.modes.iter().find(|m| m.label == f.label).map(|m| m.energies()).unwrap_or(vec![0.0; f.dim])
                }
            })
            .collect();
        (0..self.space().dim())
            .map(|i| self.space().digits(i).iter().zip(&per_factor).map(|(&d, e)| e[d]).sum())
            .collect()
    }

    pub fn set_detuning(&mut self, label: &str, detuning: f64) -> Result<()> {
        let q = self.qudits.iter_mut().find(|q| q.label == label).ok_or_else(|| Error::UnknownQudit(label.to_string()))?;
        q.detuning = detuning;
        Ok(())
    }

    /// Registers a loss that acts during every later evolution while its mode is attached.
    pub fn add_loss(&mut self, loss: LossChannel) {
        self.losses.push(loss);
    }

    pub fn attach_mode(&mut self, mode: WavepacketMode) -> Result<()> {
        if self.space().contains(&mode.label) {
            return Err(Error::DuplicateLabel(mode.label));
        }
        let vac = DensityMatrix::basis(HilbertSpace::single(&mode.label, mode.truncation)?, &[0])?;
        self.rho = self.rho.tensor(&vac)?;
        self.modes.push(mode);
        Ok(())
    }

    /// Adds a qudit in a basis level; it takes part in dynamics from now on.
    pub fn attach_qudit(&mut self, qudit: Qudit, level: usize) -> Result<()> {
        qudit.validate()?;
        if self.space().contains(&qudit.label) {
            return Err(Error::DuplicateLabel(qudit.label));
        }
        let fresh = DensityMatrix::basis(qudit.space(), &[level])?;
        self.rho = self.rho.tensor(&fresh)?;
        self.qudits.push(qudit);
        Ok(())
    }

    /// Traces out a mode. Without `force`, refuses when its occupation exceeds
    /// [`DETACH_THRESHOLD`]. Returns the discarded occupation.
    pub fn detach_mode(&mut self, label: &str, force: bool) -> Result<f64> {
        if !self.is_attached(label) {
            return Err(Error::DetachedMode(label.to_string()));
        }
        let n = self.mode_occupation(label)?;
        if n > DETACH_THRESHOLD && !force {
            return Err(Error::OccupiedMode { label: label.to_string(), population: n });
        }
        let keep: Vec<&str> = self.space().labels().filter(|l| *l != label).collect();
        self.rho = partial_trace(&self.rho, &keep)?;
        self.modes.retain(|m| m.label != label);
        Ok(n)
    }

    pub fn populations(&self, label: &str) -> Result<Vec<f64>> {
        self.rho.level_populations(label)
    }

    pub fn mode_occupation(&self, label: &str) -> Result<f64> {
        if !self.is_attached(label) {
            return Err(Error::DetachedMode(label.to_string()));
        }
        Ok(self.populations(label)?.iter().enumerate().map(|(n, p)| n as f64 * p).sum())
    }

    fn base_generator(&self) -> Result<TimeDependentGenerator> {
        let space = self.space().clone();
        let mut gen = TimeDependentGenerator::new(space.clone());
        gen.set_free_energies(self.free_energies())?;
        for q in self.qudits.iter().filter(|q| !self.is_frozen(&q.label)) {
            for l in intrinsic_dissipators(q)? {
                let op = Operator::embed(&space, &q.label, l.matrix())?;
                gen.add_collapse(vec![Term::new(Coefficient::constant(1.0), op)])?;
            }
        }
        for loss in self.losses.iter().filter(|l| self.is_attached(&l.mode) && l.rate > 0.0) {
            add_loss(&mut gen, loss)?;
        }
        Ok(gen)
    }

    fn integrate(
        &mut self,
        gen: &TimeDependentGenerator,
        t1: f64,
        sample: Option<f64>,
        observer: &mut dyn FnMut(f64, &DensityMatrix),
    ) -> Result<()> {
        let t0 = self.clock;
        if t1 - t0 <= CLOCK_TOL {
            if t1 + CLOCK_TOL < t0 {
                return Err(Error::InvalidTimeSpan { t0, t1, dt: self.options.dt });
            }
            return Ok(());
        }
        if gen.hamiltonian_terms().is_empty() && gen.collapse_terms().is_empty() {
            let e = gen.free_energies();
            let tau = t1 - t0;
            let m = self.rho.matrix().map_with_location(|r, c, z| z * Complex64::cis(-(e[r] - e[c]) * tau));
            observer(t0, &self.rho);
            self.rho = DensityMatrix::new_unchecked(self.space().clone(), m)?;
            observer(t1, &self.rho);
        } else {
            let opts = EvolveOptions { sample_interval: sample, ..self.options };
            self.rho = evolve_observed(&self.rho, gen, t0, t1, &opts, observer)?;
        }
        self.clock = t1;
        Ok(())
    }

    pub fn run_stage(&mut self, stage: &Stage) -> Result<()> {
        self.run_stage_observed(stage, None, &mut |_, _| {})
    }

    /// Advances through `stage`; the clock must already sit at its start.
    pub fn run_stage_observed(
        &mut self,
        stage: &Stage,
        sample: Option<f64>,
        observer: &mut dyn FnMut(f64, &DensityMatrix),
    ) -> Result<()> {
        stage.validate()?;
        if (self.clock - stage.t_start).abs() > CLOCK_TOL {
            return Err(Error::ClockMismatch { state: self.clock, stage: stage.t_start });
        }
        for label in [&stage.input, &stage.output] {
            if !self.is_attached(label) {
                return Err(Error::DetachedMode(label.clone()));
            }
        }
        self.qudit(&stage.qudit)?;
        let mut gen = self.base_generator()?;
        stage.add_to(&mut gen)?;
        self.integrate(&gen, stage.t_end, sample, observer)
    }

    /// Free evolution with intrinsic decoherence and registered losses.
    pub fn wait_until(&mut self, t: f64) -> Result<()> {
        self.wait_until_observed(t, None, &mut |_, _| {})
    }

    pub fn wait_until_observed(
        &mut self,
        t: f64,
        sample: Option<f64>,
        observer: &mut dyn FnMut(f64, &DensityMatrix),
    ) -> Result<()> {
        let gen = self.base_generator()?;
        self.integrate(&gen, t, sample, observer)
    }

    /// Applies a unitary on one factor.
    pub fn apply_local(&mut self, label: &str, unitary: &crate::quantum::CMatrix) -> Result<()> {
        let u = Operator::embed(self.space(), label, unitary)?;
        self.rho = self.rho.transform(&u)?;
        Ok(())
    }

    /// Instantaneous rotation by θ about an equatorial axis at `phase`, referenced
    /// to a drive locked to the transition so that the same phase means the same
    /// axis at any time.
    pub fn pulse(&mut self, label: &str, tr: Transition, theta: f64, phase: f64) -> Result<()> {
        let q = self.qudit(label)?;
        let frame_phase = phase + q.transition_frequency(tr) * self.clock;
        let u = pulse_unitary(q.levels, tr, theta, frame_phase)?;
        self.apply_local(label, &u)
    }

    /// e^{iφ n} on a traveling mode.
    pub fn apply_phase(&mut self, mode: &str, phi: f64) -> Result<()> {
        let dim = self.space().factor_dim(mode).map_err(|_| Error::DetachedMode(mode.to_string()))?;
        self.apply_local(mode, &phase_unitary(dim, phi))
    }

    /// Projective readout record: removes coherence between the qudit's levels
    /// and stops its intrinsic dynamics.
    pub fn measure(&mut self, label: &str) -> Result<()> {
        self.qudit(label)?;
        let k = self.space().index_of(label)?;
        let space = self.space().clone();
        let level: Vec<usize> = (0..space.dim()).map(|i| space.digits(i)[k]).collect();
        let m = self.rho.matrix().map_with_location(|r, c, z| if level[r] == level[c] { z } else { Complex64::new(0.0, 0.0) });
        self.rho = DensityMatrix::new_unchecked(space, m)?;
        if !self.is_frozen(label) {
            self.frozen.push(label.to_string());
        }
        Ok(())
    }
}
