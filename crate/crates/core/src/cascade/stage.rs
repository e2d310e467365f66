use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::envelope::EnvelopeSpec;
use super::state::CascadeState;
use crate::device::{transition_lowering, CouplerProfile, LossChannel, Transition};
use crate::error::{invalid, Error, Result};
use crate::quantum::{annihilation, Coefficient, HilbertSpace, Operator, Term, TimeDependentGenerator};

/// Unmonitored decay of the other transition at a fixed fraction of the coupler rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parasitic {
    pub transition: Transition,
    /// κ_stage / κ_parasitic.
    pub ratio: f64,
}

/// One emission or capture window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub qudit: String,
    pub transition: Transition,
    pub input: String,
    pub output: String,
    pub envelope: EnvelopeSpec,
    pub coupler: CouplerProfile,
    pub t_start: f64,
    pub t_end: f64,
    pub losses: Vec<LossChannel>,
    pub parasitic: Option<Parasitic>,
}

impl Stage {
    pub fn new(
        qudit: impl Into<String>,
        transition: Transition,
        input: impl Into<String>,
        output: impl Into<String>,
        envelope: EnvelopeSpec,
        coupler: CouplerProfile,
    ) -> Result<Self> {
        let s = Self {
            qudit: qudit.into(),
            transition,
            input: input.into(),
            output: output.into(),
            envelope,
            coupler,
            t_start: coupler.t_on,
            t_end: coupler.t_off,
            losses: Vec::new(),
            parasitic: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_window(mut self, t_start: f64, t_end: f64) -> Result<Self> {
        self.t_start = t_start;
        self.t_end = t_end;
        self.validate()?;
        Ok(self)
    }

    pub fn with_loss(mut self, loss: LossChannel) -> Self {
        self.losses.push(loss);
        self
    }

    pub fn with_parasitic(mut self, transition: Transition, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0) {
            return Err(invalid("ratio", format!("parasitic ratio must be positive, got {ratio}")));
        }
        self.parasitic = Some(Parasitic { transition, ratio });
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == self.output {
            return Err(Error::InvalidSequence(format!("stage input and output are both {:?}", self.input)));
        }
        if !(self.t_end > self.t_start) {
            return Err(Error::InvalidTimeSpan { t0: self.t_start, t1: self.t_end, dt: 0.0 });
        }
        if self.coupler.t_on < self.t_start || self.coupler.t_off > self.t_end {
            return Err(Error::InvalidSequence("coupler support extends beyond the stage window".into()));
        }
        Ok(())
    }

    fn operators(&self, space: &HilbertSpace) -> Result<StageOps> {
        let qdim = space.factor_dim(&self.qudit)?;
        if self.transition.upper() >= qdim {
            return Err(Error::InvalidDimension(qdim, format!("{} transition on {}", self.transition, self.qudit)));
        }
        let local = HilbertSpace::single(&self.qudit, qdim)?;
        let c = Operator::embed(space, &self.qudit, transition_lowering(&local, self.transition).matrix())?;
        let mode = |label: &str| -> Result<Operator> {
            let dim = space.factor_dim(label).map_err(|_| Error::DetachedMode(label.to_string()))?;
            Operator::embed(space, label, &annihilation(dim))
        };
        let parasitic = match self.parasitic {
            Some(p) if p.transition.upper() < qdim => {
                Some(Operator::embed(space, &self.qudit, transition_lowering(&local, p.transition).matrix())?)
            }
            _ => None,
        };
        Ok(StageOps { c, ax: mode(&self.input)?, ay: mode(&self.output)?, parasitic })
    }

    /// Adds the coupling Hamiltonian, the cascaded collapse operator, parasitic
    /// decay and stage-local losses to `gen`.
    pub(crate) fn add_to(&self, gen: &mut TimeDependentGenerator) -> Result<()> {
        let space = gen.space().clone();
        let ops = self.operators(&space)?;
        let (cp, env) = (self.coupler, self.envelope);
        let half_i = Complex64::new(0.0, 0.5);

        let x1 = &ops.ax.dagger() * &ops.c;
        let x2 = &ops.c.dagger() * &ops.ay;
        let x3 = &ops.ax.dagger() * &ops.ay;
        let f1 = move |t: f64| cp.rate(t).sqrt() * env.g_in(t);
        let f2 = move |t: f64| cp.rate(t).sqrt() * env.g_out(t);
        let f3 = move |t: f64| env.g_in(t) * env.g_out(t);
        for (x, f) in [
            (x1, Box::new(f1) as Box<dyn Fn(f64) -> f64 + Send + Sync>),
            (x2, Box::new(f2)),
            (x3, Box::new(f3)),
        ] {
            let f: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync> = f.into();
            let g = f.clone();
            gen.add_hamiltonian(Coefficient::complex_fn(move |t| half_i * f(t)), x.clone())?;
            gen.add_hamiltonian(Coefficient::complex_fn(move |t| -half_i * g(t)), x.dagger())?;
        }

        gen.add_collapse(vec![
            Term::new(Coefficient::real_fn(move |t| cp.rate(t).sqrt()), ops.c),
            Term::new(Coefficient::real_fn(move |t| env.g_in(t)), ops.ax),
            Term::new(Coefficient::real_fn(move |t| env.g_out(t)), ops.ay),
        ])?;

        if let (Some(p), Some(op)) = (self.parasitic, ops.parasitic) {
            let ratio = p.ratio;
            gen.add_collapse(vec![Term::new(Coefficient::real_fn(move |t| (cp.rate(t) / ratio).sqrt()), op)])?;
        }
        for loss in &self.losses {
            add_loss(gen, loss)?;
        }
        Ok(())
    }
}

struct StageOps {
    c: Operator,
    ax: Operator,
    ay: Operator,
    parasitic: Option<Operator>,
}

pub(crate) fn add_loss(gen: &mut TimeDependentGenerator, loss: &LossChannel) -> Result<()> {
    let space = gen.space().clone();
    let dim = space.factor_dim(&loss.mode).map_err(|_| Error::DetachedMode(loss.mode.clone()))?;
    let a = Operator::embed(&space, &loss.mode, &annihilation(dim))?;
    let l = loss.clone();
    let amp = l.rate.sqrt();
    gen.add_collapse(vec![Term::new(Coefficient::real_fn(move |t| if l.active(t) { amp } else { 0.0 }), a)])
}

/// H₀ plus the three bilinear couplings at time t.
pub fn stage_hamiltonian(state: &CascadeState, stage: &Stage, t: f64) -> Result<Operator> {
    let mut gen = TimeDependentGenerator::new(state.space().clone());
    gen.set_free_energies(state.free_energies())?;
    stage.add_to(&mut gen)?;
    Ok(gen.hamiltonian_at(t))
}

/// L₀(t) = √κ(t) c + g_in(t) a_x + g_out(t) a_y.
pub fn stage_lindblad(state: &CascadeState, stage: &Stage, t: f64) -> Result<Operator> {
    let ops = stage.operators(state.space())?;
    let k = stage.coupler.rate(t).sqrt();
    Ok(&(&ops.c.scale(k) + &ops.ax.scale(stage.envelope.g_in(t))) + &ops.ay.scale(stage.envelope.g_out(t)))
}
