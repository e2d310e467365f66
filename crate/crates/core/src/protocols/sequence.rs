//! Protocol primitives and their execution on a [`CascadeState`].

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cascade::{partial_catch_profile, shaped_release_profile, CascadeState, EnvelopeSpec, Parasitic, Stage};
use crate::device::{LossChannel, Qudit, Transition, WavepacketMode};
use crate::error::{Error, Result};
use crate::quantum::{DensityMatrix, EvolveOptions};

/// Shape and timing shared by an emission or a capture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub qudit: String,
    pub transition: Transition,
    /// Released fraction, or the fraction whose release this capture reverses.
    pub q: f64,
    /// Label of the traveling mode.
    pub mode: String,
    pub center: f64,
    /// Half window in units of 1/κ_c.
    pub half_width: f64,
    pub parasitic: Option<Parasitic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Primitive {
    AttachQudit { qudit: Qudit, level: usize },
    Detune { qudit: String, detuning: f64 },
    /// Emission into a fresh traveling mode with propagation loss `loss_rate`.
    Release { interaction: Interaction, loss_rate: f64 },
    /// Absorption from a previously released mode; the mode is discarded afterwards.
    Catch { interaction: Interaction },
    Phase { mode: String, phi: f64 },
    Pulse { qudit: String, transition: Transition, theta: f64, phase: f64 },
    Wait { until: f64 },
    Measure { qudits: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub kappa_c: f64,
    pub truncation: usize,
    pub initial: Vec<(Qudit, usize)>,
    pub primitives: Vec<Primitive>,
}

impl PulseSequence {
    /// Structural checks: catches follow releases of the same mode, windows do
    /// not run backwards.
    pub fn validate(&self) -> Result<()> {
        if self.initial.is_empty() {
            return Err(Error::InvalidSequence("no qudits prepared".into()));
        }
        let mut released = BTreeSet::new();
        let mut caught = BTreeSet::new();
        let mut clock = 0.0_f64;
        for p in &self.primitives {
            match p {
                Primitive::Release { interaction, .. } => {
                    let (t0, t1) = self.window(interaction);
                    if t0 < clock - 1e-12 {
                        return Err(Error::InvalidSequence(format!("release of {} starts before {clock}", interaction.mode)));
                    }
                    if !released.insert(interaction.mode.clone()) {
                        return Err(Error::InvalidSequence(format!("mode {} released twice", interaction.mode)));
                    }
                    clock = t1;
                }
                Primitive::Catch { interaction } => {
                    if !released.contains(&interaction.mode) || caught.contains(&interaction.mode) {
                        return Err(Error::InvalidSequence(format!("catch of {} without a pending release", interaction.mode)));
                    }
                    let (t0, t1) = self.window(interaction);
                    if t0 < clock - 1e-12 {
                        return Err(Error::InvalidSequence(format!("catch of {} starts before {clock}", interaction.mode)));
                    }
                    caught.insert(interaction.mode.clone());
                    clock = t1;
                }
                Primitive::Phase { mode, .. } => {
                    if !released.contains(mode) || caught.contains(mode) {
                        return Err(Error::InvalidSequence(format!("phase on mode {mode} that is not in flight")));
                    }
                }
                Primitive::Wait { until } => {
                    if *until < clock - 1e-12 {
                        return Err(Error::InvalidSequence(format!("wait until {until} is in the past ({clock})")));
                    }
                    clock = *until;
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn window(&self, i: &Interaction) -> (f64, f64) {
        let h = i.half_width / self.kappa_c;
        (i.center - h, i.center + h)
    }

    fn stage(&self, i: &Interaction, input: &str, output: &str, release: bool) -> Result<Stage> {
        let env = EnvelopeSpec::new(self.kappa_c, i.center)?;
        let w = self.window(i);
        let cp = if release { shaped_release_profile(i.q, &env, w)? } else { partial_catch_profile(i.q, &env, w)? };
        let mut stage = Stage::new(&i.qudit, i.transition, input, output, env, cp)?;
        if let Some(p) = i.parasitic {
            stage = stage.with_parasitic(p.transition, p.ratio)?;
        }
        Ok(stage)
    }
}

/// Population samples of every qudit and traveling mode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl TimeSeries {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    fn push(&mut self, t: f64, values: Vec<(String, f64)>) {
        if let Some(&last) = self.times.last() {
            if (t - last).abs() < 1e-15 {
                // Same instant: keep the latest snapshot.
                self.times.pop();
                for (_, col) in self.columns.iter_mut() {
                    col.pop();
                }
            }
        }
        let n = self.times.len();
        self.times.push(t);
        for (name, v) in values {
            match self.columns.iter_mut().find(|(c, _)| *c == name) {
                Some((_, col)) => col.push(v),
                None => {
                    let mut col = vec![f64::NAN; n];
                    col.push(v);
                    self.columns.push((name, col));
                }
            }
        }
        for (_, col) in self.columns.iter_mut() {
            if col.len() < n + 1 {
                col.push(f64::NAN);
            }
        }
    }
}

/// Runs primitives in order on one state.
#[derive(Debug, Clone)]
pub struct Executor {
    seq: PulseSequence,
    state: CascadeState,
    next: usize,
    qudit_labels: Vec<String>,
    mode_labels: Vec<String>,
    sample: Option<f64>,
    series: TimeSeries,
    /// Occupation left in discarded modes, by label.
    pub discarded: Vec<(String, f64)>,
}

fn snapshot(rho: &DensityMatrix, qudits: &[(String, usize)], modes: &[String]) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for (q, levels) in qudits {
        let pops = if rho.space().contains(q) {
            rho.level_populations(q).unwrap_or_default()
        } else {
            let mut g = vec![0.0; *levels];
            g[0] = 1.0;
            g
        };
        for (name, p) in ["g", "e", "f"].iter().zip(pops) {
            out.push((format!("{q}_{name}"), p));
        }
    }
    for m in modes {
        let n = if rho.space().contains(m) {
            rho.level_populations(m).map(|p| p.iter().enumerate().map(|(k, x)| k as f64 * x).sum()).unwrap_or(0.0)
        } else {
            0.0
        };
        out.push((format!("n_{m}"), n));
    }
    out
}

impl Executor {
    pub fn new(seq: PulseSequence, options: EvolveOptions, sample: Option<f64>) -> Result<Self> {
        seq.validate()?;
        let qudits: Vec<Qudit> = seq.initial.iter().map(|(q, _)| q.clone()).collect();
        let levels: Vec<usize> = seq.initial.iter().map(|(_, l)| *l).collect();
        let state = CascadeState::new(qudits, &levels, 0.0)?.with_options(options);
        let mut qudit_labels: Vec<String> = seq.initial.iter().map(|(q, _)| q.label.clone()).collect();
        let mut mode_labels = Vec::new();
        for p in &seq.primitives {
            match p {
                Primitive::AttachQudit { qudit, .. } => qudit_labels.push(qudit.label.clone()),
                Primitive::Release { interaction, .. } => mode_labels.push(interaction.mode.clone()),
                _ => {}
            }
        }
        let mut ex = Self { seq, state, next: 0, qudit_labels, mode_labels, sample, series: TimeSeries::default(), discarded: Vec::new() };
        if ex.sample.is_some() {
            let rho = ex.state.rho().clone();
            ex.record(0.0, &rho);
        }
        Ok(ex)
    }

    pub fn state(&self) -> &CascadeState {
        &self.state
    }

    pub fn series(&self) -> &TimeSeries {
        &self.series
    }

    pub fn into_parts(self) -> (CascadeState, TimeSeries) {
        (self.state, self.series)
    }

    pub fn finished(&self) -> bool {
        self.next >= self.seq.primitives.len()
    }

    fn level_table(&self) -> Vec<(String, usize)> {
        self.qudit_labels
            .iter()
            .map(|l| {
                let levels = self
                    .seq
                    .initial
                    .iter()
                    .map(|(q, _)| q)
                    .chain(self.seq.primitives.iter().filter_map(|p| match p {
                        Primitive::AttachQudit { qudit, .. } => Some(qudit),
                        _ => None,
                    }))
                    .find(|q| &q.label == l)
                    .map(|q| q.levels)
                    .unwrap_or(3);
                (l.clone(), levels)
            })
            .collect()
    }

    fn record(&mut self, t: f64, rho: &DensityMatrix) {
        let table = self.level_table();
        let values = snapshot(rho, &table, &self.mode_labels);
        self.series.push(t, values);
    }

    fn observe_wait(&mut self, until: f64) -> Result<()> {
        if until < self.state.clock() - 1e-12 {
            return Err(Error::InvalidSequence(format!("cannot go back from {} to {until}", self.state.clock())));
        }
        if self.sample.is_none() {
            return self.state.wait_until(until);
        }
        let table = self.level_table();
        let modes = self.mode_labels.clone();
        let mut buf = Vec::new();
        self.state.wait_until_observed(until, self.sample, &mut |t, rho| buf.push((t, snapshot(rho, &table, &modes))))?;
        for (t, v) in buf {
            self.series.push(t, v);
        }
        Ok(())
    }

    fn observe_stage(&mut self, stage: &Stage) -> Result<()> {
        if self.sample.is_none() {
            return self.state.run_stage(stage);
        }
        let table = self.level_table();
        let modes = self.mode_labels.clone();
        let mut buf = Vec::new();
        self.state.run_stage_observed(stage, self.sample, &mut |t, rho| buf.push((t, snapshot(rho, &table, &modes))))?;
        for (t, v) in buf {
            self.series.push(t, v);
        }
        Ok(())
    }

    fn mode(&self, label: String, detuning: f64) -> Result<WavepacketMode> {
        WavepacketMode::new(label, detuning, self.seq.truncation, self.seq.kappa_c)
    }

    /// Executes primitives up to (not including) index `end`.
    /// Drops the next primitive without running it.
    pub fn skip(&mut self) {
        self.next = (self.next + 1).min(self.seq.primitives.len());
    }

    pub fn run_to(&mut self, end: usize) -> Result<()> {
        let end = end.min(self.seq.primitives.len());
        while self.next < end {
            let p = self.seq.primitives[self.next].clone();
            self.step(&p)?;
            self.next += 1;
            if self.sample.is_some() {
                let rho = self.state.rho().clone();
                self.record(self.state.clock(), &rho);
            }
        }
        Ok(())
    }

    pub fn run(&mut self) -> Result<()> {
        self.run_to(usize::MAX)
    }

    fn step(&mut self, p: &Primitive) -> Result<()> {
        match p {
            Primitive::AttachQudit { qudit, level } => self.state.attach_qudit(qudit.clone(), *level),
            Primitive::Detune { qudit, detuning } => self.state.set_detuning(qudit, *detuning),
            Primitive::Release { interaction: i, loss_rate } => {
                let (t0, _) = self.seq.window(i);
                self.observe_wait(t0)?;
                let detuning = self.state.qudit(&i.qudit)?.transition_frequency(i.transition);
                let input = format!("{}_in", i.mode);
                self.state.attach_mode(self.mode(input.clone(), detuning)?)?;
                self.state.attach_mode(self.mode(i.mode.clone(), detuning)?)?;
                if *loss_rate > 0.0 {
                    self.state.add_loss(LossChannel::new(&i.mode, *loss_rate, t0, f64::INFINITY)?);
                }
                let stage = self.seq.stage(i, &input, &i.mode, true)?;
                self.observe_stage(&stage)?;
                let left = self.state.detach_mode(&input, true)?;
                self.discarded.push((input, left));
                Ok(())
            }
            Primitive::Catch { interaction: i } => {
                let (t0, _) = self.seq.window(i);
                self.observe_wait(t0)?;
                let detuning = self
                    .state
                    .modes()
                    .iter()
                    .find(|m| m.label == i.mode)
                    .map(|m| m.detuning)
                    .ok_or_else(|| Error::DetachedMode(i.mode.clone()))?;
                let output = format!("{}_out", i.mode);
                self.state.attach_mode(self.mode(output.clone(), detuning)?)?;
                let stage = self.seq.stage(i, &i.mode, &output, false)?;
                self.observe_stage(&stage)?;
                for label in [output, i.mode.clone()] {
                    let left = self.state.detach_mode(&label, true)?;
                    self.discarded.push((label, left));
                }
                Ok(())
            }
            Primitive::Phase { mode, phi } => self.state.apply_phase(mode, *phi),
            Primitive::Pulse { qudit, transition, theta, phase } => self.state.pulse(qudit, *transition, *theta, *phase),
            Primitive::Wait { until } => self.observe_wait(*until),
            Primitive::Measure { qudits } => qudits.iter().try_for_each(|q| self.state.measure(q)),
        }
    }
}
