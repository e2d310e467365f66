//! The transfer, interferometer and delayed-choice eraser experiments.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::readout::{apply_readout, conditional_probability, JointDistribution, ReadoutModel};
use super::sequence::{Executor, Interaction, Primitive, PulseSequence, TimeSeries};
use super::stats::{fringe_stats, FringeStats};
use crate::cascade::{acoustic_loss_rate, Parasitic};
use crate::device::{Coherence, Qudit, Transition};
use crate::error::{Error, Result};
use crate::quantum::{partial_trace, DensityMatrix, EvolveOptions, DEFAULT_DT};
use crate::units::{mhz, NS, US};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub decoherence: bool,
    pub loss: bool,
    pub parasitic: bool,
    pub readout: bool,
}

impl NoiseConfig {
    pub const FULL: NoiseConfig = NoiseConfig { decoherence: true, loss: true, parasitic: true, readout: true };
    pub const NONE: NoiseConfig = NoiseConfig { decoherence: false, loss: false, parasitic: false, readout: false };
}

/// Stage half-widths in units of 1/κ_c and readout times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    /// Phonon A emission and capture.
    pub a_half_width: f64,
    /// Herald emission on e-f and its capture by Q2.
    pub herald_half_width: f64,
    /// Earliest Q1 readout.
    pub q1_readout: f64,
    pub q2_readout: f64,
}

impl Timeline {
    /// Windows sized like the experiment's coupler pulses.
    pub fn experiment() -> Self {
        Self { a_half_width: 10.0, herald_half_width: 4.0, q1_readout: 650.0 * NS, q2_readout: 1.1 * US }
    }

    /// Widest windows that fit Q1's three stages into one round trip.
    pub fn ideal() -> Self {
        Self { a_half_width: 8.33, herald_half_width: 8.33, q1_readout: 650.0 * NS, q2_readout: 1.1 * US }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceConfig {
    pub q1: Qudit,
    pub q2: Qudit,
    pub kappa_c: f64,
    /// Round trip between emission and capture centres.
    pub tau: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    /// Phonon B frequency relative to phonon A.
    pub delta_b: f64,
    /// κ_ef / κ_ge at ω_B.
    pub herald_ratio: f64,
    /// κ_ge / κ_ef at ω_A.
    pub emission_ratio: f64,
    pub truncation: usize,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            q1: Qudit::q1(),
            q2: Qudit::q2(),
            kappa_c: 1.0 / (15.0 * NS),
            tau: 500.0 * NS,
            eta_a: 0.66,
            eta_b: 0.64,
            delta_b: mhz(20.0),
            herald_ratio: 84.0,
            emission_ratio: 5.9,
            truncation: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ErasePhase {
    /// Chosen from a noiseless run so that the erased branches recombine as in the ideal state.
    Calibrated,
    /// Fixed drive phase in radians.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub device: DeviceConfig,
    pub noise: NoiseConfig,
    pub timeline: Timeline,
    pub readout: ReadoutModel,
    pub dt: f64,
    pub erase_phase: ErasePhase,
}

impl ExperimentConfig {
    pub fn paper() -> Self {
        Self {
            device: DeviceConfig::default(),
            noise: NoiseConfig::FULL,
            timeline: Timeline::experiment(),
            readout: ReadoutModel::eraser(),
            dt: DEFAULT_DT,
            erase_phase: ErasePhase::Calibrated,
        }
    }

    pub fn noiseless() -> Self {
        Self { noise: NoiseConfig::NONE, timeline: Timeline::ideal(), ..Self::paper() }
    }

    fn options(&self) -> EvolveOptions {
        EvolveOptions::with_dt(self.dt)
    }

    fn qudit(&self, q: &Qudit) -> Qudit {
        let mut q = q.clone();
        if !self.noise.decoherence {
            q.coherence = Coherence::IDEAL;
        }
        q
    }

    fn loss_rate(&self, eta: f64) -> Result<f64> {
        if self.noise.loss {
            acoustic_loss_rate(eta, self.device.tau)
        } else {
            Ok(0.0)
        }
    }

    fn parasitic(&self, transition: Transition, ratio: f64) -> Option<Parasitic> {
        self.noise.parasitic.then_some(Parasitic { transition, ratio })
    }

    /// Readout actually applied: the configured model, or ideal when readout noise is off.
    pub fn effective_readout(&self) -> ReadoutModel {
        if self.noise.readout {
            self.readout
        } else {
            ReadoutModel::IDEAL
        }
    }

    /// Q1 detuning that puts its e-f transition on phonon B.
    pub fn herald_detuning(&self) -> f64 {
        self.device.delta_b - 2.0 * self.device.q1.anharmonicity
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.device;
        d.q1.validate()?;
        d.q2.validate()?;
        for (name, v) in [("kappa_c", d.kappa_c), ("tau", d.tau), ("dt", self.dt), ("herald_ratio", d.herald_ratio), ("emission_ratio", d.emission_ratio)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: format!("must be positive, got {v}") });
            }
        }
        for (name, v) in [("eta_a", d.eta_a), ("eta_b", d.eta_b)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParameter { name, reason: format!("must lie in (0, 1], got {v}") });
            }
        }
        if d.truncation < 2 {
            return Err(Error::InvalidDimension(d.truncation, "mode truncation".into()));
        }
        let t = &self.timeline;
        if !(t.a_half_width > 0.0 && t.herald_half_width > 0.0) {
            return Err(Error::InvalidParameter { name: "half_width", reason: "stage half-widths must be positive".into() });
        }
        if 2.0 * (t.a_half_width + t.herald_half_width) > d.tau * d.kappa_c + 1e-9 {
            return Err(Error::InvalidSequence(format!(
                "emission windows ({} + {})/κ_c do not fit in half the round trip",
                t.a_half_width, t.herald_half_width
            )));
        }
        self.readout.q1.validate()?;
        self.readout.q2.validate()
    }
}

/// Marks of interest inside an eraser sequence.
struct EraserPlan {
    seq: PulseSequence,
    /// Index of the A capture.
    a_catch: usize,
    /// Index of the erase pulse (or where it would go).
    erase: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Branch {
    Unheralded,
    Heralded,
}

fn eraser_plan(cfg: &ExperimentConfig, phi: f64, branch: Branch, erase_phase: Option<f64>) -> Result<EraserPlan> {
    let d = &cfg.device;
    let kc = d.kappa_c;
    let (wa, wb) = (cfg.timeline.a_half_width / kc, cfg.timeline.herald_half_width / kc);
    let a_center = wa;
    let b_center = 2.0 * wa + wb;
    let q1 = cfg.qudit(&d.q1);
    let mut q2 = cfg.qudit(&d.q2);
    q2.detuning = d.delta_b;
    let ge_side = cfg.parasitic(Transition::Ef, d.emission_ratio);

    let a = |center: f64| Interaction {
        qudit: "q1".into(),
        transition: Transition::Ge,
        q: 0.5,
        mode: "a".into(),
        center,
        half_width: cfg.timeline.a_half_width,
        parasitic: ge_side,
    };
    let mut p = vec![
        Primitive::Release { interaction: a(a_center), loss_rate: cfg.loss_rate(d.eta_a)? },
        Primitive::Phase { mode: "a".into(), phi },
        Primitive::Detune { qudit: "q1".into(), detuning: cfg.herald_detuning() },
    ];
    if branch == Branch::Heralded {
        p.push(Primitive::Pulse { qudit: "q1".into(), transition: Transition::Ef, theta: PI, phase: 0.0 });
    }
    p.push(Primitive::Release {
        interaction: Interaction {
            qudit: "q1".into(),
            transition: Transition::Ef,
            q: 1.0,
            mode: "b".into(),
            center: b_center,
            half_width: cfg.timeline.herald_half_width,
            parasitic: cfg.parasitic(Transition::Ge, d.herald_ratio),
        },
        loss_rate: cfg.loss_rate(d.eta_b)?,
    });
    p.push(Primitive::Detune { qudit: "q1".into(), detuning: 0.0 });
    let a_catch = p.len();
    p.push(Primitive::Catch { interaction: a(a_center + d.tau) });
    p.push(Primitive::Measure { qudits: vec!["q1".into()] });
    p.push(Primitive::AttachQudit { qudit: q2, level: 0 });
    p.push(Primitive::Catch {
        interaction: Interaction {
            qudit: "q2".into(),
            transition: Transition::Ge,
            q: 1.0,
            mode: "b".into(),
            center: b_center + d.tau,
            half_width: cfg.timeline.herald_half_width,
            parasitic: ge_side,
        },
    });
    let erase = p.len();
    if let Some(phase) = erase_phase {
        p.push(Primitive::Pulse { qudit: "q2".into(), transition: Transition::Ge, theta: FRAC_PI_2, phase });
    }
    let b_catch_end = b_center + d.tau + wb;
    p.push(Primitive::Wait { until: cfg.timeline.q2_readout.max(b_catch_end) });
    p.push(Primitive::Measure { qudits: vec!["q2".into()] });
    let seq = PulseSequence { kappa_c: kc, truncation: d.truncation, initial: vec![(q1, 1)], primitives: p };
    Ok(EraserPlan { seq, a_catch, erase })
}

fn element(rho: &DensityMatrix, labels: [&str; 2], row: [usize; 2], col: [usize; 2]) -> Result<num_complex::Complex64> {
    let red = partial_trace(rho, &labels)?;
    let d1 = red.space().factor_dim(labels[1])?;
    Ok(red.matrix()[(row[0] * d1 + row[1], col[0] * d1 + col[1])])
}

/// Reference phases fixed once per configuration from noiseless runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Added to the scanned φ so that φ = 0 recombines constructively.
    pub phase_offset: f64,
    /// Drive phase of the erasing π/2 pulse.
    pub erase_phase: f64,
}

/// Calibrates the interferometer phase origin and the erasing pulse phase.
///
/// The phase origin cancels the free evolution Q1's excited branch picks up
/// while parked at the herald frequency: the coherence between |e,0⟩ and
/// |g,1_A⟩ is brought back to its value right after the release. The erase
/// phase aligns the two Q1 = e branches so they add on Q2 = e.
pub fn calibrate(cfg: &ExperimentConfig) -> Result<Calibration> {
    cfg.validate()?;
    let quiet = ExperimentConfig { noise: NoiseConfig::NONE, ..cfg.clone() };

    let plan = eraser_plan(&quiet, 0.0, Branch::Unheralded, None)?;
    let mut ex = Executor::new(plan.seq, quiet.options(), None)?;
    ex.run_to(1)?;
    let reference = element(ex.state().rho(), ["q1", "a"], [1, 0], [0, 1])?;
    ex.run_to(plan.a_catch)?;
    let before = element(ex.state().rho(), ["q1", "a"], [1, 0], [0, 1])?;
    // The recombination on a half catch is destructive for a returning
    // coherence in phase with the emitted one, hence the extra π.
    let phase_offset = wrap(before.arg() - reference.arg() + PI);

    let erase_phase = match cfg.erase_phase {
        ErasePhase::Fixed(p) => p,
        ErasePhase::Calibrated => {
            let plan = eraser_plan(&quiet, phase_offset, Branch::Heralded, None)?;
            let mut ex = Executor::new(plan.seq, quiet.options(), None)?;
            ex.run_to(plan.erase)?;
            let chi = element(ex.state().rho(), ["q1", "q2"], [1, 0], [1, 1])?.arg();
            let q2 = ex.state().qudit("q2")?;
            wrap(chi - FRAC_PI_2 - q2.transition_frequency(Transition::Ge) * ex.state().clock())
        }
    };
    Ok(Calibration { phase_offset, erase_phase })
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

fn joint_of(rho: &DensityMatrix) -> Result<JointDistribution> {
    let red = partial_trace(rho, &["q1", "q2"])?;
    let d2 = red.space().factor_dim("q2")?;
    let d1 = red.space().factor_dim("q1")?;
    let mut p = [[0.0; 3]; 3];
    for x in 0..d1.min(3) {
        for y in 0..d2.min(3) {
            p[x][y] = red.matrix()[(x * d2 + y, x * d2 + y)].re.max(0.0);
        }
    }
    let total: f64 = p.iter().flatten().sum();
    for v in p.iter_mut().flatten() {
        *v /= total;
    }
    JointDistribution::new(p)
}

/// Outcome of a single-phonon state transfer from Q1 to Q2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    pub transition: Transition,
    /// P(Q2 = e) at the end of the capture over the initial Q1 population.
    pub efficiency: f64,
    /// P(Q1 = g) at the end of the capture.
    pub p1g: f64,
    pub final_time: f64,
    pub series: TimeSeries,
}

/// Default sampling interval for transfer time series.
pub const TRANSFER_SAMPLE: f64 = 5.0 * NS;

/// Sends one phonon from Q1 to Q2 on the given transition.
///
/// On `Ge` Q1 starts in e and emits phonon A; on `Ef` Q1 starts in f, sits at
/// the herald detuning and emits phonon B while its g-e transition leaks into
/// the coupler.
pub fn transfer_experiment(transition: Transition, cfg: &ExperimentConfig, sample: Option<f64>) -> Result<TransferResult> {
    cfg.validate()?;
    let d = &cfg.device;
    let mut q1 = cfg.qudit(&d.q1);
    let mut q2 = cfg.qudit(&d.q2);
    let (level, width, eta, parasitic, mode) = match transition {
        Transition::Ge => {
            (1, cfg.timeline.a_half_width, d.eta_a, cfg.parasitic(Transition::Ef, d.emission_ratio), "a")
        }
        Transition::Ef => {
            q1.detuning = cfg.herald_detuning();
            q2.detuning = d.delta_b;
            (2, cfg.timeline.herald_half_width, d.eta_b, cfg.parasitic(Transition::Ge, d.herald_ratio), "b")
        }
    };
    let center = width / d.kappa_c;
    let emit = Interaction { qudit: "q1".into(), transition, q: 1.0, mode: mode.into(), center, half_width: width, parasitic };
    let catch = Interaction {
        qudit: "q2".into(),
        transition: Transition::Ge,
        center: center + d.tau,
        parasitic: cfg.parasitic(Transition::Ef, d.emission_ratio),
        ..emit.clone()
    };
    let seq = PulseSequence {
        kappa_c: d.kappa_c,
        truncation: d.truncation,
        initial: vec![(q1, level), (q2, 0)],
        primitives: vec![
            Primitive::Release { interaction: emit, loss_rate: cfg.loss_rate(eta)? },
            Primitive::Catch { interaction: catch },
        ],
    };
    let mut ex = Executor::new(seq, cfg.options(), sample)?;
    ex.run()?;
    let (state, series) = ex.into_parts();
    let p1 = state.populations("q1")?;
    let p2 = state.populations("q2")?;
    Ok(TransferResult { transition, efficiency: p2[1], p1g: p1[0], final_time: state.clock(), series })
}

/// Runs the interferometer at phase φ and returns the true joint populations.
///
/// Without the herald, Q1 stays a two-path interferometer. With it, the π
/// pulse on e-f moves Q1's remaining excitation into phonon B, which marks
/// the path; `erase` then rotates Q2 by π/2 before it is read.
pub fn interferometer(phi: f64, herald: bool, erase: bool, cfg: &ExperimentConfig) -> Result<JointDistribution> {
    if erase && !herald {
        return Err(Error::InvalidSequence("erasing requires the herald".into()));
    }
    let cal = calibrate(cfg)?;
    interferometer_with(phi, herald, erase, cfg, &cal)
}

/// As [`interferometer`], reusing an existing calibration.
pub fn interferometer_with(
    phi: f64,
    herald: bool,
    erase: bool,
    cfg: &ExperimentConfig,
    cal: &Calibration,
) -> Result<JointDistribution> {
    if erase && !herald {
        return Err(Error::InvalidSequence("erasing requires the herald".into()));
    }
    run_branch(phi, herald, erase, cfg, cal).map(|(joint, _)| joint)
}

fn trace_drift(rho: &DensityMatrix) -> f64 {
    (rho.trace().re - 1.0).abs()
}

fn run_branch(phi: f64, herald: bool, erase: bool, cfg: &ExperimentConfig, cal: &Calibration) -> Result<(JointDistribution, f64)> {
    cfg.validate()?;
    let branch = if herald { Branch::Heralded } else { Branch::Unheralded };
    let plan = eraser_plan(cfg, phi + cal.phase_offset, branch, erase.then_some(cal.erase_phase))?;
    let mut ex = Executor::new(plan.seq, cfg.options(), None)?;
    ex.run()?;
    Ok((joint_of(ex.state().rho())?, trace_drift(ex.state().rho())))
}

/// One φ point of the eraser sweep, ideal-readout populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EraserPoint {
    pub phi: f64,
    pub unheralded: JointDistribution,
    pub heralded: JointDistribution,
    pub erased: JointDistribution,
    /// Largest |tr ρ − 1| at the end of the three runs.
    pub trace_drift: f64,
}

impl EraserPoint {
    pub fn with_readout(&self, rm: &ReadoutModel) -> Result<EraserPoint> {
        Ok(EraserPoint {
            phi: self.phi,
            unheralded: apply_readout(&self.unheralded, rm)?,
            heralded: apply_readout(&self.heralded, rm)?,
            erased: apply_readout(&self.erased, rm)?,
            trace_drift: self.trace_drift,
        })
    }

    /// P(Q1 = e) without herald.
    pub fn p_e1_unheralded(&self) -> f64 {
        self.unheralded.q1()[1]
    }

    pub fn p_e1_heralded(&self) -> f64 {
        self.heralded.q1()[1]
    }

    pub fn p_e1_given_e2(&self) -> Result<f64> {
        conditional_probability(&self.erased)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EraserSummary {
    pub unheralded: FringeStats,
    pub heralded: FringeStats,
    /// Fit of P(Q1 = e, Q2 = e) after erasure.
    pub joint_ee: FringeStats,
    /// Fit of P(Q1 = g, Q2 = e) after erasure.
    pub joint_ge: FringeStats,
    pub conditional: FringeStats,
    /// Fractional loss of conditional peak-to-peak relative to the unheralded fringe.
    pub conditional_reduction: f64,
}

impl EraserSummary {
    fn from_points(points: &[EraserPoint]) -> Result<Self> {
        let phis: Vec<f64> = points.iter().map(|p| p.phi).collect();
        let col = |f: &dyn Fn(&EraserPoint) -> f64| points.iter().map(f).collect::<Vec<_>>();
        let cond = points.iter().map(|p| p.p_e1_given_e2()).collect::<Result<Vec<_>>>()?;
        let conditional = fringe_stats(&phis, &cond)?;
        let unheralded = fringe_stats(&phis, &col(&|p| p.p_e1_unheralded()))?;
        if unheralded.peak_to_peak <= 0.0 {
            return Err(Error::DegenerateFit("unheralded fringe is flat".into()));
        }
        Ok(Self {
            conditional_reduction: 1.0 - conditional.peak_to_peak / unheralded.peak_to_peak,
            unheralded,
            heralded: fringe_stats(&phis, &col(&|p| p.p_e1_heralded()))?,
            joint_ee: fringe_stats(&phis, &col(&|p| p.erased.p(1, 1)))?,
            joint_ge: fringe_stats(&phis, &col(&|p| p.erased.p(0, 1)))?,
            conditional,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EraserSweep {
    pub calibration: Calibration,
    /// Populations before readout error.
    pub points: Vec<EraserPoint>,
    /// Populations as the detectors would report them.
    pub measured: Vec<EraserPoint>,
    pub summary: EraserSummary,
    pub measured_summary: EraserSummary,
}

pub const MIN_SWEEP_POINTS: usize = 8;

/// Scans φ, running the unheralded, heralded and erased variants at each point.
pub fn eraser_sweep(phis: &[f64], cfg: &ExperimentConfig) -> Result<EraserSweep> {
    check_sweep_len(phis.len())?;
    let cal = calibrate(cfg)?;
    let points = phis
        .par_iter()
        .map(|&phi| eraser_point(phi, cfg, &cal))
        .collect::<Result<Vec<_>>>()?;
    EraserSweep::assemble(cal, points, &cfg.effective_readout())
}

fn check_sweep_len(n: usize) -> Result<()> {
    if n < MIN_SWEEP_POINTS {
        return Err(Error::InvalidParameter {
            name: "points",
            reason: format!("need at least {MIN_SWEEP_POINTS} phases, got {n}"),
        });
    }
    Ok(())
}

impl EraserSweep {
    /// Builds the sweep from points computed elsewhere, in φ order.
    pub fn assemble(calibration: Calibration, points: Vec<EraserPoint>, readout: &ReadoutModel) -> Result<Self> {
        check_sweep_len(points.len())?;
        let measured = points.iter().map(|p| p.with_readout(readout)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            calibration,
            summary: EraserSummary::from_points(&points)?,
            measured_summary: EraserSummary::from_points(&measured)?,
            points,
            measured,
        })
    }
}

/// Unheralded, heralded and erased runs at one φ; the last two share their
/// history up to the erase pulse.
pub fn eraser_point(phi: f64, cfg: &ExperimentConfig, cal: &Calibration) -> Result<EraserPoint> {
    let (unheralded, drift) = run_branch(phi, false, false, cfg, cal)?;
    let plan = eraser_plan(cfg, phi + cal.phase_offset, Branch::Heralded, Some(cal.erase_phase))?;
    let mut erased = Executor::new(plan.seq, cfg.options(), None)?;
    erased.run_to(plan.erase)?;
    let mut kept = erased.clone();
    kept.skip();
    kept.run()?;
    erased.run()?;
    Ok(EraserPoint {
        phi,
        unheralded,
        heralded: joint_of(kept.state().rho())?,
        erased: joint_of(erased.state().rho())?,
        trace_drift: drift.max(trace_drift(kept.state().rho())).max(trace_drift(erased.state().rho())),
    })
}
