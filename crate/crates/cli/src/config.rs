//! Sectioned `key = value unit` configuration.

use std::f64::consts::PI;
use std::fmt::Write as _;

use eraser_core::device::{Coherence, Qudit, Transition};
use eraser_core::idtcirc::{AdmittanceModel, CircuitParams, IdtParams};
use eraser_core::protocols::{
    ConfusionMatrix, DeviceConfig, ErasePhase, ExperimentConfig, NoiseConfig, ReadoutModel, Timeline,
};
use eraser_core::quantum::DEFAULT_DT;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Transfer,
    Interferometer,
    Eraser,
    RateSweep,
    Circuit,
}

impl Kind {
    pub const ALL: [Kind; 5] = [Kind::Transfer, Kind::Interferometer, Kind::Eraser, Kind::RateSweep, Kind::Circuit];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Transfer => "transfer",
            Kind::Interferometer => "interferometer",
            Kind::Eraser => "eraser",
            Kind::RateSweep => "rate-sweep",
            Kind::Circuit => "circuit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadoutKind {
    /// g/e discrimination with a single visibility; f reads as e.
    TwoState,
    /// Three-state assignment from per-state fidelities.
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitConfig {
    /// Hz.
    pub anharmonicity: f64,
    pub t1_ge: f64,
    pub t1_ef: f64,
    pub t2r_ge: f64,
    pub t2r_ef: f64,
    pub readout: ReadoutKind,
    pub visibility: f64,
    pub fidelity: [f64; 3],
}

impl QubitConfig {
    fn q1() -> Self {
        let c = Coherence::q1();
        Self {
            anharmonicity: -179e6,
            t1_ge: c.t1_ge,
            t1_ef: c.t1_ef,
            t2r_ge: c.t2r_ge,
            t2r_ef: c.t2r_ef,
            readout: ReadoutKind::TwoState,
            visibility: 0.81,
            fidelity: [0.99, 0.97, 0.93],
        }
    }

    fn q2() -> Self {
        let c = Coherence::q2();
        Self {
            anharmonicity: -188e6,
            t1_ge: c.t1_ge,
            t1_ef: c.t1_ef,
            t2r_ge: c.t2r_ge,
            t2r_ef: c.t2r_ef,
            readout: ReadoutKind::Table,
            visibility: 0.81,
            fidelity: [0.99, 0.95, 0.92],
        }
    }

    fn qudit(&self, base: Qudit) -> Qudit {
        Qudit {
            anharmonicity: 2.0 * PI * self.anharmonicity,
            coherence: Coherence { t1_ge: self.t1_ge, t1_ef: self.t1_ef, t2r_ge: self.t2r_ge, t2r_ef: self.t2r_ef },
            ..base
        }
    }

    fn confusion(&self) -> eraser_core::Result<ConfusionMatrix> {
        match self.readout {
            ReadoutKind::TwoState => ConfusionMatrix::two_state(self.visibility),
            ReadoutKind::Table => ConfusionMatrix::from_fidelities(self.fidelity[0], self.fidelity[1], self.fidelity[2]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub kind: Kind,
    pub transition: Transition,
    pub herald: bool,
    pub erase: bool,
    pub points: usize,
    /// None: calibrated.
    pub erase_phase: Option<f64>,
    pub noise: NoiseConfig,
    pub dt: f64,
    pub truncation: usize,
    pub sample: f64,
    pub timeline: Timeline,
    /// 1/κ_c.
    pub wavepacket_time: f64,
    pub round_trip: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    /// Phonon B above phonon A, Hz.
    pub herald_offset: f64,
    pub herald_ratio: f64,
    pub emission_ratio: f64,
    pub q1: QubitConfig,
    pub q2: QubitConfig,
    pub circuit: CircuitParams,
    pub idt: IdtParams,
    pub model: AdmittanceModel,
    pub f_start: f64,
    pub f_stop: f64,
    pub f_points: usize,
}

impl Default for Config {
    fn default() -> Self {
        let d = DeviceConfig::default();
        Self {
            kind: Kind::Transfer,
            transition: Transition::Ge,
            herald: false,
            erase: false,
            points: 24,
            erase_phase: None,
            noise: NoiseConfig::FULL,
            dt: DEFAULT_DT,
            truncation: d.truncation,
            sample: 5e-9,
            timeline: Timeline::experiment(),
            wavepacket_time: 15e-9,
            round_trip: d.tau,
            eta_a: d.eta_a,
            eta_b: d.eta_b,
            herald_offset: 20e6,
            herald_ratio: d.herald_ratio,
            emission_ratio: d.emission_ratio,
            q1: QubitConfig::q1(),
            q2: QubitConfig::q2(),
            circuit: CircuitParams::default(),
            idt: IdtParams::default(),
            model: AdmittanceModel::Com,
            f_start: 3.6e9,
            f_stop: 4.4e9,
            f_points: 161,
        }
    }
}

impl Config {
    /// Noise off and stage windows widened to the ideal timeline.
    pub fn make_noiseless(&mut self) {
        self.noise = NoiseConfig::NONE;
        self.timeline = Timeline::ideal();
    }

    /// No acoustic loss on the phonons this experiment uses.
    pub fn lossless(&self) -> bool {
        let (a, b) = match (self.kind, self.transition) {
            (Kind::Transfer, Transition::Ge) => (true, false),
            (Kind::Transfer, Transition::Ef) => (false, true),
            (Kind::Interferometer, _) => (true, self.herald),
            (Kind::Eraser, _) => (true, true),
            _ => (false, false),
        };
        !self.noise.loss || ((!a || self.eta_a >= 1.0) && (!b || self.eta_b >= 1.0))
    }

    pub fn experiment(&self) -> eraser_core::Result<ExperimentConfig> {
        let device = DeviceConfig {
            q1: self.q1.qudit(Qudit::q1()),
            q2: self.q2.qudit(Qudit::q2()),
            kappa_c: 1.0 / self.wavepacket_time,
            tau: self.round_trip,
            eta_a: self.eta_a,
            eta_b: self.eta_b,
            delta_b: 2.0 * PI * self.herald_offset,
            herald_ratio: self.herald_ratio,
            emission_ratio: self.emission_ratio,
            truncation: self.truncation,
        };
        let cfg = ExperimentConfig {
            device,
            noise: self.noise,
            timeline: self.timeline,
            readout: ReadoutModel { q1: self.q1.confusion()?, q2: self.q2.confusion()? },
            dt: self.dt,
            erase_phase: self.erase_phase.map_or(ErasePhase::Calibrated, ErasePhase::Fixed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Grid of angular frequencies for the circuit and rate sweeps.
    pub fn omega_grid(&self) -> Vec<f64> {
        let n = self.f_points.max(2) - 1;
        (0..=n).map(|k| 2.0 * PI * (self.f_start + (self.f_stop - self.f_start) * k as f64 / n as f64)).collect()
    }

    /// Re-parseable text holding every field in base units.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for f in FIELDS {
            if f.section != section {
                section = f.section;
                let _ = writeln!(out, "{}[{section}]", if out.is_empty() { "" } else { "\n" });
            }
            let _ = writeln!(out, "{} = {}", f.key, f.kind.render(&(f.get)(self)));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Dim {
    None,
    Time,
    Frequency,
    Inductance,
    Capacitance,
    Length,
    Velocity,
    Conductance,
    Angle,
}

impl Dim {
    fn base(self) -> &'static str {
        match self {
            Dim::None => "",
            Dim::Time => "s",
            Dim::Frequency => "Hz",
            Dim::Inductance => "H",
            Dim::Capacitance => "F",
            Dim::Length => "m",
            Dim::Velocity => "m/s",
            Dim::Conductance => "S",
            Dim::Angle => "rad",
        }
    }

    fn scale(self, unit: &str) -> Option<f64> {
        let s = match (self, unit) {
            (Dim::Time, "s") => 1.0,
            (Dim::Time, "ms") => 1e-3,
            (Dim::Time, "us" | "µs") => 1e-6,
            (Dim::Time, "ns") => 1e-9,
            (Dim::Time, "ps") => 1e-12,
            (Dim::Frequency, "Hz") => 1.0,
            (Dim::Frequency, "kHz") => 1e3,
            (Dim::Frequency, "MHz") => 1e6,
            (Dim::Frequency, "GHz") => 1e9,
            (Dim::Inductance, "H") => 1.0,
            (Dim::Inductance, "uH" | "µH") => 1e-6,
            (Dim::Inductance, "nH") => 1e-9,
            (Dim::Inductance, "pH") => 1e-12,
            (Dim::Capacitance, "F") => 1.0,
            (Dim::Capacitance, "nF") => 1e-9,
            (Dim::Capacitance, "pF") => 1e-12,
            (Dim::Capacitance, "fF") => 1e-15,
            (Dim::Length, "m") => 1.0,
            (Dim::Length, "mm") => 1e-3,
            (Dim::Length, "um" | "µm") => 1e-6,
            (Dim::Length, "nm") => 1e-9,
            (Dim::Velocity, "m/s") => 1.0,
            (Dim::Velocity, "km/s") => 1e3,
            (Dim::Conductance, "S") => 1.0,
            (Dim::Conductance, "mS") => 1e-3,
            (Dim::Angle, "rad") => 1.0,
            (Dim::Angle, "deg") => PI / 180.0,
            _ => return None,
        };
        Some(s)
    }
}

/// Splits "18 us", "18us" or "-179 MHz" into number and unit.
fn split_quantity(text: &str) -> Option<(f64, &str)> {
    let t = text.trim();
    let end = t
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit() || c == '.' || c == '+' || c == '-' || ((c == 'e' || c == 'E') && i > 0 && t[i + 1..].starts_with(|d: char| d.is_ascii_digit() || d == '-' || d == '+')))
        })
        .map_or(t.len(), |(i, _)| i);
    let value = t[..end].parse().ok()?;
    Some((value, t[end..].trim()))
}

/// Parses a time such as `0.025 ns`; used for command-line overrides.
pub fn parse_time(text: &str) -> Result<f64, String> {
    let v = parse_num(text, Dim::Time)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got `{text}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Val {
    Num(f64),
    Int(usize),
    Bool(bool),
    Word(String),
    /// Number or the word `calibrated`.
    Auto(Option<f64>),
}

impl Val {
    fn num(&self) -> f64 {
        match self {
            Val::Num(v) => *v,
            _ => unreachable!("field kind checked by the parser"),
        }
    }

    fn int(&self) -> usize {
        match self {
            Val::Int(v) => *v,
            _ => unreachable!("field kind checked by the parser"),
        }
    }

    fn flag(&self) -> bool {
        match self {
            Val::Bool(v) => *v,
            _ => unreachable!("field kind checked by the parser"),
        }
    }

    fn word(&self) -> &str {
        match self {
            Val::Word(v) => v,
            _ => unreachable!("field kind checked by the parser"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum FieldKind {
    Num { dim: Dim, lo: f64, hi: f64 },
    Int { lo: usize, hi: usize },
    Bool,
    Word(&'static [&'static str]),
    Auto(Dim),
}

impl FieldKind {
    fn render(&self, v: &Val) -> String {
        let num = |x: f64, dim: Dim| if dim == Dim::None { format!("{x:?}") } else { format!("{x:?} {}", dim.base()) };
        match (self, v) {
            (FieldKind::Num { dim, .. }, Val::Num(x)) => num(*x, *dim),
            (FieldKind::Auto(dim), Val::Auto(Some(x))) => num(*x, *dim),
            (FieldKind::Auto(_), Val::Auto(None)) => "calibrated".into(),
            (_, Val::Int(n)) => n.to_string(),
            (_, Val::Bool(b)) => b.to_string(),
            (_, Val::Word(w)) => w.clone(),
            _ => unreachable!("field kind and value agree"),
        }
    }

    fn parse(&self, text: &str) -> Result<Val, String> {
        let text = text.trim();
        match *self {
            FieldKind::Num { dim, lo, hi } => {
                let v = parse_num(text, dim)?;
                if !(v >= lo && v <= hi) {
                    return Err(format!("value {v} out of range [{lo}, {hi}]"));
                }
                Ok(Val::Num(v))
            }
            FieldKind::Int { lo, hi } => {
                let v: usize = text.parse().map_err(|_| format!("expected an integer, got `{text}`"))?;
                if !(lo..=hi).contains(&v) {
                    return Err(format!("value {v} out of range [{lo}, {hi}]"));
                }
                Ok(Val::Int(v))
            }
            FieldKind::Bool => match text {
                "true" => Ok(Val::Bool(true)),
                "false" => Ok(Val::Bool(false)),
                _ => Err(format!("expected true or false, got `{text}`")),
            },
            FieldKind::Word(options) => options
                .iter()
                .find(|o| **o == text)
                .map(|o| Val::Word(o.to_string()))
                .ok_or_else(|| format!("expected one of {}, got `{text}`", options.join(", "))),
            FieldKind::Auto(dim) => {
                if text == "calibrated" {
                    Ok(Val::Auto(None))
                } else {
                    parse_num(text, dim).map(|v| Val::Auto(Some(v)))
                }
            }
        }
    }
}

fn parse_num(text: &str, dim: Dim) -> Result<f64, String> {
    let (v, unit) = split_quantity(text).ok_or_else(|| format!("cannot read a number from `{text}`"))?;
    if !v.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    match (dim, unit) {
        (Dim::None, "") => Ok(v),
        (Dim::None, u) => Err(format!("is dimensionless but has unit `{u}`")),
        (d, "") => Err(format!("missing unit (expected a {} such as `{}`)", dim_name(d), d.base())),
        (d, u) => d.scale(u).map(|s| v * s).ok_or_else(|| format!("unit `{u}` is not a {}", dim_name(d))),
    }
}

fn dim_name(d: Dim) -> &'static str {
    match d {
        Dim::None => "number",
        Dim::Time => "time",
        Dim::Frequency => "frequency",
        Dim::Inductance => "inductance",
        Dim::Capacitance => "capacitance",
        Dim::Length => "length",
        Dim::Velocity => "velocity",
        Dim::Conductance => "conductance",
        Dim::Angle => "angle",
    }
}

struct Field {
    section: &'static str,
    key: &'static str,
    kind: FieldKind,
    set: fn(&mut Config, &Val),
    get: fn(&Config) -> Val,
}

const POS: f64 = f64::MIN_POSITIVE;
const INF: f64 = f64::INFINITY;

const fn num(dim: Dim, lo: f64, hi: f64) -> FieldKind {
    FieldKind::Num { dim, lo, hi }
}

macro_rules! qubit_fields {
    ($sec:literal, $q:ident) => {
        [
            Field { section: $sec, key: "anharmonicity", kind: num(Dim::Frequency, -1e10, -POS), set: |c, v| c.$q.anharmonicity = v.num(), get: |c| Val::Num(c.$q.anharmonicity) },
            Field { section: $sec, key: "T1", kind: num(Dim::Time, POS, INF), set: |c, v| c.$q.t1_ge = v.num(), get: |c| Val::Num(c.$q.t1_ge) },
            Field { section: $sec, key: "T1_ef", kind: num(Dim::Time, POS, INF), set: |c, v| c.$q.t1_ef = v.num(), get: |c| Val::Num(c.$q.t1_ef) },
            Field { section: $sec, key: "T2R", kind: num(Dim::Time, POS, INF), set: |c, v| c.$q.t2r_ge = v.num(), get: |c| Val::Num(c.$q.t2r_ge) },
            Field { section: $sec, key: "T2R_ef", kind: num(Dim::Time, POS, INF), set: |c, v| c.$q.t2r_ef = v.num(), get: |c| Val::Num(c.$q.t2r_ef) },
            Field {
                section: $sec,
                key: "readout",
                kind: FieldKind::Word(&["two-state", "table"]),
                set: |c, v| c.$q.readout = if v.word() == "table" { ReadoutKind::Table } else { ReadoutKind::TwoState },
                get: |c| Val::Word(if c.$q.readout == ReadoutKind::Table { "table" } else { "two-state" }.into()),
            },
            Field { section: $sec, key: "visibility", kind: num(Dim::None, 0.0, 1.0), set: |c, v| c.$q.visibility = v.num(), get: |c| Val::Num(c.$q.visibility) },
            Field { section: $sec, key: "fidelity_g", kind: num(Dim::None, 0.0, 1.0), set: |c, v| c.$q.fidelity[0] = v.num(), get: |c| Val::Num(c.$q.fidelity[0]) },
            Field { section: $sec, key: "fidelity_e", kind: num(Dim::None, 0.0, 1.0), set: |c, v| c.$q.fidelity[1] = v.num(), get: |c| Val::Num(c.$q.fidelity[1]) },
            Field { section: $sec, key: "fidelity_f", kind: num(Dim::None, 0.0, 1.0), set: |c, v| c.$q.fidelity[2] = v.num(), get: |c| Val::Num(c.$q.fidelity[2]) },
        ]
    };
}

const KINDS: &[&str] = &["transfer", "interferometer", "eraser", "rate-sweep", "circuit"];

const EXPERIMENT: [Field; 6] = [
    Field {
        section: "experiment",
        key: "kind",
        kind: FieldKind::Word(KINDS),
        set: |c, v| c.kind = Kind::ALL[KINDS.iter().position(|k| *k == v.word()).unwrap_or(0)],
        get: |c| Val::Word(c.kind.name().into()),
    },
    Field {
        section: "experiment",
        key: "transition",
        kind: FieldKind::Word(&["ge", "ef"]),
        set: |c, v| c.transition = if v.word() == "ef" { Transition::Ef } else { Transition::Ge },
        get: |c| Val::Word(c.transition.to_string()),
    },
    Field { section: "experiment", key: "herald", kind: FieldKind::Bool, set: |c, v| c.herald = v.flag(), get: |c| Val::Bool(c.herald) },
    Field { section: "experiment", key: "erase", kind: FieldKind::Bool, set: |c, v| c.erase = v.flag(), get: |c| Val::Bool(c.erase) },
    Field { section: "experiment", key: "points", kind: FieldKind::Int { lo: 8, hi: 100_000 }, set: |c, v| c.points = v.int(), get: |c| Val::Int(c.points) },
    Field {
        section: "experiment",
        key: "erase_phase",
        kind: FieldKind::Auto(Dim::Angle),
        set: |c, v| c.erase_phase = if let Val::Auto(p) = v { *p } else { None },
        get: |c| Val::Auto(c.erase_phase),
    },
];

const NOISE: [Field; 4] = [
    Field { section: "noise", key: "decoherence", kind: FieldKind::Bool, set: |c, v| c.noise.decoherence = v.flag(), get: |c| Val::Bool(c.noise.decoherence) },
    Field { section: "noise", key: "loss", kind: FieldKind::Bool, set: |c, v| c.noise.loss = v.flag(), get: |c| Val::Bool(c.noise.loss) },
    Field { section: "noise", key: "parasitic", kind: FieldKind::Bool, set: |c, v| c.noise.parasitic = v.flag(), get: |c| Val::Bool(c.noise.parasitic) },
    Field { section: "noise", key: "readout", kind: FieldKind::Bool, set: |c, v| c.noise.readout = v.flag(), get: |c| Val::Bool(c.noise.readout) },
];

const NUMERICS: [Field; 3] = [
    Field { section: "numerics", key: "dt", kind: num(Dim::Time, POS, 1e-9), set: |c, v| c.dt = v.num(), get: |c| Val::Num(c.dt) },
    Field { section: "numerics", key: "truncation", kind: FieldKind::Int { lo: 2, hi: 4 }, set: |c, v| c.truncation = v.int(), get: |c| Val::Int(c.truncation) },
    Field { section: "numerics", key: "sample", kind: num(Dim::Time, POS, INF), set: |c, v| c.sample = v.num(), get: |c| Val::Num(c.sample) },
];

const TIMELINE: [Field; 3] = [
    Field { section: "timeline", key: "a_half_width", kind: num(Dim::None, POS, 100.0), set: |c, v| c.timeline.a_half_width = v.num(), get: |c| Val::Num(c.timeline.a_half_width) },
    Field { section: "timeline", key: "herald_half_width", kind: num(Dim::None, POS, 100.0), set: |c, v| c.timeline.herald_half_width = v.num(), get: |c| Val::Num(c.timeline.herald_half_width) },
    Field { section: "timeline", key: "q2_readout", kind: num(Dim::Time, 0.0, INF), set: |c, v| c.timeline.q2_readout = v.num(), get: |c| Val::Num(c.timeline.q2_readout) },
];

const CHANNEL: [Field; 7] = [
    Field { section: "channel", key: "wavepacket_time", kind: num(Dim::Time, POS, INF), set: |c, v| c.wavepacket_time = v.num(), get: |c| Val::Num(c.wavepacket_time) },
    Field { section: "channel", key: "round_trip", kind: num(Dim::Time, POS, INF), set: |c, v| c.round_trip = v.num(), get: |c| Val::Num(c.round_trip) },
    Field { section: "channel", key: "eta_a", kind: num(Dim::None, POS, 1.0), set: |c, v| c.eta_a = v.num(), get: |c| Val::Num(c.eta_a) },
    Field { section: "channel", key: "eta_b", kind: num(Dim::None, POS, 1.0), set: |c, v| c.eta_b = v.num(), get: |c| Val::Num(c.eta_b) },
    Field { section: "channel", key: "herald_offset", kind: num(Dim::Frequency, -1e10, 1e10), set: |c, v| c.herald_offset = v.num(), get: |c| Val::Num(c.herald_offset) },
    Field { section: "channel", key: "herald_ratio", kind: num(Dim::None, POS, INF), set: |c, v| c.herald_ratio = v.num(), get: |c| Val::Num(c.herald_ratio) },
    Field { section: "channel", key: "emission_ratio", kind: num(Dim::None, POS, INF), set: |c, v| c.emission_ratio = v.num(), get: |c| Val::Num(c.emission_ratio) },
];

const Q1: [Field; 10] = qubit_fields!("q1", q1);
const Q2: [Field; 10] = qubit_fields!("q2", q2);

const CIRCUIT: [Field; 6] = [
    Field { section: "circuit", key: "c_q", kind: num(Dim::Capacitance, POS, INF), set: |c, v| c.circuit.c_q = v.num(), get: |c| Val::Num(c.circuit.c_q) },
    Field { section: "circuit", key: "l_q", kind: num(Dim::Inductance, POS, INF), set: |c, v| c.circuit.l_q = v.num(), get: |c| Val::Num(c.circuit.l_q) },
    Field { section: "circuit", key: "l_coupler", kind: num(Dim::Inductance, POS, INF), set: |c, v| c.circuit.l_coupler = v.num(), get: |c| Val::Num(c.circuit.l_coupler) },
    Field { section: "circuit", key: "l_idt_ground", kind: num(Dim::Inductance, POS, INF), set: |c, v| c.circuit.l_idt_ground = v.num(), get: |c| Val::Num(c.circuit.l_idt_ground) },
    Field { section: "circuit", key: "l_coupler_ground", kind: num(Dim::Inductance, POS, INF), set: |c, v| c.circuit.l_coupler_ground = v.num(), get: |c| Val::Num(c.circuit.l_coupler_ground) },
    Field { section: "circuit", key: "mutual", kind: num(Dim::Inductance, 0.0, INF), set: |c, v| c.circuit.mutual = v.num(), get: |c| Val::Num(c.circuit.mutual) },
];

const IDT: [Field; 7] = [
    Field { section: "idt", key: "pairs", kind: FieldKind::Int { lo: 1, hi: 10_000 }, set: |c, v| c.idt.n = v.int(), get: |c| Val::Int(c.idt.n) },
    Field { section: "idt", key: "pitch", kind: num(Dim::Length, POS, INF), set: |c, v| c.idt.pitch = v.num(), get: |c| Val::Num(c.idt.pitch) },
    Field { section: "idt", key: "velocity", kind: num(Dim::Velocity, POS, INF), set: |c, v| c.idt.velocity = v.num(), get: |c| Val::Num(c.idt.velocity) },
    Field { section: "idt", key: "c0", kind: num(Dim::Capacitance, POS, INF), set: |c, v| c.idt.c0 = v.num(), get: |c| Val::Num(c.idt.c0) },
    Field { section: "idt", key: "ga0", kind: num(Dim::Conductance, POS, INF), set: |c, v| c.idt.ga0 = v.num(), get: |c| Val::Num(c.idt.ga0) },
    Field { section: "idt", key: "reflectivity", kind: num(Dim::None, -0.1, 0.1), set: |c, v| c.idt.reflectivity = v.num(), get: |c| Val::Num(c.idt.reflectivity) },
    Field {
        section: "idt",
        key: "model",
        kind: FieldKind::Word(&["com", "uniform"]),
        set: |c, v| c.model = if v.word() == "uniform" { AdmittanceModel::Uniform } else { AdmittanceModel::Com },
        get: |c| Val::Word(if c.model == AdmittanceModel::Uniform { "uniform" } else { "com" }.into()),
    },
];

const SWEEP: [Field; 3] = [
    Field { section: "sweep", key: "f_start", kind: num(Dim::Frequency, POS, INF), set: |c, v| c.f_start = v.num(), get: |c| Val::Num(c.f_start) },
    Field { section: "sweep", key: "f_stop", kind: num(Dim::Frequency, POS, INF), set: |c, v| c.f_stop = v.num(), get: |c| Val::Num(c.f_stop) },
    Field { section: "sweep", key: "f_points", kind: FieldKind::Int { lo: 2, hi: 1_000_000 }, set: |c, v| c.f_points = v.int(), get: |c| Val::Int(c.f_points) },
];

static FIELDS: &[Field] = &concat_fields();

const N_FIELDS: usize = 6 + 4 + 3 + 3 + 7 + 10 + 10 + 6 + 7 + 3;

const fn concat_fields() -> [Field; N_FIELDS] {
    const GROUPS: [&[Field]; 10] = [&EXPERIMENT, &NOISE, &NUMERICS, &TIMELINE, &CHANNEL, &Q1, &Q2, &CIRCUIT, &IDT, &SWEEP];
    let mut out = [const { Field { section: "", key: "", kind: FieldKind::Bool, set: |_, _| {}, get: |_| Val::Bool(false) } }; N_FIELDS];
    let mut n = 0;
    let mut g = 0;
    while g < GROUPS.len() {
        let mut i = 0;
        while i < GROUPS[g].len() {
            let f = &GROUPS[g][i];
            out[n] = Field { section: f.section, key: f.key, kind: f.kind, set: f.set, get: f.get };
            n += 1;
            i += 1;
        }
        g += 1;
    }
    out
}

/// Parses configuration text on top of the defaults.
pub fn parse_config(text: &str) -> Result<Config, CliError> {
    let mut cfg = Config::default();
    let mut section: Option<String> = None;
    let mut seen: Vec<(&str, &str)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            let name = name.trim();
            if !FIELDS.iter().any(|f| f.section == name) {
                return Err(CliError::config(line, name, "unknown section"));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| CliError::config(line, body, "expected `key = value`"))?;
        let key = key.trim();
        let sec = section.as_deref().ok_or_else(|| CliError::config(line, key, "key outside any [section]"))?;
        let field = FIELDS
            .iter()
            .find(|f| f.section == sec && f.key == key)
            .ok_or_else(|| CliError::config(line, &format!("{sec}.{key}"), "unknown key"))?;
        if seen.contains(&(field.section, field.key)) {
            return Err(CliError::config(line, &format!("{sec}.{key}"), "set twice"));
        }
        seen.push((field.section, field.key));
        let v = field.kind.parse(value).map_err(|m| CliError::config(line, &format!("{sec}.{key}"), &m))?;
        (field.set)(&mut cfg, &v);
    }
    if cfg.f_stop <= cfg.f_start {
        return Err(CliError::config(0, "sweep.f_stop", "must exceed f_start"));
    }
    if cfg.erase && !cfg.herald {
        return Err(CliError::config(0, "experiment.erase", "erasing requires herald = true"));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, Config::default());
        assert!((c.q1.t1_ge - 18e-6).abs() < 1e-18);
        assert!((c.q2.t2r_ge - 0.8e-6).abs() < 1e-18);
        assert!((c.circuit.l_coupler - 1.19e-9).abs() < 1e-21);
        assert_eq!(c.idt.n, 20);
        assert!(c.to_text().contains("[q1]\nanharmonicity = -179000000.0 Hz"));
    }

    #[test]
    fn unit_eta_sets_lossless() {
        let c = parse_config("[channel]\neta_a = 1.0\n").unwrap();
        assert!(c.lossless());
        assert!(!Config::default().lossless());
    }

    #[test]
    fn missing_unit_names_the_field() {
        let err = parse_config("[q1]\nT1 = 18\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("q1.T1") && msg.contains("line 2") && msg.contains("unit"), "{msg}");
    }

    #[test]
    fn rejects_bad_input() {
        for (text, what) in [
            ("[q1]\nT3 = 1 us", "unknown key"),
            ("[nope]", "unknown section"),
            ("kind = eraser", "outside"),
            ("[channel]\neta_a = 1.5", "out of range"),
            ("[channel]\neta_a = 0.5 ns", "dimensionless"),
            ("[q1]\nT1 = 18 GHz", "not a time"),
            ("[experiment]\nkind = bell", "expected one of"),
            ("[experiment]\npoints = 4", "out of range"),
            ("[numerics]\ndt = 0.1 ns\ndt = 0.2 ns", "set twice"),
            ("[experiment]\nerase = true", "herald"),
        ] {
            let msg = parse_config(text).unwrap_err().to_string();
            assert!(msg.contains(what), "{text}: {msg}");
        }
    }

    #[test]
    fn units_convert() {
        let c = parse_config("[q1]\nT1 = 18us\nT2R = 1200 ns\nanharmonicity = -0.179 GHz\n[idt]\nvelocity = 3.911 km/s\npitch = 0.985 µm\n[experiment]\nerase_phase = 90 deg").unwrap();
        assert!((c.q1.t1_ge - 18e-6).abs() < 1e-18);
        assert!((c.q1.t2r_ge - 1.2e-6).abs() < 1e-18);
        assert!((c.q1.anharmonicity + 179e6).abs() < 1e-6);
        assert!((c.idt.velocity - 3911.0).abs() < 1e-9);
        assert!((c.erase_phase.unwrap() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn echo_reparses_exactly() {
        let mut c = parse_config("[experiment]\nkind = eraser\nerase_phase = 0.3 rad\n[numerics]\ndt = 0.025 ns\n[circuit]\nmutual = 0.23 pH").unwrap();
        c.make_noiseless();
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
        assert_eq!(parse_config(&Config::default().to_text()).unwrap(), Config::default());
    }

    #[test]
    fn defaults_build_the_paper_experiment() {
        let e = Config::default().experiment().unwrap();
        let p = ExperimentConfig::paper();
        for (a, b) in [(&e.device.q1, &p.device.q1), (&e.device.q2, &p.device.q2)] {
            assert_eq!((&a.label, a.levels, a.coherence), (&b.label, b.levels, b.coherence));
            assert!((a.anharmonicity - b.anharmonicity).abs() < 1e-9 * b.anharmonicity.abs());
        }
        assert!((e.device.kappa_c - p.device.kappa_c).abs() < 1e-6 * p.device.kappa_c);
        assert!((e.device.delta_b - p.device.delta_b).abs() < 1e-6 * p.device.delta_b);
        assert_eq!(e.readout, p.readout);
        assert_eq!(e.timeline, p.timeline);
    }
}
