//! Runs one configured experiment into a [`ResultBundle`].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use eraser_core::idtcirc::{
    conductance, effective_rlc, idt_admittance, network_impedance, rate_sweep, reactance_zeros, Loss,
};
use eraser_core::protocols::{
    apply_readout, calibrate, conditional_probability, eraser_point, fringe_stats, interferometer_with, phase_grid,
    transfer_experiment, EraserPoint, EraserSummary, EraserSweep, ExperimentConfig, FringeStats, JointDistribution,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, Kind};
use crate::error::CliError;

pub const SCHEMA: &str = "phonon-eraser/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row.into_iter().map(round9).collect());
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub schema: String,
    pub kind: Kind,
    /// No acoustic loss on the phonons this run uses.
    pub lossless: bool,
    /// The effective configuration; parses back to `config`.
    pub config_text: String,
    pub config: Config,
    pub table: Table,
    pub summary: BTreeMap<String, f64>,
}

/// Nine significant digits, so printed and parsed values agree exactly.
pub fn round9(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.8e}").parse().unwrap_or(x)
    } else {
        x
    }
}

#[derive(Default)]
struct Summary(BTreeMap<String, f64>);

impl Summary {
    fn put(&mut self, key: impl Into<String>, v: f64) {
        self.0.insert(key.into(), round9(v));
    }

    fn fringe(&mut self, prefix: &str, s: &FringeStats) {
        self.put(format!("{prefix}_mean"), s.mean);
        self.put(format!("{prefix}_p2p"), s.peak_to_peak);
        self.put(format!("{prefix}_amplitude"), s.amplitude());
        self.put(format!("{prefix}_visibility"), s.visibility);
        self.put(format!("{prefix}_phase"), s.phase_offset);
    }
}

pub fn run(cfg: &Config) -> Result<ResultBundle, CliError> {
    let (table, summary) = match cfg.kind {
        Kind::Transfer => transfer(cfg)?,
        Kind::Interferometer => interferometer(cfg)?,
        Kind::Eraser => eraser(cfg)?,
        Kind::RateSweep => rates(cfg)?,
        Kind::Circuit => circuit(cfg)?,
    };
    Ok(ResultBundle {
        schema: SCHEMA.to_string(),
        kind: cfg.kind,
        lossless: cfg.lossless(),
        config_text: cfg.to_text(),
        config: cfg.clone(),
        table,
        summary: summary.0,
    })
}

fn experiment(cfg: &Config) -> Result<ExperimentConfig, CliError> {
    cfg.experiment().map_err(CliError::simulation("configuration"))
}

fn at_phi(phi: f64) -> String {
    format!("point phi = {phi:.6} rad")
}

fn transfer(cfg: &Config) -> Result<(Table, Summary), CliError> {
    let exp = experiment(cfg)?;
    let r = transfer_experiment(cfg.transition, &exp, Some(cfg.sample))
        .map_err(CliError::simulation(format!("{} transfer", cfg.transition)))?;
    let mut names = vec!["t"];
    names.extend(r.series.columns.iter().map(|(n, _)| n.as_str()));
    let mut table = Table::new(&names);
    for (k, &t) in r.series.times.iter().enumerate() {
        let mut row = vec![t];
        row.extend(r.series.columns.iter().map(|(_, v)| v[k]));
        table.push(row);
    }
    let mut s = Summary::default();
    s.put("efficiency", r.efficiency);
    s.put("p1g", r.p1g);
    s.put("final_time", r.final_time);
    Ok((table, s))
}

fn joint_row(j: &JointDistribution) -> [f64; 4] {
    [j.p(0, 0), j.p(0, 1), j.p(1, 0), j.p(1, 1)]
}

fn interferometer(cfg: &Config) -> Result<(Table, Summary), CliError> {
    let exp = experiment(cfg)?;
    let cal = calibrate(&exp).map_err(CliError::simulation("calibration"))?;
    let phis = phase_grid(cfg.points);
    let truth = phis
        .par_iter()
        .map(|&phi| interferometer_with(phi, cfg.herald, cfg.erase, &exp, &cal).map_err(CliError::simulation(at_phi(phi))))
        .collect::<Result<Vec<_>, _>>()?;
    let rm = exp.effective_readout();
    let mut cols = vec!["phi", "P_gg", "P_ge", "P_eg", "P_ee", "P_e1", "P_e2", "true_P_e1"];
    if cfg.erase {
        cols.extend(["P_e1_given_e2", "true_P_e1_given_e2"]);
    }
    let mut table = Table::new(&cols);
    let (mut e1, mut true_e1, mut cond, mut true_cond) = (vec![], vec![], vec![], vec![]);
    for (&phi, j) in phis.iter().zip(&truth) {
        let m = apply_readout(j, &rm).map_err(CliError::simulation(at_phi(phi)))?;
        let mut row = vec![phi];
        row.extend(joint_row(&m));
        row.extend([m.q1()[1], m.q2()[1], j.q1()[1]]);
        e1.push(m.q1()[1]);
        true_e1.push(j.q1()[1]);
        if cfg.erase {
            let c = conditional_probability(&m).map_err(CliError::simulation(at_phi(phi)))?;
            let tc = conditional_probability(j).map_err(CliError::simulation(at_phi(phi)))?;
            row.extend([c, tc]);
            cond.push(c);
            true_cond.push(tc);
        }
        table.push(row);
    }
    let mut s = Summary::default();
    let fit = |v: &[f64]| fringe_stats(&phis, v).map_err(CliError::simulation("fringe fit"));
    s.fringe("P_e1", &fit(&e1)?);
    s.fringe("true_P_e1", &fit(&true_e1)?);
    if cfg.erase {
        s.fringe("P_e1_given_e2", &fit(&cond)?);
        s.fringe("true_P_e1_given_e2", &fit(&true_cond)?);
    }
    s.put("phase_offset", cal.phase_offset);
    s.put("erase_phase", cal.erase_phase);
    Ok((table, s))
}

const ERASER_COLUMNS: [&str; 7] = ["P_gg", "P_ge", "P_eg", "P_ee", "P_e1_given_e2", "P_e1_unheralded", "P_e1_heralded"];

fn eraser_values(p: &EraserPoint) -> Result<Vec<f64>, CliError> {
    let mut v = joint_row(&p.erased).to_vec();
    v.push(p.p_e1_given_e2().map_err(CliError::simulation(at_phi(p.phi)))?);
    v.extend([p.p_e1_unheralded(), p.p_e1_heralded()]);
    Ok(v)
}

fn eraser_summary(s: &mut Summary, prefix: &str, e: &EraserSummary) {
    s.fringe(&format!("{prefix}unheralded"), &e.unheralded);
    s.fringe(&format!("{prefix}heralded"), &e.heralded);
    s.fringe(&format!("{prefix}joint_ee"), &e.joint_ee);
    s.fringe(&format!("{prefix}joint_ge"), &e.joint_ge);
    s.fringe(&format!("{prefix}conditional"), &e.conditional);
    s.put(format!("{prefix}conditional_reduction"), e.conditional_reduction);
}

fn eraser(cfg: &Config) -> Result<(Table, Summary), CliError> {
    let exp = experiment(cfg)?;
    let cal = calibrate(&exp).map_err(CliError::simulation("calibration"))?;
    let points = phase_grid(cfg.points)
        .par_iter()
        .map(|&phi| eraser_point(phi, &exp, &cal).map_err(CliError::simulation(at_phi(phi))))
        .collect::<Result<Vec<_>, _>>()?;
    let sweep = EraserSweep::assemble(cal, points, &exp.effective_readout())
        .map_err(CliError::simulation("eraser summary"))?;
    let mut cols = vec!["phi".to_string()];
    cols.extend(ERASER_COLUMNS.iter().map(|c| c.to_string()));
    cols.extend(ERASER_COLUMNS.iter().map(|c| format!("true_{c}")));
    let mut table = Table { columns: cols, rows: Vec::new() };
    for (m, t) in sweep.measured.iter().zip(&sweep.points) {
        let mut row = vec![t.phi];
        row.extend(eraser_values(m)?);
        row.extend(eraser_values(t)?);
        table.push(row);
    }
    let mut s = Summary::default();
    eraser_summary(&mut s, "", &sweep.measured_summary);
    eraser_summary(&mut s, "true_", &sweep.summary);
    s.put("phase_offset", sweep.calibration.phase_offset);
    s.put("erase_phase", sweep.calibration.erase_phase);
    s.put("max_trace_drift", sweep.points.iter().map(|p| p.trace_drift).fold(0.0, f64::max));
    Ok((table, s))
}

fn at_f(w: f64) -> String {
    format!("point f = {:.6} GHz", w / (2.0 * PI) / 1e9)
}

fn rates(cfg: &Config) -> Result<(Table, Summary), CliError> {
    let omegas = cfg.omega_grid();
    let curves = omegas
        .par_iter()
        .map(|&w| rate_sweep(&[w], &cfg.circuit, &cfg.idt, cfg.model).map_err(CliError::simulation(at_f(w))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["f", "f_q", "kappa_ge", "kappa_ef", "alpha", "G_a"]);
    let hz = |w: f64| w / (2.0 * PI);
    for c in &curves {
        let w = c.omega[0];
        table.push(vec![hz(w), hz(c.omega_q[0]), c.kappa_ge[0], c.kappa_ef[0], hz(c.alpha[0]), conductance(w, &cfg.idt)]);
    }
    let argmax = |v: &[f64]| v.iter().enumerate().fold(0, |best, (k, x)| if *x > v[best] { k } else { best });
    let ge: Vec<f64> = curves.iter().map(|c| c.kappa_ge[0]).collect();
    let ef: Vec<f64> = curves.iter().map(|c| c.kappa_ef[0]).collect();
    let (kg, ke) = (argmax(&ge), argmax(&ef));
    let mut s = Summary::default();
    s.put("kappa_ge_max", ge[kg]);
    s.put("f_at_kappa_ge_max", hz(omegas[kg]));
    s.put("kappa_ef_max", ef[ke]);
    s.put("f_at_kappa_ef_max", hz(omegas[ke]));
    s.put("kappa_ef_over_ge_at_peaks", ef[ke] / ge[kg]);
    Ok((table, s))
}

fn circuit(cfg: &Config) -> Result<(Table, Summary), CliError> {
    cfg.circuit.validate().map_err(CliError::simulation("circuit"))?;
    cfg.idt.validate().map_err(CliError::simulation("transducer"))?;
    let z = |w: f64, loss| network_impedance(w, &cfg.circuit, &cfg.idt, cfg.model, loss);
    let omegas = cfg.omega_grid();
    let rows = omegas
        .par_iter()
        .map(|&w| {
            let ya = idt_admittance(w, &cfg.idt, cfg.model);
            let lossy = z(w, Loss::Lossy).map_err(CliError::simulation(at_f(w)))?;
            let ideal = z(w, Loss::Lossless).map_err(CliError::simulation(at_f(w)))?;
            Ok(vec![w / (2.0 * PI), ya.re, ya.im - w * cfg.idt.c0, lossy.re, lossy.im, ideal.im])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut table = Table::new(&["f", "G_a", "B_a", "Re_Z", "Im_Z", "Im_Z_lossless"]);
    rows.into_iter().for_each(|r| table.push(r));

    let (lo, hi) = (omegas[0], omegas[omegas.len() - 1]);
    let modes = reactance_zeros(&|w| z(w, Loss::Lossless), lo, hi, 4 * cfg.f_points)
        .map_err(CliError::simulation("mode search"))?;
    let mut s = Summary::default();
    s.put("modes", modes.len() as f64);
    for (k, &w) in modes.iter().enumerate() {
        s.put(format!("mode_{k}_f"), w / (2.0 * PI));
        // Modes far from the transducer band may have no resolvable loss.
        if let Ok(rlc) = effective_rlc(&|v| z(v, Loss::Lossy), w, cfg.circuit.l_q) {
            s.put(format!("mode_{k}_kappa"), rlc.kappa());
            s.put(format!("mode_{k}_alpha"), rlc.alpha / (2.0 * PI));
        }
    }
    Ok((table, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digit_rounding_is_idempotent() {
        for x in [PI, 1.0 / 3.0, 6.02214076e23, -1.6e-19, 0.0] {
            let r = round9(x);
            assert_eq!(round9(r), r);
            assert!((r - x).abs() <= 1e-8 * x.abs());
            let text = format!("{r:e}");
            let mantissa = text.split('e').next().unwrap().replace(['-', '.'], "");
            assert!(mantissa.len() <= 9, "{text}");
        }
    }
}
