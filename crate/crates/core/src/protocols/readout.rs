//! Joint outcome distributions of two qudits and the readout confusion model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// Row = true level, column = reported level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[f64; 3]; 3]);

impl ConfusionMatrix {
    pub const IDENTITY: ConfusionMatrix = ConfusionMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn new(rows: [[f64; 3]; 3]) -> Result<Self> {
        let m = Self(rows);
        m.validate()?;
        Ok(m)
    }

    /// Three-state readout from per-level fidelities. Errors land on adjacent
    /// levels: g → e, e splits evenly to g and f, f → e.
    pub fn from_fidelities(fg: f64, fe: f64, ff: f64) -> Result<Self> {
        Self::new([[fg, 1.0 - fg, 0.0], [0.5 * (1.0 - fe), fe, 0.5 * (1.0 - fe)], [0.0, 1.0 - ff, ff]])
    }

    /// Two-state readout of visibility `v`: g and e are confused symmetrically
    /// and f reads as e.
    pub fn two_state(visibility: f64) -> Result<Self> {
        let f = 0.5 * (1.0 + visibility);
        Self::new([[f, 1.0 - f, 0.0], [1.0 - f, f, 0.0], [1.0 - f, f, 0.0]])
    }

    pub fn q1_table() -> Self {
        Self::from_fidelities(0.99, 0.97, 0.93).expect("table values are stochastic")
    }

    pub fn q2_table() -> Self {
        Self::from_fidelities(0.99, 0.95, 0.92).expect("table values are stochastic")
    }

    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.0.iter().enumerate() {
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(Error::NotStochastic(format!("row {i} has entries outside [0, 1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic(format!("row {i} sums to {s}")));
            }
        }
        Ok(())
    }

    pub fn apply(&self, p: &[f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (x, px) in p.iter().enumerate() {
            for (a, o) in out.iter_mut().enumerate() {
                *o += px * self.0[x][a];
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub q1: ConfusionMatrix,
    pub q2: ConfusionMatrix,
}

impl ReadoutModel {
    pub const IDEAL: ReadoutModel = ReadoutModel { q1: ConfusionMatrix::IDENTITY, q2: ConfusionMatrix::IDENTITY };

    pub fn table() -> Self {
        Self { q1: ConfusionMatrix::q1_table(), q2: ConfusionMatrix::q2_table() }
    }

    /// Shortened Q1 readout (81 % two-state visibility) with Q2's full readout.
    pub fn eraser() -> Self {
        Self { q1: ConfusionMatrix::two_state(0.81).expect("valid visibility"), q2: ConfusionMatrix::q2_table() }
    }
}

pub const LEVELS: [&str; 3] = ["g", "e", "f"];

/// P(Q1 = x, Q2 = y) over levels g, e, f.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution(pub [[f64; 3]; 3]);

impl JointDistribution {
    pub fn new(p: [[f64; 3]; 3]) -> Result<Self> {
        let d = Self(p);
        if p.iter().flatten().any(|&x| x < -1e-9 || !x.is_finite()) {
            return Err(Error::NotStochastic("negative or non-finite probability".into()));
        }
        if (d.total() - 1.0).abs() > 1e-9 {
            return Err(Error::NotStochastic(format!("joint distribution sums to {}", d.total())));
        }
        Ok(d)
    }

    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.0[x][y]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().flatten().sum()
    }

    pub fn q1(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (x, row) in self.0.iter().enumerate() {
            m[x] = row.iter().sum();
        }
        m
    }

    pub fn q2(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for row in &self.0 {
            for (y, v) in row.iter().enumerate() {
                m[y] += v;
            }
        }
        m
    }
}

/// Confusion push-forward applied independently to each qudit.
pub fn apply_readout(joint: &JointDistribution, rm: &ReadoutModel) -> Result<JointDistribution> {
    rm.q1.validate()?;
    rm.q2.validate()?;
    let mut out = [[0.0; 3]; 3];
    for x in 0..3 {
        for y in 0..3 {
            let p = joint.0[x][y];
            if p == 0.0 {
                continue;
            }
            for a in 0..3 {
                for b in 0..3 {
                    out[a][b] += p * rm.q1.0[x][a] * rm.q2.0[y][b];
                }
            }
        }
    }
    Ok(JointDistribution(out))
}

/// P(Q1 = e | Q2 = e) = P_ee / (P_ge + P_ee).
pub fn conditional_probability(joint: &JointDistribution) -> Result<f64> {
    let (ge, ee) = (joint.0[0][1], joint.0[1][1]);
    let denom = ge + ee;
    if denom <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(ee / denom)
}
