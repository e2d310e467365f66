//! Extraction of κ_ge, κ_ef and κ_gf from population decay traces.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::NS;

/// Samples outside [start, end) are ignored: the coupler transient and the
/// return of reflected phonons.
pub const FIT_WINDOW: (f64, f64) = (3.0 * NS, 500.0 * NS);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMode {
    /// κ_gf = 0; sequential single-exponential fits.
    TwoRate,
    /// κ_ge held fixed, κ_ef and κ_gf fitted jointly.
    ThreeRate,
}

/// Populations after preparing |e⟩ and |f⟩, sampled at common times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTraces {
    pub times: Vec<f64>,
    /// P_e after preparing |e⟩.
    pub e_from_e: Vec<f64>,
    /// P_f after preparing |f⟩.
    pub f_from_f: Vec<f64>,
    /// P_e after preparing |f⟩; needed for the three-rate fit.
    pub e_from_f: Option<Vec<f64>>,
    /// Steady-state P_e and P_f measured without a drive.
    pub offsets: (f64, f64),
    /// Largest rise between samples still treated as noise.
    pub noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub kappa_ge: f64,
    pub kappa_ef: f64,
    pub kappa_gf: Option<f64>,
}

/// (P_e after |e⟩, P_f after |f⟩, P_e after |f⟩) at time t, without offsets.
pub fn decay_model(kappa_ge: f64, kappa_ef: f64, kappa_gf: f64, t: f64) -> (f64, f64, f64) {
    let kf = kappa_ef + kappa_gf;
    let pe = (-kappa_ge * t).exp();
    let pf = (-kf * t).exp();
    let d = kappa_ge - kf;
    let pef = if d.abs() < 1e-9 * kappa_ge {
        kappa_ef * t * pe
    } else {
        kappa_ef / d * (pf - pe)
    };
    (pe, pf, pef)
}

pub fn fit_decay(traces: &DecayTraces, mode: FitMode) -> Result<DecayFit> {
    let n = traces.times.len();
    if traces.e_from_e.len() != n || traces.f_from_f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: traces.e_from_e.len().min(traces.f_from_f.len()) });
    }
    let idx: Vec<usize> = (0..n).filter(|&k| traces.times[k] >= FIT_WINDOW.0 && traces.times[k] < FIT_WINDOW.1).collect();
    if idx.len() < 4 {
        return Err(invalid("times", "fewer than four samples inside the fit window"));
    }
    let t: Vec<f64> = idx.iter().map(|&k| traces.times[k]).collect();
    let pick = |v: &[f64]| idx.iter().map(|&k| v[k]).collect::<Vec<_>>();
    let (oe, of) = traces.offsets;
    let e = pick(&traces.e_from_e);
    let f = pick(&traces.f_from_f);
    check_decay(&e, traces.noise, "P_e after |e⟩")?;
    check_decay(&f, traces.noise, "P_f after |f⟩")?;

    let kappa_ge = fit_exponential(&t, &e, oe)?;
    let kappa_f = fit_exponential(&t, &f, of)?;
    match mode {
        FitMode::TwoRate => Ok(DecayFit { kappa_ge, kappa_ef: kappa_f, kappa_gf: None }),
        FitMode::ThreeRate => {
            let ef = traces
                .e_from_f
                .as_ref()
                .ok_or_else(|| invalid("e_from_f", "the three-rate fit needs P_e after |f⟩"))?;
            if ef.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: ef.len() });
            }
            let ef = pick(ef);
            let residual = |p: &[f64]| -> Vec<f64> {
                let (kef, kgf) = (p[0], p[1]);
                t.iter()
                    .enumerate()
                    .flat_map(|(k, &tk)| {
                        let (_, pf, pef) = decay_model(kappa_ge, kef, kgf, tk);
                        [of + pf - f[k], oe + pef - ef[k]]
                    })
                    .collect()
            };
            let p = levenberg_marquardt(&residual, vec![0.9 * kappa_f, 0.1 * kappa_f])?;
            Ok(DecayFit { kappa_ge, kappa_ef: p[0], kappa_gf: Some(p[1].max(0.0)) })
        }
    }
}

fn check_decay(v: &[f64], noise: f64, what: &str) -> Result<()> {
    match v.windows(2).position(|w| w[1] - w[0] > noise) {
        Some(k) => Err(Error::NonMonotonic(format!("{what} rises by {:.3} at sample {k}", v[k + 1] - v[k]))),
        None => Ok(()),
    }
}

/// Rate of offset + A·exp(−κt) fitted by least squares.
fn fit_exponential(t: &[f64], y: &[f64], offset: f64) -> Result<f64> {
    // Log-linear start on samples clearly above the offset.
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(_, &v)| v - offset > 1e-3)
        .map(|(&tk, &v)| (tk, (v - offset).ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::FitNonConvergence("trace is already at its offset".into()));
    }
    let m = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mt, my) = (st / m, sy / m);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let k0 = (-sxy / sxx).max(1e-3 / t[t.len() - 1]);
    let a0 = (my + k0 * mt).exp();
    let residual = |p: &[f64]| -> Vec<f64> { t.iter().zip(y).map(|(&tk, &v)| offset + p[0] * (-p[1] * tk).exp() - v).collect() };
    let p = levenberg_marquardt(&residual, vec![a0, k0])?;
    if !(p[1] > 0.0) {
        return Err(Error::FitNonConvergence(format!("negative rate {:e}", p[1])));
    }
    Ok(p[1])
}

/// Damped Gauss–Newton with a forward-difference Jacobian and Marquardt scaling.
fn levenberg_marquardt(residual: &dyn Fn(&[f64]) -> Vec<f64>, mut p: Vec<f64>) -> Result<Vec<f64>> {
    let cost = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();
    let mut r = residual(&p);
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let m = r.len();
        let np = p.len();
        let mut jac = DMatrix::zeros(m, np);
        for j in 0..np {
            let h = 1e-7 * p[j].abs().max(1e-12);
            let mut q = p.clone();
            q[j] += h;
            let rq = residual(&q);
            for i in 0..m {
                jac[(i, j)] = (rq[i] - r[i]) / h;
            }
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_vec(r.clone());
        loop {
            let mut a = jtj.clone();
            for j in 0..np {
                a[(j, j)] += lambda * jtj[(j, j)].max(1e-300);
            }
            let step = a.lu().solve(&(-&g)).ok_or_else(|| Error::FitNonConvergence("singular normal equations".into()))?;
            let q: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rq = residual(&q);
            let cq = cost(&rq);
            if cq.is_finite() && cq <= c {
                let small = step.iter().zip(&p).all(|(s, v)| s.abs() <= 1e-12 * v.abs().max(1e-300));
                let flat = c - cq <= 1e-15 * c.max(1e-300);
                p = q;
                r = rq;
                c = cq;
                lambda = (lambda / 3.0).max(1e-12);
                if small || flat {
                    return Ok(p);
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e12 {
                // No downhill step left: at a minimum to working precision.
                return Ok(p);
            }
        }
    }
    Err(Error::FitNonConvergence("iteration limit".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(kge: f64, kef: f64, kgf: f64, offsets: (f64, f64)) -> DecayTraces {
        let times: Vec<f64> = (0..600).map(|k| k as f64 * NS).collect();
        let m: Vec<_> = times.iter().map(|&t| decay_model(kge, kef, kgf, t)).collect();
        DecayTraces {
            e_from_e: m.iter().map(|v| offsets.0 + v.0).collect(),
            f_from_f: m.iter().map(|v| offsets.1 + v.1).collect(),
            e_from_f: Some(m.iter().map(|v| offsets.0 + v.2).collect()),
            times,
            offsets,
            noise: 0.01,
        }
    }

    const KGE: f64 = 1.0 / (9.3 * NS);

    #[test]
    fn two_rate_fit_inverts_the_model() {
        let kef = KGE / 5.9;
        let fit = fit_decay(&synthetic(KGE, kef, 0.0, (0.01, 0.005)), FitMode::TwoRate).unwrap();
        assert!((fit.kappa_ge / KGE - 1.0).abs() < 0.01);
        assert!((fit.kappa_ef / kef - 1.0).abs() < 0.01);
        assert!(fit.kappa_gf.is_none());
    }

    #[test]
    fn three_rate_fit_finds_no_two_phonon_decay() {
        let kef = KGE / 5.9;
        let fit = fit_decay(&synthetic(KGE, kef, 0.0, (0.0, 0.0)), FitMode::ThreeRate).unwrap();
        assert!(fit.kappa_gf.unwrap() < 0.05 * fit.kappa_ef);
        assert!((fit.kappa_ef / kef - 1.0).abs() < 0.01);
    }

    #[test]
    fn three_rate_fit_recovers_injected_two_phonon_decay() {
        let (kef, kgf) = (KGE / 5.9, 1.0 / (30.0 * NS));
        let fit = fit_decay(&synthetic(KGE, kef, kgf, (0.0, 0.0)), FitMode::ThreeRate).unwrap();
        assert!((fit.kappa_gf.unwrap() / kgf - 1.0).abs() < 0.15);
    }

    #[test]
    fn harmonic_ladder_matches_closed_form() {
        // κ_ef = 2κ_ge: P_e after |f⟩ is 2(e^{−κt} − e^{−2κt}).
        let t = 7.0 * NS;
        let (_, _, pef) = decay_model(KGE, 2.0 * KGE, 0.0, t);
        assert!((pef - 2.0 * ((-KGE * t).exp() - (-2.0 * KGE * t).exp())).abs() < 1e-12);
        let (_, _, degenerate) = decay_model(KGE, KGE, 0.0, t);
        assert!((degenerate - KGE * t * (-KGE * t).exp()).abs() < 1e-12);
    }

    #[test]
    fn rising_trace_is_rejected() {
        let mut tr = synthetic(KGE, KGE / 5.9, 0.0, (0.0, 0.0));
        tr.e_from_e[100] += 0.2;
        assert!(matches!(fit_decay(&tr, FitMode::TwoRate), Err(Error::NonMonotonic(_))));
    }

    #[test]
    fn three_rate_needs_the_cross_trace() {
        let mut tr = synthetic(KGE, KGE / 5.9, 0.0, (0.0, 0.0));
        tr.e_from_f = None;
        assert!(fit_decay(&tr, FitMode::ThreeRate).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn fit_is_an_inverse(tge in 5.0f64..40.0, ratio in 0.1f64..3.0) {
            let kge = 1.0 / (tge * NS);
            let kef = kge * ratio;
            let fit = fit_decay(&synthetic(kge, kef, 0.0, (0.0, 0.0)), FitMode::TwoRate).unwrap();
            prop_assert!((fit.kappa_ge / kge - 1.0).abs() < 0.01);
            prop_assert!((fit.kappa_ef / kef - 1.0).abs() < 0.01);
        }
    }
}
