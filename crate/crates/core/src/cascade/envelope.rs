//! Sech wavepacket envelope and the couplings derived from it.

use serde::{Deserialize, Serialize};

use crate::device::{logistic_pair, CouplerProfile, CouplerShape};
use crate::error::{invalid, Result};

/// Input-mode coupling √κ_c / √(1 + e^{−κ_c t}).
pub fn g_in(t: f64, kappa_c: f64) -> f64 {
    let (c, _) = logistic_pair(kappa_c * t);
    (kappa_c * c).sqrt()
}

/// Output-mode coupling −√κ_c / √(1 + e^{κ_c t}).
pub fn g_out(t: f64, kappa_c: f64) -> f64 {
    let (_, cbar) = logistic_pair(kappa_c * t);
    -(kappa_c * cbar).sqrt()
}

/// u(t) = (√κ_c / 2) sech(κ_c (t − t₀) / 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSpec {
    pub kappa_c: f64,
    pub center: f64,
}

impl EnvelopeSpec {
    pub fn new(kappa_c: f64, center: f64) -> Result<Self> {
        if !(kappa_c > 0.0) {
            return Err(invalid("kappa_c", format!("must be positive, got {kappa_c}")));
        }
        Ok(Self { kappa_c, center })
    }

    pub fn amplitude(&self, t: f64) -> f64 {
        0.5 * self.kappa_c.sqrt() / (0.5 * self.kappa_c * (t - self.center)).cosh()
    }

    /// ∫_{−∞}^t |u|² in closed form.
    pub fn cumulative(&self, t: f64) -> f64 {
        logistic_pair(self.kappa_c * (t - self.center)).0
    }

    pub fn g_in(&self, t: f64) -> f64 {
        g_in(t - self.center, self.kappa_c)
    }

    pub fn g_out(&self, t: f64) -> f64 {
        g_out(t - self.center, self.kappa_c)
    }

    /// Symmetric window of `half_widths / κ_c` on each side of the centre.
    pub fn window(&self, half_widths: f64) -> (f64, f64) {
        let h = half_widths / self.kappa_c;
        (self.center - h, self.center + h)
    }

    /// Fraction of the norm inside [t0, t1].
    pub fn coverage(&self, t0: f64, t1: f64) -> f64 {
        let (_, below) = logistic_pair(self.kappa_c * (t0 - self.center));
        let (_, above) = logistic_pair(self.kappa_c * (t1 - self.center));
        below - above
    }
}

/// κ(t) = q|u|²/(1 − q∫|u|²): releases fraction q of an excitation into u.
pub fn shaped_release_profile(q: f64, envelope: &EnvelopeSpec, window: (f64, f64)) -> Result<CouplerProfile> {
    CouplerProfile::new(
        CouplerShape::Release { q, kappa_c: envelope.kappa_c, center: envelope.center },
        window.0,
        window.1,
    )
}

/// Time reverse of the complete release: absorbs a full wavepacket u.
pub fn catch_profile(envelope: &EnvelopeSpec, window: (f64, f64)) -> Result<CouplerProfile> {
    partial_catch_profile(1.0, envelope, window)
}

/// Time reverse of the q-release.
pub fn partial_catch_profile(q: f64, envelope: &EnvelopeSpec, window: (f64, f64)) -> Result<CouplerProfile> {
    CouplerProfile::new(
        CouplerShape::Catch { q, kappa_c: envelope.kappa_c, center: envelope.center },
        window.0,
        window.1,
    )
}

/// κ = −ln(η)/τ.
pub fn acoustic_loss_rate(eta: f64, tau: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid("eta", format!("efficiency must lie in (0, 1], got {eta}")));
    }
    if !(tau > 0.0) {
        return Err(invalid("tau", format!("must be positive, got {tau}")));
    }
    Ok(-eta.ln() / tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{NS, US};
    use proptest::prelude::*;

    const KC: f64 = 1.0 / (15.0 * NS);

    #[test]
    fn coupling_limits() {
        assert!((g_in(0.0, KC) - (KC / 2.0).sqrt()).abs() < 1e-12 * KC.sqrt());
        assert!((g_out(0.0, KC) + (KC / 2.0).sqrt()).abs() < 1e-12 * KC.sqrt());
        let far = 30.0 / KC;
        assert!((g_in(far, KC) - KC.sqrt()).abs() < 1e-6 * KC.sqrt());
        assert!(g_in(-far, KC) < 1e-6 * KC.sqrt());
        assert!(g_out(far, KC).abs() < 1e-6 * KC.sqrt());
        for k in 0..1000 {
            let t = (k as f64 - 500.0) * 0.1 * NS;
            assert!((g_out(t, KC).abs() - g_in(-t, KC)).abs() < 1e-12 * KC.sqrt());
        }
    }

    #[test]
    fn g_in_matches_cumulative_integral() {
        // Independent oracle: integrate |u|² with composite Simpson from far in the past.
        let env = EnvelopeSpec::new(KC, 0.0).unwrap();
        let start = -40.0 / KC;
        let h = 0.001 * NS;
        let u2 = |t: f64| env.amplitude(t).powi(2);
        let mut acc = 0.0;
        let mut t = start;
        let mut next_check = -4.0 / KC;
        while t < 4.0 / KC {
            acc += h / 6.0 * (u2(t) + 4.0 * u2(t + 0.5 * h) + u2(t + h));
            t += h;
            if t >= next_check {
                let oracle = env.amplitude(t) / (1.0 - acc).sqrt();
                assert!((g_in(t, KC) - oracle).abs() / KC.sqrt() < 1e-9, "t = {t}");
                next_check += 0.25 / KC;
            }
        }
    }

    #[test]
    fn envelope_is_normalized() {
        let env = EnvelopeSpec::new(KC, 100.0 * NS).unwrap();
        let (a, b) = env.window(40.0);
        let n = 200_000;
        let h = (b - a) / n as f64;
        let s: f64 = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                w * env.amplitude(a + k as f64 * h).powi(2)
            })
            .sum::<f64>()
            * h;
        assert!((s - 1.0).abs() < 1e-6);
        assert!((env.coverage(a, b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_rates() {
        assert_eq!(acoustic_loss_rate(1.0, 0.5 * US).unwrap(), 0.0);
        assert!((acoustic_loss_rate(0.66, 0.5 * US).unwrap() * US - 0.831).abs() < 1e-3);
        assert!((acoustic_loss_rate(0.64, 0.5 * US).unwrap() * US - 0.893).abs() < 1e-3);
        assert!(acoustic_loss_rate(0.0, 0.5 * US).is_err());
    }

    #[test]
    fn release_profile_values() {
        let env = EnvelopeSpec::new(KC, 0.0).unwrap();
        let w = env.window(8.0);
        assert_eq!(shaped_release_profile(0.0, &env, w).unwrap().rate(3.0 * NS), 0.0);
        assert!((shaped_release_profile(1.0, &env, w).unwrap().rate(0.0) - KC / 2.0).abs() < 1e-9 * KC);
        assert!((shaped_release_profile(0.5, &env, w).unwrap().rate(0.0) - KC / 6.0).abs() < 1e-9 * KC);
        assert!((catch_profile(&env, w).unwrap().rate(0.0) - KC / 2.0).abs() < 1e-9 * KC);
        assert!(shaped_release_profile(-0.1, &env, w).is_err());
    }

    proptest! {
        #[test]
        fn profiles_non_negative(q in 0.0f64..=1.0, x in -60.0f64..60.0) {
            let env = EnvelopeSpec::new(KC, 0.0).unwrap();
            let t = x / KC;
            let w = env.window(100.0);
            prop_assert!(shaped_release_profile(q, &env, w).unwrap().rate(t) >= 0.0);
            prop_assert!(partial_catch_profile(q, &env, w).unwrap().rate(t) >= 0.0);
        }
    }
}
