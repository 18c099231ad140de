//! Closed-form sideband cooling theory, valid away from strong coupling.

use serde::{Deserialize, Serialize};

use crate::dynamics::LinearModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingRates {
    #[serde(rename = "A_plus")]
    pub a_plus: f64,
    #[serde(rename = "A_minus")]
    pub a_minus: f64,
    #[serde(rename = "Gamma_m")]
    pub gamma_opt: f64,
    pub gamma_m_eff: f64,
    #[serde(rename = "A_plus_LC")]
    pub a_plus_lc: f64,
    #[serde(rename = "A_minus_LC")]
    pub a_minus_lc: f64,
    #[serde(rename = "Gamma_LC")]
    pub gamma_em: f64,
    #[serde(rename = "gamma_LC_eff")]
    pub gamma_lc_eff: f64,
    #[serde(rename = "C_om")]
    pub c_om: f64,
    #[serde(rename = "C_em")]
    pub c_em: f64,
}

/// Optical Stokes/anti-Stokes rates
/// `A± = (G²κ/2) / (κ² + (Δ ± ω_m)²)`.
///
/// Returns `(A₊, A₋, Γ_m, γ_m^eff)`.
pub fn optical_rates(g_om: f64, kappa: f64, delta: f64, omega_m: f64, gamma_m: f64) -> (f64, f64, f64, f64) {
    let num = g_om * g_om * kappa / 2.0;
    let a_plus = num / (kappa * kappa + (delta + omega_m).powi(2));
    let a_minus = num / (kappa * kappa + (delta - omega_m).powi(2));
    let gamma = a_minus - a_plus;
    (a_plus, a_minus, gamma, gamma_m + gamma)
}

/// `n̄_m^eff = (γ_m n̄_m + A₊) / (γ_m + Γ_m)`, optical bath at zero
/// temperature.
pub fn mech_occupancy_approx(a_plus: f64, gamma_opt: f64, nbar_m: f64, gamma_m: f64) -> f64 {
    (gamma_m * nbar_m + a_plus) / (gamma_m + gamma_opt)
}

/// Electromechanical rates
/// `A±^LC = g² γ_m^eff / ((γ_m^eff)² + 4 (ω_m ± ω_LC)²)`.
///
/// Returns `(A₊^LC, A₋^LC, Γ_LC)`.
pub fn lc_rates(g_em: f64, gamma_m_eff: f64, omega_m: f64, omega_lc: f64) -> (f64, f64, f64) {
    let num = g_em * g_em * gamma_m_eff;
    let g2 = gamma_m_eff * gamma_m_eff;
    let a_plus = num / (g2 + 4.0 * (omega_m + omega_lc).powi(2));
    let a_minus = num / (g2 + 4.0 * (omega_m - omega_lc).powi(2));
    (a_plus, a_minus, a_minus - a_plus)
}

/// `n̄_LC^eff = (γ_LC n̄_LC + Γ_LC n̄_m^eff + A₊^LC) / (γ_LC + Γ_LC)`.
pub fn lc_occupancy_approx(a_plus_lc: f64, gamma_em: f64, nbar_lc: f64, gamma_lc: f64, n_m_eff: f64) -> f64 {
    (gamma_lc * nbar_lc + gamma_em * n_m_eff + a_plus_lc) / (gamma_lc + gamma_em)
}

/// `(C_om, C_em, regime_ok)` with `C_om = G²/(2κγ_m)`, `C_em = g²/(γ_LC γ_m)`
/// and `regime_ok = C_em > 10 C_om ∧ C_om > 10`.
pub fn cooperativities(g_om: f64, g_em: f64, kappa: f64, gamma_m: f64, gamma_lc: f64) -> (f64, f64, bool) {
    let c_om = g_om * g_om / (2.0 * kappa * gamma_m);
    let c_em = g_em * g_em / (gamma_lc * gamma_m);
    (c_om, c_em, c_em > 10.0 * c_om && c_om > 10.0)
}

/// Approximate occupancies from the closed-form rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandEstimate {
    pub rates: CoolingRates,
    pub n_m_eff: f64,
    pub n_lc_eff: f64,
    pub regime_ok: bool,
    /// Mechanical frequency used in the sideband denominators.
    pub omega_m_used: f64,
}

impl CoolingRates {
    /// Rates for a linear model; `ω_m` is the renormalized frequency of the
    /// model.
    pub fn from_model(m: &LinearModel) -> Self {
        let (a_plus, a_minus, gamma_opt, gamma_m_eff) = optical_rates(m.g_om, m.kappa, m.delta, m.omega_m, m.gamma_m);
        let (a_plus_lc, a_minus_lc, gamma_em) = lc_rates(m.g_em, gamma_m_eff, m.omega_m, m.omega_lc);
        let (c_om, c_em, _) = cooperativities(m.g_om, m.g_em, m.kappa, m.gamma_m, m.gamma_lc);
        CoolingRates {
            a_plus,
            a_minus,
            gamma_opt,
            gamma_m_eff,
            a_plus_lc,
            a_minus_lc,
            gamma_em,
            gamma_lc_eff: m.gamma_lc + gamma_em,
            c_om,
            c_em,
        }
    }
}

pub fn sideband_estimate(m: &LinearModel) -> SidebandEstimate {
    let rates = CoolingRates::from_model(m);
    let n_m_eff = mech_occupancy_approx(rates.a_plus, rates.gamma_opt, m.nbar_m, m.gamma_m);
    let n_lc_eff = lc_occupancy_approx(rates.a_plus_lc, rates.gamma_em, m.nbar_lc, m.gamma_lc, n_m_eff);
    let (_, _, regime_ok) = cooperativities(m.g_om, m.g_em, m.kappa, m.gamma_m, m.gamma_lc);
    SidebandEstimate { rates, n_m_eff, n_lc_eff, regime_ok, omega_m_used: m.omega_m }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParameterSet;
    use crate::steady::{linearize, steady_state};
    use std::f64::consts::TAU;

    const W: f64 = TAU * 1e6;

    #[test]
    fn resolved_sideband_rates() {
        let (kappa, g) = (TAU * 374.74e3, 0.8 * TAU * 374.74e3);
        let (ap, am, gm, ge) = optical_rates(g, kappa, W, W, TAU);
        assert!((am - g * g / (2.0 * kappa)).abs() < 1e-12 * am);
        assert!((ap - g * g * kappa / 2.0 / (kappa * kappa + 4.0 * W * W)).abs() < 1e-12 * ap);
        assert_eq!(gm, am - ap);
        assert_eq!(ge, TAU + gm);
        assert!(gm > 0.0);
    }

    #[test]
    fn zero_detuning_has_no_net_damping() {
        let (_, _, gm, _) = optical_rates(1e5, 2e6, 0.0, W, 1.0);
        assert_eq!(gm, 0.0);
    }

    #[test]
    fn red_detuning_always_cools() {
        for d in [0.1, 0.5, 1.0, 2.0, 10.0] {
            assert!(optical_rates(1e5, 2e6, d * W, W, 1.0).2 > 0.0);
        }
    }

    #[test]
    fn mechanical_occupancy_limits() {
        assert_eq!(mech_occupancy_approx(0.0, 0.0, 6250.0, TAU), 6250.0);
        assert!(mech_occupancy_approx(0.0, 1e6, 6250.0, 1e-12) < 1e-12);
    }

    #[test]
    fn resonant_lc_rate() {
        let (_, am, _) = lc_rates(3e5, 2e5, W, W);
        assert!((am - 9e10 / 2e5).abs() < 1e-9 * am);
        assert_eq!(lc_rates(0.0, 2e5, W, W).2, 0.0);
    }

    #[test]
    fn strong_lc_damping_follows_mechanics() {
        let n = lc_occupancy_approx(0.0, 1e12, 207.0, 1.0, 0.3);
        assert!((n - 0.3).abs() < 1e-9);
        assert_eq!(lc_occupancy_approx(0.0, 0.0, 207.0, 1.0, 0.3), 207.0);
    }

    #[test]
    fn cooperativity_scaling() {
        assert_eq!(cooperativities(0.0, 0.0, 1.0, 1.0, 1.0), (0.0, 0.0, false));
        let (a, b, _) = cooperativities(2.0, 3.0, 1.0, 1.0, 1.0);
        let (c, d, _) = cooperativities(2.0, 6.0, 1.0, 1.0, 1.0);
        assert_eq!(a, c);
        assert!((d / b - 4.0).abs() < 1e-15);
    }

    #[test]
    fn reference_point_diagnostics() {
        let (dc, _, m) = linearize(&ParameterSet::reference_device()).unwrap();
        let r = CoolingRates::from_model(&m);
        let kappa = dc.kappa;
        let g = 0.8 * kappa;
        let a_plus = g * g * kappa / 2.0 / (kappa * kappa + 4.0 * W * W);
        assert!((r.gamma_opt - (g * g / (2.0 * kappa) - a_plus)).abs() < 1e-9 * r.gamma_opt);
        assert!(r.c_om > 10.0 && r.c_em > r.c_om);
        let lc_reduced = 2.0 * m.g_em.powi(2) * kappa / (g * g);
        // residual Stokes term costs κ²/(κ² + 4ω²) ≈ 3.4 %
        assert!((r.gamma_em / lc_reduced - 1.0).abs() < 0.05, "{} {lc_reduced}", r.gamma_em);
    }

    #[test]
    fn approximate_mechanics_tracks_lyapunov() {
        // the closed form ignores the LC bath, so compare with g = 0
        let mut p = ParameterSet::reference_device();
        let kappa = p.derive().unwrap().kappa;
        let d = p.direct_mut().unwrap();
        d.g_em = 0.0;
        d.g_om = 0.3 * kappa;
        let ss = steady_state(&p).unwrap();
        let est = sideband_estimate(&ss.model);
        let rel = (est.n_m_eff - ss.n_m_eff).abs() / ss.n_m_eff;
        assert!(rel < 0.25, "{} vs {}", est.n_m_eff, ss.n_m_eff);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn weighted_average_lower_bound(
                ap in 0.0f64..1e3, ge in 0.0f64..1e6, n in 0.0f64..1e4, gl in 1e-3f64..1e3, nm in 0.0f64..1e4,
            ) {
                let v = lc_occupancy_approx(ap, ge, n, gl, nm);
                prop_assert!(v >= nm.min(n) * (1.0 - 1e-12));
            }
        }
    }
}
