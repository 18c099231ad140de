//! Susceptibilities, charge and voltage noise spectra, and the spectral
//! route to the LC variances.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{eigenvalues, LinearModel};
use crate::error::{Error, Result};
use crate::params::DerivedConstants;
use crate::quad::{integrate_real_line, Tolerance};
use crate::sideband::CoolingRates;
use crate::workpoint::WorkingPoint;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `(χ_c, χ_m, χ_LC)` at frequency `ω`:
///
/// `χ_c = Δ / (Δ² + (κ − iω)²)`, `χ_m = ω0 / (ω_m² − ω² − iγ_m ω)`,
/// `χ_LC = ω_LC / (ω_LC² − ω² − iγ_LC ω)`.
pub fn natural_susceptibilities(m: &LinearModel, omega: f64) -> (Complex64, Complex64, Complex64) {
    let inv = natural_inverses(m, omega);
    (1.0 / inv.0, 1.0 / inv.1, 1.0 / inv.2)
}

fn natural_inverses(m: &LinearModel, omega: f64) -> (Complex64, Complex64, Complex64) {
    let w = Complex64::from(omega);
    let kc = Complex64::from(m.kappa) - I * w;
    let chi_c_inv = (m.delta * m.delta + kc * kc) / m.delta;
    let chi_m_inv = (m.omega_m * m.omega_m - w * w - I * m.gamma_m * omega) / m.omega0;
    let chi_lc_inv = (m.omega_lc * m.omega_lc - w * w - I * m.gamma_lc * omega) / m.omega_lc;
    (chi_c_inv, chi_m_inv, chi_lc_inv)
}

/// Dressed susceptibilities at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Susceptibilities {
    pub chi_c: Complex64,
    pub chi_m: Complex64,
    pub chi_lc: Complex64,
    /// Mechanics dressed by the cavity: `χ_mc⁻¹ = χ_m⁻¹ − G² χ_c`.
    pub chi_mc: Complex64,
    /// `χ_m^eff⁻¹ = χ_mc⁻¹ − g² χ_LC`.
    pub chi_m_eff: Complex64,
    /// `χ_LC^eff⁻¹ = χ_LC⁻¹ − g² χ_mc`.
    pub chi_lc_eff: Complex64,
}

pub fn effective_susceptibilities(m: &LinearModel, omega: f64) -> Result<Susceptibilities> {
    let (c_inv, m_inv, lc_inv) = natural_inverses(m, omega);
    let chi_c = if m.delta == 0.0 { Complex64::new(0.0, 0.0) } else { 1.0 / c_inv };
    let g2 = m.g_om * m.g_om;
    let e2 = m.g_em * m.g_em;
    let mc_inv = m_inv - g2 * chi_c;
    let chi_mc = 1.0 / mc_inv;
    let chi_lc = 1.0 / lc_inv;
    let chi_lc_eff = 1.0 / (lc_inv - e2 * chi_mc);
    let chi_m_eff = 1.0 / (mc_inv - e2 * chi_lc);
    let chi_m = 1.0 / m_inv;
    let all = [chi_c, chi_m, chi_lc, chi_mc, chi_m_eff, chi_lc_eff];
    if all.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::domain(format!("susceptibility pole hit exactly at omega = {omega:e} rad/s")));
    }
    Ok(Susceptibilities { chi_c, chi_m, chi_lc, chi_mc, chi_m_eff, chi_lc_eff })
}

/// Radiation-pressure noise
/// `S_rp = G² κ (Δ² + κ² + ω²) / ((Δ² + κ² − ω²)² + 4κ²ω²)`.
pub fn radiation_pressure_noise(m: &LinearModel, omega: f64) -> f64 {
    let (k2, d2, w2) = (m.kappa * m.kappa, m.delta * m.delta, omega * omega);
    m.g_om * m.g_om * m.kappa * (d2 + k2 + w2) / ((d2 + k2 - w2).powi(2) + 4.0 * k2 * w2)
}

fn brownian_noise(m: &LinearModel) -> f64 {
    m.gamma_m * (2.0 * m.nbar_m + 1.0)
}

fn johnson_noise(m: &LinearModel) -> f64 {
    m.gamma_lc * (2.0 * m.nbar_lc + 1.0)
}

fn charge_noise_from(m: &LinearModel, omega: f64, chi: &Susceptibilities) -> f64 {
    let force = m.g_em * m.g_em * chi.chi_mc.norm_sqr() * (radiation_pressure_noise(m, omega) + brownian_noise(m));
    chi.chi_lc_eff.norm_sqr() * (force + johnson_noise(m))
}

/// `S_δq(ω) = |χ_LC^eff|² [g² |χ_mc|² (S_rp + S_ξ) + S_δV]` in zero-point
/// units per rad/s.
pub fn charge_noise_spectrum(m: &LinearModel, omega: f64) -> Result<f64> {
    let chi = effective_susceptibilities(m, omega)?;
    Ok(charge_noise_from(m, omega, &chi))
}

/// Conversion of zero-point units to volts at the working point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// `q_zpf / C(x_s)`, volts.
    pub volts_per_charge: f64,
    /// `φ_zpf`, webers.
    pub phi_zpf: f64,
}

impl Calibration {
    pub fn new(wp: &WorkingPoint, dc: &DerivedConstants) -> Self {
        Calibration { volts_per_charge: dc.q_zpf / wp.c_at_xs, phi_zpf: dc.phi_zpf }
    }
}

/// One row of a spectrum table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSample {
    pub omega: f64,
    pub s_dq: f64,
    pub s_dvc: f64,
    pub s_dvl: f64,
    pub chi: Susceptibilities,
}

/// `S_δVC = (q_zpf/C)² S_δq + S_imp^C`,
/// `S_δVL = (ω/ω_LC)⁴ (q_zpf/C)² S_δq + S_imp^L`.
pub fn voltage_spectra(
    m: &LinearModel,
    cal: &Calibration,
    omega: f64,
    s_imp_c: f64,
    s_imp_l: f64,
) -> Result<(f64, f64)> {
    let s = spectrum_sample(m, cal, omega, s_imp_c, s_imp_l)?;
    Ok((s.s_dvc, s.s_dvl))
}

pub fn spectrum_sample(
    m: &LinearModel,
    cal: &Calibration,
    omega: f64,
    s_imp_c: f64,
    s_imp_l: f64,
) -> Result<SpectrumSample> {
    if !(s_imp_c >= 0.0) || !(s_imp_l >= 0.0) {
        return Err(Error::domain("imprecision noise must be >= 0"));
    }
    let chi = effective_susceptibilities(m, omega)?;
    let s_dq = charge_noise_from(m, omega, &chi);
    let cal2 = cal.volts_per_charge * cal.volts_per_charge;
    let ratio = omega / m.omega_lc;
    let r4 = if omega == m.omega_lc { 1.0 } else { ratio.powi(4) };
    Ok(SpectrumSample { omega, s_dq, s_dvc: cal2 * s_dq + s_imp_c, s_dvl: r4 * cal2 * s_dq + s_imp_l, chi })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralVariances {
    pub var_q: f64,
    pub var_phi: f64,
    pub var_q_error: f64,
    pub var_phi_error: f64,
}

/// Breakpoints for real-line quadrature: each drift eigenvalue `λ`
/// contributes its resonance `±Im λ` and flanks at multiples of `|Re λ|`.
fn spectral_breakpoints(m: &LinearModel) -> Result<(Vec<f64>, f64)> {
    let ev = eigenvalues(&m.drift_matrix())?;
    let rates = [m.omega_lc, m.omega_m, m.kappa, m.delta.abs(), m.omega0];
    let omega_max = 20.0 * rates.iter().copied().fold(0.0, f64::max);
    let mut pts = vec![-omega_max, 0.0, omega_max];
    for z in &ev {
        let w = z.re.abs();
        for c in [z.im, -z.im] {
            pts.push(c);
            for k in [1.0, 3.0, 10.0, 30.0, 100.0] {
                pts.push(c - k * w);
                pts.push(c + k * w);
            }
        }
    }
    let mut pts: Vec<f64> = pts.into_iter().filter(|x| x.is_finite()).map(|x| x.clamp(-omega_max, omega_max)).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * omega_max);
    Ok((pts, omega_max))
}

/// `⟨δq²⟩ = ∫ S_δq dω/2π` and `⟨δφ²⟩ = ∫ (ω/ω_LC)² S_δq dω/2π` over the
/// whole real line, to relative tolerance `1e-6`.
pub fn integrate_spectrum(m: &LinearModel) -> Result<SpectralVariances> {
    integrate_spectrum_with(m, Tolerance { rel: 1e-6, ..Tolerance::default() })
}

pub fn integrate_spectrum_with(m: &LinearModel, tol: Tolerance) -> Result<SpectralVariances> {
    let (pts, omega_max) = spectral_breakpoints(m)?;
    let s = |w: f64| charge_noise_spectrum(m, w).unwrap_or(f64::NAN);
    let q = integrate_real_line(s, &pts, omega_max, tol)?;
    let phi = integrate_real_line(
        |w| {
            let r = w / m.omega_lc;
            r * r * s(w)
        },
        &pts,
        omega_max,
        tol,
    )?;
    let tau = std::f64::consts::TAU;
    Ok(SpectralVariances {
        var_q: q.value / tau,
        var_phi: phi.value / tau,
        var_q_error: q.abs_error / tau,
        var_phi_error: phi.abs_error / tau,
    })
}

/// Lorentzian approximation of `|χ_LC^eff|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveLorentzian {
    #[serde(rename = "omega_LC_eff")]
    pub omega_lc_eff: f64,
    #[serde(rename = "gamma_LC_eff")]
    pub gamma_lc_eff: f64,
}

/// `ω_LC^eff = √(ω_LC² + g²κ²/G²)`, `γ_LC^eff = γ_LC + Γ_LC`.
pub fn lorentzian_params(m: &LinearModel) -> Result<EffectiveLorentzian> {
    if m.g_em == 0.0 {
        return Ok(EffectiveLorentzian { omega_lc_eff: m.omega_lc, gamma_lc_eff: m.gamma_lc });
    }
    if m.g_om == 0.0 {
        return Err(Error::domain("effective LC frequency is undefined for G = 0 with g != 0"));
    }
    let rates = CoolingRates::from_model(m);
    let shift = m.g_em * m.kappa / m.g_om;
    if !rates.c_om.is_finite() || rates.c_om <= 10.0 || rates.c_em <= rates.c_om {
        log::warn!(
            "Lorentzian LC parameters used outside the sideband regime (C_om = {:.3e}, C_em = {:.3e})",
            rates.c_om,
            rates.c_em
        );
    }
    Ok(EffectiveLorentzian {
        omega_lc_eff: (m.omega_lc * m.omega_lc + shift * shift).sqrt(),
        gamma_lc_eff: rates.gamma_lc_eff,
    })
}

/// Full width at half maximum of a single peak near `center`, found by
/// locating the maximum on a local scan and bisecting both half-maximum
/// crossings. `width_guess` sets the scan window.
pub fn peak_fwhm(f: impl Fn(f64) -> f64, center: f64, width_guess: f64) -> Result<f64> {
    let n = 2001;
    let span = 5.0 * width_guess;
    let mut best = (center, f(center));
    for i in 0..n {
        let w = center - span + 2.0 * span * i as f64 / (n - 1) as f64;
        let v = f(w);
        if v > best.1 {
            best = (w, v);
        }
    }
    // golden-section refinement of the maximum
    let h = 2.0 * span / (n - 1) as f64;
    let (mut a, mut b) = (best.0 - h, best.0 + h);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let peak_w = 0.5 * (a + b);
    let half = 0.5 * f(peak_w).max(best.1);

    let crossing = |dir: f64| -> Result<f64> {
        let mut step = width_guess / 4.0;
        let mut inner = peak_w;
        let mut outer = peak_w + dir * step;
        let mut guard = 0;
        while f(outer) > half {
            inner = outer;
            step *= 2.0;
            outer = peak_w + dir * step;
            guard += 1;
            if guard > 200 {
                return Err(Error::numerical("peak has no half-maximum crossing"));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (inner + outer);
            if f(mid) > half {
                inner = mid;
            } else {
                outer = mid;
            }
        }
        Ok(0.5 * (inner + outer))
    };
    Ok(crossing(1.0)? - crossing(-1.0)?)
}

/// Numerical FWHM of `|χ_LC^eff(ω)|²` around the LC resonance.
pub fn lc_susceptibility_fwhm(m: &LinearModel) -> Result<f64> {
    let guess = lorentzian_params(m).map(|l| l.gamma_lc_eff).unwrap_or(m.gamma_lc);
    let center = lorentzian_params(m).map(|l| l.omega_lc_eff).unwrap_or(m.omega_lc);
    peak_fwhm(
        |w| effective_susceptibilities(m, w).map(|c| c.chi_lc_eff.norm_sqr()).unwrap_or(f64::INFINITY),
        center,
        guess,
    )
}

/// Closed-form estimate of the charge-noise maximum,
///
/// `S_peak = [γ_LC(2n̄_LC+1) + g²ω0² / ((ω_m² − ω_LC²)² + (ω_LC γ_m^eff)²)
///            · (γ_m(2n̄_m+1) + G²(2ω_LC² + κ²) / (κ(4ω_LC² + κ²)))] / (γ_LC^eff)²`.
pub fn spectrum_peak(m: &LinearModel) -> f64 {
    let rates = CoolingRates::from_model(m);
    let w2 = m.omega_lc * m.omega_lc;
    let k = m.kappa;
    let mech = m.g_em * m.g_em * m.omega0 * m.omega0
        / ((m.omega_m * m.omega_m - w2).powi(2) + (m.omega_lc * rates.gamma_m_eff).powi(2));
    let rp = m.g_om * m.g_om * (2.0 * w2 + k * k) / (k * (4.0 * w2 + k * k));
    (johnson_noise(m) + mech * (brownian_noise(m) + rp)) / rates.gamma_lc_eff.powi(2)
}

/// Ratio `(q_zpf/C)² S_peak / S_imp`; `+∞` when `S_imp = 0`.
pub fn detectability(m: &LinearModel, cal: &Calibration, s_imp: f64) -> Result<f64> {
    if !(s_imp >= 0.0) {
        return Err(Error::domain("imprecision noise must be >= 0"));
    }
    let signal = cal.volts_per_charge.powi(2) * spectrum_peak(m);
    Ok(if s_imp == 0.0 { f64::INFINITY } else { signal / s_imp })
}

/// Margin above which a direct spectral measurement is considered faithful.
pub const DETECTABLE_MARGIN: f64 = 10.0;

/// Charge response `δq = χ_LC^eff(ω) V_AC / φ_zpf` to a weak AC drive of
/// amplitude `v_ac` volts, in zero-point units.
pub fn ac_response(m: &LinearModel, cal: &Calibration, omega: f64, v_ac: f64) -> Result<Complex64> {
    if v_ac == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let chi = effective_susceptibilities(m, omega)?;
    Ok(chi.chi_lc_eff * (v_ac / cal.phi_zpf))
}

/// Occupancy inferred from the measured linewidth,
/// `n = (γ_LC / γ_LC^eff) n̄_LC`.
pub fn indirect_occupancy(gamma_lc: f64, gamma_lc_eff: f64, nbar_lc: f64) -> Result<f64> {
    if !(gamma_lc > 0.0) || !(gamma_lc_eff >= gamma_lc) {
        return Err(Error::domain(format!("need gamma_LC_eff >= gamma_LC > 0, got {gamma_lc_eff:e} and {gamma_lc:e}")));
    }
    Ok(gamma_lc / gamma_lc_eff * nbar_lc)
}
