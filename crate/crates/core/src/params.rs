//! Physical inputs, unit conventions and derived constants.
//!
//! All frequencies are stored as angular frequencies (rad/s). The JSON
//! configuration accepts any rate field either under its canonical name or
//! with an `_hz` suffix, in which case it is multiplied by 2π on ingestion.
//! Unknown fields are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::{C_LIGHT, EPSILON_0, HBAR, K_B, TWO_PI};
use crate::error::{Error, Result};

/// Mean thermal occupancy `1 / (exp(ħω/k_B T) − 1)` of a bosonic mode.
///
/// Returns exactly zero at `T = 0` and underflows cleanly to zero when
/// `ħω/k_B T` is large.
pub fn bose_occupancy(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::domain(format!("bose occupancy needs omega > 0, got {omega}")));
    }
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(Error::domain(format!("bose occupancy needs T >= 0, got {temperature}")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * omega / (K_B * temperature);
    // exp_m1 overflows to +inf for x > ~709, which maps to 0 here.
    Ok(1.0 / x.exp_m1())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawOptics")]
pub struct Optics {
    #[serde(rename = "wavelength_lambda")]
    pub wavelength: f64,
    #[serde(rename = "cavity_length_Lc")]
    pub cavity_length: f64,
    #[serde(rename = "finesse_F")]
    pub finesse: f64,
    /// κ_in / κ.
    #[serde(rename = "kappa_in_fraction")]
    pub kappa_in_fraction: f64,
    /// Membrane intensity reflectivity.
    #[serde(rename = "membrane_reflectivity_Rm")]
    pub membrane_reflectivity: f64,
    /// Transverse overlap between optical and vibrational modes, in [0, 1].
    #[serde(rename = "overlap_Theta")]
    pub overlap: f64,
    /// Static membrane position along the cavity axis.
    #[serde(rename = "membrane_axial_position_z0")]
    pub membrane_position: f64,
    #[serde(rename = "detuning_Delta")]
    pub detuning: f64,
    #[serde(rename = "input_power_P")]
    pub input_power: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMechanics")]
pub struct Mechanics {
    #[serde(rename = "mass_m")]
    pub mass: f64,
    pub omega0: f64,
    #[serde(rename = "quality_Qm")]
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCircuit")]
pub struct Circuit {
    #[serde(rename = "inductance_L")]
    pub inductance: f64,
    #[serde(rename = "omegaLC")]
    pub omega_lc: f64,
    #[serde(rename = "quality_QLC")]
    pub quality: f64,
    /// Explicit tunable capacitance. When present it overrides `omegaLC`,
    /// which is then recomputed from `L` and `C(0)`.
    #[serde(rename = "tunable_capacitance_C0")]
    pub tunable_capacitance: Option<f64>,
    #[serde(rename = "effective_area_Aeff")]
    pub effective_area: f64,
    #[serde(rename = "gap_h0")]
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drives {
    #[serde(rename = "V_DC")]
    pub v_dc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Baths {
    #[serde(rename = "T_mech")]
    pub t_mech: f64,
    #[serde(rename = "T_LC")]
    pub t_lc: f64,
}

/// Coupling rates fixed directly instead of derived from laser power and
/// DC bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDirect")]
pub struct DirectCouplings {
    /// Optomechanical coupling `G`, rad/s.
    #[serde(rename = "G")]
    pub g_om: f64,
    /// Electromechanical coupling `g`, rad/s.
    #[serde(rename = "g")]
    pub g_em: f64,
    /// Apply the electrostatic (and static radiation-pressure) spring shift
    /// to ω_m, using the DC bias and photon number consistent with `g`, `G`.
    /// Off means ω_m = ω0.
    pub spring_shift: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CouplingMode {
    Physical,
    Direct(DirectCouplings),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    /// Keep the static radiation-pressure force in the membrane equilibrium.
    #[serde(default)]
    pub include_radiation: bool,
}

/// Complete, validated set of physical inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParameterSet")]
pub struct ParameterSet {
    pub optics: Optics,
    pub mechanics: Mechanics,
    pub circuit: Circuit,
    pub drives: Drives,
    pub baths: Baths,
    pub coupling_mode: CouplingMode,
    pub solver: SolverOptions,
}

/// Quantities that follow from a [`ParameterSet`] alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub kappa: f64,
    pub kappa_in: f64,
    pub kappa_ex: f64,
    pub gamma_m: f64,
    pub gamma_lc: f64,
    /// `C(0) = 1 / (L ω_LC²)`.
    pub c_total_at_rest: f64,
    /// `C0 = C(0) − ε0 A_eff / h0`.
    pub c0: f64,
    pub resistance_r: f64,
    pub x_zpf: f64,
    pub p_zpf: f64,
    pub q_zpf: f64,
    pub phi_zpf: f64,
    pub nbar_m: f64,
    pub nbar_lc: f64,
    /// Laser angular frequency `2πc/λ`; also used as the empty-cavity mode
    /// frequency.
    pub omega_laser: f64,
    /// Driving rate `E = sqrt(2 κ_in P / ħω_L)`, zero when no power is set.
    pub e_drive: f64,
}

impl ParameterSet {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::config(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config(format!("reading {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("parameter set is always serializable")
    }

    /// Rebuild from a JSON value, running the full validation.
    pub fn from_json_value(value: serde_json::Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::config(e.to_string()))
    }

    /// Re-run the invariant checks. Useful after mutating fields directly.
    pub fn validate(&self) -> Result<()> {
        validate_optics(&self.optics)?;
        validate_mechanics(&self.mechanics)?;
        validate_circuit(&self.circuit)?;
        validate_top(self)
    }

    /// Membrane-in-the-middle device with 1 MHz mechanical and rf resonators,
    /// 8 mm / F = 5×10⁴ cavity, laser on the red mechanical sideband, and
    /// couplings set directly (`G = 0.8κ`, `g = 0.12κ`, no spring shift).
    /// Baths at 10 mK with `Q_LC = 4×10⁴`.
    pub fn reference_device() -> Self {
        let omega0 = TWO_PI * 1.0e6;
        let wavelength = 1064e-9;
        let optics = Optics {
            wavelength,
            cavity_length: 8e-3,
            finesse: 5e4,
            kappa_in_fraction: 0.4,
            membrane_reflectivity: 0.4,
            overlap: 1.0,
            membrane_position: default_membrane_position(wavelength),
            detuning: omega0,
            input_power: None,
        };
        let kappa = cavity_kappa(&optics);
        let p = ParameterSet {
            optics,
            mechanics: Mechanics { mass: 0.7e-10, omega0, quality: 1e6 },
            circuit: Circuit {
                inductance: 1e-3,
                omega_lc: omega0,
                quality: 4e4,
                tunable_capacitance: None,
                effective_area: 1.1e-7,
                gap: 2e-6,
            },
            drives: Drives { v_dc: 0.0 },
            baths: Baths { t_mech: 0.01, t_lc: 0.01 },
            coupling_mode: CouplingMode::Direct(DirectCouplings {
                g_om: 0.8 * kappa,
                g_em: 0.12 * kappa,
                spring_shift: false,
            }),
            solver: SolverOptions::default(),
        };
        debug_assert!(p.validate().is_ok());
        p
    }

    pub fn derive(&self) -> Result<DerivedConstants> {
        derive_constants(self)
    }

    /// Direct-mode couplings, if any.
    pub fn direct(&self) -> Option<&DirectCouplings> {
        match &self.coupling_mode {
            CouplingMode::Direct(d) => Some(d),
            CouplingMode::Physical => None,
        }
    }

    pub fn direct_mut(&mut self) -> Option<&mut DirectCouplings> {
        match &mut self.coupling_mode {
            CouplingMode::Direct(d) => Some(d),
            CouplingMode::Physical => None,
        }
    }
}

/// Total cavity amplitude decay rate `κ = 2π·c / (2 L_c F)`.
pub fn cavity_kappa(optics: &Optics) -> f64 {
    TWO_PI * C_LIGHT / (2.0 * optics.cavity_length * optics.finesse)
}

/// Default membrane position: `2k z0 = π/4`, where `|ω′|` is largest for
/// moderate reflectivity.
pub fn default_membrane_position(wavelength: f64) -> f64 {
    wavelength / 16.0
}

/// Membrane capacitance at rest, `ε0 A_eff / h0`.
pub fn membrane_capacitance_at_rest(circuit: &Circuit) -> f64 {
    EPSILON_0 * circuit.effective_area / circuit.gap
}

pub fn derive_constants(p: &ParameterSet) -> Result<DerivedConstants> {
    p.validate()?;
    let o = &p.optics;
    let m = &p.mechanics;
    let c = &p.circuit;

    let kappa = cavity_kappa(o);
    let kappa_in = o.kappa_in_fraction * kappa;
    let kappa_ex = kappa - kappa_in;

    let c_total_at_rest = 1.0 / (c.inductance * c.omega_lc * c.omega_lc);
    let c0 = match c.tunable_capacitance {
        Some(c0) => c0,
        None => c_total_at_rest - membrane_capacitance_at_rest(c),
    };
    if !(c0 > 0.0) {
        return Err(Error::config(format!(
            "C0 = C(0) - eps0*A_eff/h0 = {c0:.6e} F must be > 0: omegaLC = {:.6e} rad/s is \
             unreachable with L = {:.3e} H and the membrane capacitor alone",
            c.omega_lc, c.inductance
        )));
    }

    let gamma_lc = c.omega_lc / c.quality;
    let omega_laser = TWO_PI * C_LIGHT / o.wavelength;
    let e_drive = match o.input_power {
        Some(power) => (2.0 * kappa_in * power / (HBAR * omega_laser)).sqrt(),
        None => 0.0,
    };

    Ok(DerivedConstants {
        kappa,
        kappa_in,
        kappa_ex,
        gamma_m: m.omega0 / m.quality,
        gamma_lc,
        c_total_at_rest,
        c0,
        resistance_r: c.inductance * gamma_lc,
        x_zpf: (HBAR / (m.mass * m.omega0)).sqrt(),
        p_zpf: (HBAR * m.mass * m.omega0).sqrt(),
        q_zpf: (HBAR / (c.inductance * c.omega_lc)).sqrt(),
        phi_zpf: (HBAR * c.inductance * c.omega_lc).sqrt(),
        nbar_m: bose_occupancy(m.omega0, p.baths.t_mech)?,
        nbar_lc: bose_occupancy(c.omega_lc, p.baths.t_lc)?,
        omega_laser,
        e_drive,
    })
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be finite, got {v}")))
    }
}

fn validate_optics(o: &Optics) -> Result<()> {
    positive("wavelength_lambda", o.wavelength)?;
    positive("cavity_length_Lc", o.cavity_length)?;
    positive("finesse_F", o.finesse)?;
    positive("kappa_in_fraction", o.kappa_in_fraction)?;
    if o.kappa_in_fraction > 1.0 {
        return Err(Error::config("kappa_in_fraction must be <= 1"));
    }
    if !(0.0..1.0).contains(&o.membrane_reflectivity) {
        return Err(Error::config(format!(
            "membrane_reflectivity_Rm must lie in [0, 1), got {}",
            o.membrane_reflectivity
        )));
    }
    if !(0.0..=1.0).contains(&o.overlap) {
        return Err(Error::config(format!("overlap_Theta must lie in [0, 1], got {}", o.overlap)));
    }
    finite("membrane_axial_position_z0", o.membrane_position)?;
    finite("detuning_Delta", o.detuning)?;
    if let Some(power) = o.input_power {
        non_negative("input_power_P", power)?;
    }
    Ok(())
}

fn validate_mechanics(m: &Mechanics) -> Result<()> {
    positive("mass_m", m.mass)?;
    positive("omega0", m.omega0)?;
    positive("quality_Qm", m.quality)
}

fn validate_circuit(c: &Circuit) -> Result<()> {
    positive("inductance_L", c.inductance)?;
    positive("omegaLC", c.omega_lc)?;
    positive("quality_QLC", c.quality)?;
    positive("effective_area_Aeff", c.effective_area)?;
    positive("gap_h0", c.gap)?;
    if let Some(c0) = c.tunable_capacitance {
        positive("tunable_capacitance_C0", c0)?;
    }
    Ok(())
}

fn validate_top(p: &ParameterSet) -> Result<()> {
    non_negative("V_DC", p.drives.v_dc)?;
    non_negative("T_mech", p.baths.t_mech)?;
    non_negative("T_LC", p.baths.t_lc)?;
    match &p.coupling_mode {
        CouplingMode::Physical => {
            if p.optics.input_power.is_none() {
                return Err(Error::config("Physical coupling mode requires optics.input_power_P"));
            }
        }
        CouplingMode::Direct(d) => {
            finite("G", d.g_om)?;
            finite("g", d.g_em)?;
        }
    }
    Ok(())
}

/// Resolve a rate given either in rad/s or in Hz (`*_hz`).
fn angular(name: &str, rad: Option<f64>, hz: Option<f64>) -> Result<Option<f64>> {
    match (rad, hz) {
        (Some(_), Some(_)) => Err(Error::config(format!("give either {name} or {name}_hz, not both"))),
        (Some(w), None) => Ok(Some(w)),
        (None, Some(f)) => Ok(Some(TWO_PI * f)),
        (None, None) => Ok(None),
    }
}

fn required<T>(name: &str, v: Option<T>) -> Result<T> {
    v.ok_or_else(|| Error::config(format!("missing field `{name}`")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawOptics {
    wavelength_lambda: f64,
    cavity_length_Lc: f64,
    finesse_F: f64,
    kappa_in_fraction: f64,
    membrane_reflectivity_Rm: f64,
    overlap_Theta: Option<f64>,
    membrane_axial_position_z0: Option<f64>,
    detuning_Delta: Option<f64>,
    detuning_Delta_hz: Option<f64>,
    input_power_P: Option<f64>,
}

impl TryFrom<RawOptics> for Optics {
    type Error = Error;

    fn try_from(r: RawOptics) -> Result<Self> {
        let o = Optics {
            wavelength: r.wavelength_lambda,
            cavity_length: r.cavity_length_Lc,
            finesse: r.finesse_F,
            kappa_in_fraction: r.kappa_in_fraction,
            membrane_reflectivity: r.membrane_reflectivity_Rm,
            overlap: r.overlap_Theta.unwrap_or(1.0),
            membrane_position: r
                .membrane_axial_position_z0
                .unwrap_or_else(|| default_membrane_position(r.wavelength_lambda)),
            detuning: required("detuning_Delta", angular("detuning_Delta", r.detuning_Delta, r.detuning_Delta_hz)?)?,
            input_power: r.input_power_P,
        };
        validate_optics(&o)?;
        Ok(o)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawMechanics {
    mass_m: f64,
    omega0: Option<f64>,
    omega0_hz: Option<f64>,
    quality_Qm: f64,
}

impl TryFrom<RawMechanics> for Mechanics {
    type Error = Error;

    fn try_from(r: RawMechanics) -> Result<Self> {
        let m = Mechanics {
            mass: r.mass_m,
            omega0: required("omega0", angular("omega0", r.omega0, r.omega0_hz)?)?,
            quality: r.quality_Qm,
        };
        validate_mechanics(&m)?;
        Ok(m)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawCircuit {
    inductance_L: f64,
    omegaLC: Option<f64>,
    omegaLC_hz: Option<f64>,
    quality_QLC: f64,
    tunable_capacitance_C0: Option<f64>,
    effective_area_Aeff: f64,
    gap_h0: f64,
}

impl TryFrom<RawCircuit> for Circuit {
    type Error = Error;

    fn try_from(r: RawCircuit) -> Result<Self> {
        let omega = angular("omegaLC", r.omegaLC, r.omegaLC_hz)?;
        let mut c = Circuit {
            inductance: r.inductance_L,
            omega_lc: omega.unwrap_or(f64::NAN),
            quality: r.quality_QLC,
            tunable_capacitance: r.tunable_capacitance_C0,
            effective_area: r.effective_area_Aeff,
            gap: r.gap_h0,
        };
        match c.tunable_capacitance {
            Some(c0) => {
                positive("tunable_capacitance_C0", c0)?;
                positive("inductance_L", c.inductance)?;
                positive("effective_area_Aeff", c.effective_area)?;
                positive("gap_h0", c.gap)?;
                let c_total = c0 + membrane_capacitance_at_rest(&c);
                c.omega_lc = 1.0 / (c.inductance * c_total).sqrt();
            }
            None if omega.is_none() => {
                return Err(Error::config(
                    "circuit needs omegaLC (or omegaLC_hz) unless tunable_capacitance_C0 is given",
                ));
            }
            None => {}
        }
        validate_circuit(&c)?;
        Ok(c)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawDirect {
    G: Option<f64>,
    G_hz: Option<f64>,
    g: Option<f64>,
    g_hz: Option<f64>,
    #[serde(default)]
    spring_shift: bool,
}

impl TryFrom<RawDirect> for DirectCouplings {
    type Error = Error;

    fn try_from(r: RawDirect) -> Result<Self> {
        Ok(DirectCouplings {
            g_om: required("G", angular("G", r.G, r.G_hz)?)?,
            g_em: required("g", angular("g", r.g, r.g_hz)?)?,
            spring_shift: r.spring_shift,
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameterSet {
    optics: Optics,
    mechanics: Mechanics,
    circuit: Circuit,
    drives: Drives,
    baths: Baths,
    coupling_mode: CouplingMode,
    #[serde(default)]
    solver: SolverOptions,
}

impl TryFrom<RawParameterSet> for ParameterSet {
    type Error = Error;

    fn try_from(r: RawParameterSet) -> Result<Self> {
        let p = ParameterSet {
            optics: r.optics,
            mechanics: r.mechanics,
            circuit: r.circuit,
            drives: r.drives,
            baths: r.baths,
            coupling_mode: r.coupling_mode,
            solver: r.solver,
        };
        validate_top(&p)?;
        Ok(p)
    }
}
