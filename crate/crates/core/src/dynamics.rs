//! Linearized quantum Langevin dynamics: drift and diffusion matrices and
//! Routh–Hurwitz-equivalent stability via the drift spectrum.
//!
//! State ordering is `(δx, δp, δq, δφ, δX, δY)`.

use nalgebra::{Matrix6, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::DerivedConstants;
use crate::workpoint::WorkingPoint;

pub const DIM: usize = 6;

/// Rates and occupancies entering the linearized equations of motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub omega0: f64,
    pub omega_m: f64,
    pub omega_lc: f64,
    pub kappa: f64,
    pub delta: f64,
    pub gamma_m: f64,
    pub gamma_lc: f64,
    pub g_om: f64,
    pub g_em: f64,
    pub nbar_m: f64,
    pub nbar_lc: f64,
}

/// Drift matrix `A` and diffusion matrix `D` of `du/dt = A u + noise`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftDiffusion {
    pub a: Matrix6<f64>,
    pub d: Matrix6<f64>,
}

impl LinearModel {
    pub fn new(wp: &WorkingPoint, dc: &DerivedConstants, omega0: f64, omega_lc: f64) -> Self {
        LinearModel {
            omega0,
            omega_m: wp.omega_m,
            omega_lc,
            kappa: dc.kappa,
            delta: wp.delta,
            gamma_m: dc.gamma_m,
            gamma_lc: dc.gamma_lc,
            g_om: wp.g_om,
            g_em: wp.g_em,
            nbar_m: dc.nbar_m,
            nbar_lc: dc.nbar_lc,
        }
    }

    pub fn drift_matrix(&self) -> Matrix6<f64> {
        let s = self;
        #[rustfmt::skip]
        let a = Matrix6::new(
            0.0, s.omega0, 0.0, 0.0, 0.0, 0.0,
            -s.omega_m * s.omega_m / s.omega0, -s.gamma_m, -s.g_em, 0.0, s.g_om, 0.0,
            0.0, 0.0, 0.0, s.omega_lc, 0.0, 0.0,
            -s.g_em, 0.0, -s.omega_lc, -s.gamma_lc, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, -s.kappa, s.delta,
            s.g_om, 0.0, 0.0, 0.0, -s.delta, -s.kappa,
        );
        a
    }

    pub fn diffusion_matrix(&self) -> Matrix6<f64> {
        Matrix6::from_diagonal(&nalgebra::Vector6::new(
            0.0,
            self.gamma_m * (2.0 * self.nbar_m + 1.0),
            0.0,
            self.gamma_lc * (2.0 * self.nbar_lc + 1.0),
            self.kappa,
            self.kappa,
        ))
    }

    pub fn drift_diffusion(&self) -> DriftDiffusion {
        DriftDiffusion { a: self.drift_matrix(), d: self.diffusion_matrix() }
    }

    /// Every rate multiplied by `s`; occupancies unchanged.
    pub fn scaled(&self, s: f64) -> Self {
        LinearModel {
            omega0: self.omega0 * s,
            omega_m: self.omega_m * s,
            omega_lc: self.omega_lc * s,
            kappa: self.kappa * s,
            delta: self.delta * s,
            gamma_m: self.gamma_m * s,
            gamma_lc: self.gamma_lc * s,
            g_om: self.g_om * s,
            g_em: self.g_em * s,
            ..*self
        }
    }

    /// Same model with the electromechanical coupling switched off.
    pub fn without_lc_coupling(&self) -> Self {
        LinearModel { g_em: 0.0, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    /// `−max Re λ`; positive when stable.
    pub margin: f64,
    pub eigenvalues: Vec<Complex64>,
    pub tolerance: f64,
}

/// Eigenvalues of `A` by real Schur decomposition.
pub fn eigenvalues(a: &Matrix6<f64>) -> Result<Vec<Complex64>> {
    let scale = a.amax();
    if !scale.is_finite() {
        return Err(Error::numerical("drift matrix has non-finite entries"));
    }
    if scale == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); DIM]);
    }
    let scaled = a / scale;
    let schur = Schur::try_new(scaled, 1e-15, 10_000)
        .ok_or_else(|| Error::numerical("Schur decomposition of the drift matrix did not converge"))?;
    let mut ev: Vec<Complex64> =
        schur.complex_eigenvalues().iter().map(|z| Complex64::new(z.re * scale, z.im * scale)).collect();
    ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(ev)
}

/// The system is stable when every eigenvalue of `A` has real part below
/// `−tol`, with `tol = 1e-9 · max(ω0, κ)`.
pub fn stability(a: &Matrix6<f64>) -> Result<StabilityReport> {
    let omega0 = a[(0, 1)].abs();
    let kappa = a[(4, 4)].abs();
    let tolerance = 1e-9 * omega0.max(kappa);
    let eigenvalues = eigenvalues(a)?;
    let max_re = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport { stable: max_re < -tolerance, margin: -max_re, eigenvalues, tolerance })
}

pub fn drift_matrix(wp: &WorkingPoint, dc: &DerivedConstants, omega0: f64, omega_lc: f64) -> Matrix6<f64> {
    LinearModel::new(wp, dc, omega0, omega_lc).drift_matrix()
}

pub fn diffusion_matrix(wp: &WorkingPoint, dc: &DerivedConstants, omega0: f64, omega_lc: f64) -> Matrix6<f64> {
    LinearModel::new(wp, dc, omega0, omega_lc).diffusion_matrix()
}
