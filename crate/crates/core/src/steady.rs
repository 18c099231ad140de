//! Stationary covariance matrix, occupancies and cooling efficiency.

use nalgebra::{DMatrix, DVector, Matrix6};

use crate::dynamics::{stability, LinearModel, StabilityReport, DIM};
use crate::error::{Error, Result};
use crate::params::{CouplingMode, DerivedConstants, ParameterSet};
use crate::workpoint::{working_point_with, WorkingPoint};

/// Stationary covariance in zero-point units together with the relative
/// Lyapunov residual `‖AV + VAᵀ + D‖_max / ‖D‖_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix {
    pub v: Matrix6<f64>,
    pub residual_norm: f64,
}

impl CovarianceMatrix {
    pub fn occupancy_lc(&self) -> f64 {
        occupancy_lc(&self.v)
    }

    pub fn occupancy_mech(&self) -> f64 {
        occupancy_mech(&self.v)
    }
}

fn lyapunov_residual(a: &Matrix6<f64>, d: &Matrix6<f64>, v: &Matrix6<f64>) -> f64 {
    let r = a * v + v * a.transpose() + d;
    let dn = d.amax();
    if dn > 0.0 {
        r.amax() / dn
    } else {
        r.amax()
    }
}

fn symmetrize(v: &Matrix6<f64>) -> Matrix6<f64> {
    (v + v.transpose()) * 0.5
}

/// Solves `AV + VAᵀ = −D` through the 36×36 Kronecker system
/// `(I⊗A + A⊗I) vec V = −vec D`, with one step of iterative refinement.
pub fn solve_lyapunov(a: &Matrix6<f64>, d: &Matrix6<f64>) -> Result<CovarianceMatrix> {
    let report = stability(a)?;
    if !report.stable {
        return Err(Error::unstable(format!(
            "drift matrix has an eigenvalue with real part {:.6e} rad/s (tolerance {:.3e})",
            -report.margin, report.tolerance
        )));
    }
    solve_lyapunov_unchecked(a, d)
}

fn solve_lyapunov_unchecked(a: &Matrix6<f64>, d: &Matrix6<f64>) -> Result<CovarianceMatrix> {
    let s = a.amax();
    if !(s > 0.0) || !d.amax().is_finite() {
        return Err(Error::numerical("drift matrix is zero or diffusion is not finite"));
    }
    let a_s = a / s;
    let d_s = d / s;
    let n = DIM * DIM;
    let a_dyn = DMatrix::from_iterator(DIM, DIM, a_s.iter().copied());
    let eye = DMatrix::<f64>::identity(DIM, DIM);
    let k = eye.kronecker(&a_dyn) + a_dyn.kronecker(&eye);
    let rhs = -DVector::from_iterator(n, d_s.iter().copied());

    let lu = k.clone().lu();
    let mut x =
        lu.solve(&rhs).ok_or_else(|| Error::numerical("Kronecker system for the Lyapunov equation is singular"))?;
    let r = &rhs - &k * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    if x.iter().any(|z| !z.is_finite()) {
        return Err(Error::numerical("Lyapunov solve produced non-finite entries"));
    }
    let v = symmetrize(&Matrix6::from_iterator(x.iter().copied()));
    Ok(CovarianceMatrix { residual_norm: lyapunov_residual(a, d, &v), v })
}

fn clipped(value: f64, what: &str) -> f64 {
    if value < 0.0 {
        if value < -1e-9 {
            log::warn!("{what} occupancy {value:e} is negative beyond round-off; clipped to 0");
        }
        0.0
    } else {
        value
    }
}

/// `(V₃₃ + V₄₄ − 1)/2`, clipped at zero.
pub fn occupancy_lc(v: &Matrix6<f64>) -> f64 {
    clipped((v[(2, 2)] + v[(3, 3)] - 1.0) / 2.0, "LC")
}

/// `(V₁₁ + V₂₂ − 1)/2`, clipped at zero.
pub fn occupancy_mech(v: &Matrix6<f64>) -> f64 {
    clipped((v[(0, 0)] + v[(1, 1)] - 1.0) / 2.0, "mechanical")
}

/// Full pipeline output for one parameter point.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub derived: DerivedConstants,
    pub working_point: WorkingPoint,
    pub model: LinearModel,
    pub stability: StabilityReport,
    pub covariance: CovarianceMatrix,
    pub n_lc_eff: f64,
    pub n_m_eff: f64,
}

/// Working point and linear model for a parameter set.
pub fn linearize(p: &ParameterSet) -> Result<(DerivedConstants, WorkingPoint, LinearModel)> {
    let dc = p.derive()?;
    let wp = working_point_with(p, &dc)?;
    let model = LinearModel::new(&wp, &dc, p.mechanics.omega0, p.circuit.omega_lc);
    Ok((dc, wp, model))
}

pub fn steady_state(p: &ParameterSet) -> Result<SteadyState> {
    let (derived, working_point, model) = linearize(p)?;
    let dd = model.drift_diffusion();
    let stability = stability(&dd.a)?;
    if !stability.stable {
        return Err(Error::unstable(format!(
            "linearized dynamics unstable: max Re(lambda) = {:.6e} rad/s",
            -stability.margin
        )));
    }
    let covariance = solve_lyapunov_unchecked(&dd.a, &dd.d)?;
    Ok(SteadyState {
        n_lc_eff: covariance.occupancy_lc(),
        n_m_eff: covariance.occupancy_mech(),
        derived,
        working_point,
        model,
        stability,
        covariance,
    })
}

/// Same parameters with the electromechanical interaction switched off.
pub fn uncoupled_baseline(p: &ParameterSet) -> ParameterSet {
    let mut q = p.clone();
    match &mut q.coupling_mode {
        CouplingMode::Direct(d) => d.g_em = 0.0,
        CouplingMode::Physical => q.drives.v_dc = 0.0,
    }
    q
}

fn has_zero_lc_coupling(p: &ParameterSet) -> bool {
    match &p.coupling_mode {
        CouplingMode::Direct(d) => d.g_em == 0.0,
        CouplingMode::Physical => p.drives.v_dc == 0.0,
    }
}

/// `η = n̄_LC^eff(g = 0) / n̄_LC^eff(g)`.
pub fn cooling_efficiency(p: &ParameterSet) -> Result<f64> {
    if has_zero_lc_coupling(p) {
        steady_state(p)?;
        return Ok(1.0);
    }
    let cooled = steady_state(p)?.n_lc_eff;
    let baseline = steady_state(&uncoupled_baseline(p))?.n_lc_eff;
    Ok(efficiency_ratio(baseline, cooled))
}

pub(crate) fn efficiency_ratio(baseline: f64, cooled: f64) -> f64 {
    if cooled > 0.0 {
        baseline / cooled
    } else if baseline > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

// Dormand–Prince 5(4) tableau. The system is autonomous, so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Integrates `dV/dt = AV + VAᵀ + D` from `V0` over `[0, t_final]` with
/// adaptive Dormand–Prince steps at relative tolerance `rel_tol`.
///
/// Time is rescaled by `max|A|` internally. `V` is symmetrized after each
/// accepted step.
pub fn evolve_covariance(
    a: &Matrix6<f64>,
    d: &Matrix6<f64>,
    v0: &Matrix6<f64>,
    t_final: f64,
    rel_tol: f64,
) -> Result<Matrix6<f64>> {
    if !(t_final >= 0.0) || !(rel_tol > 0.0) {
        return Err(Error::domain("t_final must be >= 0 and rel_tol > 0"));
    }
    let s = a.amax();
    if s == 0.0 {
        return Ok(v0 + d * t_final);
    }
    let a_s = a / s;
    let a_t = a_s.transpose();
    let d_s = d / s;
    let rhs = |v: &Matrix6<f64>| a_s * v + v * a_t + d_s;

    let tau_end = t_final * s;
    let mut tau = 0.0;
    let mut v = *v0;
    let mut h = (0.01f64).min(tau_end);
    let mut k = [Matrix6::<f64>::zeros(); 7];
    k[0] = rhs(&v);
    let min_step = 1e-14 * tau_end.max(1.0);

    while tau < tau_end {
        if tau + h > tau_end {
            h = tau_end - tau;
        }
        for i in 1..7 {
            let mut y = v;
            for (j, kj) in k.iter().enumerate().take(i) {
                if A[i][j] != 0.0 {
                    y += kj * (h * A[i][j]);
                }
            }
            k[i] = rhs(&y);
        }
        let mut v5 = v;
        let mut diff = Matrix6::<f64>::zeros();
        for i in 0..7 {
            v5 += k[i] * (h * B5[i]);
            diff += k[i] * (h * (B5[i] - B4[i]));
        }
        let scale = v.amax().max(v5.amax());
        let err = if scale > 0.0 { diff.amax() / (rel_tol * scale) } else { diff.amax() / rel_tol };
        if err <= 1.0 {
            tau += h;
            v = symmetrize(&v5);
            // first-same-as-last
            k[0] = if v == v5 { k[6] } else { rhs(&v) };
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= grow;
        } else {
            if !err.is_finite() {
                return Err(Error::numerical("covariance integration produced non-finite values"));
            }
            h *= (0.9 * err.powf(-0.25)).clamp(0.1, 0.9);
            if h < min_step {
                return Err(Error::numerical(format!(
                    "step size underflow at t = {:.6e} s (h = {:.3e} s)",
                    tau / s,
                    h / s
                )));
            }
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{bose_occupancy, DirectCouplings};

    fn reference() -> ParameterSet {
        ParameterSet::reference_device()
    }

    fn with_couplings(g_om_k: f64, g_em_k: f64) -> ParameterSet {
        let mut p = reference();
        let kappa = p.derive().unwrap().kappa;
        p.coupling_mode =
            CouplingMode::Direct(DirectCouplings { g_om: g_om_k * kappa, g_em: g_em_k * kappa, spring_shift: false });
        p
    }

    #[test]
    fn vacuum_blocks() {
        let mut p = with_couplings(0.0, 0.0);
        p.baths.t_mech = 0.0;
        p.baths.t_lc = 0.0;
        let ss = steady_state(&p).unwrap();
        let v = ss.covariance.v;
        for i in 0..DIM {
            for j in 0..DIM {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert!((v[(i, j)] - expect).abs() < 1e-9, "V[{i},{j}] = {}", v[(i, j)]);
            }
        }
        assert_eq!(ss.n_lc_eff, 0.0);
        assert!(ss.n_m_eff < 1e-9);
    }

    #[test]
    fn decoupled_thermal_lc() {
        let p = with_couplings(0.0, 0.0);
        let ss = steady_state(&p).unwrap();
        let n = bose_occupancy(p.circuit.omega_lc, p.baths.t_lc).unwrap();
        assert!((n - 207.8666).abs() < 1e-3);
        let v = ss.covariance.v;
        assert!((v[(2, 2)] - (n + 0.5)).abs() < 1e-8 * n);
        assert!((v[(3, 3)] - (n + 0.5)).abs() < 1e-8 * n);
        assert!((ss.n_lc_eff - n).abs() < 1e-8 * n);
        assert!((ss.n_m_eff - ss.derived.nbar_m).abs() < 1e-8 * n);
    }

    #[test]
    fn reference_point_cools_below_one_quantum() {
        let mut p = reference();
        p.direct_mut().unwrap().spring_shift = true;
        let ss = steady_state(&p).unwrap();
        assert!(ss.n_lc_eff > 0.55 && ss.n_lc_eff < 0.85, "{}", ss.n_lc_eff);
        assert!(ss.covariance.residual_norm <= 1e-8);
    }

    #[test]
    fn covariance_invariants() {
        let ss = steady_state(&reference()).unwrap();
        let v = ss.covariance.v;
        assert!((v - v.transpose()).amax() <= 1e-12 * v.amax());
        assert!(v[(0, 0)] + v[(1, 1)] >= 1.0);
        assert!(v[(2, 2)] + v[(3, 3)] >= 1.0);
        assert!(ss.covariance.residual_norm <= 1e-8);
    }

    #[test]
    fn unstable_drift_is_rejected() {
        let (_, _, mut m) = linearize(&reference()).unwrap();
        m.delta = -m.delta;
        m.g_om *= 3.0;
        let dd = m.drift_diffusion();
        assert!(matches!(solve_lyapunov(&dd.a, &dd.d), Err(Error::Unstable(_))));
    }

    #[test]
    fn efficiency_is_one_without_coupling() {
        assert_eq!(cooling_efficiency(&with_couplings(0.8, 0.0)).unwrap(), 1.0);
        let mut p = reference();
        p.coupling_mode = CouplingMode::Physical;
        p.optics.input_power = Some(1e-6);
        assert_eq!(cooling_efficiency(&p).unwrap(), 1.0);
    }

    #[test]
    fn efficiency_exceeds_one_when_cooling() {
        let eta = cooling_efficiency(&reference()).unwrap();
        assert!(eta > 100.0, "{eta}");
    }

    #[test]
    fn baseline_is_bose_occupancy() {
        let p = uncoupled_baseline(&reference());
        let ss = steady_state(&p).unwrap();
        let n = ss.derived.nbar_lc;
        assert!((ss.n_lc_eff - n).abs() < 1e-8 * n);
    }

    #[test]
    fn negative_round_off_is_clipped() {
        let mut v = Matrix6::identity() * 0.5;
        v[(2, 2)] = 0.5 - 1e-12;
        assert_eq!(occupancy_lc(&v), 0.0);
        v[(2, 2)] = 0.1;
        assert_eq!(occupancy_lc(&v), 0.0);
    }

    #[test]
    fn scalar_relaxation_closed_form() {
        // dv/dt = −2κ v + κ relaxes to ½; embedded as the cavity block
        let kappa = 3.0;
        let mut a = Matrix6::zeros();
        let mut d = Matrix6::zeros();
        for i in 0..DIM {
            a[(i, i)] = -kappa;
            d[(i, i)] = kappa;
        }
        let t = 2.0;
        let v = evolve_covariance(&a, &d, &Matrix6::zeros(), t, 1e-10).unwrap();
        let expect = 0.5 * (1.0 - (-2.0 * kappa * t).exp());
        assert!((v[(0, 0)] - expect).abs() < 1e-9, "{} {expect}", v[(0, 0)]);
        let v = evolve_covariance(&a, &d, &Matrix6::zeros(), 20.0, 1e-10).unwrap();
        assert!((v[(5, 5)] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_diffusion_keeps_zero() {
        let (_, _, m) = linearize(&reference()).unwrap();
        let v = evolve_covariance(&m.drift_matrix(), &Matrix6::zeros(), &Matrix6::zeros(), 1e-3, 1e-8).unwrap();
        assert_eq!(v, Matrix6::zeros());
    }

    #[test]
    fn time_domain_matches_lyapunov_at_moderate_q() {
        let mut p = with_couplings(0.5, 0.2);
        p.mechanics.quality = 300.0;
        p.circuit.quality = 300.0;
        let ss = steady_state(&p).unwrap();
        let dd = ss.model.drift_diffusion();
        let t = 20.0 / ss.stability.margin;
        let v = evolve_covariance(&dd.a, &dd.d, &Matrix6::zeros(), t, 1e-11).unwrap();
        let err = (v - ss.covariance.v).amax() / ss.covariance.v.amax();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn invalid_time_arguments() {
        let z = Matrix6::zeros();
        assert!(evolve_covariance(&z, &z, &z, -1.0, 1e-8).is_err());
        assert!(evolve_covariance(&z, &z, &z, 1.0, 0.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn occupancies_are_scale_invariant(s in 1e-3f64..1e3, gk in 0.01f64..0.3) {
                let p = with_couplings(0.8, gk);
                let (_, _, m) = linearize(&p).unwrap();
                let a = solve_lyapunov(&m.drift_matrix(), &m.diffusion_matrix()).unwrap();
                let ms = m.scaled(s);
                let b = solve_lyapunov(&ms.drift_matrix(), &ms.diffusion_matrix()).unwrap();
                prop_assert!((a.occupancy_lc() / b.occupancy_lc() - 1.0).abs() < 1e-8);
                prop_assert!((a.occupancy_mech() / b.occupancy_mech() - 1.0).abs() < 1e-8);
            }

            #[test]
            fn uncertainty_bounds_hold(gk in 1e-3f64..0.4, bk in 1e-3f64..1.0, t in 0.0f64..1.0) {
                let mut p = with_couplings(bk, gk);
                p.baths.t_lc = t;
                p.baths.t_mech = t;
                if let Ok(ss) = steady_state(&p) {
                    let v = ss.covariance.v;
                    prop_assert!(v[(0, 0)] + v[(1, 1)] >= 1.0 - 1e-9);
                    prop_assert!(v[(2, 2)] + v[(3, 3)] >= 1.0 - 1e-9);
                    prop_assert!(ss.covariance.residual_norm <= 1e-8);
                }
            }
        }
    }
}
