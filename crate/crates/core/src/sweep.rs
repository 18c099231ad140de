//! One- and two-axis parameter sweeps over the steady-state pipeline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::stability;
use crate::error::{Error, Result};
use crate::output::{Cell, Table};
use crate::params::{CouplingMode, ParameterSet};
use crate::sideband::{cooperativities, sideband_estimate};
use crate::steady::{efficiency_ratio, linearize, solve_lyapunov, steady_state, uncoupled_baseline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Output {
    #[serde(rename = "n_lc_eff")]
    NLcEff,
    #[serde(rename = "n_m_eff")]
    NMEff,
    #[serde(rename = "eta")]
    Eta,
    #[serde(rename = "stability_margin")]
    StabilityMargin,
    #[serde(rename = "C_om")]
    COm,
    #[serde(rename = "C_em")]
    CEm,
    #[serde(rename = "approx_n_lc_eff")]
    ApproxNLcEff,
    #[serde(rename = "g_rad_s")]
    GEm,
    #[serde(rename = "G_rad_s")]
    GOm,
}

impl Output {
    pub const ALL: [Output; 9] = [
        Output::NLcEff,
        Output::NMEff,
        Output::Eta,
        Output::StabilityMargin,
        Output::COm,
        Output::CEm,
        Output::ApproxNLcEff,
        Output::GEm,
        Output::GOm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Output::NLcEff => "n_lc_eff",
            Output::NMEff => "n_m_eff",
            Output::Eta => "eta",
            Output::StabilityMargin => "stability_margin",
            Output::COm => "C_om",
            Output::CEm => "C_em",
            Output::ApproxNLcEff => "approx_n_lc_eff",
            Output::GEm => "g_rad_s",
            Output::GOm => "G_rad_s",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValues {
    List(Vec<f64>),
    Range { min: f64, max: f64, count: usize, spacing: Spacing },
}

impl AxisValues {
    pub fn expand(&self) -> Result<Vec<f64>> {
        let v = match *self {
            AxisValues::List(ref v) => v.clone(),
            AxisValues::Range { min, max, count, spacing } => {
                if count == 0 {
                    return Err(Error::config("axis count must be >= 1"));
                }
                if spacing == Spacing::Log && !(min > 0.0 && max > 0.0) {
                    return Err(Error::config("log spacing needs min, max > 0"));
                }
                if count == 1 {
                    vec![min]
                } else {
                    let n = (count - 1) as f64;
                    (0..count)
                        .map(|i| {
                            let t = i as f64 / n;
                            match spacing {
                                Spacing::Linear => min + (max - min) * t,
                                Spacing::Log => (min.ln() + (max.ln() - min.ln()) * t).exp(),
                            }
                        })
                        .collect()
                }
            }
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("axis values must be finite and non-empty"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleBy {
    Kappa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// Dot path into the serialized parameter set, e.g. `gap_h0`-style leaf
    /// names under their section: `circuit.gap_h0`, `coupling_mode.g`.
    /// A trailing `_hz` converts from Hz to rad/s.
    pub parameter_path: String,
    pub values: AxisValues,
    /// Multiply values by the base configuration's κ before applying.
    #[serde(default)]
    pub scale_by: Option<ScaleBy>,
}

impl Axis {
    pub fn label(&self) -> String {
        match self.scale_by {
            Some(ScaleBy::Kappa) => format!("{}/kappa", self.parameter_path),
            None => self.parameter_path.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeTag {
    Physical,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub outputs: Vec<Output>,
    #[serde(default)]
    pub mode: Option<ModeTag>,
}

impl SweepSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::config(format!("invalid sweep spec: {e}")))
    }

    pub fn outputs(&self) -> Vec<Output> {
        if self.outputs.is_empty() {
            Output::ALL.to_vec()
        } else {
            self.outputs.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepStatus {
    #[serde(rename = "stable")]
    Stable,
    #[serde(rename = "unstable")]
    Unstable,
    #[serde(rename = "pull-in")]
    PullIn,
    #[serde(rename = "error")]
    Error,
}

impl SweepStatus {
    pub fn tag(self) -> &'static str {
        match self {
            SweepStatus::Stable => "stable",
            SweepStatus::Unstable => "unstable",
            SweepStatus::PullIn => "pull-in",
            SweepStatus::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
    pub status: SweepStatus,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis_labels: Vec<String>,
    pub outputs: Vec<Output>,
    pub records: Vec<SweepRecord>,
}

impl SweepTable {
    pub fn table(&self) -> Table {
        let mut cols = self.axis_labels.clone();
        cols.extend(self.outputs.iter().map(|o| o.name().to_string()));
        cols.push("status".into());
        let mut t = Table::new(cols);
        for r in &self.records {
            let mut row: Vec<Cell> = r.coords.iter().map(|&x| Cell::Num(x)).collect();
            row.extend(r.values.iter().map(|&x| Cell::Num(x)));
            row.push(Cell::Text(r.status.tag().into()));
            t.push(row);
        }
        t
    }

    pub fn to_csv(&self, comment: Option<&str>) -> String {
        self.table().to_csv(comment)
    }

    pub fn column(&self, o: Output) -> Option<Vec<f64>> {
        let i = self.outputs.iter().position(|&x| x == o)?;
        Some(self.records.iter().map(|r| r.values[i]).collect())
    }
}

fn locate<'a>(root: &'a mut Value, path: &str) -> Result<&'a mut Value> {
    let mut cur = root;
    for key in path.split('.') {
        let obj =
            cur.as_object_mut().ok_or_else(|| Error::config(format!("parameter path '{path}' does not resolve")))?;
        if !obj.contains_key(key) && obj.len() == 1 && obj.contains_key("Direct") {
            cur = obj.get_mut("Direct").expect("checked");
            cur = cur
                .as_object_mut()
                .and_then(|o| o.get_mut(key))
                .ok_or_else(|| Error::config(format!("parameter path '{path}' does not resolve")))?;
            continue;
        }
        cur = obj.get_mut(key).ok_or_else(|| Error::config(format!("parameter path '{path}' does not resolve")))?;
    }
    if !(cur.is_number() || cur.is_null()) {
        return Err(Error::config(format!("parameter path '{path}' is not a numeric field")));
    }
    Ok(cur)
}

/// Writes `value` at a dot path of a serialized parameter set. A final
/// segment ending in `_hz` targets the rad/s field with a 2π factor.
pub fn set_path(root: &mut Value, path: &str, value: f64) -> Result<()> {
    let number = |x: f64| {
        serde_json::Number::from_f64(x)
            .map(Value::Number)
            .ok_or_else(|| Error::config(format!("cannot set '{path}' to {x}")))
    };
    match locate(root, path) {
        Ok(slot) => {
            *slot = number(value)?;
            Ok(())
        }
        Err(e) => match path.strip_suffix("_hz") {
            Some(base) => {
                let slot = locate(root, base).map_err(|_| e)?;
                *slot = number(value * std::f64::consts::TAU)?;
                Ok(())
            }
            None => Err(e),
        },
    }
}

/// Outputs and status for one parameter point.
pub fn evaluate_point(p: &ParameterSet, outputs: &[Output]) -> (SweepStatus, Vec<f64>, Option<String>) {
    let mut vals = vec![f64::NAN; outputs.len()];
    let set = |vals: &mut Vec<f64>, o: Output, x: f64| {
        if let Some(i) = outputs.iter().position(|&y| y == o) {
            vals[i] = x;
        }
    };
    let fail = |e: &Error| match e {
        Error::PullIn(_) => SweepStatus::PullIn,
        Error::Unstable(_) => SweepStatus::Unstable,
        _ => SweepStatus::Error,
    };

    let (dc, wp, model) = match linearize(p) {
        Ok(x) => x,
        Err(e) => return (fail(&e), vals, Some(e.to_string())),
    };
    set(&mut vals, Output::GEm, wp.g_em);
    set(&mut vals, Output::GOm, wp.g_om);
    let (c_om, c_em, _) = cooperativities(wp.g_om, wp.g_em, dc.kappa, dc.gamma_m, dc.gamma_lc);
    set(&mut vals, Output::COm, c_om);
    set(&mut vals, Output::CEm, c_em);
    let needs_dynamics = outputs.iter().any(|o| !matches!(o, Output::GEm | Output::GOm | Output::COm | Output::CEm));
    if !needs_dynamics {
        return (SweepStatus::Stable, vals, None);
    }
    let dd = model.drift_diffusion();
    let report = match stability(&dd.a) {
        Ok(r) => r,
        Err(e) => return (fail(&e), vals, Some(e.to_string())),
    };
    set(&mut vals, Output::StabilityMargin, report.margin);
    if !report.stable {
        return (SweepStatus::Unstable, vals, None);
    }
    let cov = match solve_lyapunov(&dd.a, &dd.d) {
        Ok(c) => c,
        Err(e) => return (fail(&e), vals, Some(e.to_string())),
    };
    let n_lc = cov.occupancy_lc();
    set(&mut vals, Output::NLcEff, n_lc);
    set(&mut vals, Output::NMEff, cov.occupancy_mech());
    set(&mut vals, Output::ApproxNLcEff, sideband_estimate(&model).n_lc_eff);
    if outputs.contains(&Output::Eta) {
        let eta = if wp.g_em == 0.0 {
            Ok(1.0)
        } else {
            steady_state(&uncoupled_baseline(p)).map(|b| efficiency_ratio(b.n_lc_eff, n_lc))
        };
        match eta {
            Ok(x) => set(&mut vals, Output::Eta, x),
            Err(e) => return (SweepStatus::Error, vals, Some(format!("baseline: {e}"))),
        }
    }
    (SweepStatus::Stable, vals, None)
}

struct Plan {
    base: Value,
    axes: Vec<(String, Vec<f64>, f64)>,
    labels: Vec<String>,
    outputs: Vec<Output>,
}

fn plan(p: &ParameterSet, spec: &SweepSpec) -> Result<Plan> {
    if spec.axes.is_empty() || spec.axes.len() > 2 {
        return Err(Error::config(format!("a sweep needs 1 or 2 axes, got {}", spec.axes.len())));
    }
    match (spec.mode, &p.coupling_mode) {
        (Some(ModeTag::Physical), CouplingMode::Direct(_)) | (Some(ModeTag::Direct), CouplingMode::Physical) => {
            return Err(Error::config("sweep mode does not match the configuration's coupling_mode"));
        }
        _ => {}
    }
    let base = p.to_json_value();
    let kappa = p.derive()?.kappa;
    let mut axes = Vec::new();
    for a in &spec.axes {
        let values = a.values.expand()?;
        let mut probe = base.clone();
        set_path(&mut probe, &a.parameter_path, values[0])?;
        let factor = match a.scale_by {
            Some(ScaleBy::Kappa) => kappa,
            None => 1.0,
        };
        axes.push((a.parameter_path.clone(), values, factor));
    }
    Ok(Plan { base, labels: spec.axes.iter().map(Axis::label).collect(), axes, outputs: spec.outputs() })
}

impl Plan {
    fn len(&self) -> usize {
        self.axes.iter().map(|a| a.1.len()).product()
    }

    fn coords(&self, index: usize) -> Vec<f64> {
        // row-major: the last axis varies fastest
        let mut rem = index;
        let mut out = vec![0.0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            out[k] = a.1[rem % a.1.len()];
            rem /= a.1.len();
        }
        out
    }

    fn record(&self, index: usize) -> SweepRecord {
        let coords = self.coords(index);
        let mut v = self.base.clone();
        let mut applied = Ok(());
        for ((path, _, factor), &x) in self.axes.iter().zip(&coords) {
            applied = applied.and_then(|_| set_path(&mut v, path, x * factor));
        }
        let p = applied.and_then(|_| ParameterSet::from_json_value(v));
        let (status, values, message) = match p {
            Ok(p) => evaluate_point(&p, &self.outputs),
            Err(e) => (SweepStatus::Error, vec![f64::NAN; self.outputs.len()], Some(e.to_string())),
        };
        SweepRecord { coords, values, status, message }
    }

    fn table(&self, records: Vec<SweepRecord>) -> SweepTable {
        SweepTable { axis_labels: self.labels.clone(), outputs: self.outputs.clone(), records }
    }
}

/// Evaluates every grid point on the rayon pool. Records come back in
/// row-major order; failing points are tagged, never dropped.
pub fn run_sweep(p: &ParameterSet, spec: &SweepSpec) -> Result<SweepTable> {
    let plan = plan(p, spec)?;
    let records = (0..plan.len()).into_par_iter().map(|i| plan.record(i)).collect();
    Ok(plan.table(records))
}

pub fn run_sweep_serial(p: &ParameterSet, spec: &SweepSpec) -> Result<SweepTable> {
    let plan = plan(p, spec)?;
    let records = (0..plan.len()).map(|i| plan.record(i)).collect();
    Ok(plan.table(records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g_axis(count: usize) -> Axis {
        Axis {
            parameter_path: "coupling_mode.g".into(),
            values: AxisValues::Range { min: 1e-3, max: 1.0, count, spacing: Spacing::Log },
            scale_by: Some(ScaleBy::Kappa),
        }
    }

    fn spring() -> ParameterSet {
        let mut p = ParameterSet::reference_device();
        p.direct_mut().unwrap().spring_shift = true;
        p
    }

    #[test]
    fn axis_expansion() {
        let v = AxisValues::Range { min: 1.0, max: 100.0, count: 3, spacing: Spacing::Log }.expand().unwrap();
        assert!((v[1] - 10.0).abs() < 1e-12 && (v[2] - 100.0).abs() < 1e-12);
        let v = AxisValues::Range { min: 0.0, max: 1.0, count: 5, spacing: Spacing::Linear }.expand().unwrap();
        assert_eq!(v, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(AxisValues::Range { min: 0.0, max: 1.0, count: 5, spacing: Spacing::Log }.expand().is_err());
        assert!(AxisValues::List(vec![]).expand().is_err());
    }

    #[test]
    fn spec_parses_from_json() {
        let s = SweepSpec::from_json_str(
            r#"{"axes":[{"parameter_path":"coupling_mode.g","values":{"min":0.001,"max":1,"count":4,"spacing":"log"},
                "scale_by":"kappa"},{"parameter_path":"baths.T_LC","values":[0.01,0.3]}],
                "outputs":["n_lc_eff","eta"],"mode":"Direct"}"#,
        )
        .unwrap();
        assert_eq!(s.axes.len(), 2);
        assert_eq!(s.outputs, vec![Output::NLcEff, Output::Eta]);
        assert!(SweepSpec::from_json_str(r#"{"axes":[],"bogus":1}"#).is_err());
    }

    #[test]
    fn paths_resolve() {
        let mut v = ParameterSet::reference_device().to_json_value();
        set_path(&mut v, "circuit.gap_h0", 3e-6).unwrap();
        set_path(&mut v, "coupling_mode.Direct.G", 5.0).unwrap();
        set_path(&mut v, "coupling_mode.g", 7.0).unwrap();
        set_path(&mut v, "mechanics.omega0_hz", 2e6).unwrap();
        let p = ParameterSet::from_json_value(v).unwrap();
        assert_eq!(p.circuit.gap, 3e-6);
        assert_eq!(p.direct().unwrap().g_om, 5.0);
        assert_eq!(p.direct().unwrap().g_em, 7.0);
        assert!((p.mechanics.omega0 - std::f64::consts::TAU * 2e6).abs() < 1e-6);
    }

    #[test]
    fn unresolvable_path_fails_before_computation() {
        let mut spec = SweepSpec { axes: vec![g_axis(3)], outputs: vec![], mode: None };
        spec.axes[0].parameter_path = "circuit.nonsense".into();
        assert!(matches!(run_sweep(&spring(), &spec), Err(Error::Config(_))));
        spec.axes[0].parameter_path = "circuit".into();
        assert!(matches!(run_sweep(&spring(), &spec), Err(Error::Config(_))));
    }

    #[test]
    fn too_many_axes_or_wrong_mode() {
        let spec = SweepSpec { axes: vec![g_axis(2), g_axis(2), g_axis(2)], outputs: vec![], mode: None };
        assert!(run_sweep(&spring(), &spec).is_err());
        let spec = SweepSpec { axes: vec![g_axis(2)], outputs: vec![], mode: Some(ModeTag::Physical) };
        assert!(matches!(run_sweep(&spring(), &spec), Err(Error::Config(_))));
    }

    #[test]
    fn row_major_order_and_tags() {
        let spec = SweepSpec {
            axes: vec![
                Axis {
                    parameter_path: "coupling_mode.G".into(),
                    values: AxisValues::List(vec![0.3, 0.8]),
                    scale_by: Some(ScaleBy::Kappa),
                },
                g_axis(4),
            ],
            outputs: vec![Output::NLcEff, Output::GEm],
            mode: Some(ModeTag::Direct),
        };
        let t = run_sweep(&spring(), &spec).unwrap();
        assert_eq!(t.records.len(), 8);
        assert_eq!(t.records[0].coords[0], 0.3);
        assert_eq!(t.records[3].coords[0], 0.3);
        assert_eq!(t.records[4].coords[0], 0.8);
        // g = κ lies beyond the pull-in limit
        assert_eq!(t.records[3].status, SweepStatus::PullIn);
        assert!(t.records[3].values[0].is_nan());
        assert_eq!(t.records[0].status, SweepStatus::Stable);
        let csv = t.to_csv(None);
        assert!(csv.starts_with("coupling_mode.G/kappa,coupling_mode.g/kappa,n_lc_eff,g_rad_s,status\n"));
        assert_eq!(csv.lines().count(), 9);
    }

    #[test]
    fn single_point_matches_steady_state() {
        let p = spring();
        let kappa = p.derive().unwrap().kappa;
        let spec = SweepSpec {
            axes: vec![Axis {
                parameter_path: "coupling_mode.g".into(),
                values: AxisValues::List(vec![0.12]),
                scale_by: Some(ScaleBy::Kappa),
            }],
            outputs: vec![],
            mode: None,
        };
        let t = run_sweep(&p, &spec).unwrap();
        let mut q = p.clone();
        q.direct_mut().unwrap().g_em = 0.12 * kappa;
        let ss = steady_state(&q).unwrap();
        assert_eq!(t.column(Output::NLcEff).unwrap()[0], ss.n_lc_eff);
        assert_eq!(t.column(Output::NMEff).unwrap()[0], ss.n_m_eff);
        assert_eq!(t.column(Output::StabilityMargin).unwrap()[0], ss.stability.margin);
        assert_eq!(t.column(Output::Eta).unwrap()[0], crate::steady::cooling_efficiency(&q).unwrap());
    }

    #[test]
    fn reference_scan_finds_quantum_minimum() {
        let spec = SweepSpec { axes: vec![g_axis(50)], outputs: vec![Output::NLcEff], mode: None };
        let t = run_sweep(&spring(), &spec).unwrap();
        let (i, n) = t
            .column(Output::NLcEff)
            .unwrap()
            .into_iter()
            .enumerate()
            .filter(|(_, x)| x.is_finite())
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(n > 0.55 && n < 0.85, "{n}");
        let g = t.records[i].coords[0];
        assert!(g > 0.08 && g < 0.18, "{g}");
    }

    #[test]
    fn parallel_equals_serial() {
        let spec = SweepSpec {
            axes: vec![
                g_axis(7),
                Axis { parameter_path: "baths.T_LC".into(), values: AxisValues::List(vec![0.01, 0.3]), scale_by: None },
            ],
            outputs: vec![],
            mode: None,
        };
        let a = run_sweep(&spring(), &spec).unwrap();
        let b = run_sweep_serial(&spring(), &spec).unwrap();
        assert_eq!(a.to_csv(None), b.to_csv(None));
        assert_eq!(a.to_csv(None), run_sweep(&spring(), &spec).unwrap().to_csv(None));
    }
}
