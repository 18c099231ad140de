//! Datasets behind the published figures: g versus bias and gap, cooling
//! efficiency maps, occupancy scans and exact-versus-approximate panels.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::output::{sidecar, Table};
use crate::params::{CouplingMode, ParameterSet};
use crate::sweep::{run_sweep, Axis, AxisValues, ModeTag, Output, ScaleBy, Spacing, SweepSpec, SweepTable};

pub const FIGURE_IDS: [&str; 7] = ["fig2", "fig3a", "fig3b", "fig3c", "fig3d", "fig4a", "fig4b"];

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub sweep: SweepTable,
    pub sidecar: Value,
}

impl Dataset {
    pub fn table(&self) -> Table {
        self.sweep.table()
    }
}

/// Device of the cooling figures: Direct couplings with the electrostatic
/// spring shift applied to ω_m.
pub fn cooling_device(q_lc: f64, temperature: f64) -> ParameterSet {
    let mut p = ParameterSet::reference_device();
    p.circuit.quality = q_lc;
    p.baths.t_lc = temperature;
    p.baths.t_mech = temperature;
    p.direct_mut().expect("reference device is in Direct mode").spring_shift = true;
    p
}

fn scaled_axis(path: &str, count: usize) -> Axis {
    Axis {
        parameter_path: path.into(),
        values: AxisValues::Range { min: 1e-3, max: 1.0, count, spacing: Spacing::Log },
        scale_by: Some(ScaleBy::Kappa),
    }
}

fn fixed_axis(path: &str, values: Vec<f64>, scale: Option<ScaleBy>) -> Axis {
    Axis { parameter_path: path.into(), values: AxisValues::List(values), scale_by: scale }
}

/// Efficiency map over `(g/κ, G/κ)`, both log-spaced on `[1e-3, 1]`.
pub fn efficiency_map(p: &ParameterSet, count: usize) -> Result<SweepTable> {
    let spec = SweepSpec {
        axes: vec![scaled_axis("coupling_mode.g", count), scaled_axis("coupling_mode.G", count)],
        outputs: vec![Output::Eta, Output::NLcEff, Output::StabilityMargin],
        mode: Some(ModeTag::Direct),
    };
    run_sweep(p, &spec)
}

/// Occupancy scan over `g/κ` at fixed `G/κ`.
pub fn occupancy_scan(p: &ParameterSet, g_om_over_kappa: f64, count: usize) -> Result<SweepTable> {
    let spec = SweepSpec {
        axes: vec![
            fixed_axis("coupling_mode.G", vec![g_om_over_kappa], Some(ScaleBy::Kappa)),
            scaled_axis("coupling_mode.g", count),
        ],
        outputs: vec![Output::NLcEff, Output::ApproxNLcEff, Output::NMEff, Output::Eta],
        mode: Some(ModeTag::Direct),
    };
    run_sweep(p, &spec)
}

fn comparison(p: &ParameterSet, qualities: &[f64], count: usize) -> Result<SweepTable> {
    let spec = SweepSpec {
        axes: vec![
            fixed_axis("circuit.quality_QLC", qualities.to_vec(), None),
            fixed_axis("coupling_mode.G", vec![0.8], Some(ScaleBy::Kappa)),
            scaled_axis("coupling_mode.g", count),
        ],
        outputs: vec![Output::NLcEff, Output::ApproxNLcEff],
        mode: Some(ModeTag::Direct),
    };
    // three axes exceed the sweep limit, so run one sweep per quality factor
    let mut records = Vec::new();
    let mut labels = Vec::new();
    for &q in qualities {
        let mut pq = p.clone();
        pq.circuit.quality = q;
        let sub = SweepSpec { axes: spec.axes[1..].to_vec(), ..spec.clone() };
        let mut t = run_sweep(&pq, &sub)?;
        labels = std::iter::once("circuit.quality_QLC".to_string()).chain(t.axis_labels.clone()).collect();
        for r in &mut t.records {
            r.coords.insert(0, q);
        }
        records.extend(t.records);
    }
    Ok(SweepTable { axis_labels: labels, outputs: spec.outputs, records })
}

fn dark_physical() -> ParameterSet {
    let mut p = ParameterSet::reference_device();
    p.coupling_mode = CouplingMode::Physical;
    p.optics.input_power = Some(0.0);
    p
}

/// Points per axis of the 2D maps and of the 1D scans.
pub const MAP_POINTS: usize = 50;
pub const SCAN_POINTS: usize = 100;

pub fn reproduce_figure(id: &str) -> Result<Dataset> {
    let (p, sweep, meta) = match id {
        "fig2" => {
            let p = dark_physical();
            let spec = SweepSpec {
                axes: vec![
                    fixed_axis("circuit.gap_h0", (0..=35).map(|i| 0.5e-6 + 0.1e-6 * i as f64).collect(), None),
                    fixed_axis("drives.V_DC", (0..=100).map(f64::from).collect(), None),
                ],
                outputs: vec![Output::GEm],
                mode: Some(ModeTag::Physical),
            };
            let t = run_sweep(&p, &spec)?;
            (
                p,
                t,
                json!({"description": "electromechanical coupling g versus V_DC and h0, laser off",
                          "units": {"circuit.gap_h0": "m", "drives.V_DC": "V", "g_rad_s": "rad/s"}}),
            )
        }
        "fig3a" | "fig3c" => {
            let (q, t) = if id == "fig3a" { (1e6, 0.3) } else { (4e4, 0.01) };
            let p = cooling_device(q, t);
            let table = efficiency_map(&p, MAP_POINTS)?;
            (
                p,
                table,
                json!({"description": "cooling efficiency over (g/kappa, G/kappa)",
                              "omega_m": "renormalized by the DC bias that yields g"}),
            )
        }
        "fig3b" | "fig3d" => {
            let (q, t) = if id == "fig3b" { (1e6, 0.3) } else { (4e4, 0.01) };
            let p = cooling_device(q, t);
            let table = occupancy_scan(&p, 0.8, SCAN_POINTS)?;
            (
                p,
                table,
                json!({"description": "LC occupancy versus g/kappa at G = 0.8 kappa",
                              "omega_m": "renormalized by the DC bias that yields g"}),
            )
        }
        "fig4a" => {
            let p = cooling_device(1e2, 300.0);
            let table = comparison(&p, &[1e2, 1e3], SCAN_POINTS)?;
            (
                p,
                table,
                json!({"description": "exact versus approximate LC occupancy, G = 0.8 kappa",
                              "regime": "classical regime"}),
            )
        }
        "fig4b" => {
            let p = cooling_device(1e5, 0.3);
            let table = comparison(&p, &[1e5, 1e7], SCAN_POINTS)?;
            (p, table, json!({"description": "exact versus approximate LC occupancy, G = 0.8 kappa"}))
        }
        other => {
            return Err(Error::config(format!("unknown figure '{other}', expected one of {}", FIGURE_IDS.join(", "))))
        }
    };
    let mut meta = meta;
    meta["figure"] = json!(id);
    meta["axes"] = json!(sweep.axis_labels);
    Ok(Dataset { name: id.to_string(), sidecar: sidecar(&p, meta), sweep })
}
