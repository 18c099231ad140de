//! `lc-cooldown`: command-line front end of the cavity / membrane / LC
//! cooling simulator.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lc_cooldown::dynamics::stability;
use lc_cooldown::figures::{reproduce_figure, FIGURE_IDS};
use lc_cooldown::output::{format_number, sidecar, write_json, write_text, Cell, Table};
use lc_cooldown::sideband::sideband_estimate;
use lc_cooldown::spectra::{
    ac_response, detectability, lorentzian_params, spectrum_sample, Calibration, DETECTABLE_MARGIN,
};
use lc_cooldown::steady::{cooling_efficiency, linearize, steady_state};
use lc_cooldown::sweep::{run_sweep, Axis, AxisValues, Spacing};
use lc_cooldown::{Error, LinearModel, ParameterSet, Result, SweepSpec};
use rayon::prelude::*;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "lc-cooldown",
    version,
    about = "Sideband cooling of an rf LC circuit through a membrane and an optical cavity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON parameter file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for sweeps and frequency grids.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Omit the timestamp line so that repeated runs are byte-identical.
    #[arg(long, global = true)]
    no_header_timestamp: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classical working point, pull-in voltage and spring-shift terms.
    Workpoint,
    /// Eigenvalues of the drift matrix.
    Stability,
    /// Steady-state covariance, occupancies and cooling efficiency.
    Steady,
    /// Charge and voltage noise spectra on a frequency grid.
    Spectrum(SpectrumArgs),
    /// Charge response to a weak AC drive on a frequency grid.
    Probe(ProbeArgs),
    /// Sideband cooling rates and closed-form occupancies.
    Sideband,
    /// One- or two-axis parameter sweep.
    Sweep {
        /// JSON sweep specification.
        #[arg(long)]
        sweep: PathBuf,
    },
    /// Dataset of a figure panel, or of all panels with `--id all`.
    Figure {
        #[arg(long)]
        id: String,
    },
}

#[derive(Args, Debug)]
struct Grid {
    /// Lower grid frequency in rad/s; defaults to 0.5 ω_LC.
    #[arg(long)]
    omega_min: Option<f64>,
    /// Upper grid frequency in rad/s; defaults to 1.5 ω_LC.
    #[arg(long)]
    omega_max: Option<f64>,
    #[arg(long, default_value_t = 2001)]
    points: usize,
    /// Logarithmic instead of linear spacing.
    #[arg(long)]
    log: bool,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    grid: Grid,
    /// Imprecision noise of the capacitor voltage readout, V²/Hz.
    #[arg(long, default_value_t = 0.0)]
    s_imp_c: f64,
    /// Imprecision noise of the inductor voltage readout, V²/Hz.
    #[arg(long, default_value_t = 0.0)]
    s_imp_l: f64,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    #[command(flatten)]
    grid: Grid,
    /// AC drive amplitude in volts.
    #[arg(long, default_value_t = 1e-6)]
    v_ac: f64,
}

struct Context {
    out: PathBuf,
    timestamp: Option<String>,
}

impl Context {
    fn comment_header(&self, command: &str, p: &ParameterSet) -> String {
        let doc = sidecar(p, Value::Null);
        let mut s = format!("# lc-cooldown {command} {}\n", env!("CARGO_PKG_VERSION"));
        if let Some(t) = &self.timestamp {
            s.push_str(&format!("# generated {t}\n"));
        }
        s.push_str(&format!("# parameters {}\n", doc["parameters"]));
        s.push_str(&format!("# derived {}\n", doc["derived"]));
        s
    }

    fn document(&self, command: &str, p: &ParameterSet, result: Value) -> Value {
        let mut meta = json!({ "command": command, "version": env!("CARGO_PKG_VERSION") });
        if let Some(t) = &self.timestamp {
            meta["generated"] = json!(t);
        }
        let mut doc = sidecar(p, meta);
        doc["result"] = result;
        doc
    }

    fn write_csv(&self, name: &str, command: &str, p: &ParameterSet, table: &Table) -> Result<PathBuf> {
        let path = self.out.join(name);
        write_text(&path, &(self.comment_header(command, p) + &table.to_csv(None)))?;
        Ok(path)
    }

    fn write_json(&self, name: &str, value: &Value) -> Result<PathBuf> {
        let path = self.out.join(name);
        write_json(&path, value)?;
        Ok(path)
    }
}

fn load_config(path: Option<&Path>) -> Result<ParameterSet> {
    let path = path.ok_or_else(|| Error::Config("--config <path> is required for this command".into()))?;
    let p = ParameterSet::from_path(path)?;
    p.validate()?;
    Ok(p)
}

fn grid(g: &Grid, m: &LinearModel) -> Result<Vec<f64>> {
    let min = g.omega_min.unwrap_or(0.5 * m.omega_lc);
    let max = g.omega_max.unwrap_or(1.5 * m.omega_lc);
    let spacing = if g.log { Spacing::Log } else { Spacing::Linear };
    AxisValues::Range { min, max, count: g.points, spacing }.expand()
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn cmd_workpoint(ctx: &Context, p: &ParameterSet) -> Result<Vec<PathBuf>> {
    let (_, wp, _) = linearize(p)?;
    let result = json!({
        "working_point": wp,
        "V_pull": wp.v_pull,
        "omega_m_squared_terms": {
            "radiation": wp.spring_shift.radiation,
            "electrostatic": wp.spring_shift.electrostatic,
        },
    });
    Ok(vec![ctx.write_json("workpoint.json", &ctx.document("workpoint", p, result))?])
}

fn cmd_stability(ctx: &Context, p: &ParameterSet) -> Result<Vec<PathBuf>> {
    let (_, _, m) = linearize(p)?;
    let report = stability(&m.drift_matrix())?;
    let mut t = Table::new(columns(&["re_rad_s", "im_rad_s"]));
    for l in &report.eigenvalues {
        t.push(vec![l.re.into(), l.im.into()]);
    }
    let path = ctx.write_csv("stability.csv", "stability", p, &t)?;
    if !report.stable {
        return Err(Error::Unstable(format!(
            "max Re(lambda) = {} rad/s (eigenvalues written to {})",
            format_number(-report.margin),
            path.display()
        )));
    }
    Ok(vec![path])
}

fn cmd_steady(ctx: &Context, p: &ParameterSet) -> Result<Vec<PathBuf>> {
    let ss = steady_state(p)?;
    let eta = cooling_efficiency(p)?;
    let labels = ["x", "p", "q", "phi", "X", "Y"];
    let mut t = Table::new(std::iter::once("row").chain(labels).map(String::from).collect());
    for (i, label) in labels.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(*label).into()];
        row.extend((0..6).map(|j| Cell::Num(ss.covariance.v[(i, j)])));
        t.push(row);
    }
    let result = json!({
        "n_lc_eff": ss.n_lc_eff,
        "n_m_eff": ss.n_m_eff,
        "eta": eta,
        "residual_norm": ss.covariance.residual_norm,
        "stability_margin": ss.stability.margin,
        "omega_m": ss.working_point.omega_m,
    });
    Ok(vec![
        ctx.write_csv("covariance.csv", "steady", p, &t)?,
        ctx.write_json("steady.json", &ctx.document("steady", p, result))?,
    ])
}

fn cmd_spectrum(ctx: &Context, p: &ParameterSet, args: &SpectrumArgs) -> Result<Vec<PathBuf>> {
    let (dc, wp, m) = linearize(p)?;
    let cal = Calibration::new(&wp, &dc);
    let omegas = grid(&args.grid, &m)?;
    let samples = omegas
        .par_iter()
        .map(|&w| spectrum_sample(&m, &cal, w, args.s_imp_c, args.s_imp_l))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(columns(&["omega_rad_s", "S_dq", "S_dVC", "S_dVL", "abs_chi_LC_eff", "abs_chi_mc"]));
    for s in &samples {
        t.push(vec![
            s.omega.into(),
            s.s_dq.into(),
            s.s_dvc.into(),
            s.s_dvl.into(),
            s.chi.chi_lc_eff.norm().into(),
            s.chi.chi_mc.norm().into(),
        ]);
    }
    let margin = detectability(&m, &cal, args.s_imp_c)?;
    let result = json!({
        "lorentzian": lorentzian_params(&m).ok(),
        "calibration": cal,
        "S_imp_C": args.s_imp_c,
        "S_imp_L": args.s_imp_l,
        "detectability": if margin.is_finite() { json!(margin) } else { json!("inf") },
        "detectable": margin > DETECTABLE_MARGIN,
    });
    Ok(vec![
        ctx.write_csv("spectrum.csv", "spectrum", p, &t)?,
        ctx.write_json("spectrum.json", &ctx.document("spectrum", p, result))?,
    ])
}

fn cmd_probe(ctx: &Context, p: &ParameterSet, args: &ProbeArgs) -> Result<Vec<PathBuf>> {
    let (dc, wp, m) = linearize(p)?;
    let cal = Calibration::new(&wp, &dc);
    let omegas = grid(&args.grid, &m)?;
    let response = omegas.par_iter().map(|&w| ac_response(&m, &cal, w, args.v_ac)).collect::<Result<Vec<_>>>()?;
    let scaled = args.v_ac / cal.phi_zpf;
    let mut t = Table::new(columns(&["omega_rad_s", "V_AC_volts", "V_AC_scaled", "re_dq", "im_dq", "abs_dq"]));
    for (w, r) in omegas.iter().zip(&response) {
        t.push(vec![(*w).into(), args.v_ac.into(), scaled.into(), r.re.into(), r.im.into(), r.norm().into()]);
    }
    Ok(vec![ctx.write_csv("probe.csv", "probe", p, &t)?])
}

fn cmd_sideband(ctx: &Context, p: &ParameterSet) -> Result<Vec<PathBuf>> {
    let (_, _, m) = linearize(p)?;
    let est = sideband_estimate(&m);
    Ok(vec![ctx.write_json("sideband.json", &ctx.document("sideband", p, json!(est)))?])
}

fn cmd_sweep(ctx: &Context, p: &ParameterSet, spec_path: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| Error::Config(format!("reading {}: {e}", spec_path.display())))?;
    let spec = SweepSpec::from_json_str(&text)?;
    let table = run_sweep(p, &spec)?;
    let axes: Vec<String> = spec.axes.iter().map(Axis::label).collect();
    let meta = json!({ "sweep": serde_json::to_value(&spec).unwrap_or(Value::Null), "axes": axes });
    Ok(vec![
        ctx.write_csv("sweep.csv", "sweep", p, &table.table())?,
        ctx.write_json("sweep.json", &ctx.document("sweep", p, meta))?,
    ])
}

fn cmd_figure(ctx: &Context, id: &str) -> Result<Vec<PathBuf>> {
    let ids: Vec<&str> = if id == "all" { FIGURE_IDS.to_vec() } else { vec![id] };
    let mut written = Vec::new();
    for id in ids {
        let d = reproduce_figure(id)?;
        let p = ParameterSet::from_json_value(d.sidecar["parameters"].clone())?;
        let mut doc = d.sidecar.clone();
        if let Some(t) = &ctx.timestamp {
            doc["meta"]["generated"] = json!(t);
        }
        written.push(ctx.write_csv(&format!("{id}.csv"), &format!("figure {id}"), &p, &d.table())?);
        written.push(ctx.write_json(&format!("{id}.json"), &doc)?);
    }
    Ok(written)
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let ctx = Context {
        out: cli.out.clone(),
        timestamp: (!cli.no_header_timestamp)
            .then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
    };
    if let Command::Figure { id } = &cli.command {
        return cmd_figure(&ctx, id);
    }
    let p = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Workpoint => cmd_workpoint(&ctx, &p),
        Command::Stability => cmd_stability(&ctx, &p),
        Command::Steady => cmd_steady(&ctx, &p),
        Command::Spectrum(a) => cmd_spectrum(&ctx, &p, a),
        Command::Probe(a) => cmd_probe(&ctx, &p, a),
        Command::Sideband => cmd_sideband(&ctx, &p),
        Command::Sweep { sweep } => cmd_sweep(&ctx, &p, sweep),
        Command::Figure { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for path in paths {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lc-cooldown: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
