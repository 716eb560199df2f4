//! Command-line front end.
//!
//! Every command resolves its arguments into a [`RunConfig`], runs, and
//! writes one JSON report that starts with the resolved configuration, so
//! `aniso replay --config report.json` reproduces a run exactly.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::{Matrix3, Matrix4, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::constitutive::{metric_to_constitutive, validate_onsager, ConstitutiveTensors, PhysicalConstants, SpacetimeMetric};
use crate::dispersion::{maxwell_residual, solve_branches, PlaneWaveMode, WaveVector};
use crate::emission::{decay_rate_uncorrected, decay_rate_with_system, free_space_rate, TwoLevelAtom};
use crate::error::{Error, Result};
use crate::localfield::{correction_tensors, CavityConfig, LocalFieldSystem, QuadratureSpec};
use crate::projection::{decompose, decomposition_checks, green_scalar_fourier, mode_sum, projector_pair, transverse_of_covector, FourierField};
use crate::tensor::{triple, CMatrix3, CVector3};
use crate::wwsim::{discretize_modes, evolve, fit_decay, EvolveOptions, ModeCounts, SimulationPlan};

/// Tolerance used when validating material files.
pub const MATERIAL_TOLERANCE: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Argument parsing

#[derive(Debug, Parser)]
#[command(name = "aniso", version, about = "Mode structure and spontaneous emission in bi-anisotropic media")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dispersion branches and polarization vectors at one wavevector.
    Dispersion(DispersionArgs),
    /// Longitudinal/transverse split of one Fourier component.
    Project(ProjectArgs),
    /// Equivalent medium of a stationary spacetime metric.
    Metric(MetricArgs),
    /// Small-cavity correction tensors and Q.
    Localfield(LocalfieldArgs),
    /// Spontaneous-emission decay rate at the cavity center.
    Decay(DecayArgs),
    /// Weisskopf-Wigner simulation of the decay.
    Wwsim(WwsimArgs),
    /// Re-run the configuration echoed in an earlier report.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct DispersionArgs {
    #[arg(long)]
    material: PathBuf,
    /// Wavevector qx,qy,qz (1/m).
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    q: [f64; 3],
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    material: PathBuf,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    q: [f64; 3],
    /// Real part of the field component.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    field: [f64; 3],
    /// Imaginary part of the field component.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,0,0")]
    field_imag: [f64; 3],
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    /// JSON file with a 4x4 `metric` entry.
    #[arg(long)]
    metric: PathBuf,
    /// Write the equivalent material file here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LocalfieldArgs {
    #[arg(long)]
    material: PathBuf,
    /// Material filling the hole (default vacuum).
    #[arg(long)]
    hole: Option<PathBuf>,
    /// Angular frequency (rad/s).
    #[arg(long)]
    omega: f64,
    /// Hole radius (m).
    #[arg(long = "R")]
    radius: f64,
    /// Angular grid as NTHETAxNPHI.
    #[arg(long, value_parser = parse_grid, default_value = "32x64")]
    quad: (usize, usize),
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[arg(long)]
    material: PathBuf,
    #[arg(long)]
    hole: Option<PathBuf>,
    /// Transition frequency (rad/s).
    #[arg(long)]
    omega0: f64,
    /// Dipole moment dx,dy,dz (C m).
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    dipole: [f64; 3],
    /// Hole radius (m); default 1e-3 c/omega0.
    #[arg(long = "R")]
    radius: Option<f64>,
    #[arg(long, value_parser = parse_grid, default_value = "32x64")]
    quad: (usize, usize),
    /// Use the bare plane-wave amplitude (no local-field correction).
    #[arg(long)]
    no_cavity: bool,
    /// Sweep the dipole from z to x in this many steps (CSV via --csv).
    #[arg(long, default_value_t = 0)]
    sweep_angle: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WwsimArgs {
    #[arg(long)]
    material: PathBuf,
    #[arg(long)]
    omega0: f64,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    dipole: [f64; 3],
    /// Frequency window a,b (rad/s); default centered on omega0.
    #[arg(long, value_parser = parse_pair)]
    window: Option<(f64, f64)>,
    /// Number of frequency bins.
    #[arg(long, default_value_t = 2000)]
    modes: usize,
    /// Angular grid used for each frequency shell.
    #[arg(long, value_parser = parse_grid, default_value = "32x64")]
    angular: (usize, usize),
    #[arg(long)]
    tfinal: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Fit window t0,t1 (s).
    #[arg(long, value_parser = parse_pair)]
    fit_window: Option<(f64, f64)>,
    /// Keep every n-th step in the trajectory.
    #[arg(long, default_value_t = 10)]
    record_every: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// A report or a bare configuration object.
    #[arg(long)]
    config: PathBuf,
}

fn parse_list(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let v: std::result::Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
    let v = v.map_err(|e| format!("`{s}`: {e}"))?;
    if v.len() != n {
        return Err(format!("`{s}`: expected {n} comma-separated numbers, found {}", v.len()));
    }
    if !v.iter().all(|x| x.is_finite()) {
        return Err(format!("`{s}`: entries must be finite"));
    }
    Ok(v)
}

fn parse_vec3(s: &str) -> std::result::Result<[f64; 3], String> {
    let v = parse_list(s, 3)?;
    Ok([v[0], v[1], v[2]])
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let v = parse_list(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("`{s}`: expected NTHETAxNPHI"))?;
    let a = a.trim().parse().map_err(|e| format!("`{s}`: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("`{s}`: {e}"))?;
    Ok((a, b))
}

// ---------------------------------------------------------------------------
// Resolved configuration

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Dispersion(DispersionConfig),
    Project(ProjectConfig),
    Metric(MetricConfig),
    Localfield(LocalfieldConfig),
    Decay(DecayConfig),
    Wwsim(WwsimConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    pub material: PathBuf,
    pub q: [f64; 3],
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub material: PathBuf,
    pub q: [f64; 3],
    pub field: [f64; 3],
    pub field_imag: [f64; 3],
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub metric: PathBuf,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalfieldConfig {
    pub material: PathBuf,
    pub hole: Option<PathBuf>,
    pub omega: f64,
    pub radius: f64,
    pub quad: QuadratureSpec,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub material: PathBuf,
    pub hole: Option<PathBuf>,
    pub omega0: f64,
    pub dipole: [f64; 3],
    pub radius: f64,
    pub quad: QuadratureSpec,
    pub cavity: bool,
    pub sweep_angle: usize,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WwsimConfig {
    pub material: PathBuf,
    pub omega0: f64,
    pub dipole: [f64; 3],
    pub counts: ModeCounts,
    /// Filled from the golden-rule rate when absent on the command line.
    pub plan: Option<SimulationPlan>,
    pub window: Option<(f64, f64)>,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    pub fit_window: Option<(f64, f64)>,
    pub record_every: usize,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn quad_spec((n_theta, n_phi): (usize, usize)) -> Result<QuadratureSpec> {
    let q = QuadratureSpec::new(n_theta, n_phi);
    q.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(q)
}

fn check_exists(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("file not found: {}", path.display())))
    }
}

/// Parse command-line arguments (including the program name) into a
/// validated configuration. `replay` is resolved by reading its file.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Config(e.to_string()))?;
    resolve(cli.command)
}

fn resolve(command: Command) -> Result<RunConfig> {
    let config = match command {
        Command::Dispersion(a) => RunConfig::Dispersion(DispersionConfig {
            material: a.material,
            q: a.q,
            out: a.out,
        }),
        Command::Project(a) => RunConfig::Project(ProjectConfig {
            material: a.material,
            q: a.q,
            field: a.field,
            field_imag: a.field_imag,
            out: a.out,
        }),
        Command::Metric(a) => RunConfig::Metric(MetricConfig {
            metric: a.metric,
            out: a.out,
            report: a.report,
        }),
        Command::Localfield(a) => RunConfig::Localfield(LocalfieldConfig {
            material: a.material,
            hole: a.hole,
            omega: a.omega,
            radius: a.radius,
            quad: quad_spec(a.quad)?,
            out: a.out,
        }),
        Command::Decay(a) => {
            let c = PhysicalConstants::default().c;
            RunConfig::Decay(DecayConfig {
                material: a.material,
                hole: a.hole,
                omega0: a.omega0,
                dipole: a.dipole,
                radius: a.radius.unwrap_or(1e-3 * c / a.omega0),
                quad: quad_spec(a.quad)?,
                cavity: !a.no_cavity,
                sweep_angle: a.sweep_angle,
                out: a.out,
                csv: a.csv,
            })
        }
        Command::Wwsim(a) => RunConfig::Wwsim(WwsimConfig {
            material: a.material,
            omega0: a.omega0,
            dipole: a.dipole,
            counts: ModeCounts {
                frequency_bins: a.modes,
                n_theta: a.angular.0,
                n_phi: a.angular.1,
            },
            plan: None,
            window: a.window,
            t_final: a.tfinal,
            dt: a.dt,
            fit_window: a.fit_window,
            record_every: a.record_every,
            out: a.out,
            csv: a.csv,
        }),
        Command::Replay(a) => {
            let text = read(&a.config)?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", a.config.display())))?;
            let value = match value {
                Value::Object(mut m) if m.contains_key("config") => m.remove("config").unwrap_or(Value::Null),
                v => v,
            };
            serde_json::from_value(value).map_err(|e| Error::Config(format!("{}: {e}", a.config.display())))?
        }
    };
    validate_config(&config)?;
    Ok(config)
}

fn validate_config(config: &RunConfig) -> Result<()> {
    match config {
        RunConfig::Dispersion(c) => check_exists(&c.material),
        RunConfig::Project(c) => check_exists(&c.material),
        RunConfig::Metric(c) => check_exists(&c.metric),
        RunConfig::Localfield(c) => {
            check_exists(&c.material)?;
            if let Some(h) = &c.hole {
                check_exists(h)?;
            }
            positive("omega", c.omega)?;
            positive("R", c.radius)?;
            c.quad.validate().map_err(|e| Error::Config(e.to_string()))
        }
        RunConfig::Decay(c) => {
            check_exists(&c.material)?;
            if let Some(h) = &c.hole {
                check_exists(h)?;
            }
            positive("omega0", c.omega0)?;
            positive("R", c.radius)?;
            c.quad.validate().map_err(|e| Error::Config(e.to_string()))
        }
        RunConfig::Wwsim(c) => {
            check_exists(&c.material)?;
            positive("omega0", c.omega0)?;
            for (name, v) in [("tfinal", c.t_final), ("dt", c.dt)] {
                if let Some(v) = v {
                    positive(name, v)?;
                }
            }
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Material files

const MATERIAL_KEYS: [&str; 9] = ["description", "units", "eps1", "eps2", "mu1", "mu2", "metric", "constants", "$schema"];

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Config(format!("{path}: expected a finite number, found {v}")))
}

fn rows<'a>(v: &'a Value, n: usize, path: &str) -> Result<&'a Vec<Value>> {
    let a = v
        .as_array()
        .ok_or_else(|| Error::Config(format!("{path}: expected an array of {n} rows")))?;
    if a.len() != n {
        return Err(Error::Config(format!("{path}: expected {n} rows, found {}", a.len())));
    }
    Ok(a)
}

fn matrix_entries(v: &Value, n: usize, path: &str) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n * n);
    for (i, row) in rows(v, n, path)?.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let r = row
            .as_array()
            .ok_or_else(|| Error::Config(format!("{rp}: expected an array of {n} entries")))?;
        if r.len() != n {
            return Err(Error::Config(format!("{rp}: expected {n} entries, found {}", r.len())));
        }
        for (j, x) in r.iter().enumerate() {
            out.push(number(x, &format!("{rp}[{j}]"))?);
        }
    }
    Ok(out)
}

fn matrix3(v: &Value, path: &str) -> Result<Matrix3<f64>> {
    Ok(Matrix3::from_row_slice(&matrix_entries(v, 3, path)?))
}

fn matrix4(v: &Value, path: &str) -> Result<Matrix4<f64>> {
    Ok(Matrix4::from_row_slice(&matrix_entries(v, 4, path)?))
}

/// Parse a material document. `label` prefixes error paths.
pub fn parse_material(text: &str, label: &str) -> Result<ConstitutiveTensors> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("{label}: invalid JSON: {e}")))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::Config(format!("{label}: expected a JSON object")))?;
    for key in obj.keys() {
        if !MATERIAL_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "{label}: unknown key `{key}` (allowed: {})",
                MATERIAL_KEYS.join(", ")
            )));
        }
    }
    let constants = match obj.get("constants") {
        None => PhysicalConstants::default(),
        Some(v) => serde_json::from_value::<PhysicalConstants>(v.clone())
            .map_err(|e| Error::Config(format!("{label}: constants: {e}")))?,
    };
    constants.validate().map_err(|e| Error::Config(format!("{label}: {e}")))?;

    let t = if let Some(m) = obj.get("metric") {
        for key in ["eps1", "eps2", "mu1", "mu2", "units"] {
            if obj.contains_key(key) {
                return Err(Error::Config(format!("{label}: `metric` cannot be combined with `{key}`")));
            }
        }
        let g = SpacetimeMetric::new(matrix4(m, "metric")?)?;
        metric_to_constitutive(&g, constants)?
    } else {
        let units = match obj.get("units") {
            None => "si",
            Some(Value::String(s)) if s == "si" || s == "relative" => s.as_str(),
            Some(v) => return Err(Error::Config(format!("{label}: units: expected \"si\" or \"relative\", found {v}"))),
        };
        let req = |k: &str| {
            obj.get(k)
                .ok_or_else(|| Error::Config(format!("{label}: missing required key `{k}`")))
                .and_then(|v| matrix3(v, k))
        };
        let opt = |k: &str| obj.get(k).map(|v| matrix3(v, k)).transpose().map(|m| m.unwrap_or_else(Matrix3::zeros));
        let (eps1, mu2, eps2, mu1) = (req("eps1")?, req("mu2")?, opt("eps2")?, opt("mu1")?);
        if units == "relative" {
            ConstitutiveTensors::from_relative(eps1, eps2, mu1, mu2, constants)
        } else {
            ConstitutiveTensors {
                eps1,
                eps2,
                mu1,
                mu2,
                constants,
            }
        }
    };
    validate_onsager(&t, MATERIAL_TOLERANCE)?.into_result()?;
    Ok(t)
}

pub fn load_material(path: &Path) -> Result<ConstitutiveTensors> {
    parse_material(&read(path)?, &path.display().to_string())
}

fn matrix_json(m: &Matrix3<f64>) -> Value {
    // `+ 0.0` turns negative zeros into zeros.
    let m = m.map(|x| x + 0.0);
    json!([[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]])
}

/// Material document in relative units (constants included when they
/// differ from the defaults).
pub fn material_json(t: &ConstitutiveTensors) -> Value {
    let [e1, e2, m1, m2] = t.to_relative();
    let mut m = Map::new();
    m.insert("units".into(), json!("relative"));
    m.insert("eps1".into(), matrix_json(&e1));
    m.insert("eps2".into(), matrix_json(&e2));
    m.insert("mu1".into(), matrix_json(&m1));
    m.insert("mu2".into(), matrix_json(&m2));
    if t.constants != PhysicalConstants::default() {
        m.insert("constants".into(), serde_json::to_value(t.constants).unwrap_or(Value::Null));
    }
    Value::Object(m)
}

// ---------------------------------------------------------------------------
// JSON helpers

fn cjson(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn cvec_json(v: &CVector3) -> Value {
    Value::Array(v.iter().map(|z| cjson(*z)).collect())
}

fn cmat_json(m: &CMatrix3) -> Value {
    Value::Array((0..3).map(|i| Value::Array((0..3).map(|j| cjson(m[(i, j)])).collect())).collect())
}

fn vec_json(v: &Vector3<f64>) -> Value {
    json!([v.x, v.y, v.z])
}

fn to_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Running

/// Everything a run produces; [`execute`] writes it out.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: String,
    pub report_path: Option<PathBuf>,
    pub csv: Option<(PathBuf, String)>,
    pub material: Option<(PathBuf, String)>,
    pub warnings: Vec<String>,
}

fn report(config: &RunConfig, result: Value) -> Value {
    json!({
        "config": serde_json::to_value(config).unwrap_or(Value::Null),
        "result": result,
    })
}

/// Run a configuration, producing the report text and any side files.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let mut out = RunOutput {
        report: String::new(),
        report_path: None,
        csv: None,
        material: None,
        warnings: Vec::new(),
    };
    let value = match config {
        RunConfig::Dispersion(c) => {
            out.report_path = c.out.clone();
            report(config, run_dispersion(c)?)
        }
        RunConfig::Project(c) => {
            out.report_path = c.out.clone();
            report(config, run_project(c)?)
        }
        RunConfig::Metric(c) => {
            out.report_path = c.report.clone();
            let (result, material) = run_metric(c)?;
            if let Some(p) = &c.out {
                out.material = Some((p.clone(), to_string(&material)));
            }
            report(config, result)
        }
        RunConfig::Localfield(c) => {
            out.report_path = c.out.clone();
            let (result, warnings) = run_localfield(c)?;
            out.warnings = warnings;
            report(config, result)
        }
        RunConfig::Decay(c) => {
            out.report_path = c.out.clone();
            let (result, csv, warnings) = run_decay(c)?;
            out.warnings = warnings;
            if let (Some(p), Some(text)) = (&c.csv, csv) {
                out.csv = Some((p.clone(), text));
            }
            report(config, result)
        }
        RunConfig::Wwsim(c) => {
            out.report_path = c.out.clone();
            let (resolved, result, csv) = run_wwsim(c)?;
            if let Some(p) = &c.csv {
                out.csv = Some((p.clone(), csv));
            }
            report(&RunConfig::Wwsim(resolved), result)
        }
    };
    out.report = to_string(&value);
    Ok(out)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Run and write outputs; the report goes to stdout unless redirected.
pub fn execute(config: &RunConfig) -> Result<()> {
    let out = run(config)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    if let Some((p, text)) = &out.csv {
        write(p, text)?;
    }
    if let Some((p, text)) = &out.material {
        write(p, text)?;
    }
    match &out.report_path {
        Some(p) => write(p, &out.report),
        None => {
            print!("{}", out.report);
            Ok(())
        }
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    if let Ok(n) = std::env::var("ANISO_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: ANISO_THREADS must be a positive integer, got `{n}`");
                return 2;
            }
        }
    }
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match resolve(cli.command).and_then(|c| execute(&c)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.class().exit_code()
        }
    }
}

fn run_dispersion(c: &DispersionConfig) -> Result<Value> {
    let t = load_material(&c.material)?;
    let q = Vector3::from(c.q);
    let wv = WaveVector::from_vector(&q)?;
    let branches = solve_branches(&q, &t)?;
    let mut list = Vec::new();
    for b in &branches {
        let mut entry = Map::new();
        entry.insert("rho".into(), json!(b.rho));
        entry.insert("omega".into(), json!(b.omega));
        entry.insert("longitudinal_zero_mode".into(), json!(b.is_longitudinal_zero_mode));
        entry.insert("lambda_count".into(), json!(b.lambda_count));
        entry.insert("polarizations".into(), Value::Array(b.x_real().iter().map(vec_json).collect()));
        if !b.is_longitudinal_zero_mode {
            entry.insert("phase_speed".into(), json!(b.omega / wv.magnitude()));
            let mut worst = 0.0_f64;
            for lambda in 0..b.lambda_count {
                let mode = PlaneWaveMode::from_branch(b, lambda, wv, &t.eps1)?;
                worst = worst.max(maxwell_residual(&mode, &t).max());
            }
            entry.insert("maxwell_residual".into(), json!(worst));
        }
        list.push(Value::Object(entry));
    }
    Ok(json!({
        "q": c.q,
        "branches": list,
    }))
}

fn run_project(c: &ProjectConfig) -> Result<Value> {
    let t = load_material(&c.material)?;
    let q = Vector3::from(c.q);
    let f = CVector3::new(
        Complex64::new(c.field[0], c.field_imag[0]),
        Complex64::new(c.field[1], c.field_imag[1]),
        Complex64::new(c.field[2], c.field_imag[2]),
    );
    let field = FourierField::new(q, f)?;
    let pair = projector_pair(&q, &t.eps1)?;
    let parts = decompose(&field, &t.eps1)?;
    let adj = transverse_of_covector(&field, &t.eps1)?;
    let checks = pair.checks(&q, &t.eps1);
    let dchecks = decomposition_checks(&field, &t.eps1, &parts);
    let to_c = |m: &Matrix3<f64>| m.map(|x| Complex64::new(x, 0.0));
    let mut result = json!({
        "q": c.q,
        "green_scalar": green_scalar_fourier(&q, &t.eps1)?,
        "p_parallel": matrix_json(&pair.p_par),
        "p_perp": matrix_json(&pair.p_perp),
        "longitudinal": cvec_json(&parts.0),
        "transverse": cvec_json(&parts.1),
        "adjoint_transverse": cvec_json(&adj),
        "projector_checks": checks,
        "decomposition_checks": dchecks,
    });
    if t.is_magnetoelectric_free() {
        let s = mode_sum(&q, &t)?;
        let dev = (s - to_c(&pair.p_perp)).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        result["mode_sum_deviation"] = json!(dev);
    }
    Ok(result)
}

fn run_metric(c: &MetricConfig) -> Result<(Value, Value)> {
    let text = read(&c.metric)?;
    let label = c.metric.display().to_string();
    let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{label}: invalid JSON: {e}")))?;
    if doc.get("metric").is_none() {
        return Err(Error::Config(format!("{label}: missing required key `metric`")));
    }
    let t = parse_material(&text, &label)?;
    let g = matrix4(&doc["metric"], "metric")?;
    let report = validate_onsager(&t, MATERIAL_TOLERANCE)?;
    let material = material_json(&t);
    let rows: Vec<Value> = (0..4).map(|i| json!([g[(i, 0)], g[(i, 1)], g[(i, 2)], g[(i, 3)]])).collect();
    Ok((
        json!({
            "metric": rows,
            "material": material,
            "validation": report,
        }),
        material,
    ))
}

fn load_cavity(material: &Path, hole: &Option<PathBuf>, radius: f64) -> Result<CavityConfig> {
    let medium = load_material(material)?;
    match hole {
        None => CavityConfig::new(radius, medium),
        Some(h) => CavityConfig::with_hole(radius, medium, load_material(h)?),
    }
}

fn system_json(s: &LocalFieldSystem) -> Value {
    let rank4 = |f: &dyn Fn(usize, usize, usize, usize) -> Complex64| {
        Value::Array(
            (0..3)
                .map(|a| {
                    Value::Array(
                        (0..3)
                            .map(|b| Value::Array((0..3).map(|c| Value::Array((0..3).map(|d| cjson(f(a, b, c, d))).collect())).collect()))
                            .collect(),
                    )
                })
                .collect(),
        )
    };
    let delta1 = rank4(&|i, s_, a, n| s.delta1[(i, triple(s_, a, n))]);
    let gamma2 = rank4(&|i, d, g, m| s.gamma2[(triple(i, d, g), m)]);
    let delta2: Vec<Value> = (0..27)
        .map(|r| Value::Array((0..27).map(|c| cjson(s.delta2[(r, c)])).collect()))
        .collect();
    json!({
        "omega": s.omega,
        "R": s.radius,
        "gamma1": cmat_json(&s.gamma1),
        "delta1": delta1,
        "gamma2": gamma2,
        "delta2_flat": delta2,
        "delta2_layout": "rows (i,delta,gamma), columns (s,alpha,n), index 9a+3b+c",
        "Q": cmat_json(&s.q),
        "diagnostics": s.diagnostics,
    })
}

fn run_localfield(c: &LocalfieldConfig) -> Result<(Value, Vec<String>)> {
    let cavity = load_cavity(&c.material, &c.hole, c.radius)?;
    let s = correction_tensors(c.omega, &cavity, &c.quad)?;
    let w = s.diagnostics.warnings.clone();
    Ok((system_json(&s), w))
}

fn run_decay(c: &DecayConfig) -> Result<(Value, Option<String>, Vec<String>)> {
    let cavity = load_cavity(&c.material, &c.hole, c.radius)?;
    let medium = cavity.medium;
    let atom = TwoLevelAtom::new(c.omega0, Vector3::from(c.dipole))?;
    let system = if c.cavity {
        Some(correction_tensors(c.omega0, &cavity, &c.quad)?)
    } else {
        None
    };
    let rate = |a: &TwoLevelAtom| match &system {
        Some(s) => decay_rate_with_system(a, &cavity, s, &c.quad),
        None => decay_rate_uncorrected(a, &medium, &c.quad),
    };
    let r = rate(&atom)?;
    if !r.converged {
        return Err(Error::Convergence {
            what: "angular decay-rate quadrature".into(),
            estimate: r.error_estimate / r.gamma,
        });
    }
    let g0 = free_space_rate(&atom, &medium.constants);
    let mut result = json!({
        "gamma": r.gamma,
        "gamma_over_free_space": if g0 > 0.0 { json!(r.gamma / g0) } else { Value::Null },
        "free_space_rate": g0,
        "convention": "amplitude decay constant: |c(t)| ~ exp(-gamma t); population decays at 2 gamma",
        "branch_contributions": r.branch_contributions,
        "diagnostics": {
            "error_estimate": r.error_estimate,
            "converged": r.converged,
            "n_theta": r.n_theta,
            "n_phi": r.n_phi,
            "cavity_corrected": r.cavity_corrected,
            "max_closure_residual": r.max_closure_residual,
        },
    });
    let mut warnings = Vec::new();
    if let Some(s) = &system {
        result["diagnostics"]["local_field"] = serde_json::to_value(&s.diagnostics).unwrap_or(Value::Null);
        result["Q"] = cmat_json(&s.q);
        warnings = s.diagnostics.warnings.clone();
    }
    let mut csv = None;
    if c.sweep_angle > 0 {
        let d = atom.dipole.norm();
        let n = c.sweep_angle;
        let mut text = String::from("theta,gamma,gamma_over_free_space\n");
        let mut rows = Vec::with_capacity(n);
        for k in 0..n {
            let theta = if n == 1 { 0.0 } else { 0.5 * PI * k as f64 / (n - 1) as f64 };
            let a = TwoLevelAtom::new(c.omega0, Vector3::new(theta.sin(), 0.0, theta.cos()) * d)?;
            let g = rate(&a)?.gamma;
            let ratio = if g0 > 0.0 { g / g0 } else { 0.0 };
            let _ = writeln!(text, "{theta},{g},{ratio}");
            rows.push(json!({"theta": theta, "gamma": g, "gamma_over_free_space": ratio}));
        }
        result["sweep"] = Value::Array(rows);
        csv = Some(text);
    }
    Ok((result, csv, warnings))
}

fn run_wwsim(c: &WwsimConfig) -> Result<(WwsimConfig, Value, String)> {
    let medium = load_material(&c.material)?;
    let atom = TwoLevelAtom::new(c.omega0, Vector3::from(c.dipole))?;
    let quad = QuadratureSpec::new(c.counts.n_theta, c.counts.n_phi);
    quad.validate().map_err(|e| Error::Config(e.to_string()))?;
    let reference = decay_rate_uncorrected(&atom, &medium, &quad)?;
    let plan = match c.plan {
        Some(p) => p,
        None => {
            let mut p = SimulationPlan::suggest(c.omega0, reference.gamma, c.counts.frequency_bins)?;
            if let Some(w) = c.window {
                p.window = w;
                p.dt = 0.05 / (w.1 - c.omega0).abs().max((c.omega0 - w.0).abs());
            }
            if let Some(t) = c.t_final {
                p.t_final = t;
                p.fit_window = (0.125 * t, 0.875 * t);
            }
            if let Some(dt) = c.dt {
                p.dt = dt;
            }
            if let Some(f) = c.fit_window {
                p.fit_window = f;
            }
            p
        }
    };
    let mut resolved = c.clone();
    resolved.plan = Some(plan);
    resolved.window = None;
    resolved.t_final = None;
    resolved.dt = None;
    resolved.fit_window = None;

    let set = discretize_modes(&medium, &atom, plan.window, c.counts)?;
    let options = EvolveOptions {
        record_every: c.record_every.max(1),
        record_modes: false,
    };
    let traj = evolve(&set, plan.t_final, plan.dt, options)?;
    let fit = fit_decay(&traj, plan.fit_window)?;

    let mut csv = String::from("t,re_c,im_c,norm\n");
    for k in 0..traj.times.len() {
        let _ = writeln!(csv, "{},{},{},{}", traj.times[k], traj.c[k].re, traj.c[k].im, traj.norm[k]);
    }
    let result = json!({
        "fit": fit,
        "golden_rule_rate": set.golden_rule_rate(),
        "decay_uncorrected": reference.gamma,
        "gamma_fit_over_decay": fit.gamma_fit / reference.gamma,
        "max_norm_drift": traj.max_norm_drift,
        "modes": set.modes.len(),
        "bin_width": set.bin_width,
        "coupling_sum": set.coupling_sum(),
        "samples": traj.times.len(),
        "frame": "rotating at omega0; lab amplitude is c exp(-i omega0 t)",
        "convention": "amplitude decay constant; population decays at 2 gamma",
    });
    Ok((resolved, result, csv))
}
