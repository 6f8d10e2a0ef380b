//! The subcommands. Each returns a serializable report; the binary prints it.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use cf_peakon::collision::CollisionForm;
use cf_peakon::inverse::reconstruct_from_coefficients;
use cf_peakon::{
    build_a, c2_invariant, canonical_form, curve_data, integrate, invariant_drift, stieltjes_coefficients,
    weyl_series, AMethod, BlowupKind, FlowError, MomentSequence, Sheet, SpectralData, SpectralError, Termination,
    Trajectory, WeylFormula,
};

use crate::config::RunConfig;
use crate::error::{exit, CliError};
use crate::io::{drift_rows, fmt_num, trajectory_rows, write_csv, WeylFile};

/// Round-trip pass threshold on every coordinate.
pub const ROUNDTRIP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Renders a report: pretty JSON, or `key,value` lines with lists joined by `;`.
pub fn render<T: Serialize>(report: &T, format: Format) -> String {
    let value = serde_json::to_value(report).expect("reports serialize");
    match format {
        Format::Json => serde_json::to_string_pretty(&value).expect("reports serialize") + "\n",
        Format::Csv => {
            let mut out = String::from("key,value\n");
            flatten("", &value, &mut out);
            out
        }
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => fmt_num(f),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(scalar_text).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_object() || i.is_array()) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), child, out);
            }
        }
        other => {
            out.push_str(prefix);
            out.push(',');
            out.push_str(&scalar_text(other));
            out.push('\n');
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub termination: String,
    pub detail: String,
    pub t_final: f64,
    pub samples: usize,
    pub max_invariant_drift: f64,
    pub files: Vec<PathBuf>,
    #[serde(skip)]
    pub exit_code: u8,
}

fn describe(term: &Termination) -> (String, String, u8) {
    match term {
        Termination::ReachedEnd => ("reached_t_end".into(), String::new(), exit::SUCCESS),
        Termination::Collision { pair, time } => (
            "collision".into(),
            format!("peakons {} and {} met at t = {}", pair.0 + 1, pair.1 + 1, fmt_num(*time)),
            exit::COLLISION,
        ),
        Termination::Blowup { kind, time } => {
            let what = match kind {
                BlowupKind::MassCap { index } => format!("mass {} exceeded the cap", index + 1),
                BlowupKind::PositionCap { index } => format!("peakon {} left the representable range", index + 1),
                BlowupKind::SpeedCap { index } => format!("peakon {} escaped to infinity", index + 1),
                BlowupKind::NonFinite => "the state became non-finite".into(),
            };
            ("blowup".into(), format!("{what} at t = {}", fmt_num(*time)), exit::BLOWUP)
        }
        Termination::StepFailure { time } => {
            ("step_failure".into(), format!("step size underflow at t = {}", fmt_num(*time)), exit::INTEGRATION)
        }
    }
}

fn write_table(out: &Path, stem: &str, header: &[String], rows: &[Vec<f64>], format: Format) -> Result<PathBuf, CliError> {
    match format {
        Format::Csv => {
            let path = out.join(format!("{stem}.csv"));
            write_csv(&path, header, rows)?;
            Ok(path)
        }
        Format::Json => {
            let path = out.join(format!("{stem}.json"));
            let doc = serde_json::json!({ "columns": header, "rows": rows });
            std::fs::write(&path, serde_json::to_string(&doc).expect("tables serialize")).map_err(CliError::io(&path))?;
            Ok(path)
        }
    }
}

fn write_trajectory(traj: &Trajectory, out: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let (h, r) = trajectory_rows(traj);
    let a = write_table(out, "trajectory", &h, &r, format)?;
    let (h, r) = drift_rows(traj);
    let b = write_table(out, "drift", &h, &r, format)?;
    Ok(vec![a, b])
}

pub fn simulate(cfg: &RunConfig, out: &Path, format: Format) -> Result<SimulateReport, CliError> {
    let state = cfg.state()?;
    let params = cfg.params()?;
    let traj = match integrate(&state, &params, cfg.t_end(), &cfg.integrator()?) {
        Ok(t) => t,
        Err(FlowError::StepFailure { time, partial }) => {
            write_trajectory(&partial, out, format)?;
            return Err(CliError::Integration { time });
        }
        Err(e) => return Err(CliError::Input(e.to_string())),
    };
    let files = write_trajectory(&traj, out, format)?;
    let (termination, detail, exit_code) = describe(&traj.termination);
    Ok(SimulateReport {
        termination,
        detail,
        t_final: traj.final_state().t,
        samples: traj.samples.len(),
        max_invariant_drift: invariant_drift(&traj).max(),
        files,
        exit_code,
    })
}

#[derive(Debug, Serialize)]
pub struct SpectrumReport {
    pub d: usize,
    pub total_mass: f64,
    /// `Tr A(z)` coefficients from `z^0` up.
    pub trace_coefficients: Vec<f64>,
    /// `P(z)` coefficients from `z^0` up.
    pub curve_coefficients: Vec<f64>,
    /// `[re, im]` pairs.
    pub branch_points: Vec<[f64; 2]>,
    pub genus: usize,
    pub trace_at_origin: f64,
    pub sheet: String,
    pub warnings: Vec<String>,
}

pub fn spectrum(cfg: &RunConfig) -> Result<SpectrumReport, CliError> {
    let state = cfg.state()?;
    let params = cfg.params()?;
    let a = build_a(&state, &params, AMethod::ClosedForm).map_err(|e| CliError::Input(e.to_string()))?;
    let data = SpectralData::analyze(&a, params.det_beta()).map_err(|e| CliError::Input(e.to_string()))?;
    let mut warnings = Vec::new();
    if params.det_beta() == 0.0 {
        warnings.push("perfect-square curve: beta_plus = 0, the genus drops to 0".to_string());
    } else if let Err(SpectralError::DegenerateCurve { root }) = curve_data(&a, params.det_beta()) {
        warnings.push(format!("degenerate curve: branch points cluster near z = {root}"));
    }
    let trace0 = data.trace_poly.coeff(0);
    let sheet = if trace0.abs() <= 1e-10 * a.norm_inf() {
        warnings.push("branch point at the origin: the sheet is undefined".to_string());
        "undefined".to_string()
    } else {
        match Sheet::for_trace(trace0) {
            Sheet::Upper => "upper".to_string(),
            Sheet::Lower => "lower".to_string(),
        }
    };
    let d = params.d;
    Ok(SpectrumReport {
        d,
        total_mass: state.total_mass(),
        trace_coefficients: (0..=d).map(|k| data.trace_poly.coeff(k)).collect(),
        curve_coefficients: (0..=2 * d).map(|k| data.p.coeff(k)).collect(),
        branch_points: data.branch_points.iter().map(|z| [z.re, z.im]).collect(),
        genus: data.genus,
        trace_at_origin: trace0,
        sheet,
        warnings,
    })
}

/// The forward half of the round trip: Weyl series of order `2d`.
pub fn forward_weyl(cfg: &RunConfig) -> Result<WeylFile, CliError> {
    let state = cfg.state()?;
    let params = cfg.params()?;
    let a = build_a(&state, &params, AMethod::ClosedForm).map_err(|e| CliError::Input(e.to_string()))?;
    let data = SpectralData::analyze(&a, params.det_beta()).map_err(|e| CliError::Input(e.to_string()))?;
    let w = weyl_series(&a, &data, 2 * params.d, WeylFormula::Denominator)
        .map_err(|e| CliError::Reconstruction(e.to_string()))?;
    Ok(WeylFile {
        d: params.d,
        sheet: w.sheet,
        nu: params.nu,
        total_mass: data.trace_poly.coeff(params.d - 1),
        coeffs: w.coeffs().to_vec(),
    })
}

#[derive(Debug, Serialize)]
pub struct InvertReport {
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub string_lengths: Vec<f64>,
    pub string_masses: Vec<f64>,
}

pub fn invert(weyl: &WeylFile) -> Result<InvertReport, CliError> {
    let d = weyl.d;
    let rec = |e: &dyn std::fmt::Display| CliError::Reconstruction(e.to_string());
    let moments = MomentSequence::from_weyl(&weyl.coeffs[..2 * d]);
    let a = stieltjes_coefficients(&moments, 2 * d - 1).map_err(|e| rec(&e))?;
    let (string, state) = reconstruct_from_coefficients(&a, d, weyl.total_mass, weyl.nu).map_err(|e| rec(&e))?;
    Ok(InvertReport {
        x: state.positions(),
        m: state.masses().to_vec(),
        string_lengths: string.lengths,
        string_masses: string.masses,
    })
}

#[derive(Debug, Serialize)]
pub struct RoundtripReport {
    pub pass: bool,
    pub tolerance: f64,
    /// `|Δx_j| / max(|x_j|, 1)`.
    pub position_errors: Vec<f64>,
    /// `|Δm_j| / |m_j|`.
    pub mass_errors: Vec<f64>,
    pub weyl_file: PathBuf,
}

pub fn roundtrip(cfg: &RunConfig, out: &Path) -> Result<RoundtripReport, CliError> {
    cfg.require_same_sign()?;
    let weyl = forward_weyl(cfg)?;
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let path = out.join("weyl.txt");
    std::fs::write(&path, weyl.to_text()).map_err(CliError::io(&path))?;
    // invert what was written, so the decimal file format is part of the loop
    let back = invert(&WeylFile::read(&path)?)?;
    let position_errors: Vec<f64> = back.x.iter().zip(&cfg.x).map(|(a, b)| (a - b).abs() / b.abs().max(1.0)).collect();
    let mass_errors: Vec<f64> = back.m.iter().zip(&cfg.m).map(|(a, b)| (a - b).abs() / b.abs()).collect();
    let pass = position_errors.iter().chain(&mass_errors).all(|e| *e < ROUNDTRIP_TOL);
    Ok(RoundtripReport { pass, tolerance: ROUNDTRIP_TOL, position_errors, mass_errors, weyl_file: path })
}

#[derive(Debug, Serialize)]
pub struct RationalReport {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct CollideReport {
    pub total_mass: f64,
    pub c2: f64,
    pub pole_location: f64,
    /// Entries of the canonical form in row order, coefficients from `z^0` up.
    pub canonical_form: Vec<RationalReport>,
    /// Largest gap between the computed form and its closed form over sample points.
    pub closed_form_gap: f64,
    pub termination: String,
    pub detail: String,
}

pub fn collide(cfg: &RunConfig) -> Result<CollideReport, CliError> {
    let state = cfg.state()?;
    let params = cfg.params()?;
    let c2 = c2_invariant(&state, &params).map_err(|e| CliError::Input(e.to_string()))?;
    let m = state.total_mass();
    let form = canonical_form(&params, m, c2).map_err(|e| CliError::Input(e.to_string()))?;
    let expected = CollisionForm::expected(params.beta_minus, params.beta_plus, m, c2);
    let mut gap: f64 = 0.0;
    for k in 0..10 {
        let z = form.pole_location + 0.37 + 0.29 * k as f64;
        let got = form.eval(z);
        for i in 0..2 {
            for j in 0..2 {
                let want = expected[i][j].eval(z);
                gap = gap.max((got[i][j] - want).abs() / want.abs().max(1.0));
            }
        }
    }
    let coeffs = |p: &cf_peakon::Poly| p.coeffs().to_vec();
    let canonical_form = form
        .entries
        .iter()
        .flatten()
        .map(|r| RationalReport { numerator: coeffs(&r.num), denominator: coeffs(&r.den) })
        .collect();
    let traj = integrate(&state, &params, cfg.t_end(), &cfg.integrator()?);
    let (termination, detail) = match traj {
        Ok(t) => {
            let (a, b, _) = describe(&t.termination);
            (a, b)
        }
        Err(FlowError::StepFailure { time, .. }) => {
            ("step_failure".into(), format!("step size underflow at t = {}", fmt_num(time)))
        }
        Err(e) => return Err(CliError::Input(e.to_string())),
    };
    Ok(CollideReport { total_mass: m, c2, pole_location: form.pole_location, canonical_form, closed_form_gap: gap, termination, detail })
}
