//! File formats: the Weyl-series file and the trajectory tables.

use std::fmt::Write as _;
use std::path::Path;

use cf_peakon::{Sheet, Trajectory};

use crate::error::CliError;

/// Numbers in text output carry 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Weyl series coefficients with the data needed to invert them.
///
/// One header line `d=2 sheet=upper order=4 nu=2 M=4`, then one
/// coefficient per line starting with `z^0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylFile {
    pub d: usize,
    pub sheet: Sheet,
    pub nu: f64,
    pub total_mass: f64,
    pub coeffs: Vec<f64>,
}

fn sheet_name(s: Sheet) -> &'static str {
    match s {
        Sheet::Upper => "upper",
        Sheet::Lower => "lower",
    }
}

impl WeylFile {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "d={} sheet={} order={} nu={} M={}\n",
            self.d,
            sheet_name(self.sheet),
            self.coeffs.len(),
            fmt_num(self.nu),
            fmt_num(self.total_mass)
        );
        for c in &self.coeffs {
            let _ = writeln!(out, "{}", fmt_num(*c));
        }
        out
    }

    pub fn parse(text: &str) -> Result<WeylFile, CliError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(CliError::Parse { line: 1, message: "empty Weyl file".into() })?;
        let bad = |message: String| CliError::Parse { line: 1, message };
        let (mut d, mut sheet, mut order, mut nu, mut mass) = (None, None, None, None, None);
        for field in header.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| bad(format!("header field '{field}' is not key=value")))?;
            let num = || value.parse::<f64>().map_err(|_| bad(format!("{key}: '{value}' is not a number")));
            match key {
                "d" => d = Some(value.parse::<usize>().map_err(|_| bad(format!("d: '{value}' is not a count")))?),
                "order" => order = Some(value.parse::<usize>().map_err(|_| bad(format!("order: '{value}' is not a count")))?),
                "sheet" => {
                    sheet = Some(match value {
                        "upper" => Sheet::Upper,
                        "lower" => Sheet::Lower,
                        _ => return Err(bad(format!("sheet must be upper or lower, got '{value}'"))),
                    })
                }
                "nu" => nu = Some(num()?),
                "M" => mass = Some(num()?),
                _ => return Err(bad(format!("unknown header field '{key}'"))),
            }
        }
        let need = |name: &str| bad(format!("header is missing '{name}'"));
        let d = d.ok_or_else(|| need("d"))?;
        let sheet = sheet.ok_or_else(|| need("sheet"))?;
        let order = order.ok_or_else(|| need("order"))?;
        let nu = nu.ok_or_else(|| need("nu"))?;
        let total_mass = mass.ok_or_else(|| need("M"))?;
        if d == 0 {
            return Err(bad("d must be positive".into()));
        }
        let mut coeffs = Vec::new();
        for (idx, line) in lines {
            let v: f64 = line
                .trim()
                .parse()
                .map_err(|_| CliError::Parse { line: idx + 1, message: format!("'{}' is not a number", line.trim()) })?;
            coeffs.push(v);
        }
        if coeffs.len() != order {
            return Err(bad(format!("header says order={order} but {} coefficients follow", coeffs.len())));
        }
        if coeffs.len() < 2 * d {
            return Err(CliError::Input(format!(
                "insufficient coefficients: {} given, {} needed for d={d}",
                coeffs.len(),
                2 * d
            )));
        }
        Ok(WeylFile { d, sheet, nu, total_mass, coeffs })
    }

    pub fn read(path: &Path) -> Result<WeylFile, CliError> {
        WeylFile::parse(&std::fs::read_to_string(path).map_err(CliError::io(path))?)
    }
}

/// Rows `t, x_1..x_d, m_1..m_d`.
pub fn trajectory_rows(traj: &Trajectory) -> (Vec<String>, Vec<Vec<f64>>) {
    let d = traj.samples.first().map_or(0, |s| s.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|j| format!("x_{j}")));
    header.extend((1..=d).map(|j| format!("m_{j}")));
    let rows = traj
        .samples
        .iter()
        .map(|s| std::iter::once(s.t).chain(s.positions()).chain(s.masses().iter().copied()).collect())
        .collect();
    (header, rows)
}

/// Rows `t, drift_0..drift_d`: relative drift of each `Tr A` coefficient.
pub fn drift_rows(traj: &Trajectory) -> (Vec<String>, Vec<Vec<f64>>) {
    let first = traj.invariant_log.first().cloned().unwrap_or_default();
    let mut header = vec!["t".to_string()];
    header.extend((0..first.len()).map(|k| format!("drift_{k}")));
    let rows = traj
        .samples
        .iter()
        .zip(&traj.invariant_log)
        .map(|(s, log)| {
            std::iter::once(s.t)
                .chain(log.iter().zip(&first).map(|(c, c0)| (c - c0).abs() / c0.abs().max(1e-12)))
                .collect()
        })
        .collect();
    (header, rows)
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let to_err = |e: csv::Error| CliError::Input(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_num(*v))).map_err(to_err)?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let to_err = |e: csv::Error| CliError::Input(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(to_err)?;
    let header = r.headers().map_err(to_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(to_err)?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| CliError::Input(format!("{}: '{f}' is not a number", path.display()))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}
