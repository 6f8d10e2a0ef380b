//! Run configuration: flat `key=value` lines, lists in brackets.
//!
//! ```text
//! # the two-peakon collision run
//! nu=2
//! beta_plus=0.018
//! x=[1,2]
//! m=[5,-1]
//! t_end=1.5
//! ```

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use cf_peakon::{IntegratorConfig, ModelParams, PeakonState};

use crate::error::CliError;

const DEFAULT_T_END: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nu: f64,
    pub beta_plus: f64,
    /// Defaults to `beta_plus + 1`; an explicit value must satisfy the same relation.
    pub beta_minus: Option<f64>,
    /// The constant `C`; defaults to the value paired with the Lax partner.
    pub drift: Option<f64>,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub t_end: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_step: Option<f64>,
    pub collision_gap: Option<f64>,
    pub mass_cap: Option<f64>,
}

enum Value {
    Number(f64),
    List(Vec<f64>),
}

fn parse_number(text: &str) -> Result<f64, String> {
    let v: f64 = text.trim().parse().map_err(|_| format!("'{}' is not a number", text.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{}' is not finite", text.trim()))
    }
}

fn parse_value(text: &str) -> Result<Value, String> {
    let text = text.trim();
    if let Some(inner) = text.strip_prefix('[') {
        let inner = inner.strip_suffix(']').ok_or("list is missing its closing ']'")?;
        if inner.trim().is_empty() {
            return Ok(Value::List(Vec::new()));
        }
        inner.split(',').map(parse_number).collect::<Result<_, _>>().map(Value::List)
    } else {
        parse_number(text).map(Value::Number)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let mut values: HashMap<String, (usize, Value)> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| CliError::Parse { line, message: format!("expected key=value, got '{content}'") })?;
            let key = key.trim().to_string();
            let value = parse_value(value).map_err(|message| CliError::Parse { line, message: format!("{key}: {message}") })?;
            if let Some((first, _)) = values.get(&key) {
                return Err(CliError::Parse { line, message: format!("{key} already set on line {first}") });
            }
            values.insert(key, (line, value));
        }

        let last_line = text.lines().count().max(1);
        let mut take_number = |key: &str| -> Result<Option<f64>, CliError> {
            match values.remove(key) {
                None => Ok(None),
                Some((_, Value::Number(v))) => Ok(Some(v)),
                Some((line, Value::List(_))) => {
                    Err(CliError::Parse { line, message: format!("{key} must be a number, not a list") })
                }
            }
        };
        let nu = take_number("nu")?;
        let beta_plus = take_number("beta_plus")?;
        let beta_minus = take_number("beta_minus")?;
        let drift = take_number("drift")?;
        let t_end = take_number("t_end")?;
        let rel_tol = take_number("rel_tol")?;
        let abs_tol = take_number("abs_tol")?;
        let max_step = take_number("max_step")?;
        let collision_gap = take_number("collision_gap")?;
        let mass_cap = take_number("mass_cap")?;
        let d = take_number("d")?;
        let mut take_list = |key: &str| -> Result<Option<(usize, Vec<f64>)>, CliError> {
            match values.remove(key) {
                None => Ok(None),
                Some((line, Value::List(v))) => Ok(Some((line, v))),
                Some((line, Value::Number(_))) => {
                    Err(CliError::Parse { line, message: format!("{key} must be a list like [1, 2]") })
                }
            }
        };
        let x = take_list("x")?;
        let m = take_list("m")?;
        if let Some((key, (line, _))) = values.iter().min_by_key(|(_, (line, _))| *line) {
            return Err(CliError::Parse { line: *line, message: format!("unknown key '{key}'") });
        }
        let missing = |key: &str| CliError::Parse { line: last_line, message: format!("missing required key '{key}'") };
        let nu = nu.ok_or_else(|| missing("nu"))?;
        let beta_plus = beta_plus.ok_or_else(|| missing("beta_plus"))?;
        let (x_line, x) = x.ok_or_else(|| missing("x"))?;
        let (m_line, m) = m.ok_or_else(|| missing("m"))?;
        if let Some(d) = d {
            if d != x.len() as f64 {
                return Err(CliError::Parse { line: x_line, message: format!("d={d} but x has {} entries", x.len()) });
            }
        }
        if x.len() != m.len() {
            return Err(CliError::Parse {
                line: m_line,
                message: format!("m has {} entries but x has {}", m.len(), x.len()),
            });
        }
        let cfg = RunConfig {
            nu,
            beta_plus,
            beta_minus,
            drift,
            x,
            m,
            t_end,
            rel_tol,
            abs_tol,
            max_step,
            collision_gap,
            mass_cap,
        };
        cfg.params().map_err(|e| CliError::Parse { line: last_line, message: e.to_string() })?;
        cfg.state().map_err(|e| CliError::Parse { line: x_line.max(m_line), message: e.to_string() })?;
        cfg.integrator().map_err(|e| CliError::Parse { line: last_line, message: e.to_string() })?;
        Ok(cfg)
    }

    pub fn state(&self) -> Result<PeakonState, CliError> {
        PeakonState::new(0.0, &self.x, &self.m).map_err(|e| CliError::Input(e.to_string()))
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let d = self.x.len();
        let beta_minus = self.beta_minus.unwrap_or(self.beta_plus + 1.0);
        let mut p = ModelParams::with_beta_minus(self.nu, self.beta_plus, beta_minus, 0.0, d)
            .map_err(|e| CliError::Input(e.to_string()))?;
        p.drift = match self.drift {
            Some(c) => c,
            None => p.default_drift(self.m.iter().sum()),
        };
        Ok(p)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end.unwrap_or(DEFAULT_T_END)
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, CliError> {
        let mut cfg = IntegratorConfig::default();
        let fields = [
            (self.rel_tol, &mut cfg.rel_tol),
            (self.abs_tol, &mut cfg.abs_tol),
            (self.max_step, &mut cfg.max_step),
            (self.collision_gap, &mut cfg.collision_gap),
            (self.mass_cap, &mut cfg.mass_cap),
        ];
        for (value, slot) in fields {
            if let Some(v) = value {
                *slot = v;
            }
        }
        cfg.validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(cfg)
    }

    /// Same-sign masses are required by the inverse problem.
    pub fn require_same_sign(&self) -> Result<(), CliError> {
        let pos = self.m.iter().all(|&v| v > 0.0);
        let neg = self.m.iter().all(|&v| v < 0.0);
        if pos || neg {
            Ok(())
        } else {
            Err(CliError::Input("same-sign required: the inverse problem needs all masses of one sign".into()))
        }
    }
}

fn write_list(out: &mut String, v: &[f64]) {
    out.push('[');
    for (k, x) in v.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{x:?}");
    }
    out.push(']');
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nu={:?}", self.nu)?;
        writeln!(f, "beta_plus={:?}", self.beta_plus)?;
        let optional = [
            ("beta_minus", self.beta_minus),
            ("drift", self.drift),
            ("t_end", self.t_end),
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("collision_gap", self.collision_gap),
            ("mass_cap", self.mass_cap),
        ];
        for (key, value) in optional {
            if let Some(v) = value {
                writeln!(f, "{key}={v:?}")?;
            }
        }
        let mut lists = String::new();
        lists.push_str("x=");
        write_list(&mut lists, &self.x);
        lists.push_str("\nm=");
        write_list(&mut lists, &self.m);
        writeln!(f, "{lists}")
    }
}
