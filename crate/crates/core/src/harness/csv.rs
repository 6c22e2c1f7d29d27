//! Result-table CSV: fixed header, `%.17g`-style floats, and a parser that
//! inverts the emitter exactly.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

pub const HEADER: &str =
    "experiment,policy,T,replicate,seed,regret_total,regret_minority,regret_prediction,theta_draw_id";

pub const CURVE_HEADER: &str = "experiment,policy,T,replicate,t,regret,regret_minority,lambda_min";

/// One row per (policy, horizon, replicate).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub policy: String,
    pub horizon: usize,
    pub replicate: usize,
    pub seed: u64,
    pub regret_total: f64,
    pub regret_minority: f64,
    pub regret_prediction: f64,
    pub theta_draw_id: u64,
}

impl ResultRow {
    pub fn sort_key(&self) -> (&str, usize, usize) {
        (&self.policy, self.horizon, self.replicate)
    }
}

/// Cumulative regret (and `λ_min(Z_t)` where tracked) at round `t` of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub experiment: String,
    pub policy: String,
    pub horizon: usize,
    pub replicate: usize,
    pub t: usize,
    pub regret: f64,
    pub regret_minority: f64,
    pub lambda_min: Option<f64>,
}

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros dropped,
/// exponent notation outside `[1e-4, 1e17)`. Parsing the output with
/// `str::parse::<f64>` returns the original value.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn check_field(s: &str) -> &str {
    debug_assert!(!s.contains([',', '\n', '"']), "CSV field needs quoting: {s}");
    s
}

pub fn emit_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            check_field(&r.experiment),
            check_field(&r.policy),
            r.horizon,
            r.replicate,
            r.seed,
            format_g17(r.regret_total),
            format_g17(r.regret_minority),
            format_g17(r.regret_prediction),
            r.theta_draw_id
        );
    }
    out
}

pub fn emit_curves(rows: &[CurveRow]) -> String {
    let mut out = String::new();
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.experiment,
            r.policy,
            r.horizon,
            r.replicate,
            r.t,
            format_g17(r.regret),
            format_g17(r.regret_minority),
            r.lambda_min.map(format_g17).unwrap_or_default()
        );
    }
    out
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| Error::Csv {
        line,
        message: format!("bad number `{s}`"),
    })
}

fn parse_int<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Csv {
        line,
        message: format!("bad integer `{s}`"),
    })
}

/// Parses text produced by [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => {
            return Err(Error::Csv {
                line: 1,
                message: "missing or unexpected header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::Csv {
                line: n,
                message: format!("expected 9 fields, found {}", f.len()),
            });
        }
        rows.push(ResultRow {
            experiment: f[0].to_string(),
            policy: f[1].to_string(),
            horizon: parse_int(f[2], n)?,
            replicate: parse_int(f[3], n)?,
            seed: parse_int(f[4], n)?,
            regret_total: parse_float(f[5], n)?,
            regret_minority: parse_float(f[6], n)?,
            regret_prediction: parse_float(f[7], n)?,
            theta_draw_id: parse_int(f[8], n)?,
        });
    }
    Ok(rows)
}
