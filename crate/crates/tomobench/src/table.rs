//! Aggregated sweep results and their CSV form.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::Algorithm;

pub const CSV_HEADER: &str = "algorithm,n0,metric,mean,log_std,n_samples";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    OneMinusR,
    ScatteringL2,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::OneMinusR, Metric::ScatteringL2];

    pub fn name(self) -> &'static str {
        match self {
            Metric::OneMinusR => "one_minus_r",
            Metric::ScatteringL2 => "scattering_l2",
        }
    }
}

/// One `(algorithm, n0, metric)` cell. A failed cell has `NaN` statistics,
/// `n_samples = 0` and a message in `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub algorithm: Algorithm,
    pub n0: f64,
    pub metric: Metric,
    pub mean: f64,
    pub log_std: f64,
    /// Standard error of the mean, `std / sqrt(n)` on the linear scale.
    pub std_err: f64,
    pub n_samples: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvChoice {
    pub n0: f64,
    /// Absolute weight passed to the solver.
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub tv_weights: Vec<TvChoice>,
}

impl SweepTable {
    pub fn row(&self, algorithm: Algorithm, n0: f64, metric: Metric) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm && r.n0 == n0 && r.metric == metric)
    }

    /// Mean Pearson r of a cell, `1 - mean(one_minus_r)`.
    pub fn mean_r(&self, algorithm: Algorithm, n0: f64) -> Option<f64> {
        self.row(algorithm, n0, Metric::OneMinusR)
            .map(|r| 1.0 - r.mean)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.algorithm,
                format_sig(r.n0, 9),
                r.metric.name(),
                format_sig(r.mean, 9),
                format_sig(r.log_std, 9),
                r.n_samples
            )
            .expect("writing to a String");
        }
        out
    }

    /// Parses the CSV columns back. Extra fields (`std_err`, `error`) are not
    /// part of the CSV and come back as `NaN` / `None`.
    pub fn from_csv(text: &str) -> Result<Vec<SweepRow>> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == CSV_HEADER => {}
            other => bail!("unexpected CSV header {other:?}"),
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                bail!("line {}: expected 6 fields, got {}", i + 2, f.len());
            }
            let metric = match f[2] {
                "one_minus_r" => Metric::OneMinusR,
                "scattering_l2" => Metric::ScatteringL2,
                m => bail!("line {}: unknown metric {m}", i + 2),
            };
            let num = |s: &str| {
                s.parse::<f64>()
                    .with_context(|| format!("line {}: bad number {s:?}", i + 2))
            };
            rows.push(SweepRow {
                algorithm: f[0].parse()?,
                n0: num(f[1])?,
                metric,
                mean: num(f[3])?,
                log_std: num(f[4])?,
                std_err: f64::NAN,
                n_samples: f[5]
                    .parse()
                    .with_context(|| format!("line {}: bad n_samples", i + 2))?,
                error: None,
            });
        }
        Ok(rows)
    }
}

/// `%.{digits}g`-style formatting: `digits` significant digits, trailing
/// zeros removed, scientific notation outside `[1e-5, 1e{digits})`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(505.0, 9), "505");
        assert_eq!(format_sig(std::f64::consts::SQRT_2, 9), "1.41421356");
        assert_eq!(format_sig(0.000123456789123, 9), "0.000123456789");
        assert_eq!(format_sig(1.5e-7, 9), "1.5e-07");
        assert_eq!(format_sig(1234567891234.0, 9), "1.23456789e+12");
        assert_eq!(format_sig(-2.0 / 3.0, 9), "-0.666666667");
        assert_eq!(format_sig(0.0, 9), "0");
        assert_eq!(format_sig(f64::NAN, 9), "nan");
        assert_eq!(format_sig(999999999.6, 9), "1e+09");
    }

    #[test]
    fn csv_round_trip() {
        let t = SweepTable {
            rows: vec![SweepRow {
                algorithm: Algorithm::Mle,
                n0: 316.0,
                metric: Metric::ScatteringL2,
                mean: 0.123456789012,
                log_std: 0.5,
                std_err: 0.01,
                n_samples: 20,
                error: None,
            }],
            tv_weights: vec![],
        };
        let csv = t.to_csv();
        assert_eq!(csv, "algorithm,n0,metric,mean,log_std,n_samples\nmle,316,scattering_l2,0.123456789,0.5,20\n");
        let back = SweepTable::from_csv(&csv).unwrap();
        assert_eq!(back[0].algorithm, Algorithm::Mle);
        assert_eq!(back[0].mean, 0.123456789);
        assert!(SweepTable::from_csv("a,b\n").is_err());
    }
}
