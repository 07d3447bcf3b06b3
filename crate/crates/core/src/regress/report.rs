//! Coefficient tables and prediction curves as CSV and JSON.

use std::fmt::Write as _;

use serde::Serialize;

use super::inference::{irr, significance_stars, CurvePoint};
use super::{FitResult, ModelKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientRow {
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z_value: f64,
    pub p_value: f64,
    pub stars: String,
    pub irr: f64,
    pub irr_ci_low: f64,
    pub irr_ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub label: String,
    pub model: ModelKind,
    pub alpha: f64,
    pub alpha_at_boundary: bool,
    pub log_likelihood: f64,
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
    pub threads: usize,
    pub warnings: Vec<String>,
    pub coefficients: Vec<CoefficientRow>,
}

impl FitReport {
    pub fn new(label: impl Into<String>, fit: &FitResult) -> Self {
        let irrs = irr(fit);
        FitReport {
            label: label.into(),
            model: fit.model,
            alpha: fit.alpha,
            alpha_at_boundary: fit.alpha_at_boundary,
            log_likelihood: fit.log_likelihood,
            n: fit.n,
            converged: fit.converged,
            iterations: fit.iterations,
            threads: fit.threads,
            warnings: fit.warnings.clone(),
            coefficients: fit
                .coefficients
                .iter()
                .map(|c| {
                    let r = irrs[&c.name];
                    CoefficientRow {
                        term: c.name.clone(),
                        estimate: c.estimate,
                        std_error: c.std_error,
                        z_value: c.z_value,
                        p_value: c.p_value,
                        stars: significance_stars(c.p_value).to_string(),
                        irr: r.irr,
                        irr_ci_low: r.ci_low,
                        irr_ci_high: r.ci_high,
                    }
                })
                .collect(),
        }
    }

    /// One row per coefficient, preceded by `#`-prefixed model header lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# model,{}", self.label).unwrap();
        writeln!(out, "# alpha,{}", fmt(self.alpha)).unwrap();
        writeln!(out, "# log_likelihood,{}", fmt(self.log_likelihood)).unwrap();
        writeln!(out, "# n,{}", self.n).unwrap();
        writeln!(out, "# converged,{}", self.converged).unwrap();
        out.push_str("term,estimate,std_error,z_value,p_value,stars,irr,irr_ci_low,irr_ci_high\n");
        for r in &self.coefficients {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                csv_field(&r.term),
                fmt(r.estimate),
                fmt(r.std_error),
                fmt(r.z_value),
                fmt(r.p_value),
                r.stars,
                fmt(r.irr),
                fmt(r.irr_ci_low),
                fmt(r.irr_ci_high)
            )
            .unwrap();
        }
        out
    }
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("p,mu,ci_low,ci_high,relative\n");
    for pt in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt(pt.p),
            fmt(pt.mu),
            fmt(pt.ci_low),
            fmt(pt.ci_high),
            fmt(pt.relative)
        )
        .unwrap();
    }
    out
}

/// Shortest decimal form that round-trips to the same f64.
pub fn fmt(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:?}")
    }
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
