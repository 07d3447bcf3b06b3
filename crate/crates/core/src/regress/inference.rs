use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::Serialize;
use statrs::function::erf::erfc;

use super::{DesignMatrix, FitResult, ModelKind};
use crate::error::{Error, Result};

/// 97.5th percentile of the standard normal, as used for 95% intervals.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverdispersionTest {
    pub statistic: f64,
    pub p_value: f64,
    pub significant_at_01: bool,
}

/// `P(chi2_1 >= x)`.
pub fn chi2_1_survival(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        erfc((x / 2.0).sqrt())
    }
}

/// Likelihood-ratio test of NB2 against Poisson. The dispersion sits on the
/// boundary under the null, so the reference law is the 50:50 mixture of a
/// point mass at zero and chi-square with one degree of freedom.
pub fn overdispersion_test(nb: &FitResult, pois: &FitResult) -> Result<OverdispersionTest> {
    if nb.model != ModelKind::NegativeBinomial || pois.model != ModelKind::Poisson {
        return Err(Error::Invalid("expected an NB fit and a Poisson fit".into()));
    }
    if nb.n != pois.n {
        return Err(Error::Invalid(format!(
            "fits cover different samples ({} vs {})",
            nb.n, pois.n
        )));
    }
    let diff = nb.log_likelihood - pois.log_likelihood;
    if diff < -1e-6 {
        return Err(Error::Inconsistent(format!(
            "NB log-likelihood {} is below Poisson {}",
            nb.log_likelihood, pois.log_likelihood
        )));
    }
    Ok(lr_test(2.0 * diff.max(0.0)))
}

pub fn lr_test(statistic: f64) -> OverdispersionTest {
    let p_value = if statistic > 0.0 {
        0.5 * chi2_1_survival(statistic)
    } else {
        1.0
    };
    OverdispersionTest {
        statistic,
        p_value,
        significant_at_01: p_value < 0.01,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Irr {
    pub irr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Incidence rate ratios with 95% Wald intervals.
pub fn irr(fit: &FitResult) -> BTreeMap<String, Irr> {
    fit.coefficients
        .iter()
        .map(|c| {
            (
                c.name.clone(),
                Irr {
                    irr: c.estimate.exp(),
                    ci_low: (c.estimate - Z_95 * c.std_error).exp(),
                    ci_high: (c.estimate + Z_95 * c.std_error).exp(),
                },
            )
        })
        .collect()
}

pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub p: f64,
    pub mu: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `mu(p) / mu(0)`.
    pub relative: f64,
}

/// Predicted count as one emotion column sweeps `grid`, with every other
/// column held at its sample mean.
pub fn predict_curve(
    fit: &FitResult,
    design: &DesignMatrix,
    emotion: &str,
    grid: &[f64],
) -> Result<Vec<CurvePoint>> {
    let col = design
        .column_index(emotion)
        .ok_or_else(|| Error::Invalid(format!("column `{emotion}` is not in the design")))?;
    if fit.coefficients.len() != design.p() {
        return Err(Error::Invalid("fit and design have different columns".into()));
    }
    if let Some(p) = grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Invalid(format!("grid point {p} is outside [0, 1]")));
    }
    let beta = DVector::from_vec(fit.estimates());
    let cov = fit.covariance_matrix();
    let mut x = DVector::from_vec(design.column_means());

    let slope = beta[col];
    x[col] = 0.0;
    let base_eta = x.dot(&beta);

    Ok(grid
        .iter()
        .map(|&p| {
            x[col] = p;
            let eta = base_eta + slope * p;
            let se = (x.transpose() * &cov * &x)[(0, 0)].max(0.0).sqrt();
            CurvePoint {
                p,
                mu: eta.exp(),
                ci_low: (eta - Z_95 * se).exp(),
                ci_high: (eta + Z_95 * se).exp(),
                relative: (slope * p).exp(),
            }
        })
        .collect())
}

/// `n` evenly spaced points from 0 to 1 inclusive.
pub fn unit_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}
