//! Chance-corrected agreement over nominal choices.
//!
//! All seven annotation choices, "hard to tell" included, are distinct
//! categories here. Each statistic is accumulated in integer counts and
//! finished with as few floating-point divisions as possible, so permuting
//! items, raters, or category labels gives bit-identical results.

use std::collections::BTreeMap;

use serde::Serialize;

use super::LabelMatrix;
use crate::emotion::AnnotationChoice;

const N_CHOICES: usize = AnnotationChoice::ALL.len();

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    /// Mean of pairwise Cohen's kappa over all rater pairs.
    pub cohen_kappa: Option<f64>,
    pub fleiss_kappa: Option<f64>,
    pub krippendorff_alpha: Option<f64>,
    pub n_items: usize,
    pub n_raters: usize,
}

pub fn agreement_report(matrix: &LabelMatrix) -> AgreementReport {
    AgreementReport {
        cohen_kappa: cohen_kappa_mean(matrix),
        fleiss_kappa: fleiss_kappa(matrix),
        krippendorff_alpha: krippendorff_alpha(matrix),
        n_items: matrix.n_items(),
        n_raters: matrix.n_raters(),
    }
}

/// Cohen's kappa for two parallel label sequences; `None` when chance
/// agreement is 1.
pub fn cohen_kappa(a: &[AnnotationChoice], b: &[AnnotationChoice]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "rater columns differ in length");
    let n = a.len() as i128;
    if n == 0 {
        return None;
    }
    let mut ma = [0i128; N_CHOICES];
    let mut mb = [0i128; N_CHOICES];
    let mut agree = 0i128;
    for (x, y) in a.iter().zip(b) {
        ma[x.index()] += 1;
        mb[y.index()] += 1;
        agree += i128::from(x == y);
    }
    let chance: i128 = ma.iter().zip(&mb).map(|(p, q)| p * q).sum();
    // (p_o - p_e) / (1 - p_e) with p_o = agree/n, p_e = chance/n^2
    let denom = n * n - chance;
    if denom == 0 {
        return None;
    }
    Some((agree * n - chance) as f64 / denom as f64)
}

/// Unweighted mean of pairwise Cohen's kappa; undefined pairs are skipped.
pub fn cohen_kappa_mean(matrix: &LabelMatrix) -> Option<f64> {
    let columns: Vec<Vec<AnnotationChoice>> =
        (0..matrix.n_raters()).map(|r| matrix.column(r).collect()).collect();
    let mut kappas = Vec::new();
    for i in 0..columns.len() {
        for j in i + 1..columns.len() {
            match cohen_kappa(&columns[i], &columns[j]) {
                Some(k) => kappas.push(k),
                None => log::warn!(
                    "cohen kappa undefined for raters `{}` and `{}`; pair excluded",
                    matrix.raters()[i],
                    matrix.raters()[j]
                ),
            }
        }
    }
    if kappas.is_empty() {
        return None;
    }
    // Sorting fixes the summation order independent of rater order.
    kappas.sort_by(f64::total_cmp);
    Some(kappas.iter().sum::<f64>() / kappas.len() as f64)
}

pub fn fleiss_kappa(matrix: &LabelMatrix) -> Option<f64> {
    let items = matrix.n_items() as i128;
    let raters = matrix.n_raters() as i128;
    let mut pooled = [0i128; N_CHOICES];
    let mut pair_agreements = 0i128;
    for row in matrix.rows() {
        let mut counts = [0i128; N_CHOICES];
        for c in row {
            counts[c.index()] += 1;
        }
        for (total, k) in pooled.iter_mut().zip(counts) {
            *total += k;
            pair_agreements += k * (k - 1);
        }
    }
    let squares: i128 = pooled.iter().map(|c| c * c).sum();
    let total = items * raters;
    // P = pair_agreements / (N n (n-1)), Pe = squares / (N n)^2
    let denom = (raters - 1) * (total * total - squares);
    if denom == 0 {
        return None;
    }
    let numer = pair_agreements * total - squares * (raters - 1);
    Some(numer as f64 / denom as f64)
}

pub fn krippendorff_alpha(matrix: &LabelMatrix) -> Option<f64> {
    let units: Vec<Vec<Option<AnnotationChoice>>> = matrix
        .rows()
        .iter()
        .map(|row| row.iter().copied().map(Some).collect())
        .collect();
    krippendorff_alpha_partial(&units)
}

/// Nominal Krippendorff's alpha over units that may have missing values.
///
/// Units with fewer than two values are not pairable and are ignored.
pub fn krippendorff_alpha_partial(units: &[Vec<Option<AnnotationChoice>>]) -> Option<f64> {
    let mut totals = [0i128; N_CHOICES];
    // Observed disagreement numerators grouped by the unit's value count m,
    // each group later divided by (m - 1).
    let mut disagreement_by_m: BTreeMap<i128, i128> = BTreeMap::new();
    for unit in units {
        let mut counts = [0i128; N_CHOICES];
        let mut m = 0i128;
        for c in unit.iter().flatten() {
            counts[c.index()] += 1;
            m += 1;
        }
        if m < 2 {
            continue;
        }
        let same: i128 = counts.iter().map(|k| k * k).sum();
        *disagreement_by_m.entry(m).or_insert(0) += m * m - same;
        for (t, k) in totals.iter_mut().zip(counts) {
            *t += k;
        }
    }
    let n: i128 = totals.iter().sum();
    let expected = n * n - totals.iter().map(|k| k * k).sum::<i128>();
    if n < 2 || expected == 0 {
        return None;
    }
    let observed: f64 = disagreement_by_m
        .iter()
        .map(|(&m, &d)| d as f64 / (m - 1) as f64)
        .sum();
    Some(1.0 - (n - 1) as f64 * observed / expected as f64)
}
