use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::VideoRecord;
use crate::error::{Error, Result};
use crate::regress::report::{csv_field, fmt};
use crate::regress::{build_design, fit_nb, ModelSpec};
use crate::rng::substream;
use crate::scoring::EmotionScores;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapCoefficient {
    pub mean_estimate: f64,
    /// 2.5th percentile.
    pub ci_low: f64,
    /// 97.5th percentile.
    pub ci_high: f64,
    /// Converged replicates whose design contained this column.
    pub n_converged: usize,
}

/// Outcome of one replicate: estimates keyed by column name, or the failure
/// category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replicate {
    pub rep: usize,
    pub estimates: Option<BTreeMap<String, f64>>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub reps: usize,
    pub subsample_fraction: f64,
    pub subsample_size: usize,
    pub seed: u64,
    pub n_converged: usize,
    pub failures: BTreeMap<String, usize>,
    /// Columns in the order of the full-sample design.
    pub columns: Vec<String>,
    pub coefficients: BTreeMap<String, BootstrapCoefficient>,
    #[serde(skip)]
    pub replicates: Vec<Replicate>,
}

impl BootstrapResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bootstrap result serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("term,mean_estimate,ci_low,ci_high,n_converged\n");
        for name in self.ordered_terms() {
            let c = &self.coefficients[name];
            writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(name),
                fmt(c.mean_estimate),
                fmt(c.ci_low),
                fmt(c.ci_high),
                c.n_converged
            )
            .unwrap();
        }
        out
    }

    /// Long format: one line per (replicate, term) for converged replicates.
    pub fn replicates_csv(&self) -> String {
        let mut out = String::from("rep,term,estimate\n");
        for r in &self.replicates {
            if let Some(est) = &r.estimates {
                for (name, value) in est {
                    writeln!(out, "{},{},{}", r.rep, csv_field(name), fmt(*value)).unwrap();
                }
            }
        }
        out
    }

    /// Full-design columns first, then any that only appear in replicates.
    fn ordered_terms(&self) -> Vec<&String> {
        let mut terms: Vec<&String> = self
            .columns
            .iter()
            .filter(|c| self.coefficients.contains_key(*c))
            .collect();
        terms.extend(self.coefficients.keys().filter(|k| !self.columns.contains(k)));
        terms
    }
}

/// Nearest-rank percentile of an ascending slice: the value at rank
/// `ceil(pct / 100 * n)`, clamped to `[1, n]`.
pub fn percentile_nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let n = sorted.len();
    let x = pct / 100.0 * n as f64;
    // Products such as 2.5/100 * 1000 land a hair above the integer.
    let r = x.round();
    let rank = if (x - r).abs() <= 1e-9 * r.max(1.0) { r } else { x.ceil() };
    let rank = (rank as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Pre-generated subsample indices for every replicate, each sorted.
pub fn subsample_indices(n: usize, size: usize, reps: usize, seed: u64) -> Vec<Vec<usize>> {
    (0..reps)
        .map(|rep| {
            let mut rng = substream(seed, rep as u64);
            let mut idx = index::sample(&mut rng, n, size).into_vec();
            idx.sort_unstable();
            idx
        })
        .collect()
}

/// Records that enter the model for `spec`, in video-id order.
pub(crate) fn eligible_records<'a>(records: &'a [VideoRecord], spec: &ModelSpec) -> Vec<&'a VideoRecord> {
    let mut out: Vec<&VideoRecord> = records.iter().filter(|r| spec.response.of(r).is_some()).collect();
    out.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    out
}

fn failure_kind(e: &Error) -> &'static str {
    match e {
        Error::RankDeficient { .. } => "rank_deficient",
        Error::InsufficientData(_) => "insufficient_data",
        Error::DegenerateInput(_) => "degenerate_input",
        _ => "design_error",
    }
}

fn run_replicate(
    rep: usize,
    rows: &[&VideoRecord],
    idx: &[usize],
    scores: &BTreeMap<String, EmotionScores>,
    spec: &ModelSpec,
) -> Replicate {
    let subset: Vec<VideoRecord> = idx.iter().map(|&i| rows[i].clone()).collect();
    let failed = |kind: &str| Replicate {
        rep,
        estimates: None,
        failure: Some(kind.to_string()),
    };
    let design = match build_design(&subset, scores, spec) {
        Ok((d, _)) => d,
        Err(e) => {
            log::debug!("replicate {rep}: {e}");
            return failed(failure_kind(&e));
        }
    };
    if design.n() <= design.p() {
        return failed("insufficient_data");
    }
    let fit = fit_nb(&design);
    if !fit.converged {
        return failed("not_converged");
    }
    if fit.coefficients.iter().any(|c| !c.estimate.is_finite()) {
        return failed("non_finite");
    }
    Replicate {
        rep,
        estimates: Some(fit.coefficients.iter().map(|c| (c.name.clone(), c.estimate)).collect()),
        failure: None,
    }
}

/// Percentile bootstrap over subsamples drawn without replacement.
///
/// Replicate `r` draws `floor(fraction * n)` of the eligible records using
/// the generator for `(seed, r)`; dummy columns are rebuilt per subset. The
/// result does not depend on `workers`.
pub fn bootstrap(
    records: &[VideoRecord],
    scores: &BTreeMap<String, EmotionScores>,
    spec: &ModelSpec,
    reps: usize,
    fraction: f64,
    seed: u64,
    workers: usize,
) -> Result<BootstrapResult> {
    if reps == 0 {
        return Err(Error::Invalid("reps must be at least 1".into()));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Invalid(format!("fraction {fraction} is outside (0, 1]")));
    }
    spec.validate()?;
    let rows = eligible_records(records, spec);
    let n = rows.len();
    let size = (fraction * n as f64).floor() as usize;
    if size == 0 {
        return Err(Error::InsufficientData(format!(
            "subsample of {fraction} of {n} records is empty"
        )));
    }
    let full_columns = {
        let owned: Vec<VideoRecord> = rows.iter().map(|r| (*r).clone()).collect();
        build_design(&owned, scores, spec)?.0.column_names().to_vec()
    };

    let subsets = subsample_indices(n, size, reps, seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
    let replicates: Vec<Replicate> = pool.install(|| {
        subsets
            .par_iter()
            .enumerate()
            .map(|(rep, idx)| run_replicate(rep, &rows, idx, scores, spec))
            .collect()
    });

    let mut failures = BTreeMap::new();
    let mut draws: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &replicates {
        match (&r.estimates, &r.failure) {
            (Some(est), _) => {
                for (name, v) in est {
                    draws.entry(name.clone()).or_default().push(*v);
                }
            }
            (None, Some(kind)) => *failures.entry(kind.clone()).or_insert(0) += 1,
            (None, None) => unreachable!(),
        }
    }
    let n_converged = replicates.iter().filter(|r| r.estimates.is_some()).count();
    if n_converged == 0 {
        return Err(Error::BootstrapFailed {
            reps,
            histogram: failures,
        });
    }
    if n_converged < reps {
        log::warn!("{} of {reps} bootstrap replicates failed: {failures:?}", reps - n_converged);
    }

    let coefficients = draws
        .into_iter()
        .map(|(name, values)| {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let mut sorted = values;
            sorted.sort_by(f64::total_cmp);
            (
                name,
                BootstrapCoefficient {
                    mean_estimate: mean,
                    ci_low: percentile_nearest_rank(&sorted, 2.5),
                    ci_high: percentile_nearest_rank(&sorted, 97.5),
                    n_converged: sorted.len(),
                },
            )
        })
        .collect();

    Ok(BootstrapResult {
        reps,
        subsample_fraction: fraction,
        subsample_size: size,
        seed,
        n_converged,
        failures,
        columns: full_columns,
        coefficients,
        replicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_matches_integer_rule() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(percentile_nearest_rank(&v, 2.5), 25.0);
        assert_eq!(percentile_nearest_rank(&v, 97.5), 975.0);
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(percentile_nearest_rank(&v, 2.5), 1.0);
        assert_eq!(percentile_nearest_rank(&v, 97.5), 10.0);
        assert_eq!(percentile_nearest_rank(&[4.0], 50.0), 4.0);
    }

    #[test]
    fn subsamples_are_sorted_distinct_and_seeded() {
        let a = subsample_indices(100, 20, 5, 9);
        assert_eq!(a, subsample_indices(100, 20, 5, 9));
        assert_ne!(a, subsample_indices(100, 20, 5, 10));
        for s in &a {
            assert_eq!(s.len(), 20);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
        }
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn full_fraction_uses_every_row() {
        let a = subsample_indices(30, 30, 2, 1);
        assert_eq!(a[0], (0..30).collect::<Vec<_>>());
    }
}
