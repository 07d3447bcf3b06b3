use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::VideoRecord;
use crate::error::{Error, Result};
use crate::regress::report::{csv_field, fmt};
use crate::regress::{build_design, fit_nb, ModelSpec, Z_95};
use crate::scoring::EmotionScores;

use super::bootstrap::eligible_records;

/// Extra rows required beyond the number of model columns.
pub const CHANNEL_MARGIN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelFit {
    pub coefficient: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_videos: usize,
    pub n_columns: usize,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSkip {
    pub n_videos: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelFitSet {
    pub focal: String,
    pub fits: BTreeMap<String, ChannelFit>,
    pub skipped: BTreeMap<String, ChannelSkip>,
    pub failed: BTreeMap<String, ChannelSkip>,
}

impl ChannelFitSet {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel fits serialize")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("channel_id,status,coefficient,std_error,ci_low,ci_high,n_videos,sign,reason\n");
        let mut rows: BTreeMap<&str, String> = BTreeMap::new();
        for (id, f) in &self.fits {
            let sign = match f.sign {
                Sign::Positive => "positive",
                Sign::Negative => "negative",
            };
            rows.insert(
                id,
                format!(
                    "{},fitted,{},{},{},{},{},{},",
                    csv_field(id),
                    fmt(f.coefficient),
                    fmt(f.std_error),
                    fmt(f.ci_low),
                    fmt(f.ci_high),
                    f.n_videos,
                    sign
                ),
            );
        }
        for (status, set) in [("skipped", &self.skipped), ("failed", &self.failed)] {
            for (id, s) in set {
                rows.insert(
                    id,
                    format!("{},{status},,,,,{},,{}", csv_field(id), s.n_videos, csv_field(&s.reason)),
                );
            }
        }
        for line in rows.values() {
            writeln!(out, "{line}").unwrap();
        }
        out
    }
}

enum Outcome {
    Fit(ChannelFit),
    Skip(ChannelSkip),
    Fail(ChannelSkip),
}

fn fit_channel(rows: Vec<VideoRecord>, scores: &BTreeMap<String, EmotionScores>, spec: &ModelSpec, focal: &str) -> Outcome {
    let n_videos = rows.len();
    let skip = |reason: String| ChannelSkip { n_videos, reason };
    let design = match build_design(&rows, scores, spec) {
        Ok((d, _)) => d,
        // Small channels often collapse to a rank-deficient design; judge
        // them by the columns the design had before the collinear one.
        Err(Error::RankDeficient { with, .. }) if n_videos < with.len() + 1 + CHANNEL_MARGIN => {
            return Outcome::Skip(skip(format!(
                "{n_videos} videos is below the threshold of at least {} ({} columns + {CHANNEL_MARGIN})",
                with.len() + 1 + CHANNEL_MARGIN,
                with.len() + 1
            )))
        }
        Err(e) => return Outcome::Fail(skip(e.to_string())),
    };
    if n_videos < design.p() + CHANNEL_MARGIN {
        return Outcome::Skip(skip(format!(
            "{n_videos} videos is below the threshold of {} ({} columns + {CHANNEL_MARGIN})",
            design.p() + CHANNEL_MARGIN,
            design.p()
        )));
    }
    let fit = fit_nb(&design);
    if !fit.converged {
        return Outcome::Fail(skip("fit did not converge".into()));
    }
    let Some(c) = fit.coefficient(focal) else {
        return Outcome::Fail(skip(format!("focal column `{focal}` missing from the fit")));
    };
    if !c.estimate.is_finite() || !c.std_error.is_finite() {
        return Outcome::Fail(skip("non-finite focal estimate".into()));
    }
    Outcome::Fit(ChannelFit {
        coefficient: c.estimate,
        std_error: c.std_error,
        ci_low: c.estimate - Z_95 * c.std_error,
        ci_high: c.estimate + Z_95 * c.std_error,
        n_videos,
        n_columns: design.p(),
        sign: if c.estimate >= 0.0 { Sign::Positive } else { Sign::Negative },
    })
}

/// One within-channel NB fit per channel, reporting the focal emotion's
/// coefficient. Channels with fewer than `columns + 10` videos are skipped;
/// channels whose fit fails are reported without aborting the run.
pub fn per_channel_fits(
    records: &[VideoRecord],
    scores: &BTreeMap<String, EmotionScores>,
    spec: &ModelSpec,
    focal: &str,
    workers: usize,
) -> Result<ChannelFitSet> {
    spec.validate()?;
    if spec.controls.channel_fe {
        return Err(Error::Invalid(
            "per-channel models must not include channel fixed effects".into(),
        ));
    }
    if !spec.emotion_predictors.iter().any(|e| e.token() == focal) {
        return Err(Error::Invalid(format!("focal column `{focal}` is not a model predictor")));
    }
    let mut groups: BTreeMap<String, Vec<VideoRecord>> = BTreeMap::new();
    for r in eligible_records(records, spec) {
        groups.entry(r.channel_id.clone()).or_default().push(r.clone());
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<(String, Outcome)> = pool.install(|| {
        groups
            .into_par_iter()
            .map(|(id, rows)| {
                let o = fit_channel(rows, scores, spec, focal);
                (id, o)
            })
            .collect()
    });

    let mut set = ChannelFitSet {
        focal: focal.to_string(),
        fits: BTreeMap::new(),
        skipped: BTreeMap::new(),
        failed: BTreeMap::new(),
    };
    for (id, o) in outcomes {
        match o {
            Outcome::Fit(f) => {
                set.fits.insert(id, f);
            }
            Outcome::Skip(s) => {
                log::info!("channel {id} skipped: {}", s.reason);
                set.skipped.insert(id, s);
            }
            Outcome::Fail(s) => {
                log::warn!("channel {id} failed: {}", s.reason);
                set.failed.insert(id, s);
            }
        }
    }
    Ok(set)
}
