//! Daily view-growth curves used to justify a fixed retrieval window.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::median_of_sorted;
use crate::error::{Error, Result};

/// Cumulative views at the end of each day since release (day 1..D).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSeries {
    pub video_id: String,
    pub daily_views: Vec<u64>,
}

impl GrowthSeries {
    pub fn validate(&self) -> Result<()> {
        if self.daily_views.len() < 2 {
            return Err(Error::Invalid(format!(
                "series `{}` needs at least 2 days",
                self.video_id
            )));
        }
        if let Some(day) = self.daily_views.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Invalid(format!(
                "series `{}` decreases after day {}",
                self.video_id,
                day + 1
            )));
        }
        Ok(())
    }
}

pub fn load_growth(path: impl AsRef<Path>) -> Result<Vec<GrowthSeries>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Percentage growth of each day over the previous day's cumulative total.
///
/// Element `t` is the growth from day `t + 1` to day `t + 2`.
pub fn daily_growth_rates(series: &GrowthSeries) -> Result<Vec<f64>> {
    series.validate()?;
    series
        .daily_views
        .windows(2)
        .enumerate()
        .map(|(t, w)| {
            if w[0] == 0 {
                return Err(Error::DegenerateInput(format!(
                    "series `{}` has zero total on day {}",
                    series.video_id,
                    t + 1
                )));
            }
            Ok(100.0 * (w[1] - w[0]) as f64 / w[0] as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSummary {
    pub start_day: usize,
    pub end_day: usize,
    /// Number of per-video per-day rates pooled in this window.
    pub n_rates: usize,
    pub mean_rate: Option<f64>,
    pub median_rate: Option<f64>,
}

/// Mean and median of all per-day growth rates that fall in each window.
///
/// Rate `t` of a series is attributed to day `t + 1`; windows are inclusive.
/// Series with a zero first-day total are skipped with a warning.
pub fn stability_summary(
    curves: &[GrowthSeries],
    windows: &[(usize, usize)],
) -> Result<Vec<WindowSummary>> {
    if curves.is_empty() {
        return Err(Error::InsufficientData("no growth curves".into()));
    }
    let max_days = curves.iter().map(|c| c.daily_views.len()).max().unwrap_or(0);
    for &(start, end) in windows {
        if start < 1 || start > end || end > max_days {
            return Err(Error::Invalid(format!(
                "window ({start}, {end}) is outside days 1..{max_days}"
            )));
        }
    }

    let mut ordered: Vec<&GrowthSeries> = curves.iter().collect();
    ordered.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    let mut rates = Vec::with_capacity(ordered.len());
    for series in ordered {
        if series.daily_views.first() == Some(&0) {
            log::warn!("skipping `{}`: zero views on day 1", series.video_id);
            continue;
        }
        rates.push(daily_growth_rates(series)?);
    }

    Ok(windows
        .iter()
        .map(|&(start, end)| {
            let mut pooled: Vec<f64> = rates
                .iter()
                .flat_map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(t, _)| (start..=end).contains(&(t + 1)))
                        .map(|(_, &v)| v)
                })
                .collect();
            let n_rates = pooled.len();
            let mean_rate = (n_rates > 0).then(|| pooled.iter().sum::<f64>() / n_rates as f64);
            pooled.sort_by(f64::total_cmp);
            let median_rate = (n_rates > 0).then(|| median_of_sorted(&pooled));
            WindowSummary {
                start_day: start,
                end_day: end,
                n_rates,
                mean_rate,
                median_rate,
            }
        })
        .collect())
}
