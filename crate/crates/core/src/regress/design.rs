use std::collections::{BTreeMap, BTreeSet};

use chrono::Datelike;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::corpus::{Metric, VideoRecord};
use crate::emotion::EmotionCategory;
use crate::error::{Error, Result};
use crate::scoring::EmotionScores;

/// How video duration enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationControl {
    None,
    /// `ln(duration_seconds + 1)` as one continuous column.
    Log,
    /// Dummies for sample deciles of duration, first decile as reference.
    Deciles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Controls {
    pub duration: DurationControl,
    pub channel_fe: bool,
    pub month_fe: bool,
    pub weekday_fe: bool,
}

impl Default for Controls {
    fn default() -> Self {
        Controls {
            duration: DurationControl::Log,
            channel_fe: true,
            month_fe: true,
            weekday_fe: true,
        }
    }
}

pub const ALLOWED_PREDICTORS: [EmotionCategory; 4] = [
    EmotionCategory::OtherCondemning,
    EmotionCategory::OtherPraising,
    EmotionCategory::OtherSuffering,
    EmotionCategory::Neutral,
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub response: Metric,
    #[serde(default = "default_predictors")]
    pub emotion_predictors: Vec<EmotionCategory>,
    #[serde(default)]
    pub controls: Controls,
}

fn default_predictors() -> Vec<EmotionCategory> {
    ALLOWED_PREDICTORS.to_vec()
}

impl ModelSpec {
    pub fn new(response: Metric) -> Self {
        ModelSpec {
            response,
            emotion_predictors: default_predictors(),
            controls: Controls::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.emotion_predictors.is_empty() {
            return Err(Error::Invalid("model needs at least one emotion predictor".into()));
        }
        let mut seen = BTreeSet::new();
        for p in &self.emotion_predictors {
            if !ALLOWED_PREDICTORS.contains(p) {
                return Err(Error::Invalid(format!("{p} is not an allowed emotion predictor")));
            }
            if !seen.insert(p) {
                return Err(Error::Invalid(format!("{p} listed twice")));
            }
        }
        Ok(())
    }
}

/// Response counts and dense regressors, rows sorted by video id.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    y: Vec<f64>,
    x: DMatrix<f64>,
    column_names: Vec<String>,
    row_ids: Vec<String>,
}

impl DesignMatrix {
    /// Builds a design from raw parts, checking shape, counts, and rank.
    pub fn new(y: Vec<f64>, x: DMatrix<f64>, column_names: Vec<String>) -> Result<Self> {
        let row_ids = (0..y.len()).map(|i| format!("row{i}")).collect();
        Self::with_row_ids(y, x, column_names, row_ids)
    }

    pub fn with_row_ids(
        y: Vec<f64>,
        x: DMatrix<f64>,
        column_names: Vec<String>,
        row_ids: Vec<String>,
    ) -> Result<Self> {
        if x.nrows() != y.len() || row_ids.len() != y.len() {
            return Err(Error::Invalid(format!(
                "{} responses, {} rows, {} row ids",
                y.len(),
                x.nrows(),
                row_ids.len()
            )));
        }
        if x.ncols() != column_names.len() {
            return Err(Error::Invalid(format!(
                "{} columns but {} names",
                x.ncols(),
                column_names.len()
            )));
        }
        if x.ncols() == 0 || y.is_empty() {
            return Err(Error::Invalid("empty design".into()));
        }
        if let Some(v) = y.iter().find(|v| !(v.is_finite() && **v >= 0.0 && v.fract() == 0.0)) {
            return Err(Error::Invalid(format!("response {v} is not a non-negative integer")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("design has non-finite cells".into()));
        }
        check_rank(&x, &column_names)?;
        Ok(DesignMatrix {
            y,
            x,
            column_names,
            row_ids,
        })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn column_means(&self) -> Vec<f64> {
        (0..self.p())
            .map(|j| self.x.column(j).iter().sum::<f64>() / self.n() as f64)
            .collect()
    }

    /// Same design with rows reordered; `order[i]` is the source row of row i.
    pub fn permuted(&self, order: &[usize]) -> Self {
        DesignMatrix {
            y: order.iter().map(|&i| self.y[i]).collect(),
            x: self.x.select_rows(order),
            column_names: self.column_names.clone(),
            row_ids: order.iter().map(|&i| self.row_ids[i].clone()).collect(),
        }
    }
}

/// Gram-Schmidt pass over columns in order; a column whose residual is
/// negligible against its own norm is reported with the earlier columns
/// that reproduce it.
fn check_rank(x: &DMatrix<f64>, names: &[String]) -> Result<()> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        let mut resid = col.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&resid);
                resid.axpy(-c, q, 1.0);
            }
        }
        let rn = resid.norm();
        if norm == 0.0 || rn <= 1e-9 * norm {
            let with = if norm == 0.0 || kept.is_empty() {
                Vec::new()
            } else {
                let prev = x.select_columns(&kept);
                let gram = prev.transpose() * &prev;
                let rhs = prev.transpose() * &col;
                let coef = gram
                    .cholesky()
                    .map(|c| c.solve(&rhs))
                    .unwrap_or_else(|| DVector::zeros(kept.len()));
                kept.iter()
                    .zip(coef.iter())
                    .filter(|(_, c)| c.abs() > 1e-8)
                    .map(|(&k, _)| names[k].clone())
                    .collect()
            };
            return Err(Error::RankDeficient {
                column: names[j].clone(),
                with,
            });
        }
        basis.push(resid / rn);
        kept.push(j);
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DesignReport {
    pub dropped_missing_response: usize,
    /// Fixed-effect columns backed by a single observation.
    pub singleton_levels: Vec<String>,
}

const WEEKDAYS: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];

fn decile_cutpoints(durations: &[f64]) -> Vec<f64> {
    let mut sorted = durations.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    (1..10)
        .map(|k| {
            let rank = (k * n).div_ceil(10).max(1);
            sorted[rank - 1]
        })
        .collect()
}

/// Dummy block for one categorical control. `levels[i]` is row i's level;
/// the smallest level present is the reference.
fn dummy_block<K: Ord + Clone>(
    levels: &[K],
    label: impl Fn(&K) -> String,
    names: &mut Vec<String>,
    columns: &mut Vec<Vec<f64>>,
    report: &mut DesignReport,
) {
    let distinct: BTreeMap<K, usize> = levels.iter().fold(BTreeMap::new(), |mut m, k| {
        *m.entry(k.clone()).or_insert(0) += 1;
        m
    });
    for (level, count) in distinct.iter().skip(1) {
        let name = label(level);
        if *count == 1 {
            log::warn!("fixed-effect level {name} has a single observation");
            report.singleton_levels.push(name.clone());
        }
        names.push(name);
        columns.push(levels.iter().map(|k| f64::from(k == level)).collect());
    }
}

/// Assembles the regression design for `spec`.
///
/// Records whose response is missing are dropped (and counted). Columns are
/// intercept, emotion probabilities in spec order, the duration control,
/// then channel, month, and weekday dummies.
pub fn build_design(
    records: &[VideoRecord],
    scores: &BTreeMap<String, EmotionScores>,
    spec: &ModelSpec,
) -> Result<(DesignMatrix, DesignReport)> {
    spec.validate()?;
    let mut report = DesignReport::default();
    let mut rows: Vec<(&VideoRecord, f64, &EmotionScores)> = Vec::with_capacity(records.len());
    for r in records {
        let Some(y) = spec.response.of(r) else {
            report.dropped_missing_response += 1;
            continue;
        };
        let s = scores
            .get(&r.video_id)
            .ok_or_else(|| Error::MissingScore(r.video_id.clone()))?;
        rows.push((r, y as f64, s));
    }
    if report.dropped_missing_response > 0 {
        log::info!(
            "dropped {} records without {}",
            report.dropped_missing_response,
            spec.response
        );
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!("no records with {}", spec.response)));
    }
    rows.sort_by(|a, b| a.0.video_id.cmp(&b.0.video_id));

    let n = rows.len();
    let mut names = vec!["intercept".to_string()];
    let mut columns = vec![vec![1.0; n]];
    for p in &spec.emotion_predictors {
        names.push(p.token().to_string());
        columns.push(rows.iter().map(|(_, _, s)| s.get(*p)).collect());
    }
    match spec.controls.duration {
        DurationControl::None => {}
        DurationControl::Log => {
            names.push("log_duration".into());
            columns.push(
                rows.iter()
                    .map(|(r, _, _)| (r.duration_seconds as f64 + 1.0).ln())
                    .collect(),
            );
        }
        DurationControl::Deciles => {
            let durations: Vec<f64> = rows.iter().map(|(r, _, _)| r.duration_seconds as f64).collect();
            let cuts = decile_cutpoints(&durations);
            let buckets: Vec<usize> = durations
                .iter()
                .map(|d| 1 + cuts.iter().filter(|c| d > c).count())
                .collect();
            dummy_block(&buckets, |b| format!("duration_decile[{b}]"), &mut names, &mut columns, &mut report);
        }
    }
    if spec.controls.channel_fe {
        let levels: Vec<String> = rows.iter().map(|(r, _, _)| r.channel_id.clone()).collect();
        dummy_block(&levels, |c| format!("channel[{c}]"), &mut names, &mut columns, &mut report);
    }
    if spec.controls.month_fe {
        let levels: Vec<u32> = rows.iter().map(|(r, _, _)| r.upload_date.month()).collect();
        dummy_block(&levels, |m| format!("month[{m}]"), &mut names, &mut columns, &mut report);
    }
    if spec.controls.weekday_fe {
        let levels: Vec<u32> = rows
            .iter()
            .map(|(r, _, _)| r.upload_date.weekday().num_days_from_monday())
            .collect();
        dummy_block(
            &levels,
            |d| format!("weekday[{}]", WEEKDAYS[*d as usize]),
            &mut names,
            &mut columns,
            &mut report,
        );
    }

    let x = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    let y = rows.iter().map(|(_, y, _)| *y).collect();
    let row_ids = rows.iter().map(|(r, _, _)| r.video_id.clone()).collect();
    let design = DesignMatrix::with_row_ids(y, x, names, row_ids)?;
    Ok((design, report))
}
