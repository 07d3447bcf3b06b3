//! Video-metadata corpora: loading, validation, and descriptive engagement
//! statistics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Country {
    #[serde(rename = "KO")]
    Ko,
    #[serde(rename = "US")]
    Us,
}

impl Country {
    pub const ALL: [Country; 2] = [Country::Ko, Country::Us];

    pub fn code(self) -> &'static str {
        match self {
            Country::Ko => "KO",
            Country::Us => "US",
        }
    }
}

impl fmt::Display for Country {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Country {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "KO" => Ok(Country::Ko),
            "US" => Ok(Country::Us),
            other => Err(Error::Invalid(format!("unknown country `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoliticalLeaning {
    Left,
    Center,
    Right,
    Unspecified,
}

/// One row of the channel registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelInfo {
    pub channel_id: String,
    pub name: String,
    pub country: Country,
    pub political_leaning: PoliticalLeaning,
    pub creation_date: NaiveDate,
    pub subscribers: u64,
    pub total_videos: u64,
    pub total_views: u64,
}

/// One news video with its engagement counts at retrieval time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub channel_id: String,
    pub country: Country,
    pub title: String,
    pub thumbnail_ref: String,
    pub duration_seconds: u64,
    pub upload_date: NaiveDate,
    pub retrieved_at: NaiveDate,
    pub views: u64,
    pub likes: Option<u64>,
    pub comments: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Views,
    Likes,
    Comments,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Views, Metric::Likes, Metric::Comments];

    pub fn of(self, record: &VideoRecord) -> Option<u64> {
        match self {
            Metric::Views => Some(record.views),
            Metric::Likes => record.likes,
            Metric::Comments => record.comments,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Views => "views",
            Metric::Likes => "likes",
            Metric::Comments => "comments",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown metric `{s}`")))
    }
}

/// Channel registry keyed by channel id.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    channels: BTreeMap<String, ChannelInfo>,
}

impl Registry {
    pub fn new(channels: impl IntoIterator<Item = ChannelInfo>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for info in channels {
            if map.contains_key(&info.channel_id) {
                return Err(Error::Invalid(format!(
                    "duplicate channel_id `{}` in registry",
                    info.channel_id
                )));
            }
            map.insert(info.channel_id.clone(), info);
        }
        Ok(Registry { channels: map })
    }

    /// Reads a line-delimited JSON registry.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut channels = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let info: ChannelInfo = serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            channels.push(info);
        }
        Registry::new(channels)
    }

    pub fn get(&self, channel_id: &str) -> Option<&ChannelInfo> {
        self.channels.get(channel_id)
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ChannelInfo> {
        self.channels.values()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    /// 1-based line number in the source file.
    pub line: usize,
    pub video_id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedDataset {
    /// Accepted records in file order.
    pub records: Vec<VideoRecord>,
    pub rejections: Vec<Rejection>,
}

impl LoadedDataset {
    pub fn channel_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.channel_id.clone()).or_insert(0) += 1;
        }
        counts
    }
}

/// Loads a line-delimited record file, rejecting invalid records individually.
pub fn load_dataset(path: impl AsRef<Path>, registry: &Registry) -> Result<LoadedDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, registry)
}

pub fn parse_dataset(text: &str, registry: &Registry) -> Result<LoadedDataset> {
    if registry.is_empty() {
        return Err(Error::Invalid("channel registry is empty".into()));
    }
    let mut out = LoadedDataset::default();
    let mut seen: HashSet<String> = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let record: VideoRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                let video_id = serde_json::from_str::<serde_json::Value>(line)
                    .ok()
                    .and_then(|v| v.get("video_id")?.as_str().map(str::to_owned));
                out.rejections.push(Rejection {
                    line: line_no,
                    video_id,
                    reason: format!("malformed record: {e}"),
                });
                continue;
            }
        };
        if let Err(reason) = validate_record(&record, registry, &seen) {
            out.rejections.push(Rejection {
                line: line_no,
                video_id: Some(record.video_id),
                reason,
            });
            continue;
        }
        seen.insert(record.video_id.clone());
        out.records.push(record);
    }
    Ok(out)
}

fn validate_record(
    record: &VideoRecord,
    registry: &Registry,
    seen: &HashSet<String>,
) -> std::result::Result<(), String> {
    if record.video_id.is_empty() {
        return Err("empty video_id".into());
    }
    if seen.contains(&record.video_id) {
        return Err("duplicate video_id".into());
    }
    let Some(channel) = registry.get(&record.channel_id) else {
        return Err("unknown channel".into());
    };
    if channel.country != record.country {
        return Err(format!(
            "country {} does not match channel country {}",
            record.country, channel.country
        ));
    }
    if record.upload_date > record.retrieved_at {
        return Err("upload_date is after retrieved_at".into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    /// Sample-adjusted skewness; `None` when undefined (n < 3 or sd = 0).
    pub skewness: Option<f64>,
    /// Sample-adjusted excess kurtosis; `None` when undefined (n < 4 or sd = 0).
    pub kurtosis: Option<f64>,
}

/// Summary statistics of a sample.
///
/// Values are sorted before any accumulation so the result does not depend on
/// input order. `sd` uses the n - 1 denominator; skewness is the adjusted
/// Fisher-Pearson coefficient `G1 = g1 * sqrt(n(n-1)) / (n-2)` and kurtosis is
/// the adjusted excess kurtosis `G2 = ((n+1) g2 + 6)(n-1) / ((n-2)(n-3))`,
/// where `g1 = m3 / m2^1.5`, `g2 = m4 / m2^2 - 3` and `mk` are the central
/// moments with denominator n.
pub fn summarize(values: &[f64]) -> Result<DescriptiveStats> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 observations, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("non-finite value in sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let nf = n as f64;

    let mean = sorted.iter().sum::<f64>() / nf;
    let (mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0);
    for &x in &sorted {
        let d = x - mean;
        let d2 = d * d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
    }
    let sd = (s2 / (nf - 1.0)).sqrt();
    let m2 = s2 / nf;
    let m3 = s3 / nf;
    let m4 = s4 / nf;

    let degenerate = m2 <= 0.0;
    let skewness = (!degenerate && n >= 3).then(|| {
        let g1 = m3 / m2.powf(1.5);
        g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0)
    });
    let kurtosis = (!degenerate && n >= 4).then(|| {
        let g2 = m4 / (m2 * m2) - 3.0;
        ((nf + 1.0) * g2 + 6.0) * (nf - 1.0) / ((nf - 2.0) * (nf - 3.0))
    });

    Ok(DescriptiveStats {
        n,
        mean,
        median: median_of_sorted(&sorted),
        sd,
        min: sorted[0],
        max: sorted[n - 1],
        skewness,
        kurtosis,
    })
}

pub(crate) fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Values of `metric` for one country, skipping records where it is absent.
pub fn metric_values(records: &[VideoRecord], metric: Metric, country: Country) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.country == country)
        .filter_map(|r| metric.of(r))
        .map(|v| v as f64)
        .collect()
}

pub fn descriptive_stats(
    records: &[VideoRecord],
    metric: Metric,
    country: Country,
) -> Result<DescriptiveStats> {
    let values = metric_values(records, metric, country);
    summarize(&values).map_err(|e| match e {
        Error::InsufficientData(msg) => {
            Error::InsufficientData(format!("{metric} for {country}: {msg}"))
        }
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngagementRatios {
    pub median_to_mean_views: f64,
    /// Total comments over total views, across records that report comments.
    /// `None` when no such record has views.
    pub comment_intensity: Option<f64>,
}

pub fn median_to_mean(median: f64, mean: f64) -> Result<f64> {
    if mean == 0.0 {
        return Err(Error::DegenerateInput("mean is zero".into()));
    }
    Ok(median / mean)
}

pub fn engagement_ratios(records: &[VideoRecord], country: Country) -> Result<EngagementRatios> {
    let in_country: Vec<&VideoRecord> = records.iter().filter(|r| r.country == country).collect();
    if in_country.is_empty() {
        return Err(Error::InsufficientData(format!("no records for {country}")));
    }
    let mut views: Vec<f64> = in_country.iter().map(|r| r.views as f64).collect();
    views.sort_by(f64::total_cmp);
    let mean = views.iter().sum::<f64>() / views.len() as f64;
    if mean == 0.0 {
        return Err(Error::DegenerateInput(format!(
            "mean views for {country} is zero"
        )));
    }
    let median_to_mean_views = median_to_mean(median_of_sorted(&views), mean)?;

    let (mut comment_sum, mut view_sum) = (0u128, 0u128);
    for r in &in_country {
        if let Some(c) = r.comments {
            comment_sum += c as u128;
            view_sum += r.views as u128;
        }
    }
    let comment_intensity = (view_sum > 0).then(|| comment_sum as f64 / view_sum as f64);

    Ok(EngagementRatios {
        median_to_mean_views,
        comment_intensity,
    })
}

/// Rounds half away from zero to `decimals` places, the way tables report.
pub fn round_to(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}

/// Groups records by channel id, keeping file order within each group.
pub fn by_channel(records: &[VideoRecord]) -> BTreeMap<&str, Vec<&VideoRecord>> {
    let mut groups: BTreeMap<&str, Vec<&VideoRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.channel_id.as_str()).or_default().push(r);
    }
    groups
}

pub fn index_by_id(records: &[VideoRecord]) -> HashMap<&str, &VideoRecord> {
    records.iter().map(|r| (r.video_id.as_str(), r)).collect()
}
