//! Six-emotion scoring: the scorer contract, primary-emotion assignment, and
//! evaluation against gold labels.

mod eval;
mod lexicon;
mod replay;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize};

use crate::corpus::VideoRecord;
use crate::emotion::EmotionCategory;
use crate::error::{Error, Result};

pub use eval::{evaluate, evaluate_all, predictions_from_scores, BinaryEval, EvalReport};
pub use lexicon::{Lexicon, LexiconScorer};
pub use replay::{read_replay, write_replay, ReplayRecord, ReplayScorer};

pub const DEFAULT_MAX_IN_FLIGHT: usize = 8;

/// Independent per-category probabilities; they need not sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmotionScores([f64; 6]);

impl EmotionScores {
    pub fn new(values: [f64; 6]) -> Result<Self> {
        for (c, v) in EmotionCategory::ALL.iter().zip(values) {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Protocol(format!(
                    "probability for {c} is {v}, outside [0, 1]"
                )));
            }
        }
        Ok(EmotionScores(values))
    }

    pub fn get(&self, category: EmotionCategory) -> f64 {
        self.0[category.index()]
    }

    pub fn values(&self) -> &[f64; 6] {
        &self.0
    }
}

impl Serialize for EmotionScores {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(6))?;
        for c in EmotionCategory::ALL {
            map.serialize_entry(c.token(), &self.0[c.index()])?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for EmotionScores {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ScoresVisitor;

        impl<'de> Visitor<'de> for ScoresVisitor {
            type Value = EmotionScores;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from the six category tokens to probabilities")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<Self::Value, A::Error> {
                use serde::de::Error as _;
                let mut values = [None; 6];
                while let Some((key, value)) = access.next_entry::<String, f64>()? {
                    let c: EmotionCategory = key.parse().map_err(A::Error::custom)?;
                    if values[c.index()].replace(value).is_some() {
                        return Err(A::Error::custom(format!("duplicate category {c}")));
                    }
                }
                let mut out = [0.0; 6];
                for c in EmotionCategory::ALL {
                    out[c.index()] = values[c.index()]
                        .ok_or_else(|| A::Error::custom(format!("missing category {c}")))?;
                }
                EmotionScores::new(out).map_err(A::Error::custom)
            }
        }

        deserializer.deserialize_map(ScoresVisitor)
    }
}

/// Category with the highest probability; ties go to the earliest category in
/// canonical order.
pub fn primary_emotion(scores: &EmotionScores) -> EmotionCategory {
    let mut best = EmotionCategory::ALL[0];
    for c in EmotionCategory::ALL.into_iter().skip(1) {
        if scores.get(c) > scores.get(best) {
            best = c;
        }
    }
    best
}

/// Share of records whose primary emotion is each category.
pub fn distribution<'a>(
    scores: impl IntoIterator<Item = &'a EmotionScores>,
) -> Result<BTreeMap<EmotionCategory, f64>> {
    let mut counts = [0usize; 6];
    let mut n = 0usize;
    for s in scores {
        counts[primary_emotion(s).index()] += 1;
        n += 1;
    }
    if n == 0 {
        return Err(Error::InsufficientData("no scored records".into()));
    }
    Ok(EmotionCategory::ALL
        .into_iter()
        .map(|c| (c, counts[c.index()] as f64 / n as f64))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    RemoteService,
    LexiconBaseline,
    FileReplay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Language {
    #[serde(rename = "KO")]
    Ko,
    #[serde(rename = "EN")]
    En,
}

impl Language {
    pub fn code(self) -> &'static str {
        match self {
            Language::Ko => "KO",
            Language::En => "EN",
        }
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "KO" => Ok(Language::Ko),
            "EN" => Ok(Language::En),
            other => Err(Error::Invalid(format!("unknown language `{other}`"))),
        }
    }
}

/// Which scorer to use and where it lives.
///
/// `source` is the replay file for `file_replay` and an optional lexicon file
/// for `lexicon_baseline` (the bundled lexicon for `language` otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerDescriptor {
    pub kind: ScorerKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    pub language: Language,
    pub version: String,
    #[serde(default)]
    pub source: Option<PathBuf>,
}

impl ScorerDescriptor {
    pub fn validate(&self) -> Result<()> {
        match (self.kind, &self.endpoint) {
            (ScorerKind::RemoteService, None) => {
                return Err(Error::Invalid("remote_service scorer requires an endpoint".into()))
            }
            (ScorerKind::LexiconBaseline | ScorerKind::FileReplay, Some(_)) => {
                return Err(Error::Invalid(format!(
                    "{:?} scorer does not take an endpoint",
                    self.kind
                )))
            }
            _ => {}
        }
        if self.kind == ScorerKind::FileReplay && self.source.is_none() {
            return Err(Error::Invalid("file_replay scorer requires a source file".into()));
        }
        Ok(())
    }
}

pub trait Scorer: Send + Sync {
    fn score(&self, record: &VideoRecord) -> Result<EmotionScores>;
}

/// Request body sent to a remote scoring service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub video_id: String,
    pub title: String,
    pub thumbnail_url: String,
    pub language: Language,
    pub categories: Vec<EmotionCategory>,
}

impl ScoreRequest {
    pub fn for_record(record: &VideoRecord, language: Language) -> Self {
        ScoreRequest {
            video_id: record.video_id.clone(),
            title: record.title.clone(),
            thumbnail_url: record.thumbnail_ref.clone(),
            language,
            categories: EmotionCategory::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: EmotionScores,
}

/// Parses a remote response body; out-of-range or missing probabilities are
/// protocol errors, never clamped.
pub fn parse_score_response(body: &str) -> Result<EmotionScores> {
    serde_json::from_str::<ScoreResponse>(body)
        .map(|r| r.scores)
        .map_err(|e| Error::Protocol(e.to_string()))
}

/// Scores every record with at most `max_in_flight` concurrent calls.
///
/// On failure, the error of the earliest failing record (in input order) is
/// returned, so the outcome does not depend on scheduling.
pub fn score_all(
    records: &[VideoRecord],
    scorer: &dyn Scorer,
    max_in_flight: usize,
) -> Result<BTreeMap<String, EmotionScores>> {
    let workers = max_in_flight.max(1).min(records.len().max(1));
    let next = AtomicUsize::new(0);
    let mut results: Vec<Option<Result<EmotionScores>>> = Vec::new();
    results.resize_with(records.len(), || None);
    let chunks: Vec<Vec<(usize, Result<EmotionScores>)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(record) = records.get(i) else { break };
                        done.push((i, scorer.score(record)));
                    }
                    done
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scoring worker panicked"))
            .collect()
    });
    for (i, r) in chunks.into_iter().flatten() {
        results[i] = Some(r);
    }
    let mut out = BTreeMap::new();
    for (record, result) in records.iter().zip(results) {
        let scores = result.expect("every record is scored")?;
        out.insert(record.video_id.clone(), scores);
    }
    Ok(out)
}
