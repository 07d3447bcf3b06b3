use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EmotionScores, Scorer};
use crate::corpus::VideoRecord;
use crate::error::{Error, Result};

/// One line of a score replay file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub video_id: String,
    pub scores: EmotionScores,
}

pub fn read_replay(path: impl AsRef<Path>) -> Result<BTreeMap<String, EmotionScores>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let rec: ReplayRecord = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        if out.insert(rec.video_id.clone(), rec.scores).is_some() {
            return Err(parse_err(format!("duplicate video_id `{}`", rec.video_id)));
        }
    }
    Ok(out)
}

/// Writes scores sorted by video id, one JSON object per line.
pub fn write_replay(path: impl AsRef<Path>, scores: &BTreeMap<String, EmotionScores>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for (video_id, s) in scores {
        let rec = ReplayRecord {
            video_id: video_id.clone(),
            scores: *s,
        };
        serde_json::to_writer(&mut buf, &rec).expect("scores serialize");
        buf.push(b'\n');
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(|e| Error::io(path, e))
}

/// Serves precomputed scores by video id.
#[derive(Debug, Clone)]
pub struct ReplayScorer {
    scores: BTreeMap<String, EmotionScores>,
}

impl ReplayScorer {
    pub fn new(scores: BTreeMap<String, EmotionScores>) -> Self {
        ReplayScorer { scores }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_replay(path).map(ReplayScorer::new)
    }
}

impl Scorer for ReplayScorer {
    fn score(&self, record: &VideoRecord) -> Result<EmotionScores> {
        self.scores
            .get(&record.video_id)
            .copied()
            .ok_or_else(|| Error::MissingScore(record.video_id.clone()))
    }
}
