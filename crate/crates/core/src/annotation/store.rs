//! State behind the label-collection service.
//!
//! Submissions are appended to a line-delimited audit log before they are
//! acknowledged. Reopening a store replays that log, so a restarted service
//! resumes exactly where raters left off. The last submission per
//! (item, rater) wins.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::LabelExport;
use crate::emotion::AnnotationChoice;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown rater `{0}`")]
    UnknownRater(String),
    #[error("item `{0}` is not part of this session")]
    UnknownItem(String),
    #[error("invalid session: {0}")]
    InvalidSession(String),
    #[error("audit log {path}: {message}")]
    Log { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationItem {
    pub item_id: String,
    pub title: String,
    pub thumbnail_url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub guideline: String,
    pub raters: Vec<String>,
    pub items: Vec<AnnotationItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceInfo {
    pub token: String,
    pub label: String,
    pub description_en: String,
    pub description_ko: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub guideline: String,
    pub categories: Vec<ChoiceInfo>,
    pub rater_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub item_id: String,
    pub rater: String,
    pub choice: AnnotationChoice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub seq: u64,
    pub item_id: String,
    pub rater: String,
    pub choice: AnnotationChoice,
    pub replaced: Option<AnnotationChoice>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

#[derive(Debug)]
pub struct AnnotationStore {
    config: SessionConfig,
    item_index: HashMap<String, usize>,
    rater_index: HashMap<String, usize>,
    labels: BTreeMap<(usize, usize), AnnotationChoice>,
    audit: Vec<AuditEntry>,
    log: Option<(PathBuf, File)>,
}

impl AnnotationStore {
    /// In-memory store without persistence.
    pub fn new(config: SessionConfig) -> Result<Self, StoreError> {
        let mut item_index = HashMap::new();
        for (i, item) in config.items.iter().enumerate() {
            if item_index.insert(item.item_id.clone(), i).is_some() {
                return Err(StoreError::InvalidSession(format!(
                    "duplicate item `{}`",
                    item.item_id
                )));
            }
        }
        let mut rater_index = HashMap::new();
        for (i, rater) in config.raters.iter().enumerate() {
            if rater_index.insert(rater.clone(), i).is_some() {
                return Err(StoreError::InvalidSession(format!("duplicate rater `{rater}`")));
            }
        }
        if config.raters.is_empty() || config.items.is_empty() {
            return Err(StoreError::InvalidSession(
                "session needs at least one rater and one item".into(),
            ));
        }
        Ok(AnnotationStore {
            config,
            item_index,
            rater_index,
            labels: BTreeMap::new(),
            audit: Vec::new(),
            log: None,
        })
    }

    /// Store backed by an append-only audit log, replaying any existing entries.
    pub fn open(config: SessionConfig, log_path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = log_path.as_ref().to_path_buf();
        let log_err = |message: String| StoreError::Log {
            path: path.clone(),
            message,
        };
        let mut store = AnnotationStore::new(config)?;
        if path.exists() {
            let file = File::open(&path).map_err(|e| log_err(e.to_string()))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| log_err(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: AuditEntry = serde_json::from_str(&line)
                    .map_err(|e| log_err(format!("line {}: {e}", i + 1)))?;
                store.apply(&entry.item_id, &entry.rater, entry.choice)?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| log_err(e.to_string()))?;
        store.log = Some((path, file));
        Ok(store)
    }

    fn rater(&self, rater: &str) -> Result<usize, StoreError> {
        self.rater_index
            .get(rater)
            .copied()
            .ok_or_else(|| StoreError::UnknownRater(rater.to_string()))
    }

    fn apply(&mut self, item_id: &str, rater: &str, choice: AnnotationChoice) -> Result<AuditEntry, StoreError> {
        let r = self.rater(rater)?;
        let i = *self
            .item_index
            .get(item_id)
            .ok_or_else(|| StoreError::UnknownItem(item_id.to_string()))?;
        let replaced = self.labels.insert((i, r), choice);
        if let Some(old) = replaced {
            log::info!("rater `{rater}` revised `{item_id}`: {old} -> {choice}");
        }
        let entry = AuditEntry {
            seq: self.audit.len() as u64 + 1,
            item_id: item_id.to_string(),
            rater: rater.to_string(),
            choice,
            replaced,
        };
        self.audit.push(entry.clone());
        Ok(entry)
    }

    pub fn session(&self, rater: &str) -> Result<SessionInfo, StoreError> {
        self.rater(rater)?;
        Ok(SessionInfo {
            guideline: self.config.guideline.clone(),
            categories: AnnotationChoice::ALL
                .iter()
                .map(|c| match c {
                    AnnotationChoice::Emotion(e) => ChoiceInfo {
                        token: c.token().to_string(),
                        label: e.display_en().to_string(),
                        description_en: e.description_en().to_string(),
                        description_ko: e.description_ko().to_string(),
                    },
                    AnnotationChoice::HardToTell => ChoiceInfo {
                        token: c.token().to_string(),
                        label: "Hard to tell".to_string(),
                        description_en: "The expressed emotion cannot be determined.".to_string(),
                        description_ko: "표현된 감정을 판단하기 어려움".to_string(),
                    },
                })
                .collect(),
            rater_id: rater.to_string(),
        })
    }

    /// First item, in session order, this rater has not labeled yet.
    pub fn next_item(&self, rater: &str) -> Result<Option<&AnnotationItem>, StoreError> {
        let r = self.rater(rater)?;
        Ok(self
            .config
            .items
            .iter()
            .enumerate()
            .find(|(i, _)| !self.labels.contains_key(&(*i, r)))
            .map(|(_, item)| item))
    }

    /// Records a label. The audit log is written and flushed before the
    /// in-memory state changes.
    pub fn submit(&mut self, submission: &Submission) -> Result<AuditEntry, StoreError> {
        self.rater(&submission.rater)?;
        if !self.item_index.contains_key(&submission.item_id) {
            return Err(StoreError::UnknownItem(submission.item_id.clone()));
        }
        let i = self.item_index[&submission.item_id];
        let r = self.rater_index[&submission.rater];
        let entry = AuditEntry {
            seq: self.audit.len() as u64 + 1,
            item_id: submission.item_id.clone(),
            rater: submission.rater.clone(),
            choice: submission.choice,
            replaced: self.labels.get(&(i, r)).copied(),
        };
        if let Some((path, file)) = &mut self.log {
            let mut line = serde_json::to_string(&entry).expect("audit entry serializes");
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|e| StoreError::Log {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
        }
        self.apply(&submission.item_id, &submission.rater, submission.choice)
    }

    pub fn progress(&self) -> BTreeMap<String, Progress> {
        let total = self.config.items.len();
        self.config
            .raters
            .iter()
            .enumerate()
            .map(|(r, name)| {
                let done = self.labels.keys().filter(|(_, rr)| *rr == r).count();
                (name.clone(), Progress { done, total })
            })
            .collect()
    }

    pub fn audit_log(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn export(&self) -> LabelExport {
        let cells = (0..self.config.items.len())
            .map(|i| {
                (0..self.config.raters.len())
                    .map(|r| self.labels.get(&(i, r)).copied())
                    .collect()
            })
            .collect();
        LabelExport {
            item_ids: self.config.items.iter().map(|it| it.item_id.clone()).collect(),
            raters: self.config.raters.clone(),
            cells,
        }
    }
}
