//! Keyword baseline scorer for offline runs.
//!
//! For each non-neutral category with `h` keyword hits in the lowercased
//! title the score is `h / (h + 1)`; neutral is `1 / (1 + total hits)`. A
//! title with no hits therefore scores 1.0 neutral and 0.0 elsewhere.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{EmotionScores, Language, Scorer};
use crate::corpus::VideoRecord;
use crate::emotion::EmotionCategory;
use crate::error::{Error, Result};

const BUNDLED_EN: &str = include_str!("../../data/lexicon_en.json");
const BUNDLED_KO: &str = include_str!("../../data/lexicon_ko.json");

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    keywords: BTreeMap<EmotionCategory, Vec<String>>,
}

impl Lexicon {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| Error::Invalid(format!("lexicon: {e}")))?;
        let mut keywords = BTreeMap::new();
        for (key, words) in raw {
            let category: EmotionCategory = key.parse()?;
            if category == EmotionCategory::Neutral {
                return Err(Error::Invalid(
                    "lexicon must not list neutral keywords; neutral is derived".into(),
                ));
            }
            let words = words
                .into_iter()
                .map(|w| w.to_lowercase())
                .filter(|w| !w.is_empty())
                .collect();
            keywords.insert(category, words);
        }
        Ok(Lexicon { keywords })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lexicon::from_json(&text)
    }

    pub fn bundled(language: Language) -> Self {
        let text = match language {
            Language::En => BUNDLED_EN,
            Language::Ko => BUNDLED_KO,
        };
        Lexicon::from_json(text).expect("bundled lexicon is valid")
    }

    pub fn score_text(&self, text: &str) -> EmotionScores {
        let text = text.to_lowercase();
        let mut values = [0.0; 6];
        let mut total_hits = 0usize;
        for (category, words) in &self.keywords {
            let hits: usize = words.iter().map(|w| text.matches(w.as_str()).count()).sum();
            total_hits += hits;
            values[category.index()] = hits as f64 / (hits as f64 + 1.0);
        }
        values[EmotionCategory::Neutral.index()] = 1.0 / (1.0 + total_hits as f64);
        EmotionScores::new(values).expect("lexicon scores lie in [0, 1]")
    }
}

#[derive(Debug, Clone)]
pub struct LexiconScorer {
    lexicon: Lexicon,
}

impl LexiconScorer {
    pub fn new(lexicon: Lexicon) -> Self {
        LexiconScorer { lexicon }
    }
}

impl Scorer for LexiconScorer {
    fn score(&self, record: &VideoRecord) -> Result<EmotionScores> {
        Ok(self.lexicon.score_text(&record.title))
    }
}
