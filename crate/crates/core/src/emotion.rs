//! Moral-emotion categories and annotation choices.
//!
//! The declaration order of [`EmotionCategory`] is the canonical order. It is
//! used for argmax tie-breaking and for every serialized listing of categories.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmotionCategory {
    OtherCondemning,
    OtherPraising,
    OtherSuffering,
    SelfConscious,
    Neutral,
    NonMoral,
}

impl EmotionCategory {
    pub const ALL: [EmotionCategory; 6] = [
        EmotionCategory::OtherCondemning,
        EmotionCategory::OtherPraising,
        EmotionCategory::OtherSuffering,
        EmotionCategory::SelfConscious,
        EmotionCategory::Neutral,
        EmotionCategory::NonMoral,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn token(self) -> &'static str {
        match self {
            EmotionCategory::OtherCondemning => "other_condemning",
            EmotionCategory::OtherPraising => "other_praising",
            EmotionCategory::OtherSuffering => "other_suffering",
            EmotionCategory::SelfConscious => "self_conscious",
            EmotionCategory::Neutral => "neutral",
            EmotionCategory::NonMoral => "non_moral",
        }
    }

    /// English display name.
    pub fn display_en(self) -> &'static str {
        match self {
            EmotionCategory::OtherCondemning => "Other-condemning",
            EmotionCategory::OtherPraising => "Other-praising",
            EmotionCategory::OtherSuffering => "Other-suffering",
            EmotionCategory::SelfConscious => "Self-conscious",
            EmotionCategory::Neutral => "Neutral",
            EmotionCategory::NonMoral => "Non-moral emotion",
        }
    }

    pub fn description_en(self) -> &'static str {
        match self {
            EmotionCategory::OtherCondemning => "Emotions that condemn others, such as anger, contempt, or disgust.",
            EmotionCategory::OtherPraising => "Emotions that praise others, such as admiration, gratitude, or awe.",
            EmotionCategory::OtherSuffering => {
                "Emotions of empathy for the suffering of others, such as compassion or sympathy."
            }
            EmotionCategory::SelfConscious => {
                "Emotions that negatively evaluate oneself, such as shame, guilt, or embarrassment."
            }
            EmotionCategory::Neutral => "A neutral category with no or few emotions.",
            EmotionCategory::NonMoral => {
                "Emotions that are not part of the other moral emotion categories, such as fear, surprise, joy, or optimism."
            }
        }
    }

    pub fn description_ko(self) -> &'static str {
        match self {
            EmotionCategory::OtherCondemning => "분노, 경멸, 혐오 등과 같이 타인을 비난하는 감정",
            EmotionCategory::OtherPraising => "감탄, 감사, 경외감 등과 같이 타인을 칭찬하는 감정",
            EmotionCategory::OtherSuffering => "연민, 동정 등과 같이 타인의 고통에 공감하는 감정",
            EmotionCategory::SelfConscious => "수치심, 죄책감, 당혹감 등과 같이 자신을 부정적으로 평가하는 감정",
            EmotionCategory::Neutral => "감정이 없거나 거의 없는 중립적인 카테고리",
            EmotionCategory::NonMoral => {
                "두려움, 놀라움, 기쁨, 낙관주의 등과 같이 감정은 있으나 다른 도덕감정 범주에 속하지 않는 감정"
            }
        }
    }
}

impl fmt::Display for EmotionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for EmotionCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EmotionCategory::ALL
            .into_iter()
            .find(|c| c.token() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown emotion category `{s}`")))
    }
}

/// One rater's answer for an item: an emotion category or "hard to tell".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnnotationChoice {
    Emotion(EmotionCategory),
    HardToTell,
}

impl AnnotationChoice {
    pub const ALL: [AnnotationChoice; 7] = [
        AnnotationChoice::Emotion(EmotionCategory::OtherCondemning),
        AnnotationChoice::Emotion(EmotionCategory::OtherPraising),
        AnnotationChoice::Emotion(EmotionCategory::OtherSuffering),
        AnnotationChoice::Emotion(EmotionCategory::SelfConscious),
        AnnotationChoice::Emotion(EmotionCategory::Neutral),
        AnnotationChoice::Emotion(EmotionCategory::NonMoral),
        AnnotationChoice::HardToTell,
    ];

    pub const HARD_TO_TELL_TOKEN: &'static str = "hard_to_tell";

    /// Position in [`AnnotationChoice::ALL`]; usable as a dense nominal code.
    pub fn index(self) -> usize {
        match self {
            AnnotationChoice::Emotion(c) => c.index(),
            AnnotationChoice::HardToTell => 6,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            AnnotationChoice::Emotion(c) => c.token(),
            AnnotationChoice::HardToTell => Self::HARD_TO_TELL_TOKEN,
        }
    }

    pub fn emotion(self) -> Option<EmotionCategory> {
        match self {
            AnnotationChoice::Emotion(c) => Some(c),
            AnnotationChoice::HardToTell => None,
        }
    }
}

impl fmt::Display for AnnotationChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for AnnotationChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == Self::HARD_TO_TELL_TOKEN {
            return Ok(AnnotationChoice::HardToTell);
        }
        s.parse::<EmotionCategory>()
            .map(AnnotationChoice::Emotion)
            .map_err(|_| Error::Invalid(format!("unknown annotation choice `{s}`")))
    }
}

impl From<EmotionCategory> for AnnotationChoice {
    fn from(c: EmotionCategory) -> Self {
        AnnotationChoice::Emotion(c)
    }
}

impl Serialize for AnnotationChoice {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.token())
    }
}

impl<'de> Deserialize<'de> for AnnotationChoice {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
