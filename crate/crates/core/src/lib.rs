//! Moral-emotion engagement analysis for news video corpora.

pub mod annotation;
pub mod corpus;
pub mod emotion;
pub mod error;
pub mod growth;
pub mod regress;
pub mod rng;
pub mod robustness;
pub mod scoring;
pub mod synth;

pub use emotion::{AnnotationChoice, EmotionCategory};
pub use error::{Error, Result};
