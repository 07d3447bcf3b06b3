//! Seeded synthetic data with known parameters, for validation runs.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::corpus::{Country, VideoRecord};
use crate::emotion::EmotionCategory;
use crate::regress::DesignMatrix;
use crate::rng::{seeded, Rng};
use crate::scoring::EmotionScores;

/// One NB2 draw: Poisson with a gamma-distributed rate of mean `mu` and
/// variance `alpha * mu^2`. `alpha == 0` gives a plain Poisson draw.
pub fn nb2_draw(rng: &mut Rng, mu: f64, alpha: f64) -> u64 {
    let rate = if alpha > 0.0 {
        Gamma::new(1.0 / alpha, alpha * mu).expect("valid gamma").sample(rng)
    } else {
        mu
    };
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("valid poisson").sample(rng) as u64
}

#[derive(Debug, Clone)]
pub struct SyntheticDesign {
    pub design: DesignMatrix,
    pub beta: Vec<f64>,
    pub alpha: f64,
}

/// Coefficients of [`nb2_design`]: intercept, two unit-interval predictors,
/// one standard normal predictor, and two dummies of a three-level factor.
pub const NB2_BETA: [f64; 6] = [1.5, 0.4, -0.6, 0.25, 0.3, -0.2];
pub const NB2_COLUMNS: [&str; 6] = ["intercept", "p1", "p2", "z", "level[b]", "level[c]"];

fn covariate_rows(rng: &mut Rng, n: usize) -> DMatrix<f64> {
    let normal = rand_distr::StandardNormal;
    let mut x = DMatrix::zeros(n, 6);
    for i in 0..n {
        let level = rng.random_range(0..3u8);
        x[(i, 0)] = 1.0;
        x[(i, 1)] = rng.random::<f64>();
        x[(i, 2)] = rng.random::<f64>();
        x[(i, 3)] = normal.sample(rng);
        x[(i, 4)] = f64::from(level == 1);
        x[(i, 5)] = f64::from(level == 2);
    }
    x
}

/// NB2 responses over the fixed six-column covariate layout.
pub fn nb2_design(n: usize, beta: &[f64; 6], alpha: f64, seed: u64) -> SyntheticDesign {
    let mut rng = seeded(seed);
    let x = covariate_rows(&mut rng, n);
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let eta: f64 = (0..6).map(|j| x[(i, j)] * beta[j]).sum();
            nb2_draw(&mut rng, eta.exp(), alpha) as f64
        })
        .collect();
    let names = NB2_COLUMNS.iter().map(|s| s.to_string()).collect();
    SyntheticDesign {
        design: DesignMatrix::new(y, x, names).expect("synthetic design is full rank"),
        beta: beta.to_vec(),
        alpha,
    }
}

/// A small corpus with scores whose engagement follows NB2 in the emotion
/// probabilities plus a per-channel baseline.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub records: Vec<VideoRecord>,
    pub scores: BTreeMap<String, EmotionScores>,
}

#[derive(Debug, Clone)]
pub struct CorpusParams {
    pub channels: Vec<(String, usize, f64)>,
    /// Effect of each emotion probability on log views, in canonical order.
    pub effects: [f64; 6],
    pub intercept: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            channels: vec![
                ("UCalpha".into(), 120, 0.0),
                ("UCbeta".into(), 120, 0.4),
                ("UCgamma".into(), 120, -0.3),
            ],
            effects: [0.8, 0.3, 0.2, -0.2, 0.0, 0.0],
            intercept: 6.0,
            alpha: 0.5,
            seed: 1,
        }
    }
}

pub fn synthetic_corpus(params: &CorpusParams) -> SyntheticCorpus {
    let mut rng = seeded(params.seed);
    let start = NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date");
    let retrieved = NaiveDate::from_ymd_opt(2024, 12, 31).expect("valid date");
    let mut records = Vec::new();
    let mut scores = BTreeMap::new();
    for (channel, count, offset) in &params.channels {
        for k in 0..*count {
            let video_id = format!("{channel}-{k:05}");
            let probs: [f64; 6] = std::array::from_fn(|_| rng.random::<f64>());
            let upload = start + Duration::days(rng.random_range(0..300));
            let duration = rng.random_range(60..1800u64);
            let eta = params.intercept
                + offset
                + probs.iter().zip(&params.effects).map(|(p, b)| p * b).sum::<f64>()
                + 0.1 * (duration as f64).ln();
            let views = nb2_draw(&mut rng, eta.exp(), params.alpha);
            let likes = nb2_draw(&mut rng, (eta - 3.0).exp(), params.alpha);
            let comments = nb2_draw(&mut rng, (eta - 5.0).exp(), params.alpha);
            scores.insert(video_id.clone(), EmotionScores::new(probs).expect("unit interval"));
            records.push(VideoRecord {
                video_id,
                channel_id: channel.clone(),
                country: Country::Us,
                title: format!("synthetic video {k}"),
                thumbnail_ref: String::new(),
                duration_seconds: duration,
                upload_date: upload,
                retrieved_at: retrieved,
                views,
                likes: Some(likes),
                comments: Some(comments),
            });
        }
    }
    SyntheticCorpus { records, scores }
}

/// Emotion tokens in canonical order, for building specs in tests.
pub fn emotion_tokens() -> Vec<&'static str> {
    EmotionCategory::ALL.iter().map(|e| e.token()).collect()
}
