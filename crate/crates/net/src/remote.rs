//! Blocking client for a remote scoring service.

use std::time::Duration;

use moralscope_core::corpus::VideoRecord;
use moralscope_core::scoring::{parse_score_response, EmotionScores, Language, ScoreRequest, Scorer};
use moralscope_core::{Error, Result};
use reqwest::blocking::Client;
use reqwest::StatusCode;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts per record, including the first.
    pub attempts: u32,
    pub base_backoff: Duration,
    pub max_backoff: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 4,
            base_backoff: Duration::from_millis(250),
            max_backoff: Duration::from_secs(4),
            timeout: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    fn backoff(&self, attempt: u32) -> Duration {
        self.base_backoff
            .saturating_mul(1 << attempt.min(16))
            .min(self.max_backoff)
    }
}

pub struct RemoteScorer {
    client: Client,
    url: String,
    language: Language,
    policy: RetryPolicy,
}

enum Failure {
    Retry(String),
    Fatal(Error),
}

impl RemoteScorer {
    pub fn new(endpoint: &str, language: Language, policy: RetryPolicy) -> Result<Self> {
        let client = Client::builder()
            .timeout(policy.timeout)
            .build()
            .map_err(|e| Error::Invalid(format!("cannot build HTTP client: {e}")))?;
        Ok(RemoteScorer {
            client,
            url: format!("{}/score", endpoint.trim_end_matches('/')),
            language,
            policy,
        })
    }

    fn attempt(&self, request: &ScoreRequest) -> std::result::Result<EmotionScores, Failure> {
        let response = self
            .client
            .post(&self.url)
            .json(request)
            .send()
            .map_err(|e| Failure::Retry(e.to_string()))?;
        let status = response.status();
        if status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS {
            return Err(Failure::Retry(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(Failure::Fatal(Error::Scoring {
                video_id: request.video_id.clone(),
                message: format!("HTTP {status}"),
            }));
        }
        let body = response.text().map_err(|e| Failure::Retry(e.to_string()))?;
        parse_score_response(&body).map_err(Failure::Fatal)
    }
}

impl Scorer for RemoteScorer {
    fn score(&self, record: &VideoRecord) -> Result<EmotionScores> {
        let request = ScoreRequest::for_record(record, self.language);
        let mut last = String::new();
        for attempt in 0..self.policy.attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(self.policy.backoff(attempt - 1));
            }
            match self.attempt(&request) {
                Ok(scores) => return Ok(scores),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(msg)) => {
                    log::warn!("scoring {} attempt {} failed: {msg}", record.video_id, attempt + 1);
                    last = msg;
                }
            }
        }
        Err(Error::Scoring {
            video_id: record.video_id.clone(),
            message: format!("gave up after {} attempts: {last}", self.policy.attempts.max(1)),
        })
    }
}
