use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use moralscope_core::scoring::{
    score_all, write_replay, EmotionScores, Language, ScoreRequest, Scorer, ScorerDescriptor, ScorerKind,
};
use moralscope_core::synth::{synthetic_corpus, CorpusParams};
use moralscope_core::Error;
use moralscope_net::server::{spawn_router, ServerHandle};
use moralscope_net::{scorer_from_descriptor, RemoteScorer, RetryPolicy};
use serde_json::{json, Value};

#[derive(Default)]
struct Mock {
    calls: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    fail_first: usize,
    status: Option<StatusCode>,
    payload: Mutex<Option<Value>>,
    last_request: Mutex<Option<ScoreRequest>>,
    delay_ms: u64,
}

async fn score(State(mock): State<Arc<Mock>>, Json(req): Json<ScoreRequest>) -> Response {
    let n = mock.calls.fetch_add(1, Ordering::SeqCst);
    let now = mock.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    mock.max_in_flight.fetch_max(now, Ordering::SeqCst);
    if mock.delay_ms > 0 {
        tokio::time::sleep(Duration::from_millis(mock.delay_ms)).await;
    }
    mock.in_flight.fetch_sub(1, Ordering::SeqCst);
    *mock.last_request.lock().unwrap() = Some(req.clone());
    if n < mock.fail_first {
        return StatusCode::SERVICE_UNAVAILABLE.into_response();
    }
    if let Some(s) = mock.status {
        return s.into_response();
    }
    let payload = mock.payload.lock().unwrap().clone();
    Json(payload.unwrap_or_else(|| {
        // Deterministic scores derived from the id.
        let k = req.video_id.bytes().map(u64::from).sum::<u64>() % 100;
        let v = k as f64 / 100.0;
        json!({ "scores": {
            "other_condemning": v, "other_praising": 1.0 - v, "other_suffering": 0.5,
            "self_conscious": 0.25, "neutral": 0.125, "non_moral": 0.0625
        }})
    }))
    .into_response()
}

fn start(mock: Arc<Mock>) -> ServerHandle {
    let app = Router::new().route("/score", post(score)).with_state(mock);
    spawn_router(app, "127.0.0.1:0".parse().unwrap()).unwrap()
}

fn fast_policy() -> RetryPolicy {
    RetryPolicy {
        attempts: 3,
        base_backoff: Duration::from_millis(5),
        max_backoff: Duration::from_millis(20),
        timeout: Duration::from_secs(5),
    }
}

fn record() -> moralscope_core::corpus::VideoRecord {
    synthetic_corpus(&CorpusParams::default()).records.remove(0)
}

#[test]
fn fixed_payload_round_trips() {
    let payload = json!({ "scores": {
        "other_condemning": 0.8123456789012345, "other_praising": 0.1, "other_suffering": 1e-9,
        "self_conscious": 0.0, "neutral": 1.0, "non_moral": 0.3333333333333333
    }});
    let mock = Arc::new(Mock { payload: Mutex::new(Some(payload)), ..Mock::default() });
    let server = start(mock.clone());
    let scorer = RemoteScorer::new(&server.base_url(), Language::Ko, fast_policy()).unwrap();
    let rec = record();
    let s = scorer.score(&rec).unwrap();
    let expected = [0.8123456789012345, 0.1, 1e-9, 0.0, 1.0, 0.3333333333333333];
    for (a, b) in s.values().iter().zip(expected) {
        assert!((a - b).abs() <= 1e-12);
    }
    let req = mock.last_request.lock().unwrap().clone().unwrap();
    assert_eq!(req, ScoreRequest::for_record(&rec, Language::Ko));
    assert_eq!(req.categories.len(), 6);
}

#[test]
fn transient_failures_are_retried() {
    let mock = Arc::new(Mock { fail_first: 2, ..Mock::default() });
    let server = start(mock.clone());
    let scorer = RemoteScorer::new(&server.base_url(), Language::En, fast_policy()).unwrap();
    assert!(scorer.score(&record()).is_ok());
    assert_eq!(mock.calls.load(Ordering::SeqCst), 3);
}

#[test]
fn persistent_failures_name_the_video() {
    let mock = Arc::new(Mock { status: Some(StatusCode::INTERNAL_SERVER_ERROR), ..Mock::default() });
    let server = start(mock.clone());
    let scorer = RemoteScorer::new(&server.base_url(), Language::En, fast_policy()).unwrap();
    let rec = record();
    match scorer.score(&rec).unwrap_err() {
        Error::Scoring { video_id, message } => {
            assert_eq!(video_id, rec.video_id);
            assert!(message.contains("3 attempts"), "{message}");
        }
        other => panic!("unexpected {other}"),
    }
    assert_eq!(mock.calls.load(Ordering::SeqCst), 3);
}

#[test]
fn unreachable_service_is_a_scoring_error() {
    let scorer = RemoteScorer::new("http://127.0.0.1:9", Language::En, fast_policy()).unwrap();
    assert!(matches!(scorer.score(&record()), Err(Error::Scoring { .. })));
}

#[test]
fn malformed_payloads_are_protocol_errors() {
    for body in [
        json!({ "scores": { "other_condemning": 1.2, "other_praising": 0.1, "other_suffering": 0.1,
            "self_conscious": 0.1, "neutral": 0.1, "non_moral": 0.1 } }),
        json!({ "scores": { "other_condemning": 0.2, "other_praising": 0.1 } }),
        json!({ "probabilities": [] }),
    ] {
        let mock = Arc::new(Mock { payload: Mutex::new(Some(body)), ..Mock::default() });
        let server = start(mock.clone());
        let scorer = RemoteScorer::new(&server.base_url(), Language::En, fast_policy()).unwrap();
        assert!(matches!(scorer.score(&record()), Err(Error::Protocol(_))));
        assert_eq!(mock.calls.load(Ordering::SeqCst), 1);
    }
}

#[test]
fn client_errors_are_not_retried() {
    let mock = Arc::new(Mock { status: Some(StatusCode::BAD_REQUEST), ..Mock::default() });
    let server = start(mock.clone());
    let scorer = RemoteScorer::new(&server.base_url(), Language::En, fast_policy()).unwrap();
    assert!(matches!(scorer.score(&record()), Err(Error::Scoring { .. })));
    assert_eq!(mock.calls.load(Ordering::SeqCst), 1);
}

#[test]
fn concurrency_stays_under_the_cap() {
    let mock = Arc::new(Mock { delay_ms: 20, ..Mock::default() });
    let server = start(mock.clone());
    let scorer = RemoteScorer::new(&server.base_url(), Language::En, fast_policy()).unwrap();
    let corpus = synthetic_corpus(&CorpusParams {
        channels: vec![("UCx".into(), 40, 0.0)],
        ..CorpusParams::default()
    });
    let a = score_all(&corpus.records, &scorer, 4).unwrap();
    assert!(mock.max_in_flight.load(Ordering::SeqCst) <= 4);
    assert!(mock.max_in_flight.load(Ordering::SeqCst) >= 2);
    let b = score_all(&corpus.records, &scorer, 1).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 40);
}

#[test]
fn descriptors_build_every_kind() {
    let corpus = synthetic_corpus(&CorpusParams::default());
    let dir = tempfile::tempdir().unwrap();
    write_replay(dir.path().join("scores.jsonl"), &corpus.scores).unwrap();
    let replay = ScorerDescriptor {
        kind: ScorerKind::FileReplay,
        endpoint: None,
        language: Language::En,
        version: "fixture-1".into(),
        source: Some("scores.jsonl".into()),
    };
    let scorer = scorer_from_descriptor(&replay, dir.path(), fast_policy()).unwrap();
    let got: BTreeMap<String, EmotionScores> = score_all(&corpus.records, scorer.as_ref(), 4).unwrap();
    assert_eq!(got, corpus.scores);

    let lexicon = ScorerDescriptor {
        kind: ScorerKind::LexiconBaseline,
        endpoint: None,
        language: Language::Ko,
        version: "bundled".into(),
        source: None,
    };
    assert!(scorer_from_descriptor(&lexicon, dir.path(), fast_policy()).is_ok());

    let remote_without_endpoint = ScorerDescriptor { kind: ScorerKind::RemoteService, ..lexicon.clone() };
    assert!(scorer_from_descriptor(&remote_without_endpoint, dir.path(), fast_policy()).is_err());
}
