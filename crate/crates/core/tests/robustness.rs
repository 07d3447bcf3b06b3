use moralscope_core::corpus::Metric;
use moralscope_core::regress::{build_design, fit_nb, Controls, DurationControl, ModelSpec};
use moralscope_core::robustness::{bootstrap, per_channel_fits, percentile_nearest_rank, Sign};
use moralscope_core::synth::{synthetic_corpus, CorpusParams};
use moralscope_core::EmotionCategory;
use proptest::prelude::*;

fn lean_spec() -> ModelSpec {
    ModelSpec {
        response: Metric::Views,
        emotion_predictors: vec![EmotionCategory::OtherCondemning, EmotionCategory::OtherPraising],
        controls: Controls {
            duration: DurationControl::Log,
            channel_fe: false,
            month_fe: false,
            weekday_fe: false,
        },
    }
}

#[test]
fn single_full_replicate_reproduces_the_full_fit() {
    let corpus = synthetic_corpus(&CorpusParams::default());
    let mut spec = ModelSpec::new(Metric::Likes);
    spec.controls.weekday_fe = false;
    let (design, _) = build_design(&corpus.records, &corpus.scores, &spec).unwrap();
    let full = fit_nb(&design);
    let boot = bootstrap(&corpus.records, &corpus.scores, &spec, 1, 1.0, 3, 1).unwrap();
    assert_eq!(boot.n_converged, 1);
    assert_eq!(boot.columns, design.column_names());
    for c in &full.coefficients {
        let b = &boot.coefficients[&c.name];
        assert!((b.mean_estimate - c.estimate).abs() <= 1e-10, "{}", c.name);
        assert_eq!(b.ci_low, b.ci_high);
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let corpus = synthetic_corpus(&CorpusParams::default());
    let spec = ModelSpec::new(Metric::Comments);
    let runs: Vec<_> = [1, 3, 8]
        .iter()
        .map(|&w| bootstrap(&corpus.records, &corpus.scores, &spec, 40, 0.5, 11, w).unwrap())
        .collect();
    for r in &runs[1..] {
        assert_eq!(r.to_json(), runs[0].to_json());
        assert_eq!(r.replicates_csv(), runs[0].replicates_csv());
        assert_eq!(r.to_csv(), runs[0].to_csv());
    }
    assert_ne!(
        runs[0].to_json(),
        bootstrap(&corpus.records, &corpus.scores, &spec, 40, 0.5, 12, 2).unwrap().to_json()
    );
}

#[test]
fn summaries_follow_replicate_draws() {
    let corpus = synthetic_corpus(&CorpusParams::default());
    let boot = bootstrap(&corpus.records, &corpus.scores, &lean_spec(), 60, 0.3, 5, 4).unwrap();
    assert_eq!(boot.subsample_size, 108);
    for (name, summary) in &boot.coefficients {
        let mut draws: Vec<f64> = boot
            .replicates
            .iter()
            .filter_map(|r| r.estimates.as_ref().and_then(|e| e.get(name)).copied())
            .collect();
        assert_eq!(draws.len(), summary.n_converged);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert_eq!(mean, summary.mean_estimate);
        draws.sort_by(f64::total_cmp);
        let lo = (25 * draws.len()).div_ceil(1000).max(1);
        let hi = (975 * draws.len()).div_ceil(1000).max(1);
        assert_eq!(summary.ci_low, draws[lo - 1]);
        assert_eq!(summary.ci_high, draws[hi - 1]);
        assert!(summary.ci_low <= summary.ci_high);
    }
}

#[test]
fn invalid_arguments_are_rejected() {
    let corpus = synthetic_corpus(&CorpusParams::default());
    let spec = lean_spec();
    assert!(bootstrap(&corpus.records, &corpus.scores, &spec, 0, 0.5, 1, 1).is_err());
    assert!(bootstrap(&corpus.records, &corpus.scores, &spec, 5, 0.0, 1, 1).is_err());
    assert!(bootstrap(&corpus.records, &corpus.scores, &spec, 5, 1.5, 1, 1).is_err());
    assert!(bootstrap(&corpus.records, &corpus.scores, &spec, 5, 0.001, 1, 1).is_err());
}

#[test]
fn tiny_subsamples_fail_with_a_histogram() {
    let corpus = synthetic_corpus(&CorpusParams::default());
    let err = bootstrap(&corpus.records, &corpus.scores, &ModelSpec::new(Metric::Views), 5, 0.02, 1, 2)
        .unwrap_err();
    match err {
        moralscope_core::Error::BootstrapFailed { reps, histogram } => {
            assert_eq!(reps, 5);
            assert_eq!(histogram.values().sum::<usize>(), 5);
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn percentile_interval_covers_the_true_effect() {
    let mut covered = 0;
    for trial in 0..100 {
        let params = CorpusParams {
            channels: vec![("UCsolo".into(), 400, 0.0)],
            effects: [0.8, 0.3, 0.0, 0.0, 0.0, 0.0],
            intercept: 3.0,
            alpha: 0.5,
            seed: 10_000 + trial,
        };
        let corpus = synthetic_corpus(&params);
        let boot = bootstrap(&corpus.records, &corpus.scores, &lean_spec(), 40, 0.2, trial, 4).unwrap();
        let c = &boot.coefficients["other_condemning"];
        if c.ci_low <= 0.8 && 0.8 <= c.ci_high {
            covered += 1;
        }
    }
    assert!(covered >= 90, "{covered} of 100");
}

#[test]
fn one_channel_matches_a_direct_fit() {
    let params = CorpusParams {
        channels: vec![("UConly".into(), 150, 0.0)],
        ..CorpusParams::default()
    };
    let corpus = synthetic_corpus(&params);
    let mut spec = ModelSpec::new(Metric::Views);
    spec.controls.channel_fe = false;
    let set = per_channel_fits(&corpus.records, &corpus.scores, &spec, "other_condemning", 2).unwrap();
    assert_eq!(set.fits.len(), 1);
    let (design, _) = build_design(&corpus.records, &corpus.scores, &spec).unwrap();
    let direct = fit_nb(&design);
    let c = direct.coefficient("other_condemning").unwrap();
    let f = &set.fits["UConly"];
    assert_eq!(f.coefficient, c.estimate);
    assert_eq!(f.std_error, c.std_error);
    assert_eq!(f.n_videos, 150);
    assert!(f.n_videos > f.n_columns);
}

#[test]
fn shared_positive_effect_is_positive_everywhere() {
    let params = CorpusParams {
        channels: vec![("UCa".into(), 300, 0.0), ("UCb".into(), 300, 0.5), ("UCc".into(), 300, -0.5)],
        effects: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        alpha: 0.3,
        seed: 77,
        ..CorpusParams::default()
    };
    let corpus = synthetic_corpus(&params);
    let set = per_channel_fits(&corpus.records, &corpus.scores, &lean_spec(), "other_condemning", 3).unwrap();
    assert_eq!(set.fits.len(), 3);
    assert!(set.fits.values().all(|f| f.sign == Sign::Positive && f.coefficient > 0.0));
}

#[test]
fn small_channels_are_skipped() {
    let params = CorpusParams {
        channels: vec![("UCbig".into(), 200, 0.0), ("UCsmall".into(), 12, 0.0)],
        ..CorpusParams::default()
    };
    let corpus = synthetic_corpus(&params);
    let set = per_channel_fits(&corpus.records, &corpus.scores, &lean_spec(), "other_praising", 1).unwrap();
    assert!(set.fits.contains_key("UCbig"));
    assert!(!set.fits.contains_key("UCsmall"));
    assert_eq!(set.skipped["UCsmall"].n_videos, 12);
    assert!(set.to_csv().contains("UCsmall,skipped"));
}

#[test]
fn channel_dummies_are_refused() {
    let corpus = synthetic_corpus(&CorpusParams::default());
    let spec = ModelSpec::new(Metric::Views);
    assert!(per_channel_fits(&corpus.records, &corpus.scores, &spec, "other_condemning", 1).is_err());
    assert!(per_channel_fits(&corpus.records, &corpus.scores, &lean_spec(), "neutral", 1).is_err());
}

proptest! {
    #[test]
    fn nearest_rank_matches_sort_and_index(mut v in prop::collection::vec(-1e6f64..1e6, 1..500), per_mille in 1usize..1000) {
        v.sort_by(f64::total_cmp);
        let rank = (per_mille * v.len()).div_ceil(1000).max(1);
        prop_assert_eq!(percentile_nearest_rank(&v, per_mille as f64 / 10.0), v[rank - 1]);
    }
}
