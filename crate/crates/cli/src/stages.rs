use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use anyhow::{anyhow, bail, Context, Result};
use moralscope_core::annotation::store::{AnnotationItem, AnnotationStore, SessionConfig};
use moralscope_core::annotation::{
    agreement_report, majority_vote, stratified_sample, stratified_split, GoldLabel, LabelExport,
};
use moralscope_core::corpus::{
    descriptive_stats, engagement_ratios, index_by_id, load_dataset, Country, LoadedDataset, Metric, Registry,
    VideoRecord,
};
use moralscope_core::growth::{load_growth, stability_summary};
use moralscope_core::regress::report::{curve_csv, fmt};
use moralscope_core::regress::{
    build_design, fit_nb, fit_poisson, overdispersion_test, predict_curve, unit_grid, FitReport,
};
use moralscope_core::robustness::{bootstrap, per_channel_fits};
use moralscope_core::scoring::{
    distribution, evaluate_all, predictions_from_scores, primary_emotion, read_replay, score_all, write_replay,
    EmotionScores, DEFAULT_MAX_IN_FLIGHT,
};
use moralscope_core::{EmotionCategory, Error};
use moralscope_net::{scorer_from_descriptor, RetryPolicy};
use serde_json::json;

use crate::config::{ConfigError, Loaded};
use crate::manifest::StageOutput;

const DEFAULT_GUIDELINE: &str =
    "Choose the moral emotion the thumbnail and title express. Use \"Hard to tell\" only when no category fits.";

pub struct Corpus {
    pub registry: Registry,
    pub dataset: LoadedDataset,
}

fn missing_field(field: &str, message: &str) -> anyhow::Error {
    ConfigError {
        field: field.into(),
        message: message.into(),
    }
    .into()
}

fn load_corpus(l: &Loaded, out: &mut StageOutput) -> Result<Corpus> {
    let c = &l.config;
    let registry_path = l.resolve(&c.registry_path);
    let dataset_path = l.resolve(&c.dataset_path);
    out.input("registry", &c.registry_path, &registry_path)?;
    out.input("dataset", &c.dataset_path, &dataset_path)?;
    let registry = Registry::load(&registry_path)?;
    let dataset = load_dataset(&dataset_path, &registry)?;
    if !dataset.rejections.is_empty() {
        log::warn!("{} records rejected", dataset.rejections.len());
    }
    Ok(Corpus { registry, dataset })
}

/// Records of the configured language's country.
fn modeled_records(l: &Loaded, corpus: &Corpus) -> Result<Vec<VideoRecord>> {
    let country = l.country();
    let records: Vec<VideoRecord> = corpus
        .dataset
        .records
        .iter()
        .filter(|r| r.country == country)
        .cloned()
        .collect();
    if records.is_empty() {
        bail!("no accepted records for {country}");
    }
    Ok(records)
}

fn scores_location(l: &Loaded) -> (PathBuf, PathBuf) {
    match &l.config.scores_path {
        Some(p) => (p.clone(), l.resolve(p)),
        None => {
            let p = l.config.output_dir.join("score").join("scores.jsonl");
            (p.clone(), l.resolve(&p))
        }
    }
}

fn load_scores(l: &Loaded, out: &mut StageOutput) -> Result<BTreeMap<String, EmotionScores>> {
    let (shown, path) = scores_location(l);
    if !path.is_file() {
        bail!(
            "no scores at {}; set scores_path or run the score stage first",
            path.display()
        );
    }
    out.input("scores", &shown, &path)?;
    Ok(read_replay(&path)?)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(w.into_inner().map_err(|e| anyhow!("{e}"))?)
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_else(|| "NA".into())
}

fn read_csv_pairs(path: &Path, key: &str, value: &str) -> Result<HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let headers = r.headers()?.clone();
    let ki = headers
        .iter()
        .position(|h| h == key)
        .ok_or_else(|| anyhow!("{} has no `{key}` column", path.display()))?;
    let vi = headers
        .iter()
        .position(|h| h == value)
        .ok_or_else(|| anyhow!("{} has no `{value}` column", path.display()))?;
    let mut out = HashMap::new();
    for row in r.records() {
        let row = row?;
        out.insert(row[ki].to_string(), row[vi].to_string());
    }
    Ok(out)
}

fn gold_csv(gold: &[GoldLabel]) -> Result<Vec<u8>> {
    csv_bytes(
        &["item_id", "label", "vote_count"],
        gold.iter()
            .map(|g| vec![g.item_id.clone(), g.label.token().into(), g.vote_count.to_string()]),
    )
}

pub fn read_gold(path: &Path) -> Result<Vec<GoldLabel>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut gold = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let bad = || anyhow!("{}:{}: expected item_id,label,vote_count", path.display(), i + 2);
        gold.push(GoldLabel {
            item_id: row.get(0).ok_or_else(bad)?.to_string(),
            label: row.get(1).ok_or_else(bad)?.parse()?,
            vote_count: row.get(2).ok_or_else(bad)?.parse().map_err(|_| bad())?,
        });
    }
    Ok(gold)
}

fn require_models(l: &Loaded) -> Result<()> {
    if l.config.model_specs.is_empty() {
        return Err(missing_field("model_specs", "this stage needs at least one model"));
    }
    Ok(())
}

pub fn validate(l: &Loaded, out: &mut StageOutput) -> Result<()> {
    let corpus = load_corpus(l, out)?;
    let counts = corpus.dataset.channel_counts();
    out.write(
        "channel_counts.csv",
        csv_bytes(
            &["channel_id", "count"],
            counts.iter().map(|(c, n)| vec![c.clone(), n.to_string()]),
        )?,
    )?;
    out.write(
        "rejections.csv",
        csv_bytes(
            &["line", "video_id", "reason"],
            corpus.dataset.rejections.iter().map(|r| {
                vec![
                    r.line.to_string(),
                    r.video_id.clone().unwrap_or_default(),
                    r.reason.clone(),
                ]
            }),
        )?,
    )?;
    let mut missing_scores = None;
    if l.config.scores_path.is_some() {
        let scores = load_scores(l, out)?;
        let missing: Vec<&str> = corpus
            .dataset
            .records
            .iter()
            .filter(|r| !scores.contains_key(&r.video_id))
            .map(|r| r.video_id.as_str())
            .collect();
        if let Some(first) = missing.first() {
            log::warn!("{} records have no score, first `{first}`", missing.len());
        }
        missing_scores = Some(missing.len());
    }
    out.write_json(
        "summary.json",
        &json!({
            "channels_in_registry": corpus.registry.len(),
            "accepted": corpus.dataset.records.len(),
            "rejected": corpus.dataset.rejections.len(),
            "records_without_scores": missing_scores,
        }),
    )
}

pub fn describe(l: &Loaded, out: &mut StageOutput) -> Result<()> {
    let corpus = load_corpus(l, out)?;
    let records = &corpus.dataset.records;
    let mut rows = Vec::new();
    for country in Country::ALL {
        for metric in Metric::ALL {
            match descriptive_stats(records, metric, country) {
                Ok(s) => rows.push(vec![
                    country.code().into(),
                    metric.name().into(),
                    s.n.to_string(),
                    fmt(s.mean),
                    fmt(s.median),
                    fmt(s.sd),
                    fmt(s.min),
                    fmt(s.max),
                    opt(s.skewness),
                    opt(s.kurtosis),
                ]),
                Err(Error::InsufficientData(msg)) => log::warn!("skipping {msg}"),
                Err(e) => return Err(e.into()),
            }
        }
    }
    out.write(
        "descriptive_stats.csv",
        csv_bytes(
            &["country", "metric", "n", "mean", "median", "sd", "min", "max", "skewness", "kurtosis"],
            rows,
        )?,
    )?;
    let mut ratio_rows = Vec::new();
    for country in Country::ALL {
        match engagement_ratios(records, country) {
            Ok(r) => ratio_rows.push(vec![
                country.code().into(),
                fmt(r.median_to_mean_views),
                opt(r.comment_intensity),
            ]),
            Err(Error::InsufficientData(msg)) => log::warn!("skipping ratios: {msg}"),
            Err(e) => return Err(e.into()),
        }
    }
    out.write(
        "engagement_ratios.csv",
        csv_bytes(&["country", "median_to_mean_views", "comment_intensity"], ratio_rows)?,
    )
}

pub fn growth(l: &Loaded, out: &mut StageOutput) -> Result<()> {
    let cfg = l
        .config
        .growth
        .as_ref()
        .ok_or_else(|| missing_field("growth", "the growth stage needs a [growth] section"))?;
    let path = l.resolve(&cfg.path);
    out.input("growth", &cfg.path, &path)?;
    let curves = load_growth(&path)?;
    let max_days = curves.iter().map(|c| c.daily_views.len()).max().unwrap_or(0);
    let windows: Vec<(usize, usize)> = if cfg.windows.is_empty() {
        (1..max_days).step_by(10).map(|s| (s, (s + 9).min(max_days))).collect()
    } else {
        cfg.windows.clone()
    };
    let summary_rows = |windows: &[(usize, usize)]| -> Result<Vec<Vec<String>>> {
        Ok(stability_summary(&curves, windows)?
            .into_iter()
            .map(|w| {
                vec![
                    w.start_day.to_string(),
                    w.end_day.to_string(),
                    w.n_rates.to_string(),
                    opt(w.mean_rate),
                    opt(w.median_rate),
                ]
            })
            .collect())
    };
    let header = ["start_day", "end_day", "n_rates", "mean_rate", "median_rate"];
    out.write("windows.csv", csv_bytes(&header, summary_rows(&windows)?)?)?;
    let daily: Vec<(usize, usize)> = (1..max_days).map(|d| (d, d)).collect();
    out.write("daily.csv", csv_bytes(&header, summary_rows(&daily)?)?)
}

pub fn sample(l: &Loaded, out: &mut StageOutput) -> Result<()> {
    let corpus = load_corpus(l, out)?;
    let pool = modeled_records(l, &corpus)?;
    let ann = &l.config.annotation;
    let pilot: HashMap<String, EmotionCategory> = match &ann.pilot_labels_path {
        Some(p) => {
            let path = l.resolve(p);
            out.input("pilot_labels", p, &path)?;
            read_csv_pairs(&path, "video_id", "label")?
                .into_iter()
                .map(|(k, v)| Ok((k, v.parse()?)))
                .collect::<Result<_>>()?
        }
        None => {
            let scores = load_scores(l, out)?;
            pool.iter()
                .filter_map(|r| scores.get(&r.video_id).map(|s| (r.video_id.clone(), primary_emotion(s))))
                .collect()
        }
    };
    let clusters = match &ann.clusters_path {
        Some(p) => {
            let path = l.resolve(p);
            out.input("clusters", p, &path)?;
            read_csv_pairs(&path, "video_id", "cluster")?
        }
        None => HashMap::new(),
    };
    let plan = stratified_sample(&pool, &pilot, &clusters, ann.sample_n, l.config.seeds.sampling)?;
    for w in &plan.warnings {
        log::warn!("{w}");
    }
    let by_id = index_by_id(&pool);
    out.write(
        "sample.csv",
        csv_bytes(
            &["video_id", "category", "cluster", "channel_id", "title", "thumbnail_ref"],
            plan.items.iter().map(|it| {
                let r = by_id[it.video_id.as_str()];
                vec![
                    it.video_id.clone(),
                    it.category.token().into(),
                    it.cluster.clone(),
                    it.channel_id.clone(),
                    r.title.clone(),
                    r.thumbnail_ref.clone(),
                ]
            }),
        )?,
    )?;
    out.write_json(
        "plan.json",
        &json!({ "quotas": plan.quotas, "warnings": plan.warnings, "n": plan.items.len() }),
    )
}

fn session_config(l: &Loaded, out: &mut StageOutput) -> Result<SessionConfig> {
    let ann = &l.config.annotation;
    if ann.raters.is_empty() {
        return Err(missing_field("annotation.raters", "annotate-serve needs rater ids"));
    }
    let guideline = match &ann.guideline_path {
        Some(p) => {
            let path = l.resolve(p);
            out.input("guideline", p, &path)?;
            std::fs::read_to_string(&path)?
        }
        None => DEFAULT_GUIDELINE.into(),
    };
    let sample_shown = l.config.output_dir.join("sample").join("sample.csv");
    let sample_path = l.resolve(&sample_shown);
    if !sample_path.is_file() {
        bail!("no sample at {}; run the sample stage first", sample_path.display());
    }
    out.input("sample", &sample_shown, &sample_path)?;
    let mut r = csv::Reader::from_path(&sample_path)?;
    let mut items = Vec::new();
    for row in r.deserialize::<HashMap<String, String>>() {
        let mut row = row?;
        let mut take = |k: &str| row.remove(k).ok_or_else(|| anyhow!("sample.csv lacks `{k}`"));
        items.push(AnnotationItem {
            item_id: take("video_id")?,
            title: take("title")?,
            thumbnail_url: take("thumbnail_ref")?,
        });
    }
    Ok(SessionConfig {
        guideline,
        raters: ann.raters.clone(),
        items,
    })
}

/// Starts the annotation service and blocks until the process is stopped.
pub fn annotate_serve(l: &Loaded, out: &mut StageOutput) -> Result<()> {
    let cfg = session_config(l, out)?;
    out.write_json("session.json", &cfg)?;
    let log_path = out.dir().join("labels.jsonl");
    let store = AnnotationStore::open(cfg, &log_path)?;
    let addr = format!("0.0.0.0:{}", l.config.annotation.service_port).parse()?;
    let handle = moralscope_net::server::spawn(Arc::new(Mutex::new(store)), addr)
        .with_context(|| format!("cannot listen on {addr}"))?;
    out.set_status("serving");
    out.write_manifest()?;
    log::info!("annotation service on port {}; labels in {}", handle.addr().port(), log_path.display());
    loop {
        std::thread::park();
    }
}

fn load_labels(l: &Loaded, out: &mut StageOutput) -> Result<LabelExport> {
    let serve_dir = l.config.output_dir.join("annotate-serve");
    let shown = l
        .config
        .annotation
        .labels_path
        .clone()
        .unwrap_or_else(|| serve_dir.join("labels.jsonl"));
    let path = l.resolve(&shown);
    if !path.is_file() {
        bail!("no labels at {}", path.display());
    }
    out.input("labels", &shown, &path)?;
    if path.extension().is_some_and(|e| e == "json") {
        return Ok(serde_json::from_str(&std::fs::read_to_string(&path)?)?);
    }
    let session_shown = serve_dir.join("session.json");
    let session_path = l.resolve(&session_shown);
    out.input("session", &session_shown, &session_path)?;
    let cfg: SessionConfig = serde_json::from_str(&std::fs::read_to_string(&session_path)?)?;
    // Replay into a scratch copy so the service's own log is never touched.
    let scratch = out.dir().join(".labels-replay.jsonl");
    std::fs::copy(&path, &scratch)?;
    let export = AnnotationStore::open(cfg, &scratch).map(|s| s.export());
    let _ = std::fs::remove_file(&scratch);
    Ok(export?)
}

pub fn aggregate(l: &Loaded, out: &mut StageOutput) -> Result<()> {
    let export = load_labels(l, out)?;
    if !export.is_complete() {
        let missing = export.cells.iter().flatten().filter(|c| c.is_none()).count();
        bail!("label grid is incomplete: {missing} cells missing");
    }
    let matrix = export.into_matrix()?;
    let outcome = majority_vote(&matrix);
    out.write("gold.csv", gold_csv(&outcome.gold)?)?;
    out.write(
        "excluded.csv",
        csv_bytes(&["item_id"], outcome.excluded.iter().map(|i| vec![i.clone()]))?,
    )?;
    out.write_json("agreement.json", &agreement_report(&matrix))
}

pub fn split(l: &Loaded, out: &mut StageOutput) -> Result<()> {
    let shown = l
        .config
        .annotation
        .gold_path
        .clone()
        .unwrap_or_else(|| l.config.output_dir.join("aggregate").join("gold.csv"));
    let path = l.resolve(&shown);
    if !path.is_file() {
        bail!("no gold labels at {}", path.display());
    }
    out.input("gold", &shown, &path)?;
    let gold = read_gold(&path)?;
    let split = stratified_split(&gold, l.config.annotation.train_n, l.config.seeds.split)?;
    out.write("train.csv", gold_csv(&split.train)?)?;
    out.write("test.csv", gold_csv(&split.test)?)?;
    let count = |set: &[GoldLabel], c: EmotionCategory| set.iter().filter(|g| g.label == c).count().to_string();
    out.write(
        "proportions.csv",
        csv_bytes(
            &["category", "gold", "train", "test"],
            EmotionCategory::ALL.into_iter().map(|c| {
                vec![
                    c.token().into(),
                    count(&gold, c),
                    count(&split.train, c),
                    count(&split.test, c),
                ]
            }),
        )?,
    )
}

pub fn score(l: &Loaded, out: &mut StageOutput) -> Result<()> {
    let descriptor = l
        .config
        .scorer
        .as_ref()
        .ok_or_else(|| missing_field("scorer", "the score stage needs a scorer descriptor"))?;
    if let Some(src) = &descriptor.source {
        out.input("scorer_source", src, &l.resolve(src))?;
    }
    let corpus = load_corpus(l, out)?;
    let scorer = scorer_from_descriptor(descriptor, &l.base_dir, RetryPolicy::default())?;
    let cap = l.config.max_in_flight.unwrap_or(DEFAULT_MAX_IN_FLIGHT);
    let scores = score_all(&corpus.dataset.records, scorer.as_ref(), cap)?;
    write_replay(out.dir().join("scores.jsonl"), &scores)?;
    out.track("scores.jsonl")?;
    out.write(
        "primary.csv",
        csv_bytes(
            &["video_id", "primary_emotion"],
            scores
                .iter()
                .map(|(id, s)| vec![id.clone(), primary_emotion(s).token().into()]),
        )?,
    )?;
    out.write_json(
        "scorer.json",
        &json!({ "descriptor": descriptor, "n_scored": scores.len() }),
    )?;
    if let Some(eval) = &l.config.evaluation {
        let path = l.resolve(&eval.gold_path);
        out.input("evaluation_gold", &eval.gold_path, &path)?;
        let gold = read_gold(&path)?;
        let predicted = EmotionCategory::ALL
            .into_iter()
            .map(|c| (c, predictions_from_scores(&scores, c, eval.threshold)))
            .collect();
        out.write_json("evaluation.json", &evaluate_all(&predicted, &gold)?)?;
    }
    Ok(())
}

pub fn distribution_stage(l: &Loaded, out: &mut StageOutput) -> Result<()> {
    let corpus = load_corpus(l, out)?;
    let scores = load_scores(l, out)?;
    let mut rows = Vec::new();
    let mut groups: Vec<(String, Vec<&VideoRecord>)> = Country::ALL
        .into_iter()
        .map(|c| {
            let rs = corpus.dataset.records.iter().filter(|r| r.country == c).collect();
            (c.code().to_string(), rs)
        })
        .collect();
    groups.push(("ALL".into(), corpus.dataset.records.iter().collect()));
    for (group, records) in groups {
        if records.is_empty() {
            continue;
        }
        let group_scores = records
            .iter()
            .map(|r| scores.get(&r.video_id).ok_or_else(|| Error::MissingScore(r.video_id.clone())))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        for (c, share) in distribution(group_scores)? {
            rows.push(vec![group.clone(), records.len().to_string(), c.token().into(), fmt(share)]);
        }
    }
    out.write("distribution.csv", csv_bytes(&["group", "n", "category", "share"], rows)?)
}

struct ModelInputs {
    records: Vec<VideoRecord>,
    scores: BTreeMap<String, EmotionScores>,
}

fn model_inputs(l: &Loaded, out: &mut StageOutput) -> Result<ModelInputs> {
    require_models(l)?;
    let corpus = load_corpus(l, out)?;
    let records = modeled_records(l, &corpus)?;
    let scores = load_scores(l, out)?;
    Ok(ModelInputs { records, scores })
}

pub fn fit(l: &Loaded, out: &mut StageOutput) -> Result<()> {
    let inputs = model_inputs(l, out)?;
    let mut od_rows = Vec::new();
    for m in &l.config.model_specs {
        let (design, design_report) = build_design(&inputs.records, &inputs.scores, &m.spec)?;
        let nb = fit_nb(&design);
        let pois = fit_poisson(&design);
        if !nb.converged {
            log::warn!("{}: NB fit did not converge after {} iterations", m.label, nb.iterations);
        }
        let od = overdispersion_test(&nb, &pois)?;
        let nb_report = FitReport::new(&m.label, &nb);
        let pois_report = FitReport::new(&m.label, &pois);
        out.write(&format!("{}.csv", m.label), nb_report.to_csv())?;
        out.write(&format!("{}_poisson.csv", m.label), pois_report.to_csv())?;
        out.write_json(
            &format!("{}.json", m.label),
            &json!({
                "spec": m.spec,
                "design": design_report,
                "negative_binomial": nb_report,
                "poisson": pois_report,
                "overdispersion": od,
            }),
        )?;
        od_rows.push(vec![
            m.label.clone(),
            fmt(od.statistic),
            fmt(od.p_value),
            od.significant_at_01.to_string(),
        ]);
    }
    out.write(
        "overdispersion.csv",
        csv_bytes(&["model", "lr_statistic", "p_value", "significant_at_01"], od_rows)?,
    )
}

pub fn curves(l: &Loaded, out: &mut StageOutput) -> Result<()> {
    let inputs = model_inputs(l, out)?;
    let grid = unit_grid(l.config.curves.grid_points);
    for m in &l.config.model_specs {
        let (design, _) = build_design(&inputs.records, &inputs.scores, &m.spec)?;
        let nb = fit_nb(&design);
        for e in &m.spec.emotion_predictors {
            let points = predict_curve(&nb, &design, e.token(), &grid)?;
            out.write(&format!("{}_{}.csv", m.label, e.token()), curve_csv(&points))?;
        }
    }
    Ok(())
}

pub fn bootstrap_stage(l: &Loaded, out: &mut StageOutput) -> Result<()> {
    let inputs = model_inputs(l, out)?;
    let b = l.config.bootstrap;
    for m in &l.config.model_specs {
        let result = bootstrap(
            &inputs.records,
            &inputs.scores,
            &m.spec,
            b.reps,
            b.fraction,
            l.config.seeds.bootstrap,
            l.workers(),
        )?;
        if result.n_converged < result.reps {
            log::warn!("{}: {} of {} replicates failed", m.label, result.reps - result.n_converged, result.reps);
        }
        out.write(&format!("{}.json", m.label), result.to_json() + "\n")?;
        out.write(&format!("{}.csv", m.label), result.to_csv())?;
        out.write(&format!("{}_replicates.csv", m.label), result.replicates_csv())?;
    }
    Ok(())
}

pub fn per_channel(l: &Loaded, out: &mut StageOutput) -> Result<()> {
    let inputs = model_inputs(l, out)?;
    let focal = &l.config.per_channel.focal;
    for m in &l.config.model_specs {
        let mut spec = m.spec.clone();
        spec.controls.channel_fe = false;
        let set = per_channel_fits(&inputs.records, &inputs.scores, &spec, focal, l.workers())?;
        out.write(&format!("{}.csv", m.label), set.to_csv())?;
        out.write(&format!("{}.json", m.label), set.to_json() + "\n")?;
    }
    Ok(())
}
