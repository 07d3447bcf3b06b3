//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use moralscope_core::annotation::{
    cohen_kappa_mean, fleiss_kappa, krippendorff_alpha, majority_vote, stratified_split, GoldLabel, LabelMatrix,
};
use moralscope_core::corpus::{median_to_mean, round_to};
use moralscope_core::regress::{
    build_design, fit_nb, fit_poisson, lr_test, nb_log_likelihood, nb_score, overdispersion_test, predict_curve,
    unit_grid, ModelSpec,
};
use moralscope_core::robustness::bootstrap;
use moralscope_core::synth::{nb2_design, synthetic_corpus, CorpusParams, NB2_BETA};
use moralscope_core::{AnnotationChoice, EmotionCategory};
use rand::{Rng, SeedableRng};
use serde_json::Value;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn irr_arithmetic() -> Outcome {
    let cases: [(f64, f64, f64); 3] = [(0.035, 1.0356, 1.04), (0.151, 1.1630, 1.16), (0.547, 1.7280, 1.73)];
    for (b, four, two) in cases {
        let irr = b.exp();
        // The four-decimal figures are truncated rather than rounded.
        ensure!((irr - four).abs() < 1e-4, "exp({b}) = {irr}, expected about {four}");
        ensure!(round_to(irr, 2) == two, "exp({b}) = {irr} does not round to {two}");
    }
    Ok("exp(0.035, 0.151, 0.547) rounds to 1.04, 1.16, 1.73".into())
}

fn median_to_mean_check() -> Outcome {
    let ko = median_to_mean(4129.00, 41031.44).map_err(|e| e.to_string())?;
    let us = median_to_mean(16361.00, 92134.26).map_err(|e| e.to_string())?;
    ensure!(round_to(ko, 4) == 0.1006 && round_to(ko, 2) == 0.10, "KO ratio {ko}");
    ensure!(round_to(us, 4) == 0.1776 && round_to(us, 2) == 0.18, "US ratio {us}");
    Ok(format!("KO {ko:.4}, US {us:.4}"))
}

fn nb_recovery() -> Outcome {
    let alpha = 0.8;
    let mut good = 0;
    let mut notes = Vec::new();
    for seed in 0..20 {
        let syn = nb2_design(50_000, &NB2_BETA, alpha, 1000 + seed);
        let fit = fit_nb(&syn.design);
        let coef_ok = fit
            .coefficients
            .iter()
            .zip(&syn.beta)
            .all(|(c, b)| (c.estimate - b).abs() <= 3.0 * c.std_error);
        let alpha_ok = ((fit.alpha - alpha) / alpha).abs() <= 0.10;
        if fit.converged && coef_ok && alpha_ok {
            good += 1;
        } else {
            notes.push(seed);
        }
    }
    ensure!(good >= 19, "only {good}/20 seeds recovered (misses: {notes:?})");
    Ok(format!("{good}/20 seeds within 3 SE and 10% on alpha"))
}

fn poisson_nesting() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let syn = nb2_design(5_000, &NB2_BETA, 0.0, 77 + seed);
        let nb = fit_nb(&syn.design);
        let pois = fit_poisson(&syn.design);
        ensure!(nb.alpha < 0.01, "seed {seed}: alpha {}", nb.alpha);
        ensure!(
            nb.log_likelihood >= pois.log_likelihood,
            "seed {seed}: NB ll {} < Poisson ll {}",
            nb.log_likelihood,
            pois.log_likelihood
        );
        for (a, b) in nb.coefficients.iter().zip(&pois.coefficients) {
            worst = worst.max((a.estimate - b.estimate).abs());
        }
    }
    ensure!(worst <= 1e-3, "coefficients differ by {worst}");
    Ok(format!("5 seeds, max coefficient gap {worst:.2e}"))
}

fn central_difference(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-5 * x.abs().max(1.0);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn gradient_check() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let syn = nb2_design(400, &NB2_BETA, 0.5, 500 + seed);
        let fit = fit_nb(&syn.design);
        let beta: Vec<f64> = fit.coefficients.iter().map(|c| c.estimate).collect();
        for shift in [0.0, 0.05] {
            let b: Vec<f64> = beta.iter().map(|x| x + shift).collect();
            let a = fit.alpha + shift;
            let (g, ga) = nb_score(&syn.design, &b, a);
            for j in 0..b.len() {
                let fd = central_difference(
                    |x| {
                        let mut bb = b.clone();
                        bb[j] = x;
                        nb_log_likelihood(&syn.design, &bb, a)
                    },
                    b[j],
                );
                let err = (g[j] - fd).abs() / fd.abs().max(g[j].abs()).max(1.0);
                worst = worst.max(err);
            }
            let fd = central_difference(|x| nb_log_likelihood(&syn.design, &b, x), a);
            worst = worst.max((ga - fd).abs() / fd.abs().max(ga.abs()).max(1.0));
        }
    }
    ensure!(worst <= 1e-4, "worst relative gradient error {worst:.2e}");
    Ok(format!("10 designs, worst relative error {worst:.2e}"))
}

/// Upper normal tail by Simpson's rule on [z, z + 40].
fn normal_tail(z: f64) -> f64 {
    let n = 200_000;
    let h = 40.0 / n as f64;
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = phi(z) + phi(z + 40.0);
    for i in 1..n {
        s += phi(z + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn overdispersion() -> Outcome {
    // P(chi2_1 > x) = 2 P(Z > sqrt(x)); the boundary test halves it.
    let oracle = normal_tail(10f64.sqrt());
    let p = lr_test(10.0).p_value;
    ensure!((p - oracle).abs() < 1e-6, "p(LR=10) = {p}, oracle {oracle}");
    ensure!((p - 0.000783).abs() < 1e-6, "p(LR=10) = {p}");
    for seed in 0..20 {
        let syn = nb2_design(1_000, &NB2_BETA, 1.0, 900 + seed);
        let t = overdispersion_test(&fit_nb(&syn.design), &fit_poisson(&syn.design)).map_err(|e| e.to_string())?;
        ensure!(t.significant_at_01, "seed {seed}: p = {}", t.p_value);
    }
    Ok(format!("p(LR=10) = {p:.6} (oracle {oracle:.6}); 20/20 seeds significant at .01"))
}

fn matrix(rows: Vec<Vec<AnnotationChoice>>) -> LabelMatrix {
    let items = (0..rows.len()).map(|i| format!("i{i}")).collect();
    let raters = (0..rows[0].len()).map(|r| format!("r{r}")).collect();
    LabelMatrix::new(items, raters, rows).expect("valid matrix")
}

fn brute_cohen_mean(rows: &[Vec<usize>]) -> Option<f64> {
    let (n, m) = (rows.len() as f64, rows[0].len());
    let mut kappas = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            let mut po = 0.0;
            let (mut pa, mut pb) = ([0.0; 7], [0.0; 7]);
            for row in rows {
                po += f64::from(row[a] == row[b]);
                pa[row[a]] += 1.0;
                pb[row[b]] += 1.0;
            }
            po /= n;
            let pe: f64 = (0..7).map(|k| pa[k] * pb[k] / (n * n)).sum();
            if (1.0 - pe).abs() > 1e-12 {
                kappas.push((po - pe) / (1.0 - pe));
            }
        }
    }
    (!kappas.is_empty()).then(|| kappas.iter().sum::<f64>() / kappas.len() as f64)
}

/// Nominal alpha from the full coincidence matrix over ordered value pairs.
fn brute_krippendorff(rows: &[Vec<usize>]) -> Option<f64> {
    let mut o = [[0.0f64; 7]; 7];
    for row in rows {
        let m = row.len() as f64;
        for i in 0..row.len() {
            for j in 0..row.len() {
                if i != j {
                    o[row[i]][row[j]] += 1.0 / (m - 1.0);
                }
            }
        }
    }
    let n_c: Vec<f64> = (0..7).map(|c| o[c].iter().sum()).collect();
    let n: f64 = n_c.iter().sum();
    let d_o: f64 = (0..7).flat_map(|a| (0..7).map(move |b| (a, b))).filter(|(a, b)| a != b).map(|(a, b)| o[a][b]).sum::<f64>() / n;
    let d_e: f64 = (0..7)
        .flat_map(|a| (0..7).map(move |b| (a, b)))
        .filter(|(a, b)| a != b)
        .map(|(a, b)| n_c[a] * n_c[b])
        .sum::<f64>()
        / (n * (n - 1.0));
    (d_e > 1e-12).then(|| 1.0 - d_o / d_e)
}

fn agreement() -> Outcome {
    let c = AnnotationChoice::ALL;
    let perfect = matrix((0..12).map(|i| vec![c[i % 7]; 3]).collect());
    for (name, v) in [
        ("cohen", cohen_kappa_mean(&perfect)),
        ("fleiss", fleiss_kappa(&perfect)),
        ("krippendorff", krippendorff_alpha(&perfect)),
    ] {
        ensure!(v == Some(1.0), "perfect agreement gives {name} = {v:?}");
    }

    let worked_idx = vec![vec![0, 0, 1], vec![1, 1, 0]];
    let worked = matrix(worked_idx.iter().map(|r| r.iter().map(|&k| c[k]).collect()).collect());
    let fleiss = fleiss_kappa(&worked).ok_or("fleiss undefined on worked example")?;
    ensure!((fleiss + 1.0 / 3.0).abs() <= 1e-12, "worked Fleiss = {fleiss}");
    let cohen = cohen_kappa_mean(&worked).ok_or("cohen undefined")?;
    let cohen_o = brute_cohen_mean(&worked_idx).ok_or("oracle cohen undefined")?;
    ensure!((cohen - cohen_o).abs() <= 1e-12, "worked Cohen {cohen} vs {cohen_o}");
    let ka = krippendorff_alpha(&worked).ok_or("alpha undefined")?;
    let ka_o = brute_krippendorff(&worked_idx).ok_or("oracle alpha undefined")?;
    ensure!((ka - ka_o).abs() <= 1e-12, "worked alpha {ka} vs {ka_o}");

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4242);
    let random = matrix((0..10_000).map(|_| (0..3).map(|_| c[rng.random_range(0..7)]).collect()).collect());
    let stats = [cohen_kappa_mean(&random), fleiss_kappa(&random), krippendorff_alpha(&random)];
    for v in stats {
        let v = v.ok_or("statistic undefined on random labels")?;
        ensure!(v.abs() <= 0.05, "random labels give {v}");
    }
    Ok(format!(
        "perfect = 1.0; worked Fleiss {fleiss:.6}, Cohen {cohen:.6}, alpha {ka:.6}; random max |stat| {:.4}",
        stats.iter().map(|v| v.unwrap().abs()).fold(0.0, f64::max)
    ))
}

fn majority() -> Outcome {
    let c = AnnotationChoice::ALL;
    let mut rows = Vec::new();
    for a in 0..7 {
        for b in 0..7 {
            for d in 0..7 {
                rows.push(vec![c[a], c[b], c[d]]);
            }
        }
    }
    let outcome = majority_vote(&matrix(rows.clone()));
    let gold: BTreeMap<&str, EmotionCategory> = outcome.gold.iter().map(|g| (g.item_id.as_str(), g.label)).collect();
    for (i, row) in rows.iter().enumerate() {
        let expected = EmotionCategory::ALL
            .into_iter()
            .find(|e| row.iter().filter(|x| x.emotion() == Some(*e)).count() >= 2);
        let id = format!("i{i}");
        ensure!(gold.get(id.as_str()).copied() == expected, "triple {row:?}: got {:?}", gold.get(id.as_str()));
    }
    ensure!(gold.len() + outcome.excluded.len() == 343, "items lost");
    Ok(format!("343 triples, {} gold, {} excluded", gold.len(), outcome.excluded.len()))
}

fn stratified_split_check() -> Outcome {
    let sizes = [310usize, 250, 200, 96, 260, 160];
    let mut gold = Vec::new();
    for (k, &n) in sizes.iter().enumerate() {
        for i in 0..n {
            gold.push(GoldLabel {
                item_id: format!("g{k}-{i:04}"),
                label: EmotionCategory::ALL[k],
                vote_count: 2,
            });
        }
    }
    ensure!(gold.len() == 1276, "gold set has {} items", gold.len());
    let split = stratified_split(&gold, 300, 7).map_err(|e| e.to_string())?;
    ensure!(split.train.len() == 300 && split.test.len() == 976, "{}/{}", split.train.len(), split.test.len());
    for (k, &n) in sizes.iter().enumerate() {
        let got = split.train.iter().filter(|g| g.label == EmotionCategory::ALL[k]).count() as f64;
        let target = n as f64 * 300.0 / 1276.0;
        ensure!((got - target).abs() <= 1.0, "category {k}: {got} in train, target {target:.2}");
    }
    let again = stratified_split(&gold, 300, 7).map_err(|e| e.to_string())?;
    let bytes = |s: &moralscope_core::annotation::Split| serde_json::to_vec(s).unwrap();
    ensure!(bytes(&split) == bytes(&again), "rerun differs");
    Ok("300/976, per-category within 1 item, byte-equal rerun".into())
}

fn bootstrap_check() -> Outcome {
    let corpus = synthetic_corpus(&CorpusParams::default());
    let spec = ModelSpec::new(moralscope_core::corpus::Metric::Views);
    let (design, _) = build_design(&corpus.records, &corpus.scores, &spec).map_err(|e| e.to_string())?;
    let full = fit_nb(&design);
    let one = bootstrap(&corpus.records, &corpus.scores, &spec, 1, 1.0, 5, 2).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for c in &full.coefficients {
        let b = &one.coefficients[&c.name];
        worst = worst.max((b.mean_estimate - c.estimate).abs());
    }
    ensure!(worst <= 1e-10, "degenerate replicate differs from full fit by {worst}");

    let run = |workers| bootstrap(&corpus.records, &corpus.scores, &spec, 1000, 0.5, 99, workers);
    let a = run(1).map_err(|e| e.to_string())?;
    let b = run(6).map_err(|e| e.to_string())?;
    ensure!(
        a.to_json() == b.to_json() && a.replicates_csv() == b.replicates_csv(),
        "results depend on worker count"
    );
    let mut per_term: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in &a.replicates {
        for (k, v) in r.estimates.iter().flatten() {
            per_term.entry(k).or_default().push(*v);
        }
    }
    for (term, mut values) in per_term {
        values.sort_by(f64::total_cmp);
        let n = values.len();
        // Nearest rank in integer arithmetic: ceil(25n / 1000), ceil(975n / 1000).
        let lo = values[(25 * n).div_ceil(1000).max(1) - 1];
        let hi = values[(975 * n).div_ceil(1000).max(1) - 1];
        let got = &a.coefficients[term];
        ensure!(got.ci_low == lo && got.ci_high == hi, "{term}: [{}, {}] vs [{lo}, {hi}]", got.ci_low, got.ci_high);
    }
    Ok(format!(
        "reps=1 gap {worst:.1e}; 1000 replicates identical at 1 and 6 workers ({} converged); percentiles exact",
        a.n_converged
    ))
}

fn prediction_curves() -> Outcome {
    let corpus = synthetic_corpus(&CorpusParams::default());
    let spec = ModelSpec::new(moralscope_core::corpus::Metric::Views);
    let (design, _) = build_design(&corpus.records, &corpus.scores, &spec).map_err(|e| e.to_string())?;
    let fit = fit_nb(&design);
    let grid = unit_grid(101);
    let mut checked = 0;
    for e in &spec.emotion_predictors {
        let coef = fit.coefficient(e.token()).ok_or("missing coefficient")?.estimate;
        let pts = predict_curve(&fit, &design, e.token(), &grid).map_err(|e| e.to_string())?;
        ensure!(pts[0].relative == 1.0, "{e}: relative at 0 is {}", pts[0].relative);
        let last = pts.last().unwrap();
        ensure!(last.relative == coef.exp(), "{e}: relative at 1 is {} vs IRR {}", last.relative, coef.exp());
        if coef > 0.0 {
            ensure!(pts.windows(2).all(|w| w[1].mu > w[0].mu), "{e}: mu not increasing");
            checked += 1;
        }
    }
    ensure!(checked > 0, "no positive coefficient to check monotonicity");
    Ok(format!("{} curves anchored at 1 and ending at the IRR; {checked} monotone", spec.emotion_predictors.len()))
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_csv(path: &Path) -> Result<Vec<BTreeMap<String, String>>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().ok_or("empty csv")?.split(',').collect();
    Ok(lines
        .map(|l| header.iter().map(|h| h.to_string()).zip(l.split(',').map(str::to_string)).collect())
        .collect())
}

fn num(row: &BTreeMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or(f64::NAN)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn run_stage(stage: &str, out: &Path) -> Result<(), String> {
    let config = repo_root().join("fixtures/corpus/config.toml");
    let status = Command::new(env!("CARGO_BIN_EXE_moralscope"))
        .args([stage, "--config"])
        .arg(&config)
        .arg("--output")
        .arg(out)
        .env("MORALSCOPE_LOG", "warn")
        .status()
        .map_err(|e| e.to_string())?;
    ensure!(status.success(), "{stage} exited with {status}");
    Ok(())
}

fn end_to_end() -> Outcome {
    let root = repo_root();
    let oracles = root.join("fixtures/oracles");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = tmp.path();
    for stage in ["validate", "describe", "score", "fit", "bootstrap"] {
        run_stage(stage, out)?;
    }

    let manifest = read_json(&root.join("fixtures/corpus/manifest.json"))?;
    let counted = read_json(&oracles.join("fixture_channel_counts.json"))?;
    let summary = read_json(&out.join("validate/summary.json"))?;
    ensure!(summary["accepted"] == 200 && summary["rejected"] == 0, "validate: {summary}");
    for row in read_csv(&out.join("validate/channel_counts.csv"))? {
        let n: u64 = row["count"].parse().unwrap();
        let id = &row["channel_id"];
        ensure!(manifest["channel_counts"][id] == n && counted[id] == n, "channel {id}: {n}");
    }

    let describe = read_json(&oracles.join("fixture_describe.json"))?;
    let rows = read_csv(&out.join("describe/descriptive_stats.csv"))?;
    ensure!(rows.len() == 6, "{} describe rows", rows.len());
    for row in &rows {
        let o = &describe["stats"][format!("{}/{}", row["country"], row["metric"])];
        ensure!(row["n"] == o["n"].to_string(), "n mismatch for {row:?}");
        for k in ["mean", "median", "sd", "min", "max", "skewness", "kurtosis"] {
            let (a, b) = (num(row, k), o[k].as_f64().unwrap());
            ensure!(rel(a, b) <= 1e-9, "{}/{} {k}: {a} vs {b}", row["country"], row["metric"]);
        }
    }
    for row in read_csv(&out.join("describe/engagement_ratios.csv"))? {
        let o = &describe["ratios"][&row["country"]];
        for k in ["median_to_mean_views", "comment_intensity"] {
            ensure!(rel(num(&row, k), o[k].as_f64().unwrap()) <= 1e-12, "{} {k}", row["country"]);
        }
    }

    let read_scores = |p: &Path| -> Result<BTreeMap<String, Value>, String> {
        let text = std::fs::read_to_string(p).map_err(|e| e.to_string())?;
        text.lines()
            .map(|l| {
                let v: Value = serde_json::from_str(l).map_err(|e| e.to_string())?;
                Ok((v["video_id"].as_str().unwrap().to_string(), v["scores"].clone()))
            })
            .collect()
    };
    let scored = read_scores(&out.join("score/scores.jsonl"))?;
    ensure!(scored == read_scores(&root.join("fixtures/corpus/scores.jsonl"))?, "replayed scores differ");

    let fits = read_json(&oracles.join("fixture_fit.json"))?;
    let mut worst_z = 0.0f64;
    for (label, o) in fits.as_object().unwrap() {
        let path = out.join(format!("fit/{label}.csv"));
        let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let header = |key: &str| -> f64 {
            text.lines()
                .find_map(|l| l.strip_prefix(&format!("# {key},")))
                .and_then(|v| v.parse().ok())
                .unwrap_or(f64::NAN)
        };
        ensure!(rel(header("alpha"), o["nb"]["alpha"].as_f64().unwrap()) <= 1e-6, "{label} alpha");
        ensure!(
            rel(header("log_likelihood"), o["nb"]["log_likelihood"].as_f64().unwrap()) <= 1e-9,
            "{label} log-likelihood"
        );
        let rows = read_csv(&path)?;
        ensure!(rows.len() == o["nb"]["coefficients"].as_object().unwrap().len(), "{label} terms");
        for row in rows {
            let term = &row["term"];
            let (b, se) = (o["nb"]["coefficients"][term].as_f64(), o["nb"]["std_errors"][term].as_f64());
            let (b, se) = (b.ok_or(format!("{label}: unexpected term {term}"))?, se.unwrap());
            let z = (num(&row, "estimate") - b).abs() / se;
            worst_z = worst_z.max(z);
            ensure!(z <= 1e-5, "{label} {term}: estimate off by {z:.2e} SE");
            ensure!(rel(num(&row, "std_error"), se) <= 1e-6, "{label} {term}: SE");
        }
    }
    let before = std::fs::read(out.join("fit/views.csv")).map_err(|e| e.to_string())?;
    run_stage("fit", out)?;
    ensure!(std::fs::read(out.join("fit/views.csv")).unwrap() == before, "fit rerun not byte-identical");

    let replicates = std::fs::read(out.join("bootstrap/views_replicates.csv")).map_err(|e| e.to_string())?;
    let committed = std::fs::read(oracles.join("fixture_bootstrap_views_replicates.csv")).map_err(|e| e.to_string())?;
    ensure!(replicates == committed, "bootstrap replicates differ from the committed export");
    let boot = read_json(&oracles.join("fixture_bootstrap_views.json"))?;
    for row in read_csv(&out.join("bootstrap/views.csv"))? {
        let o = &boot[&row["term"]];
        ensure!(num(&row, "ci_low") == o["ci_low"].as_f64().unwrap(), "{} ci_low", row["term"]);
        ensure!(num(&row, "ci_high") == o["ci_high"].as_f64().unwrap(), "{} ci_high", row["term"]);
        ensure!(row["n_converged"] == o["n_converged"].to_string(), "{} n_converged", row["term"]);
        let (a, b) = (num(&row, "mean_estimate"), o["mean_estimate"].as_f64().unwrap());
        ensure!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{} mean {a} vs {b}", row["term"]);
    }
    Ok(format!("200 records; describe, scores, 3 fits (worst {worst_z:.1e} SE) and bootstrap match oracles"))
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 12] = [
        ("IRR arithmetic", irr_arithmetic),
        ("Median-to-mean ratios", median_to_mean_check),
        ("NB recovery", nb_recovery),
        ("Poisson nesting", poisson_nesting),
        ("Gradient check", gradient_check),
        ("Overdispersion test", overdispersion),
        ("Agreement statistics", agreement),
        ("Majority vote", majority),
        ("Stratified split", stratified_split_check),
        ("Bootstrap degenerate case", bootstrap_check),
        ("Prediction curves", prediction_curves),
        ("End-to-end fixture", end_to_end),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name:<28} {secs:>6.1}s  {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<28} {secs:>6.1}s  {why}");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", 12 - failed, 12);
    if failed > 0 {
        std::process::exit(1);
    }
}
