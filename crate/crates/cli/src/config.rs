//! Pipeline configuration file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use moralscope_core::corpus::Country;
use moralscope_core::regress::ModelSpec;
use moralscope_core::scoring::{Language, ScorerDescriptor};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset_path: PathBuf,
    pub registry_path: PathBuf,
    /// Precomputed scores in replay format. Takes precedence over `scorer`
    /// for downstream stages.
    #[serde(default)]
    pub scores_path: Option<PathBuf>,
    #[serde(default)]
    pub scorer: Option<ScorerDescriptor>,
    pub output_dir: PathBuf,
    pub language: Language,
    #[serde(default)]
    pub model_specs: Vec<ModelEntry>,
    pub bootstrap: BootstrapConfig,
    pub seeds: Seeds,
    pub annotation: AnnotationConfig,
    #[serde(default)]
    pub growth: Option<GrowthConfig>,
    #[serde(default)]
    pub curves: CurvesConfig,
    #[serde(default)]
    pub per_channel: PerChannelConfig,
    #[serde(default)]
    pub evaluation: Option<EvaluationConfig>,
    /// Worker threads for parallel stages. Results never depend on it.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Concurrent requests against a remote scorer.
    #[serde(default)]
    pub max_in_flight: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub label: String,
    #[serde(flatten)]
    pub spec: ModelSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    pub reps: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub sampling: u64,
    pub split: u64,
    pub bootstrap: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationConfig {
    pub sample_n: usize,
    pub train_n: usize,
    pub service_port: u16,
    #[serde(default)]
    pub raters: Vec<String>,
    #[serde(default)]
    pub guideline_path: Option<PathBuf>,
    /// CSV `video_id,label`. Defaults to the argmax of the scores.
    #[serde(default)]
    pub pilot_labels_path: Option<PathBuf>,
    /// CSV `video_id,cluster`.
    #[serde(default)]
    pub clusters_path: Option<PathBuf>,
    /// Label export JSON, or the service's label log. Defaults to the log
    /// written by `annotate-serve`.
    #[serde(default)]
    pub labels_path: Option<PathBuf>,
    /// CSV `item_id,label,vote_count`. Defaults to the `aggregate` output.
    #[serde(default)]
    pub gold_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConfig {
    pub path: PathBuf,
    /// Inclusive day windows. Defaults to consecutive 10-day windows.
    #[serde(default)]
    pub windows: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvesConfig {
    pub grid_points: usize,
}

impl Default for CurvesConfig {
    fn default() -> Self {
        CurvesConfig { grid_points: 101 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerChannelConfig {
    pub focal: String,
}

impl Default for PerChannelConfig {
    fn default() -> Self {
        PerChannelConfig {
            focal: "other_condemning".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    /// CSV `item_id,label,vote_count` of held-out gold labels.
    pub gold_path: PathBuf,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    0.5
}

/// A loaded configuration together with where its relative paths point.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: PipelineConfig,
    pub base_dir: PathBuf,
}

/// Raised for configuration problems; the CLI maps it to exit code 2.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn field_error(field: impl Into<String>, message: impl Into<String>) -> anyhow::Error {
    ConfigError {
        field: field.into(),
        message: message.into(),
    }
    .into()
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let config: PipelineConfig = toml::from_str(&text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .unwrap_or("<config>")
                .to_string();
            field_error(field, e.message().trim().to_string())
        })?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Loaded { config, base_dir })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output_dir)
    }

    pub fn apply_seed_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| field_error("--seed-override", format!("expected k=v, got `{spec}`")))?;
        let value: u64 = value
            .trim()
            .parse()
            .map_err(|_| field_error(format!("seeds.{key}"), format!("`{value}` is not an integer")))?;
        let seeds = &mut self.config.seeds;
        match key.trim() {
            "sampling" => seeds.sampling = value,
            "split" => seeds.split = value,
            "bootstrap" => seeds.bootstrap = value,
            other => return Err(field_error(format!("seeds.{other}"), "unknown seed")),
        }
        Ok(())
    }

    /// Checks every field, failing on the first problem in declaration order.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        self.require_file("dataset_path", &c.dataset_path)?;
        self.require_file("registry_path", &c.registry_path)?;
        if let Some(p) = &c.scores_path {
            self.require_file("scores_path", p)?;
        }
        if let Some(s) = &c.scorer {
            s.validate().map_err(|e| field_error("scorer", e.to_string()))?;
            if let Some(src) = &s.source {
                self.require_file("scorer.source", src)?;
            }
        }
        if c.output_dir.as_os_str().is_empty() {
            return Err(field_error("output_dir", "must not be empty"));
        }
        let mut labels = std::collections::BTreeSet::new();
        for (i, m) in c.model_specs.iter().enumerate() {
            let field = format!("model_specs[{i}]");
            if m.label.is_empty() || !m.label.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-') {
                return Err(field_error(format!("{field}.label"), "use letters, digits, `_` or `-`"));
            }
            if !labels.insert(&m.label) {
                return Err(field_error(format!("{field}.label"), format!("duplicate label `{}`", m.label)));
            }
            m.spec.validate().map_err(|e| field_error(field, e.to_string()))?;
        }
        if c.bootstrap.reps == 0 {
            return Err(field_error("bootstrap.reps", "must be at least 1"));
        }
        if !(c.bootstrap.fraction > 0.0 && c.bootstrap.fraction <= 1.0) {
            return Err(field_error("bootstrap.fraction", "must be in (0, 1]"));
        }
        if c.annotation.sample_n == 0 {
            return Err(field_error("annotation.sample_n", "must be positive"));
        }
        for (name, p) in [
            ("annotation.guideline_path", &c.annotation.guideline_path),
            ("annotation.pilot_labels_path", &c.annotation.pilot_labels_path),
            ("annotation.clusters_path", &c.annotation.clusters_path),
        ] {
            if let Some(p) = p {
                self.require_file(name, p)?;
            }
        }
        if let Some(g) = &c.growth {
            self.require_file("growth.path", &g.path)?;
            if let Some(w) = g.windows.iter().find(|(a, b)| *a < 1 || a > b) {
                return Err(field_error("growth.windows", format!("bad window {w:?}")));
            }
        }
        if c.curves.grid_points < 2 {
            return Err(field_error("curves.grid_points", "must be at least 2"));
        }
        if let Some(e) = &c.evaluation {
            self.require_file("evaluation.gold_path", &e.gold_path)?;
            if !(0.0..=1.0).contains(&e.threshold) {
                return Err(field_error("evaluation.threshold", "must be in [0, 1]"));
            }
        }
        if c.workers == Some(0) {
            return Err(field_error("workers", "must be positive"));
        }
        if c.max_in_flight == Some(0) {
            return Err(field_error("max_in_flight", "must be positive"));
        }
        Ok(())
    }

    fn require_file(&self, field: &str, p: &Path) -> Result<()> {
        let full = self.resolve(p);
        if !full.is_file() {
            bail!(ConfigError {
                field: field.into(),
                message: format!("{} does not exist", full.display()),
            });
        }
        Ok(())
    }

    /// SHA-256 of the effective configuration (after overrides).
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(&self.config).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn workers(&self) -> usize {
        self.config
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }

    pub fn country(&self) -> Country {
        match self.config.language {
            Language::Ko => Country::Ko,
            Language::En => Country::Us,
        }
    }
}
