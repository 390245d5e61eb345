//! Experiment configuration file (TOML).
//!
//! Every section is optional and falls back to the defaults below. The `format`
//! field versions the schema; only version 1 exists.

use std::path::{Path, PathBuf};

use pppl_core::data::{GaussianSpec, MoonsSpec, SeriesSpec};
use pppl_core::diagnostics::DiagnosticConfig;
use pppl_core::pppl::{Ablation, AdaptConfig, SourceMix};
use pppl_core::training::TrainSettings;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_format")]
    pub format: u32,
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub task: TaskConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub pretrain: PretrainConfig,
    #[serde(default)]
    pub adapt: AdaptSection,
    #[serde(default)]
    pub proportions: ProportionSource,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

fn default_format() -> u32 {
    FORMAT_VERSION
}
fn default_name() -> String {
    "experiment".into()
}
fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            format: FORMAT_VERSION,
            name: default_name(),
            seeds: default_seeds(),
            out_dir: default_out_dir(),
            task: TaskConfig::default(),
            model: ModelConfig::default(),
            pretrain: PretrainConfig::default(),
            adapt: AdaptSection::default(),
            proportions: ProportionSource::default(),
            metrics: MetricsConfig::default(),
            diagnostics: DiagnosticsSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. Relative CSV paths are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let TaskConfig::Csv(csv) = &mut cfg.task {
            let base = path.parent().unwrap_or(Path::new("."));
            for p in [&mut csv.source, &mut csv.target] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.check_files()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != FORMAT_VERSION {
            return Err(CliError::Config(format!(
                "unsupported config format {} (expected {FORMAT_VERSION})",
                self.format
            )));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must not be empty".into()));
        }
        self.pretrain.settings().validate()?;
        self.adapt.to_adapt_config(0).validate()?;
        if let TaskConfig::Anomaly(a) = &self.task {
            a.source.validate()?;
            a.target.validate()?;
            if a.window == 0 {
                return Err(CliError::Config("task.window must be positive".into()));
            }
        }
        if self.sweep.errors.iter().any(|e| !(*e >= 0.0)) {
            return Err(CliError::Config("sweep.errors must be >= 0".into()));
        }
        if self.diagnostics.buckets == 0 {
            return Err(CliError::Config("diagnostics.buckets must be positive".into()));
        }
        Ok(())
    }

    pub fn check_files(&self) -> Result<()> {
        if let TaskConfig::Csv(csv) = &self.task {
            for p in [&csv.source, &csv.target] {
                if !p.is_file() {
                    return Err(CliError::Config(format!("data file {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    /// Class used for the headline F1; anomaly tasks default to class 1.
    pub fn positive_class(&self) -> Option<usize> {
        self.metrics.positive_class.or(match self.task {
            TaskConfig::Anomaly(_) => Some(1),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TaskConfig {
    Gaussians(GaussianTask),
    Moons(MoonsTask),
    Anomaly(AnomalyTask),
    Csv(CsvTask),
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig::Gaussians(GaussianTask::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianTask {
    pub per_class: usize,
    pub classes: usize,
    pub radius: f64,
    pub spread: f64,
    pub theta: f64,
}

impl Default for GaussianTask {
    fn default() -> Self {
        Self {
            per_class: 500,
            classes: 3,
            radius: 2.0,
            spread: 1.0,
            theta: 35.0,
        }
    }
}

impl GaussianTask {
    pub fn spec(&self, seed: u64) -> GaussianSpec {
        GaussianSpec {
            per_class: self.per_class,
            classes: self.classes,
            radius: self.radius,
            spread: self.spread,
            theta: self.theta,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoonsTask {
    pub per_class: usize,
    pub noise: f64,
    pub theta: f64,
}

impl Default for MoonsTask {
    fn default() -> Self {
        Self {
            per_class: 300,
            noise: 0.1,
            theta: 30.0,
        }
    }
}

impl MoonsTask {
    pub fn spec(&self, seed: u64) -> MoonsSpec {
        MoonsSpec {
            per_class: self.per_class,
            noise: self.noise,
            theta: self.theta,
            seed,
        }
    }
}

/// One series regime; the run seed is mixed into `seed_offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesRegime {
    pub length: usize,
    pub period: f64,
    pub amplitude: f64,
    pub noise: f64,
    pub trend: f64,
    pub anomaly_count: usize,
    pub anomaly_min: f64,
    pub anomaly_max: f64,
    pub seed_offset: u64,
}

impl Default for SeriesRegime {
    fn default() -> Self {
        Self {
            length: 6000,
            period: 50.0,
            amplitude: 1.0,
            noise: 0.1,
            trend: 0.0,
            anomaly_count: 60,
            anomaly_min: 0.6,
            anomaly_max: 1.5,
            seed_offset: 0,
        }
    }
}

impl SeriesRegime {
    pub fn spec(&self, seed: u64) -> SeriesSpec {
        SeriesSpec {
            length: self.length,
            period: self.period,
            amplitude: self.amplitude,
            noise: self.noise,
            trend: self.trend,
            anomaly_count: self.anomaly_count,
            anomaly_min: self.anomaly_min,
            anomaly_max: self.anomaly_max,
            seed: seed.wrapping_add(self.seed_offset),
        }
    }

    fn validate(&self) -> Result<()> {
        self.spec(0).validate().map_err(Into::into)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnomalyTask {
    pub window: usize,
    pub source: SeriesRegime,
    pub target: SeriesRegime,
}

impl Default for AnomalyTask {
    fn default() -> Self {
        Self {
            window: 32,
            source: SeriesRegime::default(),
            target: SeriesRegime {
                period: 40.0,
                amplitude: 1.2,
                noise: 0.15,
                trend: 0.001,
                anomaly_min: 0.8,
                anomaly_max: 2.0,
                seed_offset: 1000,
                ..SeriesRegime::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvTask {
    pub source: PathBuf,
    pub target: PathBuf,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    /// Column of the target file holding evaluation-only labels.
    #[serde(default)]
    pub target_label_column: Option<String>,
    pub classes: usize,
}

fn default_label_column() -> String {
    "label".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { hidden: vec![32] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.01,
            momentum: 0.9,
        }
    }
}

impl PretrainConfig {
    pub fn settings(&self) -> TrainSettings {
        TrainSettings {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate as f32,
            momentum: self.momentum as f32,
        }
    }
}

/// `"match"`, `"none"`, `{ fixed = k }` or `{ fraction = f }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceMixConfig {
    Match,
    None,
    Fixed(usize),
    Fraction(f64),
}

impl From<SourceMixConfig> for SourceMix {
    fn from(m: SourceMixConfig) -> Self {
        match m {
            SourceMixConfig::Match => SourceMix::MatchTarget,
            SourceMixConfig::None => SourceMix::None,
            SourceMixConfig::Fixed(k) => SourceMix::Fixed(k),
            SourceMixConfig::Fraction(f) => SourceMix::Fraction(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum AblationConfig {
    #[default]
    #[serde(alias = "none", alias = "PPPL", alias = "pppl")]
    None,
    #[serde(alias = "a1")]
    A1,
    #[serde(alias = "a2")]
    A2,
    #[serde(alias = "a3")]
    A3,
    #[serde(alias = "a4")]
    A4,
}

impl From<AblationConfig> for Ablation {
    fn from(a: AblationConfig) -> Self {
        match a {
            AblationConfig::None => Ablation::None,
            AblationConfig::A1 => Ablation::A1,
            AblationConfig::A2 => Ablation::A2,
            AblationConfig::A3 => Ablation::A3,
            AblationConfig::A4 => Ablation::A4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptSection {
    pub iterations: usize,
    pub schedule_base: f64,
    pub schedule_step: f64,
    pub source_mix: SourceMixConfig,
    pub epochs_per_iteration: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub ablation: AblationConfig,
}

impl Default for AdaptSection {
    fn default() -> Self {
        let d = AdaptConfig::default();
        Self {
            iterations: d.iterations,
            schedule_base: d.schedule_base,
            schedule_step: d.schedule_step,
            source_mix: SourceMixConfig::Match,
            epochs_per_iteration: d.epochs_per_iteration,
            batch_size: d.batch_size,
            learning_rate: f64::from(d.learning_rate),
            momentum: f64::from(d.momentum),
            ablation: AblationConfig::None,
        }
    }
}

impl AdaptSection {
    pub fn to_adapt_config(&self, seed: u64) -> AdaptConfig {
        AdaptConfig {
            iterations: self.iterations,
            schedule_base: self.schedule_base,
            schedule_step: self.schedule_step,
            source_mix: self.source_mix.into(),
            epochs_per_iteration: self.epochs_per_iteration,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate as f32,
            momentum: self.momentum as f32,
            ablation: self.ablation.into(),
            seed,
        }
    }
}

/// Class proportions enforced during adaptation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProportionSource {
    /// Computed from the hidden target labels.
    #[default]
    True,
    /// Computed from the source labels.
    Source,
    Uniform,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub positive_class: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub buckets: usize,
    pub injection_epochs: Vec<usize>,
    pub poison_fraction: f64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 32,
            learning_rate: 0.01,
            momentum: 0.9,
            buckets: 10,
            injection_epochs: vec![1, 4, 7, 10],
            poison_fraction: 0.1,
        }
    }
}

impl DiagnosticsSection {
    pub fn to_config(&self, seed: u64) -> DiagnosticConfig {
        DiagnosticConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate as f32,
            momentum: self.momentum as f32,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Anomaly,
    Multiclass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub errors: Vec<f64>,
    pub include_source_cp: bool,
    /// Defaults to `anomaly` for anomaly tasks and `multiclass` otherwise.
    pub mode: Option<SweepMode>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            errors: vec![0.1, 0.2, 0.3],
            include_source_cp: true,
            mode: None,
        }
    }
}
