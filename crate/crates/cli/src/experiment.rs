//! Seeded experiment runs: data, pretraining, adaptation, ablations, proportion
//! sweeps and the diagnostic studies.
//!
//! Seeds run in parallel; results are collected in seed order so reports do not
//! depend on scheduling. A failing seed is recorded and the others continue.

use pppl_core::data::{
    class_proportions, gen_anomaly_series, gen_rotated_gaussians, gen_two_moons_shift, window_preprocess,
    LabeledDataset, UnlabeledDataset,
};
use pppl_core::diagnostics::{diag_certainty_buckets, diag_oracle_filter, diag_timing_injection};
use pppl_core::metrics::{evaluate, Metrics};
use pppl_core::pppl::{adapt_observed, pretrain_source, Ablation, IterationRecord};
use pppl_core::proportions::{perturb_proportions, PerturbMode};
use pppl_core::{proportion_distance, ClassProportions, LossKind, Model, ProportionKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, ProportionSource, SweepMode, TaskConfig};
use crate::csv_io::read_csv;
use crate::error::{CliError, Result};

/// Every seed a run uses, all derived from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedSet {
    pub run: u64,
    pub data: u64,
    pub init: u64,
    pub pretrain: u64,
    pub adapt: u64,
    pub diagnostics: u64,
    pub perturb: u64,
}

// splitmix64 finalizer
fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedSet {
    pub fn derive(run: u64) -> Self {
        Self {
            run,
            data: run,
            init: run,
            pretrain: mix(run, 1),
            adapt: mix(run, 2),
            diagnostics: mix(run, 3),
            perturb: mix(run, 4),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    pub source: LabeledDataset,
    pub target: UnlabeledDataset,
}

/// Generates or loads the source/target pair. CSV tasks ignore the seed.
pub fn load_task(cfg: &ExperimentConfig, data_seed: u64) -> Result<TaskData> {
    let (source, target) = match &cfg.task {
        TaskConfig::Gaussians(g) => gen_rotated_gaussians(&g.spec(data_seed))?,
        TaskConfig::Moons(m) => gen_two_moons_shift(&m.spec(data_seed))?,
        TaskConfig::Anomaly(a) => {
            let s = gen_anomaly_series(&a.source.spec(data_seed))?;
            let t = gen_anomaly_series(&a.target.spec(data_seed))?;
            (
                window_preprocess(&s.values, &s.flags, a.window)?,
                window_preprocess(&t.values, &t.flags, a.window)?.into_unlabeled(),
            )
        }
        TaskConfig::Csv(c) => {
            let s = read_csv(&c.source, Some(&c.label_column))?;
            let t = read_csv(&c.target, c.target_label_column.as_deref())?;
            if s.features.cols() != t.features.cols() {
                return Err(CliError::Data(format!(
                    "source has {} feature columns, target has {}",
                    s.features.cols(),
                    t.features.cols()
                )));
            }
            let source = LabeledDataset::new(
                s.features,
                s.labels.expect("label column requested"),
                c.classes,
                c.source.display().to_string(),
            )?;
            let target = UnlabeledDataset::new(t.features, t.labels, c.classes, c.target.display().to_string())?;
            (source, target)
        }
    };
    Ok(TaskData { source, target })
}

pub fn build_model(cfg: &ExperimentConfig, dim: usize, classes: usize, seed: u64) -> Result<Model> {
    let mut dims = vec![dim];
    dims.extend(&cfg.model.hidden);
    dims.push(classes);
    Ok(Model::new(&dims, seed)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub positive_f1: Option<f64>,
    /// Positive-class F1 on anomaly tasks, accuracy otherwise.
    pub headline: f64,
    pub confusion: Vec<Vec<usize>>,
}

impl From<&Metrics> for MetricSummary {
    fn from(m: &Metrics) -> Self {
        Self {
            accuracy: m.accuracy,
            macro_f1: m.macro_f1(),
            positive_f1: m.positive_class.map(|c| m.f1[c]),
            headline: m.headline(),
            confusion: m.confusion.clone(),
        }
    }
}

/// Metrics on the target's hidden labels, if it has any.
pub fn target_metrics(cfg: &ExperimentConfig, model: &Model, target: &UnlabeledDataset) -> Result<Option<MetricSummary>> {
    target
        .hidden_labels()
        .map(|truth| {
            evaluate(model, target.features(), truth, cfg.positive_class())
                .map(|m| MetricSummary::from(&m))
                .map_err(Into::into)
        })
        .transpose()
}

/// A pretrained model together with the data it was trained on.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub seeds: SeedSet,
    pub task: TaskData,
    pub model: Model,
    pub pretrain_loss: Vec<f64>,
    pub source_only: Option<MetricSummary>,
}

/// Loads the task and pretrains on the source, unless `initial` supplies a model.
pub fn prepare(cfg: &ExperimentConfig, run_seed: u64, initial: Option<&Model>) -> Result<Prepared> {
    let seeds = SeedSet::derive(run_seed);
    let task = load_task(cfg, seeds.data)?;
    let (model, pretrain_loss) = match initial {
        Some(m) => {
            if m.input_dim() != task.source.dim() || m.output_dim() != task.source.num_classes() {
                return Err(CliError::Data(format!(
                    "model is {}->{} but the task is {}->{}",
                    m.input_dim(),
                    m.output_dim(),
                    task.source.dim(),
                    task.source.num_classes()
                )));
            }
            (m.clone(), Vec::new())
        }
        None => {
            let mut model = build_model(cfg, task.source.dim(), task.source.num_classes(), seeds.init)?;
            let loss = pretrain_source(&mut model, &task.source, &cfg.pretrain.settings(), seeds.pretrain)?;
            (model, loss)
        }
    };
    let source_only = target_metrics(cfg, &model, &task.target)?;
    Ok(Prepared {
        seeds,
        task,
        model,
        pretrain_loss,
        source_only,
    })
}

fn hidden_labels<'a>(task: &'a TaskData, what: &str) -> Result<&'a [usize]> {
    task.target
        .hidden_labels()
        .ok_or_else(|| CliError::Config(format!("{what} needs labels for the target set")))
}

/// Proportions enforced during adaptation, as configured.
pub fn resolve_proportions(cfg: &ExperimentConfig, task: &TaskData) -> Result<ClassProportions> {
    let m = task.source.num_classes();
    Ok(match &cfg.proportions {
        ProportionSource::True => class_proportions(hidden_labels(task, "proportions = \"true\"")?, m)?,
        ProportionSource::Source => class_proportions(task.source.labels(), m)?.with_kind(ProportionKind::Source),
        ProportionSource::Uniform => ClassProportions::uniform(m)?.with_kind(ProportionKind::Guessed),
        ProportionSource::Explicit(v) => {
            if v.len() != m {
                return Err(CliError::Config(format!("{} proportions given for {m} classes", v.len())));
            }
            ClassProportions::new(v.clone(), ProportionKind::Guessed)?
        }
    })
}

/// One adaptation round as written to reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRow {
    pub iteration: usize,
    pub percent: f64,
    pub predicted_per_class: Vec<usize>,
    pub included_per_class: Vec<usize>,
    pub excluded_per_class: Vec<usize>,
    pub mean_weight: f64,
    pub source_count: usize,
    pub train_loss: f64,
    pub target_accuracy: Option<f64>,
    pub target_f1: Option<f64>,
    pub pseudo_label_error: Option<f64>,
}

impl From<IterationRecord> for IterationRow {
    fn from(r: IterationRecord) -> Self {
        Self {
            iteration: r.iteration,
            percent: r.percent,
            predicted_per_class: r.predicted_per_class,
            included_per_class: r.included_per_class,
            excluded_per_class: r.excluded_per_class,
            mean_weight: r.mean_weight,
            source_count: r.source_count,
            train_loss: r.train_loss,
            target_accuracy: r.target_accuracy,
            target_f1: r.target_f1,
            pseudo_label_error: r.pseudo_label_error,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdaptRun {
    pub model: Model,
    pub iterations: Vec<IterationRow>,
    pub metrics: Option<MetricSummary>,
}

/// Adapts the prepared model under `cp`, tracking target metrics each round when labels exist.
pub fn adapt_run(cfg: &ExperimentConfig, prepared: &Prepared, cp: &ClassProportions, ablation: Ablation) -> Result<AdaptRun> {
    let mut config = cfg.adapt.to_adapt_config(prepared.seeds.adapt);
    config.ablation = ablation;
    let target = &prepared.task.target;
    let truth = target.hidden_labels();
    let positive = cfg.positive_class();
    let (model, report) = adapt_observed(
        prepared.model.clone(),
        &prepared.task.source,
        target.features(),
        cp,
        &config,
        |view, record| {
            let Some(truth) = truth else { return };
            if let Ok(m) = evaluate(view.model, target.features(), truth, positive) {
                record.target_accuracy = Some(m.accuracy);
                record.target_f1 = Some(m.positive_class.map_or_else(|| m.macro_f1(), |c| m.f1[c]));
            }
            let (mut included, mut wrong) = (0usize, 0usize);
            for (i, &w) in view.weights.iter().enumerate() {
                if w > 0.0 {
                    included += 1;
                    wrong += usize::from(view.pseudo_labels[i] != truth[i]);
                }
            }
            if included > 0 {
                record.pseudo_label_error = Some(wrong as f64 / included as f64);
            }
        },
    )?;
    let metrics = target_metrics(cfg, &model, target)?;
    Ok(AdaptRun {
        model,
        iterations: report.records.into_iter().map(Into::into).collect(),
        metrics,
    })
}

/// Loss used to train the adapted model, recorded in checkpoints.
pub fn adapt_loss(cfg: &ExperimentConfig) -> LossKind {
    Ablation::from(cfg.adapt.ablation).loss()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
    pub exit_code: i32,
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub n: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len();
        if n == 0 {
            return Self { n, mean: None, std: None };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            n,
            mean: Some(mean),
            std: Some(std),
        }
    }
}

/// Runs `f` for every seed, in parallel batches, keeping seed order.
fn per_seed<T: Send>(seeds: &[u64], f: impl Fn(u64) -> Result<T> + Sync) -> (Vec<T>, Vec<SeedFailure>) {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut results = Vec::with_capacity(seeds.len());
    for chunk in seeds.chunks(threads) {
        std::thread::scope(|s| {
            let f = &f;
            let handles: Vec<_> = chunk.iter().map(|&seed| s.spawn(move || (seed, f(seed)))).collect();
            results.extend(handles.into_iter().map(|h| h.join().expect("seed worker panicked")));
        });
    }
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failed.push(SeedFailure {
                seed,
                error: e.to_string(),
                exit_code: e.exit_code(),
            }),
        }
    }
    (ok, failed)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSeed {
    pub seeds: SeedSet,
    pub proportions: Vec<f64>,
    pub pretrain_loss: Vec<f64>,
    pub source_only: Option<MetricSummary>,
    pub pppl: Option<MetricSummary>,
    pub iterations: Vec<IterationRow>,
    #[serde(skip)]
    pub model: Model,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub completed: usize,
    pub failed: usize,
    pub source_only: Stat,
    pub pppl: Stat,
    pub source_only_accuracy: Stat,
    pub pppl_accuracy: Stat,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub runs: Vec<ExperimentSeed>,
    pub failures: Vec<SeedFailure>,
    pub summary: ExperimentSummary,
}

/// Pretrain, measure source-only, adapt, measure again, for every seed.
pub fn run_experiment(cfg: &ExperimentConfig, initial: Option<&Model>) -> ExperimentReport {
    let (runs, failures) = per_seed(&cfg.seeds, |seed| {
        let prepared = prepare(cfg, seed, initial)?;
        let cp = resolve_proportions(cfg, &prepared.task)?;
        let run = adapt_run(cfg, &prepared, &cp, cfg.adapt.ablation.into())?;
        Ok(ExperimentSeed {
            seeds: prepared.seeds,
            proportions: cp.values().to_vec(),
            pretrain_loss: prepared.pretrain_loss,
            source_only: prepared.source_only,
            pppl: run.metrics,
            iterations: run.iterations,
            model: run.model,
        })
    });
    let pick = |f: fn(&ExperimentSeed) -> Option<&MetricSummary>, acc: bool| {
        Stat::of(runs.iter().filter_map(f).map(|m| if acc { m.accuracy } else { m.headline }))
    };
    let summary = ExperimentSummary {
        completed: runs.len(),
        failed: failures.len(),
        source_only: pick(|r| r.source_only.as_ref(), false),
        pppl: pick(|r| r.pppl.as_ref(), false),
        source_only_accuracy: pick(|r| r.source_only.as_ref(), true),
        pppl_accuracy: pick(|r| r.pppl.as_ref(), true),
    };
    ExperimentReport {
        runs,
        failures,
        summary,
    }
}

/// Pretrains every seed; used by the `pretrain` command.
pub fn run_pretrain(cfg: &ExperimentConfig) -> (Vec<Prepared>, Vec<SeedFailure>) {
    per_seed(&cfg.seeds, |seed| prepare(cfg, seed, None))
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationSeed {
    pub seeds: SeedSet,
    pub source_only: f64,
    /// Headline metric per column.
    pub values: Vec<f64>,
    pub iterations: Vec<Vec<IterationRow>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    pub columns: Vec<String>,
    pub runs: Vec<AblationSeed>,
    pub failures: Vec<SeedFailure>,
    pub source_only: Stat,
    pub stats: Vec<Stat>,
}

/// Compares the requested strategies against full PPPL from the same pretrained models.
///
/// The table has one column per variant plus a final `PPPL` column.
pub fn run_ablation(cfg: &ExperimentConfig, variants: &[Ablation]) -> Result<AblationReport> {
    let mut columns: Vec<Ablation> = Vec::new();
    for &v in variants {
        if v != Ablation::None && !columns.contains(&v) {
            columns.push(v);
        }
    }
    if columns.is_empty() {
        return Err(CliError::Config("ablation needs at least one of A1..A4".into()));
    }
    columns.push(Ablation::None);
    let (runs, failures) = per_seed(&cfg.seeds, |seed| {
        let prepared = prepare(cfg, seed, None)?;
        let source_only = headline(&prepared.source_only)?;
        let cp = resolve_proportions(cfg, &prepared.task)?;
        let mut values = Vec::new();
        let mut iterations = Vec::new();
        for &variant in &columns {
            let run = adapt_run(cfg, &prepared, &cp, variant)?;
            values.push(headline(&run.metrics)?);
            iterations.push(run.iterations);
        }
        Ok(AblationSeed {
            seeds: prepared.seeds,
            source_only,
            values,
            iterations,
        })
    });
    let stats = (0..columns.len()).map(|c| Stat::of(runs.iter().map(|r| r.values[c]))).collect();
    Ok(AblationReport {
        columns: columns.iter().map(|a| a.as_str().to_string()).collect(),
        source_only: Stat::of(runs.iter().map(|r| r.source_only)),
        runs,
        failures,
        stats,
    })
}

fn headline(m: &Option<MetricSummary>) -> Result<f64> {
    m.as_ref()
        .map(|m| m.headline)
        .ok_or_else(|| CliError::Config("this command needs labels for the target set".into()))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSeed {
    pub seeds: SeedSet,
    pub source_only: f64,
    pub true_cp: Vec<f64>,
    pub source_cp: Vec<f64>,
    /// L1 distance between the source and true target proportions.
    pub cp_diff: f64,
    /// Proportions enforced in each column.
    pub enforced: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub columns: Vec<String>,
    pub errors: Vec<f64>,
    pub mode: SweepMode,
    pub runs: Vec<SweepSeed>,
    pub failures: Vec<SeedFailure>,
    pub stats: Vec<Stat>,
    pub cp_diff: Stat,
}

pub fn error_label(e: f64) -> String {
    format!("{}%", (e * 100.0 * 1e6).round() / 1e6)
}

/// Adapts under perturbed true proportions for every error level, then (optionally)
/// under the source proportions, then under the true proportions.
pub fn run_cp_sweep(cfg: &ExperimentConfig, errors: &[f64], include_source_cp: bool) -> Result<SweepReport> {
    if let Some(e) = errors.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
        return Err(CliError::Config(format!("error level {e} must be finite and >= 0")));
    }
    let mode = cfg.sweep.mode.unwrap_or(match cfg.task {
        TaskConfig::Anomaly(_) => SweepMode::Anomaly,
        _ => SweepMode::Multiclass,
    });
    let perturb_mode = match mode {
        SweepMode::Anomaly => PerturbMode::Anomaly {
            anomalous_class: cfg.positive_class().unwrap_or(1),
        },
        SweepMode::Multiclass => PerturbMode::Multiclass,
    };
    let mut columns: Vec<String> = errors.iter().map(|&e| error_label(e)).collect();
    if include_source_cp {
        columns.push("S.".into());
    }
    columns.push("T.".into());

    let (runs, failures) = per_seed(&cfg.seeds, |seed| {
        let prepared = prepare(cfg, seed, None)?;
        let source_only = headline(&prepared.source_only)?;
        let m = prepared.task.source.num_classes();
        let truth = class_proportions(hidden_labels(&prepared.task, "cp-sweep")?, m)?;
        let source = class_proportions(prepared.task.source.labels(), m)?.with_kind(ProportionKind::Source);
        let mut enforced = Vec::new();
        for (k, &e) in errors.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(prepared.seeds.perturb, k as u64));
            enforced.push(perturb_proportions(&truth, e, perturb_mode, &mut rng)?);
        }
        if include_source_cp {
            enforced.push(source.clone());
        }
        enforced.push(truth.clone());
        let mut values = Vec::new();
        for cp in &enforced {
            values.push(headline(&adapt_run(cfg, &prepared, cp, cfg.adapt.ablation.into())?.metrics)?);
        }
        Ok(SweepSeed {
            seeds: prepared.seeds,
            source_only,
            cp_diff: proportion_distance(&source, &truth)?,
            true_cp: truth.values().to_vec(),
            source_cp: source.values().to_vec(),
            enforced: enforced.iter().map(|c| c.values().to_vec()).collect(),
            values,
        })
    });
    Ok(SweepReport {
        stats: (0..columns.len()).map(|c| Stat::of(runs.iter().map(|r| r.values[c]))).collect(),
        cp_diff: Stat::of(runs.iter().map(|r| r.cp_diff)),
        columns,
        errors: errors.to_vec(),
        mode,
        runs,
        failures,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSeed {
    pub seeds: SeedSet,
    pub accuracy: Vec<f64>,
    pub trained: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub runs: Vec<OracleSeed>,
    pub failures: Vec<SeedFailure>,
    /// Mean of final minus initial accuracy.
    pub gain: Stat,
}

pub fn run_diag_oracle(cfg: &ExperimentConfig) -> Result<OracleReport> {
    let (runs, failures) = per_seed(&cfg.seeds, |seed| {
        let p = prepare(cfg, seed, None)?;
        hidden_labels(&p.task, "diagnose oracle")?;
        let curve = diag_oracle_filter(&p.model, &p.task.target, &cfg.diagnostics.to_config(p.seeds.diagnostics))?;
        Ok(OracleSeed {
            seeds: p.seeds,
            accuracy: curve.accuracy,
            trained: curve.trained,
        })
    });
    let gain = Stat::of(runs.iter().map(|r| r.accuracy[r.accuracy.len() - 1] - r.accuracy[0]));
    Ok(OracleReport { runs, failures, gain })
}

#[derive(Debug, Clone, Serialize)]
pub struct BucketSeed {
    pub seeds: SeedSet,
    pub ratios: Vec<Option<f64>>,
    pub counts: Vec<usize>,
    pub per_class: Vec<Vec<(usize, usize)>>,
    pub rank_correlation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BucketsReport {
    pub buckets: usize,
    /// Certainty at or above 1 is counted in the top bucket.
    pub clamp_to_top_bucket: bool,
    pub runs: Vec<BucketSeed>,
    pub failures: Vec<SeedFailure>,
    pub negative_seeds: usize,
}

pub fn run_diag_buckets(cfg: &ExperimentConfig) -> Result<BucketsReport> {
    let buckets = cfg.diagnostics.buckets;
    let (runs, failures) = per_seed(&cfg.seeds, |seed| {
        let p = prepare(cfg, seed, None)?;
        let truth = hidden_labels(&p.task, "diagnose buckets")?;
        let r = diag_certainty_buckets(&p.model, p.task.target.features(), truth, buckets)?;
        Ok(BucketSeed {
            seeds: p.seeds,
            rank_correlation: r.rank_correlation(),
            ratios: r.ratios,
            counts: r.counts,
            per_class: r.per_class,
        })
    });
    Ok(BucketsReport {
        buckets,
        clamp_to_top_bucket: true,
        negative_seeds: runs.iter().filter(|r| r.rank_correlation.is_some_and(|c| c < 0.0)).count(),
        runs,
        failures,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingSeed {
    pub seeds: SeedSet,
    pub final_accuracy: Vec<f64>,
    pub delta: Vec<f64>,
    pub poison_size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingReport {
    pub injection_epochs: Vec<usize>,
    pub poison_fraction: f64,
    pub runs: Vec<TimingSeed>,
    pub failures: Vec<SeedFailure>,
    /// Final accuracy per injection epoch across seeds.
    pub stats: Vec<Stat>,
}

pub fn run_diag_timing(cfg: &ExperimentConfig) -> Result<TimingReport> {
    let d = &cfg.diagnostics;
    let (runs, failures) = per_seed(&cfg.seeds, |seed| {
        let p = prepare(cfg, seed, None)?;
        hidden_labels(&p.task, "diagnose timing")?;
        let r = diag_timing_injection(
            &p.model,
            &p.task.target,
            &d.to_config(p.seeds.diagnostics),
            &d.injection_epochs,
            d.poison_fraction,
        )?;
        Ok(TimingSeed {
            seeds: p.seeds,
            final_accuracy: r.final_accuracy,
            delta: r.delta,
            poison_size: r.poison_size,
        })
    });
    Ok(TimingReport {
        stats: (0..d.injection_epochs.len())
            .map(|i| Stat::of(runs.iter().map(|r| r.final_accuracy[i])))
            .collect(),
        injection_epochs: d.injection_epochs.clone(),
        poison_fraction: d.poison_fraction,
        runs,
        failures,
    })
}
