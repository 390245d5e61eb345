//! The adaptation loop: score, pseudo-label, weight, exclude, mix source, train.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::curriculum::{assign_pseudo_labels, calculate_weights, certainty_scores, inclusion_percent};
use super::exclusion::exclude_by_proportion;
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{LossKind, Model};
use crate::proportions::ClassProportions;
use crate::training::{run_epoch, TrainSettings};

/// Alternative training strategies used for ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ablation {
    #[default]
    None,
    /// Cross-entropy instead of MSE during adaptation.
    A1,
    /// Every pseudo-labeled sample admitted from the first round.
    A2,
    /// Certainty ranking over all samples instead of per pseudo-class.
    A3,
    /// No class-proportion exclusion.
    A4,
}

impl Ablation {
    pub const VARIANTS: [Ablation; 4] = [Ablation::A1, Ablation::A2, Ablation::A3, Ablation::A4];

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::None => "PPPL",
            Ablation::A1 => "A1",
            Ablation::A2 => "A2",
            Ablation::A3 => "A3",
            Ablation::A4 => "A4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NONE" | "PPPL" => Some(Ablation::None),
            "A1" => Some(Ablation::A1),
            "A2" => Some(Ablation::A2),
            "A3" => Some(Ablation::A3),
            "A4" => Some(Ablation::A4),
            _ => None,
        }
    }

    pub fn loss(self) -> LossKind {
        if self == Ablation::A1 {
            LossKind::Ce
        } else {
            LossKind::Mse
        }
    }
}

/// How many labeled source samples join each round.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SourceMix {
    /// As many as there are positively weighted target samples, capped at the source size.
    #[default]
    MatchTarget,
    /// This share of the positively weighted target count, capped at the source size.
    Fraction(f64),
    Fixed(usize),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptConfig {
    pub iterations: usize,
    /// Inclusion percent before the first round.
    pub schedule_base: f64,
    /// Inclusion percent added per round.
    pub schedule_step: f64,
    pub source_mix: SourceMix,
    pub epochs_per_iteration: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub momentum: f32,
    pub ablation: Ablation,
    pub seed: u64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            iterations: 45,
            schedule_base: 10.0,
            schedule_step: 2.0,
            source_mix: SourceMix::MatchTarget,
            epochs_per_iteration: 1,
            batch_size: 32,
            learning_rate: 0.01,
            momentum: 0.9,
            ablation: Ablation::None,
            seed: 0,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations > 0 && self.schedule_base + self.schedule_step * (self.iterations as f64) < 100.0 {
            return Err(Error::Config(format!(
                "schedule {} + {}*{} never reaches 100%",
                self.schedule_base, self.schedule_step, self.iterations
            )));
        }
        if !self.schedule_base.is_finite() || !self.schedule_step.is_finite() || self.schedule_step < 0.0 {
            return Err(Error::Config("schedule must be finite with a nonnegative step".into()));
        }
        if let SourceMix::Fraction(f) = self.source_mix {
            if !(f >= 0.0) || !f.is_finite() {
                return Err(Error::Config(format!("source fraction {f} must be finite and >= 0")));
            }
        }
        self.train_settings().validate()
    }

    pub fn train_settings(&self) -> TrainSettings {
        TrainSettings {
            epochs: self.epochs_per_iteration,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
        }
    }

    /// Inclusion percent used in round `round` (1-based), honoring ablation A2.
    pub fn percent_at(&self, round: usize) -> f64 {
        if self.ablation == Ablation::A2 {
            100.0
        } else {
            inclusion_percent(round, self.schedule_base, self.schedule_step)
        }
    }
}

/// What happened in one adaptation round.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationRecord {
    pub iteration: usize,
    pub percent: f64,
    pub predicted_per_class: Vec<usize>,
    /// Target samples trained on, per pseudo-class.
    pub included_per_class: Vec<usize>,
    /// Samples removed by the proportion cap, per pseudo-class.
    pub excluded_per_class: Vec<usize>,
    /// Mean weight over the included target samples.
    pub mean_weight: f64,
    pub source_count: usize,
    pub train_loss: f64,
    pub target_accuracy: Option<f64>,
    pub target_f1: Option<f64>,
    /// Share of included target samples whose pseudo-label is wrong.
    pub pseudo_label_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdaptReport {
    pub records: Vec<IterationRecord>,
}

/// Snapshot of a finished round handed to an observer.
pub struct RoundView<'a> {
    pub model: &'a Model,
    pub pseudo_labels: &'a [usize],
    pub weights: &'a [f32],
}

/// `k` source samples with one-hot targets and unit weights.
///
/// Draws without replacement when `k ≤ N_s`, otherwise with replacement.
pub fn select_source<R: Rng + ?Sized>(source: &LabeledDataset, k: usize, rng: &mut R) -> Result<(Matrix, Vec<usize>, Vec<f32>)> {
    if k == 0 {
        return Ok((Matrix::zeros(0, source.dim()), Vec::new(), Vec::new()));
    }
    let n = source.len();
    if n == 0 {
        return Err(Error::Config("cannot select from an empty source set".into()));
    }
    let picks: Vec<usize> = if k <= n {
        index::sample(rng, n, k).into_vec()
    } else {
        (0..k).map(|_| rng.random_range(0..n)).collect()
    };
    let labels = picks.iter().map(|&i| source.labels()[i]).collect();
    Ok((source.features().select_rows(&picks), labels, vec![1.0; k]))
}

/// Trains on the labeled source set with unit weights and MSE.
pub fn pretrain_source(model: &mut Model, source: &LabeledDataset, settings: &TrainSettings, seed: u64) -> Result<Vec<f64>> {
    settings.validate()?;
    check_dims(model, source.dim(), source.num_classes())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut opt = settings.optimizer(model)?;
    let weights = vec![1.0f32; source.len()];
    (0..settings.epochs)
        .map(|_| {
            run_epoch(
                model,
                &mut opt,
                source.features(),
                source.labels(),
                &weights,
                settings.batch_size,
                LossKind::Mse,
                &mut rng,
            )
        })
        .collect()
}

fn check_dims(model: &Model, dim: usize, classes: usize) -> Result<()> {
    if model.input_dim() != dim || model.output_dim() != classes {
        return Err(Error::Shape(format!(
            "model is {}->{} but data is {dim}->{classes}",
            model.input_dim(),
            model.output_dim()
        )));
    }
    Ok(())
}

/// Runs the adaptation rounds on unlabeled target features.
pub fn adapt(model: Model, source: &LabeledDataset, target: &Matrix, cp: &ClassProportions, config: &AdaptConfig) -> Result<(Model, AdaptReport)> {
    adapt_observed(model, source, target, cp, config, |_, _| {})
}

/// [`adapt`] with a callback run after each round's training step.
///
/// The callback may fill the optional evaluation fields of the record; the
/// algorithm itself never reads them.
pub fn adapt_observed<F>(
    mut model: Model,
    source: &LabeledDataset,
    target: &Matrix,
    cp: &ClassProportions,
    config: &AdaptConfig,
    mut observe: F,
) -> Result<(Model, AdaptReport)>
where
    F: FnMut(&RoundView<'_>, &mut IterationRecord),
{
    let mut report = AdaptReport::default();
    if config.iterations == 0 {
        return Ok((model, report));
    }
    config.validate()?;
    let classes = model.output_dim();
    check_dims(&model, source.dim(), source.num_classes())?;
    if target.cols() != model.input_dim() {
        return Err(Error::Shape(format!(
            "target has {} features, model expects {}",
            target.cols(),
            model.input_dim()
        )));
    }
    if cp.len() != classes {
        return Err(Error::Config(format!(
            "{} class proportions for a {classes}-class model",
            cp.len()
        )));
    }
    let total = target.rows();
    let class_aware = config.ablation != Ablation::A3;
    let loss = config.ablation.loss();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut opt = config.train_settings().optimizer(&model)?;

    for round in 1..=config.iterations {
        let percent = config.percent_at(round);
        let scores = model.forward(target)?;
        let pseudo = assign_pseudo_labels(&scores)?;
        let certainty = certainty_scores(&scores);
        let mut weights = calculate_weights(&certainty, &pseudo, percent, class_aware)?;
        let weighted: Vec<bool> = weights.iter().map(|&w| w > 0.0).collect();
        let included = if config.ablation == Ablation::A4 {
            weighted.clone()
        } else {
            exclude_by_proportion(&pseudo, &certainty, &weighted, cp, total)?
        };

        let mut record = IterationRecord {
            iteration: round,
            percent,
            predicted_per_class: vec![0; classes],
            included_per_class: vec![0; classes],
            excluded_per_class: vec![0; classes],
            ..IterationRecord::default()
        };
        let mut chosen = Vec::new();
        let mut weight_sum = 0.0f64;
        for i in 0..total {
            record.predicted_per_class[pseudo[i]] += 1;
            if weighted[i] && !included[i] {
                record.excluded_per_class[pseudo[i]] += 1;
                weights[i] = 0.0;
            }
            if included[i] {
                record.included_per_class[pseudo[i]] += 1;
                weight_sum += f64::from(weights[i]);
                chosen.push(i);
            }
        }
        if chosen.is_empty() {
            return Err(Error::Degenerate { round });
        }
        record.mean_weight = weight_sum / chosen.len() as f64;

        let k = match config.source_mix {
            SourceMix::MatchTarget => chosen.len().min(source.len()),
            SourceMix::Fraction(f) => (libm::round(f * chosen.len() as f64) as usize).min(source.len()),
            SourceMix::Fixed(k) => k,
            SourceMix::None => 0,
        };
        let (src_x, src_y, src_w) = select_source(source, k, &mut rng)?;
        record.source_count = k;

        let features = target.select_rows(&chosen).vstack(&src_x)?;
        let mut labels: Vec<usize> = chosen.iter().map(|&i| pseudo[i]).collect();
        labels.extend(src_y);
        let mut train_weights: Vec<f32> = chosen.iter().map(|&i| weights[i]).collect();
        train_weights.extend(src_w);

        let mut loss_sum = 0.0;
        for _ in 0..config.epochs_per_iteration {
            loss_sum += run_epoch(
                &mut model,
                &mut opt,
                &features,
                &labels,
                &train_weights,
                config.batch_size,
                loss,
                &mut rng,
            )?;
        }
        record.train_loss = loss_sum / config.epochs_per_iteration.max(1) as f64;

        observe(
            &RoundView {
                model: &model,
                pseudo_labels: &pseudo,
                weights: &weights,
            },
            &mut record,
        );
        report.records.push(record);
    }
    Ok((model, report))
}
