//! Mini-batch passes shared by pretraining, adaptation and the diagnostics.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{Batch, LossKind, Model, Sgd};

/// Optimizer and batching settings for one training phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub momentum: f32,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.01,
            momentum: 0.9,
        }
    }
}

impl TrainSettings {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning_rate must be finite and >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn optimizer(&self, model: &Model) -> Result<Sgd> {
        Sgd::new(model, self.learning_rate, self.momentum)
    }
}

/// One shuffled pass over `(features, labels, weights)` in mini-batches.
///
/// Returns the mean pre-step batch loss, or 0 for an empty set.
#[allow(clippy::too_many_arguments)]
pub fn run_epoch<R: Rng + ?Sized>(
    model: &mut Model,
    opt: &mut Sgd,
    features: &Matrix,
    labels: &[usize],
    weights: &[f32],
    batch_size: usize,
    loss: LossKind,
    rng: &mut R,
) -> Result<f64> {
    if features.rows() != labels.len() || labels.len() != weights.len() {
        return Err(Error::Shape(alloc::format!(
            "{} rows, {} labels, {} weights",
            features.rows(),
            labels.len(),
            weights.len()
        )));
    }
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(rng);
    let m = model.output_dim();
    let mut total = 0.0;
    let mut batches = 0usize;
    for chunk in order.chunks(batch_size) {
        let x = features.select_rows(chunk);
        let y: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
        let w: Vec<f32> = chunk.iter().map(|&i| weights[i]).collect();
        let batch = Batch::from_labels(x, &y, w, m)?;
        total += model.train_step(&batch, loss, opt)?;
        batches += 1;
    }
    Ok(if batches == 0 { 0.0 } else { total / batches as f64 })
}

/// Row-wise argmax with ties going to the lowest index.
pub fn argmax_rows(scores: &Matrix) -> Vec<usize> {
    scores.iter_rows().map(argmax).collect()
}

pub(crate) fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}
