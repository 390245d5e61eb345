//! Studies of pseudo-label training that need the hidden target labels:
//! oracle-filtered self-training, wrong-rate by certainty bucket, and the
//! effect of when wrong pseudo-labels enter training.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::UnlabeledDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::evaluate;
use crate::nn::{LossKind, Model};
use crate::pppl::{assign_pseudo_labels, certainty_scores};
use crate::training::{run_epoch, TrainSettings};

/// Training regime shared by the oracle and timing studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f32,
    pub momentum: f32,
    pub seed: u64,
}

impl Default for DiagnosticConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 32,
            learning_rate: 0.01,
            momentum: 0.9,
            seed: 0,
        }
    }
}

impl DiagnosticConfig {
    fn settings(&self) -> TrainSettings {
        TrainSettings {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
        }
    }
}

fn hidden(target: &UnlabeledDataset) -> Result<&[usize]> {
    target
        .hidden_labels()
        .ok_or_else(|| Error::Config("this diagnostic needs hidden target labels".into()))
}

fn accuracy(model: &Model, features: &Matrix, labels: &[usize]) -> Result<f64> {
    Ok(evaluate(model, features, labels, None)?.accuracy)
}

/// Per-epoch outcome of oracle-filtered training.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCurve {
    /// Target accuracy before training, then after each epoch.
    pub accuracy: Vec<f64>,
    /// Correctly pseudo-labeled samples trained on in each epoch.
    pub trained: Vec<usize>,
}

/// Self-training where every wrong pseudo-label is dropped using the hidden labels.
///
/// `poison`, when given, is a fixed set of `(index, wrong label)` pairs that
/// joins training from epoch `inject_at` (1-based) onwards.
fn oracle_training(
    mut model: Model,
    target: &UnlabeledDataset,
    cfg: &DiagnosticConfig,
    poison: Option<(&[(usize, usize)], usize)>,
) -> Result<(Model, OracleCurve)> {
    let truth = hidden(target)?;
    let settings = cfg.settings();
    settings.validate()?;
    let features = target.features();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = settings.optimizer(&model)?;
    let mut poisoned = vec![false; target.len()];
    if let Some((set, _)) = poison {
        for &(i, _) in set {
            poisoned[i] = true;
        }
    }

    let mut curve = OracleCurve {
        accuracy: vec![accuracy(&model, features, truth)?],
        trained: Vec::with_capacity(cfg.epochs),
    };
    for epoch in 1..=cfg.epochs {
        let pseudo = assign_pseudo_labels(&model.forward(features)?)?;
        let mut rows: Vec<usize> = Vec::new();
        let mut labels: Vec<usize> = Vec::new();
        for (i, (&p, &t)) in pseudo.iter().zip(truth).enumerate() {
            if p == t && !poisoned[i] {
                rows.push(i);
                labels.push(p);
            }
        }
        curve.trained.push(rows.len());
        if let Some((set, inject_at)) = poison {
            if epoch >= inject_at {
                for &(i, wrong) in set {
                    rows.push(i);
                    labels.push(wrong);
                }
            }
        }
        let weights = vec![1.0f32; rows.len()];
        run_epoch(
            &mut model,
            &mut opt,
            &features.select_rows(&rows),
            &labels,
            &weights,
            cfg.batch_size,
            LossKind::Mse,
            &mut rng,
        )?;
        curve.accuracy.push(accuracy(&model, features, truth)?);
    }
    Ok((model, curve))
}

/// Accuracy curve of oracle-filtered pseudo-label training.
pub fn diag_oracle_filter(model: &Model, target: &UnlabeledDataset, cfg: &DiagnosticConfig) -> Result<OracleCurve> {
    oracle_training(model.clone(), target, cfg, None).map(|(_, c)| c)
}

/// Wrong-prediction statistics per certainty bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketReport {
    pub buckets: usize,
    /// `per_class[c][b] = (wrong, total)` over samples predicted as `c`.
    pub per_class: Vec<Vec<(usize, usize)>>,
    /// Wrong ratio per bucket averaged over classes that occupy it; `None` when empty.
    pub ratios: Vec<Option<f64>>,
    /// Samples per bucket across all classes.
    pub counts: Vec<usize>,
}

impl BucketReport {
    /// Spearman correlation between bucket index and wrong ratio over occupied buckets.
    pub fn rank_correlation(&self) -> Option<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .ratios
            .iter()
            .enumerate()
            .filter_map(|(b, r)| r.map(|r| (b as f64, r)))
            .unzip();
        spearman(&x, &y)
    }
}

/// Bucket index of a certainty score; scores at or above 1 land in the top bucket.
pub fn certainty_bucket(certainty: f64, buckets: usize) -> usize {
    let b = libm::floor(certainty.max(0.0) * buckets as f64);
    (b as usize).min(buckets - 1)
}

/// Groups target predictions by predicted class and certainty bucket and
/// reports the share of wrong predictions in each.
pub fn diag_certainty_buckets(model: &Model, features: &Matrix, truth: &[usize], buckets: usize) -> Result<BucketReport> {
    if buckets == 0 {
        return Err(Error::Config("need at least one bucket".into()));
    }
    if truth.len() != features.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} samples",
            truth.len(),
            features.rows()
        )));
    }
    let scores = model.forward(features)?;
    let pseudo = assign_pseudo_labels(&scores)?;
    let certainty = certainty_scores(&scores);
    let classes = model.output_dim();
    let mut per_class = vec![vec![(0usize, 0usize); buckets]; classes];
    for ((&p, &t), &c) in pseudo.iter().zip(truth).zip(&certainty) {
        let cell = &mut per_class[p][certainty_bucket(c, buckets)];
        cell.1 += 1;
        if p != t {
            cell.0 += 1;
        }
    }
    let mut ratios = Vec::with_capacity(buckets);
    let mut counts = Vec::with_capacity(buckets);
    for b in 0..buckets {
        let occupied: Vec<f64> = per_class
            .iter()
            .filter(|row| row[b].1 > 0)
            .map(|row| row[b].0 as f64 / row[b].1 as f64)
            .collect();
        counts.push(per_class.iter().map(|row| row[b].1).sum());
        ratios.push(if occupied.is_empty() {
            None
        } else {
            Some(occupied.iter().sum::<f64>() / occupied.len() as f64)
        });
    }
    Ok(BucketReport {
        buckets,
        per_class,
        ratios,
        counts,
    })
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; `None` for fewer than two points or a constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / libm::sqrt(vx * vy))
}

/// Final accuracies of oracle-filtered training with a wrong-label set injected
/// at different epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub injection_epochs: Vec<usize>,
    pub final_accuracy: Vec<f64>,
    /// `final_accuracy[i] − final_accuracy` of the latest injection epoch.
    pub delta: Vec<f64>,
    pub poison_size: usize,
}

/// Picks `round(fraction · N)` samples with wrong labels.
///
/// Samples the model already gets wrong are drawn first and keep the model's
/// wrong prediction as their label. If there are too few, the rest are random
/// correctly predicted samples given a uniformly drawn wrong label.
pub fn choose_poison<R: Rng + ?Sized>(
    predicted: &[usize],
    truth: &[usize],
    classes: usize,
    fraction: f64,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!("poison fraction {fraction} not in [0, 1]")));
    }
    if classes < 2 {
        return Err(Error::Config("wrong labels need at least two classes".into()));
    }
    if predicted.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    let k = libm::round(fraction * truth.len() as f64) as usize;
    let (wrong, right): (Vec<usize>, Vec<usize>) = (0..truth.len()).partition(|&i| predicted[i] != truth[i]);
    let mut out: Vec<(usize, usize)> = index::sample(rng, wrong.len(), k.min(wrong.len()))
        .into_iter()
        .map(|j| (wrong[j], predicted[wrong[j]]))
        .collect();
    let extra = k - out.len();
    for j in index::sample(rng, right.len(), extra) {
        let i = right[j];
        // uniform over the classes other than the true one
        let shift = rng.random_range(1..classes);
        out.push((i, (truth[i] + shift) % classes));
    }
    out.sort_unstable();
    Ok(out)
}

/// Runs oracle-filtered training once per injection epoch with the same poison set.
pub fn diag_timing_injection(
    model: &Model,
    target: &UnlabeledDataset,
    cfg: &DiagnosticConfig,
    injection_epochs: &[usize],
    poison_fraction: f64,
) -> Result<TimingReport> {
    let truth = hidden(target)?;
    if injection_epochs.is_empty() {
        return Err(Error::Config("no injection epochs given".into()));
    }
    if let Some(&e) = injection_epochs.iter().find(|&&e| e == 0 || e > cfg.epochs) {
        return Err(Error::Config(format!(
            "injection epoch {e} outside 1..={}",
            cfg.epochs
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let predicted = assign_pseudo_labels(&model.forward(target.features())?)?;
    let poison = choose_poison(&predicted, truth, target.num_classes(), poison_fraction, &mut rng)?;

    let mut final_accuracy = Vec::with_capacity(injection_epochs.len());
    for &epoch in injection_epochs {
        let (_, curve) = oracle_training(model.clone(), target, cfg, Some((&poison, epoch)))?;
        final_accuracy.push(*curve.accuracy.last().expect("curve has an initial point"));
    }
    let latest = injection_epochs
        .iter()
        .enumerate()
        .max_by_key(|(_, &e)| e)
        .map(|(i, _)| i)
        .expect("nonempty");
    let reference = final_accuracy[latest];
    Ok(TimingReport {
        injection_epochs: injection_epochs.to_vec(),
        delta: final_accuracy.iter().map(|a| a - reference).collect(),
        final_accuracy,
        poison_size: poison.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Layer;
    use approx::assert_abs_diff_eq;

    #[test]
    fn spearman_basics() {
        assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 4.0, 9.0]).unwrap(), 1.0, epsilon = 1e-12);
        assert!(spearman(&[1.0], &[1.0]).is_none());
        assert!(spearman(&[1.0, 2.0], &[5.0, 5.0]).is_none());
        assert_eq!(ranks(&[2.0, 1.0, 2.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn buckets_clamp_large_scores() {
        assert_eq!(certainty_bucket(0.0, 10), 0);
        assert_eq!(certainty_bucket(0.15, 10), 1);
        assert_eq!(certainty_bucket(0.99, 10), 9);
        assert_eq!(certainty_bucket(1.0, 10), 9);
        assert_eq!(certainty_bucket(7.5, 10), 9);
    }

    fn identity_model() -> Model {
        Model::from_layers(vec![Layer::from_parts(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 2]).unwrap()], 0).unwrap()
    }

    #[test]
    fn confident_predictions_are_right() {
        // scores equal the features; high-gap rows are labeled correctly
        let x = Matrix::from_rows(&[[1.0f32, 0.0], [0.0, 0.95], [0.55, 0.5], [0.5, 0.52]]).unwrap();
        let truth = [0, 1, 1, 0];
        let r = diag_certainty_buckets(&identity_model(), &x, &truth, 10).unwrap();
        assert_eq!(r.ratios[9], Some(0.0));
        assert_eq!(r.ratios[0], Some(1.0));
        assert_eq!(r.ratios[5], None);
        assert_eq!(r.counts.iter().sum::<usize>(), 4);
        assert!(r.rank_correlation().unwrap() < 0.0);
    }

    #[test]
    fn diagnostics_need_hidden_labels() {
        let x = Matrix::from_rows(&[[1.0f32, 0.0]]).unwrap();
        let t = UnlabeledDataset::new(x, None, 2, "").unwrap();
        let cfg = DiagnosticConfig::default();
        assert!(matches!(diag_oracle_filter(&identity_model(), &t, &cfg), Err(Error::Config(_))));
        assert!(diag_timing_injection(&identity_model(), &t, &cfg, &[1], 0.1).is_err());
    }

    #[test]
    fn poison_labels_are_always_wrong() {
        let truth: Vec<usize> = (0..200).map(|i| i % 3).collect();
        // the model is wrong on the first 5 samples only
        let mut predicted = truth.clone();
        for p in predicted.iter_mut().take(5) {
            *p = (*p + 1) % 3;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let poison = choose_poison(&predicted, &truth, 3, 0.1, &mut rng).unwrap();
        assert_eq!(poison.len(), 20);
        assert!(poison.iter().all(|&(i, l)| l != truth[i] && l < 3));
        for i in 0..5 {
            assert!(poison.contains(&(i, predicted[i])));
        }
        let small = choose_poison(&predicted, &truth, 3, 0.02, &mut rng).unwrap();
        assert_eq!(small.len(), 4);
        assert!(small.iter().all(|&(i, l)| i < 5 && l == predicted[i]));
        assert!(choose_poison(&predicted, &truth, 3, 0.0, &mut rng).unwrap().is_empty());
    }
}
