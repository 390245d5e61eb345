//! Confusion-matrix metrics.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::Model;
use crate::training::argmax_rows;

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    /// Class whose F1 is the headline number on anomaly tasks.
    pub positive_class: Option<usize>,
}

impl Metrics {
    pub fn from_predictions(predicted: &[usize], truth: &[usize], num_classes: usize, positive_class: Option<usize>) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::Shape(format!(
                "{} predictions for {} labels",
                predicted.len(),
                truth.len()
            )));
        }
        if let Some(&bad) = predicted.iter().chain(truth).find(|&&c| c >= num_classes) {
            return Err(Error::Data(format!("class {bad} out of range for {num_classes} classes")));
        }
        if let Some(p) = positive_class.filter(|&p| p >= num_classes) {
            return Err(Error::Config(format!("positive class {p} out of range")));
        }
        let mut confusion = vec![vec![0usize; num_classes]; num_classes];
        for (&p, &t) in predicted.iter().zip(truth) {
            confusion[t][p] += 1;
        }
        let total = truth.len();
        let correct: usize = (0..num_classes).map(|c| confusion[c][c]).sum();
        let mut precision = Vec::with_capacity(num_classes);
        let mut recall = Vec::with_capacity(num_classes);
        let mut f1 = Vec::with_capacity(num_classes);
        for c in 0..num_classes {
            let tp = confusion[c][c] as f64;
            let predicted_c: usize = (0..num_classes).map(|t| confusion[t][c]).sum();
            let actual_c: usize = confusion[c].iter().sum();
            let p = ratio(tp, predicted_c as f64);
            let r = ratio(tp, actual_c as f64);
            precision.push(p);
            recall.push(r);
            f1.push(ratio(2.0 * p * r, p + r));
        }
        Ok(Self {
            accuracy: ratio(correct as f64, total as f64),
            confusion,
            precision,
            recall,
            f1,
            positive_class,
        })
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn macro_f1(&self) -> f64 {
        self.f1.iter().sum::<f64>() / self.f1.len().max(1) as f64
    }

    /// F1 of the positive class when one is set, accuracy otherwise.
    pub fn headline(&self) -> f64 {
        match self.positive_class {
            Some(c) => self.f1[c],
            None => self.accuracy,
        }
    }
}

/// 0/0 is taken as 0.
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Predicts by argmax of the raw outputs and scores against `labels`.
pub fn evaluate(model: &Model, features: &Matrix, labels: &[usize], positive_class: Option<usize>) -> Result<Metrics> {
    let scores = model.forward(features)?;
    Metrics::from_predictions(&argmax_rows(&scores), labels, model.output_dim(), positive_class)
}
