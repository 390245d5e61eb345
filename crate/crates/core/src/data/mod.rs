//! Datasets, synthetic domain-shift generators and series preprocessing.

mod series;
mod synth;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use series::{gen_anomaly_series, normalized_differences, window_preprocess, AnomalySeries, SeriesSpec};
pub use synth::{gen_rotated_gaussians, gen_two_moons_shift, GaussianSpec, MoonsSpec};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::proportions::{ClassProportions, ProportionKind};

fn check_features(features: &Matrix) -> Result<()> {
    if let Some(pos) = features.as_slice().iter().position(|v| !v.is_finite()) {
        let row = pos / features.cols().max(1);
        return Err(Error::Data(format!("non-finite feature in row {row}")));
    }
    Ok(())
}

fn check_labels(labels: &[usize], num_classes: usize) -> Result<()> {
    if num_classes == 0 {
        return Err(Error::Data("num_classes must be positive".into()));
    }
    if let Some((i, l)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
        return Err(Error::Data(format!(
            "label {l} in row {i} out of range for {num_classes} classes"
        )));
    }
    Ok(())
}

/// Features with visible integer labels (a source domain).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Matrix,
    labels: Vec<usize>,
    num_classes: usize,
    provenance: String,
}

impl LabeledDataset {
    pub fn new(features: Matrix, labels: Vec<usize>, num_classes: usize, provenance: impl Into<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Data("labeled dataset is empty".into()));
        }
        if features.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        check_labels(&labels, num_classes)?;
        check_features(&features)?;
        Ok(Self {
            features,
            labels,
            num_classes,
            provenance: provenance.into(),
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.features.select_rows(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.num_classes,
            self.provenance.clone(),
        )
    }

    /// Drops the labels, keeping them only as hidden evaluation labels.
    pub fn into_unlabeled(self) -> UnlabeledDataset {
        UnlabeledDataset {
            features: self.features,
            hidden_labels: Some(self.labels),
            num_classes: self.num_classes,
            provenance: self.provenance,
        }
    }
}

/// Target-domain features; hidden labels are kept only for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledDataset {
    features: Matrix,
    hidden_labels: Option<Vec<usize>>,
    num_classes: usize,
    provenance: String,
}

impl UnlabeledDataset {
    pub fn new(
        features: Matrix,
        hidden_labels: Option<Vec<usize>>,
        num_classes: usize,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::Data("unlabeled dataset is empty".into()));
        }
        if let Some(labels) = &hidden_labels {
            if labels.len() != features.rows() {
                return Err(Error::Shape(format!(
                    "{} feature rows but {} hidden labels",
                    features.rows(),
                    labels.len()
                )));
            }
            check_labels(labels, num_classes)?;
        } else if num_classes == 0 {
            return Err(Error::Data("num_classes must be positive".into()));
        }
        check_features(&features)?;
        Ok(Self {
            features,
            hidden_labels,
            num_classes,
            provenance: provenance.into(),
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn hidden_labels(&self) -> Option<&[usize]> {
        self.hidden_labels.as_deref()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Reattaches the hidden labels, for evaluation only.
    pub fn to_labeled(&self) -> Option<LabeledDataset> {
        let labels = self.hidden_labels.clone()?;
        LabeledDataset::new(self.features.clone(), labels, self.num_classes, self.provenance.clone()).ok()
    }
}

/// Per-class frequency of `labels`.
pub fn class_proportions(labels: &[usize], num_classes: usize) -> Result<ClassProportions> {
    if labels.is_empty() {
        return Err(Error::Data("cannot compute proportions of an empty label set".into()));
    }
    check_labels(labels, num_classes)?;
    let mut counts = alloc::vec![0usize; num_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let n = labels.len() as f64;
    ClassProportions::new(counts.iter().map(|&c| c as f64 / n).collect(), ProportionKind::True)
}

/// Seeded random split into `(train, eval)` with `round(fraction * N)` training rows.
pub fn split(dataset: &LabeledDataset, fraction: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction {fraction} not in (0, 1)")));
    }
    let n = dataset.len();
    if n < 2 {
        return Err(Error::Config("need at least two samples to split".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let take = libm::round(fraction * n as f64).clamp(1.0, (n - 1) as f64) as usize;
    let (a, b) = order.split_at(take);
    Ok((dataset.subset(a)?, dataset.subset(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toy(n: usize) -> LabeledDataset {
        let rows: Vec<[f32; 1]> = (0..n).map(|i| [i as f32]).collect();
        LabeledDataset::new(Matrix::from_rows(&rows).unwrap(), (0..n).map(|i| i % 2).collect(), 2, "toy").unwrap()
    }

    #[test]
    fn proportions_examples() {
        assert_eq!(class_proportions(&[0, 0, 1, 1], 2).unwrap().values(), &[0.5, 0.5]);
        assert_eq!(class_proportions(&[0, 0, 0, 1], 2).unwrap().values(), &[0.75, 0.25]);
        assert_eq!(class_proportions(&[2, 2], 3).unwrap().values(), &[0.0, 0.0, 1.0]);
        assert!(class_proportions(&[], 2).is_err());
        assert!(class_proportions(&[3], 2).is_err());
    }

    #[test]
    fn split_sizes_and_partition() {
        let d = toy(10);
        let (a, b) = split(&d, 0.5, 3).unwrap();
        assert_eq!((a.len(), b.len()), (5, 5));
        let mut all: Vec<i64> = a
            .features()
            .as_slice()
            .iter()
            .chain(b.features().as_slice())
            .map(|&v| v as i64)
            .collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(split(&d, 0.5, 3).unwrap(), (a, b));
        assert!(split(&d, 1.0, 0).is_err());
        assert!(split(&d, 0.0, 0).is_err());
    }

    #[test]
    fn dataset_validation() {
        let x = Matrix::from_rows(&[[1.0f32], [2.0]]).unwrap();
        assert!(LabeledDataset::new(x.clone(), vec![0, 2], 2, "").is_err());
        assert!(LabeledDataset::new(x.clone(), vec![0], 2, "").is_err());
        let nan = Matrix::from_rows(&[[f32::NAN]]).unwrap();
        assert!(LabeledDataset::new(nan, vec![0], 2, "").is_err());
        let u = UnlabeledDataset::new(x, None, 2, "").unwrap();
        assert!(u.hidden_labels().is_none());
        assert!(u.to_labeled().is_none());
    }
}
