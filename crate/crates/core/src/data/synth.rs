//! Two-dimensional covariate-shift tasks: rotated Gaussian clusters and rotated moons.
//!
//! Source and target come from the same generative process drawn from separate
//! ChaCha streams of one seed; the target is then rotated. Rotation never
//! changes a label.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{LabeledDataset, UnlabeledDataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const SOURCE_STREAM: u64 = 0;
const TARGET_STREAM: u64 = 1;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn rotate(points: &mut [[f64; 2]], theta_deg: f64, center: [f64; 2]) {
    let (s, c) = libm::sincos(theta_deg.to_radians());
    for p in points {
        let (x, y) = (p[0] - center[0], p[1] - center[1]);
        *p = [c * x - s * y + center[0], s * x + c * y + center[1]];
    }
}

fn to_matrix(points: &[[f64; 2]]) -> Matrix {
    let rows: Vec<[f32; 2]> = points.iter().map(|p| [p[0] as f32, p[1] as f32]).collect();
    Matrix::from_rows(&rows).expect("fixed width rows")
}

/// Parameters of the rotated Gaussian-clusters task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    pub per_class: usize,
    pub classes: usize,
    pub radius: f64,
    pub spread: f64,
    /// Rotation of the target domain, in degrees.
    pub theta: f64,
    pub seed: u64,
}

impl Default for GaussianSpec {
    fn default() -> Self {
        Self {
            per_class: 500,
            classes: 3,
            radius: 2.0,
            spread: 1.0,
            theta: 35.0,
            seed: 0,
        }
    }
}

fn sample_clusters(spec: &GaussianSpec, rng: &mut ChaCha8Rng) -> Result<(Vec<[f64; 2]>, Vec<usize>)> {
    let noise = Normal::new(0.0, spec.spread).map_err(|e| Error::Config(format!("spread: {e}")))?;
    let mut points = Vec::with_capacity(spec.per_class * spec.classes);
    let mut labels = Vec::with_capacity(points.capacity());
    for c in 0..spec.classes {
        let angle = core::f64::consts::TAU * c as f64 / spec.classes as f64;
        let (s, co) = libm::sincos(angle);
        let center = [spec.radius * co, spec.radius * s];
        for _ in 0..spec.per_class {
            points.push([center[0] + noise.sample(rng), center[1] + noise.sample(rng)]);
            labels.push(c);
        }
    }
    Ok((points, labels))
}

/// `classes` Gaussian clusters on a circle; the target is the same process rotated
/// about the origin by `theta` degrees.
pub fn gen_rotated_gaussians(spec: &GaussianSpec) -> Result<(LabeledDataset, UnlabeledDataset)> {
    if spec.classes < 2 || spec.per_class == 0 {
        return Err(Error::Config("need at least 2 classes and 1 sample per class".into()));
    }
    if !(spec.spread > 0.0) || !spec.radius.is_finite() || !spec.theta.is_finite() {
        return Err(Error::Config("spread must be positive and radius/theta finite".into()));
    }
    let (src, src_labels) = sample_clusters(spec, &mut stream(spec.seed, SOURCE_STREAM))?;
    let (mut tgt, tgt_labels) = sample_clusters(spec, &mut stream(spec.seed, TARGET_STREAM))?;
    rotate(&mut tgt, spec.theta, [0.0, 0.0]);
    let tag = format!("gaussians(theta={})", spec.theta);
    Ok((
        LabeledDataset::new(to_matrix(&src), src_labels, spec.classes, tag.clone())?,
        UnlabeledDataset::new(to_matrix(&tgt), Some(tgt_labels), spec.classes, tag)?,
    ))
}

/// Parameters of the rotated two-moons task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoonsSpec {
    pub per_class: usize,
    pub noise: f64,
    /// Rotation of the target domain, in degrees.
    pub theta: f64,
    pub seed: u64,
}

impl Default for MoonsSpec {
    fn default() -> Self {
        Self {
            per_class: 300,
            noise: 0.1,
            theta: 30.0,
            seed: 0,
        }
    }
}

/// Rotation pivot: the midpoint of the two moons' bounding box.
const MOONS_CENTER: [f64; 2] = [0.5, 0.25];

fn sample_moons(spec: &MoonsSpec, rng: &mut ChaCha8Rng) -> Result<(Vec<[f64; 2]>, Vec<usize>)> {
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::Config(format!("noise: {e}")))?;
    let mut points = Vec::with_capacity(2 * spec.per_class);
    let mut labels = Vec::with_capacity(2 * spec.per_class);
    for c in 0..2 {
        for _ in 0..spec.per_class {
            let t = rng.random_range(0.0..core::f64::consts::PI);
            let (s, co) = libm::sincos(t);
            let base = if c == 0 { [co, s] } else { [1.0 - co, 0.5 - s] };
            points.push([base[0] + noise.sample(rng), base[1] + noise.sample(rng)]);
            labels.push(c);
        }
    }
    Ok((points, labels))
}

/// Interleaved half circles; the target is rotated by `theta` degrees about the
/// center of the pair.
pub fn gen_two_moons_shift(spec: &MoonsSpec) -> Result<(LabeledDataset, UnlabeledDataset)> {
    if spec.per_class == 0 {
        return Err(Error::Config("per_class must be positive".into()));
    }
    if !(spec.noise >= 0.0) || !spec.theta.is_finite() {
        return Err(Error::Config("noise must be >= 0 and theta finite".into()));
    }
    let (src, src_labels) = sample_moons(spec, &mut stream(spec.seed, SOURCE_STREAM))?;
    let (mut tgt, tgt_labels) = sample_moons(spec, &mut stream(spec.seed, TARGET_STREAM))?;
    rotate(&mut tgt, spec.theta, MOONS_CENTER);
    let tag = format!("moons(theta={})", spec.theta);
    Ok((
        LabeledDataset::new(to_matrix(&src), src_labels, 2, tag.clone())?,
        UnlabeledDataset::new(to_matrix(&tgt), Some(tgt_labels), 2, tag)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::class_proportions;

    #[test]
    fn gaussian_construction() {
        let spec = GaussianSpec {
            per_class: 500,
            classes: 3,
            theta: 35.0,
            ..GaussianSpec::default()
        };
        let (src, tgt) = gen_rotated_gaussians(&spec).unwrap();
        assert_eq!(tgt.len(), 1500);
        assert_eq!(src.len(), 1500);
        let cp = class_proportions(tgt.hidden_labels().unwrap(), 3).unwrap();
        assert_eq!(cp.values(), &[1.0 / 3.0; 3]);
        assert_eq!(gen_rotated_gaussians(&spec).unwrap(), (src, tgt));
    }

    #[test]
    fn rotation_keeps_labels_and_radius() {
        let base = GaussianSpec::default();
        let (_, a) = gen_rotated_gaussians(&GaussianSpec { theta: 0.0, ..base }).unwrap();
        let (_, b) = gen_rotated_gaussians(&GaussianSpec { theta: 80.0, ..base }).unwrap();
        assert_eq!(a.hidden_labels(), b.hidden_labels());
        for (p, q) in a.features().iter_rows().zip(b.features().iter_rows()) {
            let r1 = p[0] * p[0] + p[1] * p[1];
            let r2 = q[0] * q[0] + q[1] * q[1];
            assert!((r1 - r2).abs() < 1e-3 * r1.max(1.0));
        }
    }

    #[test]
    fn moons_construction() {
        let spec = MoonsSpec {
            per_class: 300,
            ..MoonsSpec::default()
        };
        let (src, tgt) = gen_two_moons_shift(&spec).unwrap();
        assert_eq!(src.len(), 600);
        assert_eq!(tgt.len(), 600);
        assert_eq!(class_proportions(src.labels(), 2).unwrap().values(), &[0.5, 0.5]);
        assert_eq!(gen_two_moons_shift(&spec).unwrap(), (src, tgt));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(gen_rotated_gaussians(&GaussianSpec { classes: 1, ..Default::default() }).is_err());
        assert!(gen_rotated_gaussians(&GaussianSpec { spread: 0.0, ..Default::default() }).is_err());
        assert!(gen_two_moons_shift(&MoonsSpec { per_class: 0, ..Default::default() }).is_err());
    }
}
