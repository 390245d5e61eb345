//! Class-proportion vectors, their L1 distance, and controlled perturbation.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-9;

/// Where a proportion vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProportionKind {
    True,
    Guessed,
    Source,
    Perturbed,
}

/// A point on the probability simplex, one entry per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProportions {
    values: Vec<f64>,
    kind: ProportionKind,
}

impl ClassProportions {
    pub fn new(values: Vec<f64>, kind: ProportionKind) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("class proportions are empty".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("class proportions must be finite and nonnegative".into()));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Config(format!("class proportions sum to {sum}, not 1")));
        }
        Ok(Self { values, kind })
    }

    pub fn uniform(classes: usize) -> Result<Self> {
        if classes == 0 {
            return Err(Error::Config("class proportions are empty".into()));
        }
        Self::new(alloc::vec![1.0 / classes as f64; classes], ProportionKind::Guessed)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> ProportionKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_kind(mut self, kind: ProportionKind) -> Self {
        self.kind = kind;
        self
    }
}

/// `Σ |a_i − b_i|`.
pub fn proportion_distance(a: &ClassProportions, b: &ClassProportions) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("{} vs {} classes", a.len(), b.len())));
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum())
}

/// How the error level of [`perturb_proportions`] is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbMode {
    /// Relative error on one anomalous class: `|ĉ_a − c_a| = E·c_a`.
    Anomaly { anomalous_class: usize },
    /// Total L1 error over all classes: `Σ|ĉ_i − c_i| = E`.
    Multiclass,
}

/// Direction of an anomaly-class perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

/// Perturbs `cp` by error level `error` according to `mode`, drawing any
/// random choices from `rng`.
pub fn perturb_proportions<R: Rng + ?Sized>(
    cp: &ClassProportions,
    error: f64,
    mode: PerturbMode,
    rng: &mut R,
) -> Result<ClassProportions> {
    if !(error >= 0.0) || !error.is_finite() {
        return Err(Error::Config(format!("error level {error} must be finite and >= 0")));
    }
    if error == 0.0 {
        return Ok(cp.clone().with_kind(ProportionKind::Perturbed));
    }
    match mode {
        PerturbMode::Anomaly { anomalous_class } => {
            let preferred = if rng.random_bool(0.5) { Direction::Up } else { Direction::Down };
            let other = match preferred {
                Direction::Up => Direction::Down,
                Direction::Down => Direction::Up,
            };
            perturb_anomaly(cp, anomalous_class, error, preferred)
                .or_else(|_| perturb_anomaly(cp, anomalous_class, error, other))
        }
        PerturbMode::Multiclass => perturb_multiclass(cp, error, rng),
    }
}

/// Scales the anomalous class by `1 ± error`; the remaining classes absorb the
/// difference in proportion to their mass.
pub fn perturb_anomaly(
    cp: &ClassProportions,
    anomalous_class: usize,
    error: f64,
    direction: Direction,
) -> Result<ClassProportions> {
    let m = cp.len();
    if anomalous_class >= m || m < 2 {
        return Err(Error::Config(format!(
            "anomalous class {anomalous_class} invalid for {m} classes"
        )));
    }
    let a = cp.values[anomalous_class];
    let target = match direction {
        Direction::Up => a * (1.0 + error),
        Direction::Down => a * (1.0 - error),
    };
    let rest = 1.0 - a;
    if target < 0.0 || target > 1.0 || (target > a && rest <= 0.0) {
        return Err(Error::Config(format!(
            "error {error} pushes class {anomalous_class} proportion off the simplex"
        )));
    }
    let delta = target - a;
    let mut values = cp.values.clone();
    values[anomalous_class] = target;
    if rest > 0.0 {
        for (i, v) in values.iter_mut().enumerate() {
            if i != anomalous_class {
                *v -= delta * (cp.values[i] / rest);
                *v = v.max(0.0);
            }
        }
    } else {
        // all mass sat on the anomalous class and it shrank: spread evenly
        for (i, v) in values.iter_mut().enumerate() {
            if i != anomalous_class {
                *v = -delta / (m - 1) as f64;
            }
        }
    }
    ClassProportions::new(values, ProportionKind::Perturbed)
}

/// Moves `error / 2` of mass from a random donor set to a random receiver set.
///
/// Donor removals are capped at each donor's mass, so the result stays on the
/// simplex and sits at L1 distance exactly `error` without rejection sampling.
fn perturb_multiclass<R: Rng + ?Sized>(cp: &ClassProportions, error: f64, rng: &mut R) -> Result<ClassProportions> {
    let m = cp.len();
    let half = error / 2.0;
    let min_class = (0..m)
        .min_by(|&i, &j| cp.values[i].total_cmp(&cp.values[j]))
        .expect("nonempty");
    if m < 2 || half > 1.0 - cp.values[min_class] + SIMPLEX_TOL {
        return Err(Error::Config(format!(
            "error {error} cannot be realized on the simplex from this proportion vector"
        )));
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let mut receivers = rng.random_range(1..m);
    let donor_mass = |r: usize| order[r..].iter().map(|&i| cp.values[i]).sum::<f64>();
    while receivers > 1 && donor_mass(receivers) < half {
        receivers -= 1;
    }
    if donor_mass(receivers) < half {
        // the lightest class alone receives; everything else donates
        order.retain(|&i| i != min_class);
        order.insert(0, min_class);
        receivers = 1;
    }
    let (recv, donors) = order.split_at(receivers);

    let removal = capped_split(donors.iter().map(|&i| cp.values[i]).collect(), half, rng);
    let addition = capped_split(alloc::vec![f64::INFINITY; recv.len()], half, rng);
    let mut values = cp.values.clone();
    for (&i, r) in donors.iter().zip(removal) {
        values[i] = (values[i] - r).max(0.0);
    }
    for (&i, a) in recv.iter().zip(addition) {
        values[i] += a;
    }
    ClassProportions::new(values, ProportionKind::Perturbed)
}

/// Splits `total` into random shares with share `i` at most `caps[i]`
/// (water-filling over random weights). Requires `Σ caps ≥ total`.
fn capped_split<R: Rng + ?Sized>(caps: Vec<f64>, total: f64, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = caps.iter().map(|_| rng.random_range(0.05..1.0)).collect();
    let mut shares = alloc::vec![0.0; caps.len()];
    let mut open: Vec<usize> = (0..caps.len()).collect();
    let mut remaining = total;
    while remaining > 0.0 && !open.is_empty() {
        let weight: f64 = open.iter().map(|&i| raw[i]).sum();
        let mut saturated = Vec::new();
        for &i in &open {
            let want = remaining * raw[i] / weight;
            if shares[i] + want >= caps[i] {
                saturated.push(i);
            }
        }
        if saturated.is_empty() {
            for &i in &open {
                shares[i] += remaining * raw[i] / weight;
            }
            break;
        }
        for &i in &saturated {
            remaining -= caps[i] - shares[i];
            shares[i] = caps[i];
        }
        open.retain(|i| !saturated.contains(i));
        remaining = remaining.max(0.0);
    }
    shares
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cp(v: &[f64]) -> ClassProportions {
        ClassProportions::new(v.to_vec(), ProportionKind::True).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(proportion_distance(&cp(&[0.3, 0.7]), &cp(&[0.3, 0.7])).unwrap(), 0.0);
        assert_eq!(proportion_distance(&cp(&[1.0, 0.0]), &cp(&[0.0, 1.0])).unwrap(), 2.0);
        assert_abs_diff_eq!(
            proportion_distance(&cp(&[0.6, 0.4]), &cp(&[0.5, 0.5])).unwrap(),
            0.2,
            epsilon = 1e-12
        );
        assert!(proportion_distance(&cp(&[1.0]), &cp(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn zero_error_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let base = cp(&[0.2, 0.5, 0.3]);
        for mode in [PerturbMode::Multiclass, PerturbMode::Anomaly { anomalous_class: 0 }] {
            assert_eq!(perturb_proportions(&base, 0.0, mode, &mut rng).unwrap().values(), base.values());
        }
    }

    #[test]
    fn anomaly_example() {
        let p = perturb_anomaly(&cp(&[0.98, 0.02]), 1, 0.3, Direction::Up).unwrap();
        assert_abs_diff_eq!(p.values()[0], 0.974, epsilon = 1e-12);
        assert_abs_diff_eq!(p.values()[1], 0.026, epsilon = 1e-12);
        let p = perturb_anomaly(&cp(&[0.98, 0.02]), 1, 0.3, Direction::Down).unwrap();
        assert_abs_diff_eq!(p.values()[1], 0.014, epsilon = 1e-12);
    }

    #[test]
    fn multiclass_example() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let base = cp(&[0.5, 0.5]);
        let p = perturb_proportions(&base, 0.2, PerturbMode::Multiclass, &mut rng).unwrap();
        assert_abs_diff_eq!(proportion_distance(&p, &base).unwrap(), 0.2, epsilon = 1e-12);
        assert!((p.values()[0] - 0.6).abs() < 1e-12 || (p.values()[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn infeasible_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // the most distant simplex point from [0.5, 0.5] is at L1 distance 1
        assert!(perturb_proportions(&cp(&[0.5, 0.5]), 1.5, PerturbMode::Multiclass, &mut rng).is_err());
        assert!(perturb_anomaly(&cp(&[0.2, 0.8]), 1, 0.5, Direction::Up).is_err());
        assert!(perturb_proportions(&cp(&[0.5, 0.5]), -0.1, PerturbMode::Multiclass, &mut rng).is_err());
        assert!(perturb_proportions(&cp(&[0.6, 0.4]), 2.5, PerturbMode::Anomaly { anomalous_class: 1 }, &mut rng).is_err());
    }

    #[test]
    fn anomaly_falls_back_to_feasible_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let base = cp(&[0.2, 0.8]);
        for _ in 0..20 {
            let p = perturb_proportions(&base, 0.5, PerturbMode::Anomaly { anomalous_class: 1 }, &mut rng).unwrap();
            assert_abs_diff_eq!(p.values()[1], 0.4, epsilon = 1e-12);
        }
    }

    #[test]
    fn simplex_validation() {
        assert!(ClassProportions::new(alloc::vec![0.5, 0.6], ProportionKind::True).is_err());
        assert!(ClassProportions::new(alloc::vec![-0.1, 1.1], ProportionKind::True).is_err());
        assert!(ClassProportions::new(alloc::vec![], ProportionKind::True).is_err());
        assert_eq!(ClassProportions::uniform(4).unwrap().values(), &[0.25; 4]);
    }
}
