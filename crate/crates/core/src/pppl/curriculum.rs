//! Pseudo-labels, certainty scores, the inclusion schedule and per-class weighting.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::training::argmax;

/// Row-wise argmax of raw scores, ties to the lowest class index.
pub fn assign_pseudo_labels(scores: &Matrix) -> Result<Vec<usize>> {
    if scores.rows() > 0 && scores.cols() < 2 {
        return Err(Error::Config("pseudo-labeling needs at least two classes".into()));
    }
    if let Some(pos) = scores.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite score in row {}",
            pos / scores.cols()
        )));
    }
    Ok(scores.iter_rows().map(argmax).collect())
}

/// Gap between the largest and second-largest raw score of each row.
pub fn certainty_scores(scores: &Matrix) -> Vec<f64> {
    scores
        .iter_rows()
        .map(|row| {
            let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for &v in row {
                let v = v as f64;
                if v > first {
                    second = first;
                    first = v;
                } else if v > second {
                    second = v;
                }
            }
            if second == f64::NEG_INFINITY {
                0.0
            } else {
                first - second
            }
        })
        .collect()
}

/// Percentage of each pseudo-class admitted at round `round` (1-based):
/// `min(base + step·round, 100)`.
pub fn inclusion_percent(round: usize, base: f64, step: f64) -> f64 {
    (base + step * round as f64).min(100.0)
}

/// Number of samples admitted from a group of `group_size` at `percent`.
///
/// `ceil(percent/100 · size)`, at least one for a nonempty group.
pub fn admitted_count(group_size: usize, percent: f64) -> usize {
    if group_size == 0 {
        return 0;
    }
    // absorb representation error so that e.g. 12% of 1000 is exactly 120
    let exact = percent * group_size as f64 / 100.0;
    let count = libm::ceil(exact - 1e-9).max(1.0) as usize;
    count.min(group_size)
}

/// Weight of certainty rank `rank` in a group admitting `admitted` samples:
/// `1 / (1 + 4·rank / admitted)`.
pub fn rank_weight(rank: usize, admitted: usize) -> f32 {
    (1.0 / (1.0 + 4.0 * rank as f64 / admitted as f64)) as f32
}

/// Indices of `members` ordered from most to least certain; equal certainty
/// keeps index order.
pub(crate) fn rank_by_certainty(members: &mut [usize], certainty: &[f64]) {
    members.sort_by(|&a, &b| certainty[b].total_cmp(&certainty[a]).then(a.cmp(&b)));
}

/// Progressive per-group weights.
///
/// Samples are grouped by pseudo-label (or form one global group when
/// `class_aware` is false). In each group the top `percent`% by certainty get
/// `1/(1 + 4j/L)` for rank `j`; every other sample gets 0.
pub fn calculate_weights(certainty: &[f64], pseudo_labels: &[usize], percent: f64, class_aware: bool) -> Result<Vec<f32>> {
    if certainty.len() != pseudo_labels.len() {
        return Err(Error::Shape(format!(
            "{} certainty scores but {} pseudo-labels",
            certainty.len(),
            pseudo_labels.len()
        )));
    }
    if !(percent > 0.0 && percent <= 100.0) {
        return Err(Error::Config(format!("inclusion percent {percent} not in (0, 100]")));
    }
    let groups: Vec<Vec<usize>> = if class_aware {
        let classes = pseudo_labels.iter().max().map_or(0, |&m| m + 1);
        let mut groups = vec![Vec::new(); classes];
        for (i, &l) in pseudo_labels.iter().enumerate() {
            groups[l].push(i);
        }
        groups
    } else {
        vec![(0..pseudo_labels.len()).collect()]
    };

    let mut weights = vec![0.0f32; certainty.len()];
    for mut group in groups {
        rank_by_certainty(&mut group, certainty);
        let admitted = admitted_count(group.len(), percent);
        for (rank, &i) in group.iter().take(admitted).enumerate() {
            weights[i] = rank_weight(rank, admitted);
        }
    }
    Ok(weights)
}
