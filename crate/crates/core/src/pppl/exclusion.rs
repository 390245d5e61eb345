use alloc::format;
use alloc::vec::Vec;

use super::curriculum::rank_by_certainty;
use crate::error::{Error, Result};
use crate::proportions::ClassProportions;

/// Included-sample cap for a class of proportion `p` out of `total` target samples.
pub fn class_cap(p: f64, total: usize) -> usize {
    libm::floor(p * total as f64 + 1e-9) as usize
}

/// Caps each pseudo-class at `floor(cp_c · total)` included samples.
///
/// Classes over their cap lose their least certain included samples first
/// (among equal certainty, the later index goes first). Classes at or under
/// their cap are left alone; nothing is ever added.
pub fn exclude_by_proportion(
    pseudo_labels: &[usize],
    certainty: &[f64],
    included: &[bool],
    cp: &ClassProportions,
    total: usize,
) -> Result<Vec<bool>> {
    if pseudo_labels.len() != certainty.len() || pseudo_labels.len() != included.len() {
        return Err(Error::Shape(format!(
            "{} labels, {} certainty scores, {} mask entries",
            pseudo_labels.len(),
            certainty.len(),
            included.len()
        )));
    }
    if let Some(&bad) = pseudo_labels.iter().find(|&&l| l >= cp.len()) {
        return Err(Error::Shape(format!(
            "pseudo-label {bad} outside the {} proportions",
            cp.len()
        )));
    }
    let mut members: Vec<Vec<usize>> = alloc::vec![Vec::new(); cp.len()];
    for (i, (&l, &inc)) in pseudo_labels.iter().zip(included).enumerate() {
        if inc {
            members[l].push(i);
        }
    }
    let mut mask = included.to_vec();
    for (class, mut group) in members.into_iter().enumerate() {
        let cap = class_cap(cp.values()[class], total);
        if group.len() <= cap {
            continue;
        }
        rank_by_certainty(&mut group, certainty);
        for &i in &group[cap..] {
            mask[i] = false;
        }
    }
    Ok(mask)
}
