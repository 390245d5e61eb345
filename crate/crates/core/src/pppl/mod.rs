//! Proportional progressive pseudo-labeling.
//!
//! Each round scores the target set, pseudo-labels it by argmax, ranks every
//! pseudo-class by certainty, admits a growing top share of each class with
//! rank-decaying weights, trims classes that exceed their expected proportion,
//! and trains on the admitted samples mixed with labeled source samples.

mod adapt;
mod curriculum;
mod exclusion;

pub use adapt::{
    adapt, adapt_observed, pretrain_source, select_source, Ablation, AdaptConfig, AdaptReport, IterationRecord,
    RoundView, SourceMix,
};
pub use curriculum::{
    admitted_count, assign_pseudo_labels, calculate_weights, certainty_scores, inclusion_percent, rank_weight,
};
pub use exclusion::{class_cap, exclude_by_proportion};
