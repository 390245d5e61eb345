//! Proportional progressive pseudo-labeling (PPPL) for unsupervised domain adaptation.
//!
//! A classifier pretrained on a labeled source domain is retrained on its own
//! pseudo-labels for an unlabeled target domain. Target samples enter training
//! progressively, most certain first, with rank-decaying weights, and classes
//! that are predicted more often than their expected proportion are trimmed.
//!
//! This crate is `no_std` (it needs `alloc`). File formats, configuration and
//! the command line live in the `pppl-cli` crate.
//!
//! - [`nn`]: feed-forward network, weighted MSE / cross-entropy, momentum SGD
//! - [`pppl`]: certainty scores, weighting, exclusion and the adaptation loop
//! - [`data`]: synthetic shift tasks and series preprocessing
//! - [`metrics`], [`diagnostics`]: evaluation and the pseudo-label studies
#![no_std]

extern crate alloc;

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod gradcheck;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod pppl;
pub mod proportions;
pub mod training;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use nn::{Batch, LossKind, Model, Sgd};
pub use proportions::{proportion_distance, ClassProportions, ProportionKind};
