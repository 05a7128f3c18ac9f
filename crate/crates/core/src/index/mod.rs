//! Inverse-pattern classification.
//!
//! Training is index insertion only: a pattern that no stored class matches
//! becomes a new class and its id is appended to the posting list of each of
//! its feature values. Classification walks those lists and counts votes.

mod categorical;
mod histogram;
mod model;

pub use categorical::{BitPattern, CategoricalModel};
pub use histogram::ClassHistogram;
pub use model::{AverageHeight, FeatureVector, Model};

/// Dense class id, assigned 1, 2, … in creation order.
pub type ClassId = u32;
