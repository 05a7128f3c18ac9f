//! Coefficient-free pattern recognition over inverted posting lists.
//!
//! A class is a stored integer pattern. For each dimension and feature value
//! the index keeps the list of classes having that value (an *inverse
//! pattern*). Classification counts, per class, how many dimensions of the
//! query fall within the generalization radius of the class; learning is the
//! insertion of a new class whenever nothing matches in every dimension.
//!
//! - [`index`]: numeric and categorical models, histogram voting, training.
//! - [`predictor`]: parameter prediction by histogram accumulation.
//! - [`levels`]: stacking levels through thresholded class histograms.
//! - [`vision`]: pixel-class segmentation and object detection.
//! - [`io`]: tables, Netpbm images, model files.
//! - [`bench`]: latency scaling against posting-list height.
//!
//! ```
//! use invpat::{FeatureVector, Model};
//!
//! let mut model = Model::new(3, 256, 8)?;
//! model.train_step(&FeatureVector::from([30, 60, 170]))?;
//! model.train_step(&FeatureVector::from([165, 160, 150]))?;
//!
//! let h = model.classify(&FeatureVector::from([35, 58, 175]))?;
//! assert_eq!(h.argmax(), Some(1));
//! assert!(model.is_full_match(&h));
//! # Ok::<(), invpat::Error>(())
//! ```

pub mod bench;
pub mod cmapss;
pub mod error;
pub mod index;
pub mod io;
pub mod levels;
pub mod predictor;
pub mod synth;
pub mod vision;

pub use error::{Error, Result};
pub use index::{BitPattern, CategoricalModel, ClassHistogram, ClassId, FeatureVector, Model};
pub use levels::{LabelTable, Level, LevelStack};
pub use predictor::{ParamHistogram, ParamIndex};

/// Radius given as a percentage of the feature range, rounded to the nearest integer.
pub fn radius_from_percent(percent: f64, range: u32) -> u32 {
    (percent / 100.0 * range as f64).round().max(0.0) as u32
}
