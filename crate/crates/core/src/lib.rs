//! Deterministic soft-augmentation engine for image classifiers.
//!
//! Aggressive image transforms (the TrivialAugment set, random erasing,
//! random cropping, noise injections) are paired with adaptive label
//! smoothing: every transform reports a normalized magnitude in [0, 1],
//! a pluggable mapping turns that magnitude into a reduced label
//! confidence, and the confidences of all soft stages multiply into the
//! final target. The crate also ships the image-similarity machinery used
//! to derive mapping curves from data, and an evaluator for
//! corruption-robustness prediction files.
//!
//! Everything is reproducible: all randomness flows through counter-based
//! streams derived from a global seed, so results are identical across
//! runs, thread counts and stage-list edits.

pub mod confidence;
pub mod datasets;
pub mod error;
pub mod image;
pub mod labels;
pub mod pipeline;
pub mod rng;
pub mod simmetrics;
pub mod transforms;

pub use error::{Error, Result};
pub use image::Image;
