//! Soft labels: a composed confidence becomes a smoothed target
//! distribution plus a loss weight.
//!
//! Labels are carried as `(true_class, confidence)` pairs; the dense
//! vector (true class gets the confidence, the remainder spread uniformly
//! over the other classes) is derived on demand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A smoothed training target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftLabel {
    pub class_count: usize,
    pub true_class: usize,
    pub confidence: f64,
    pub loss_weight: f64,
}

impl SoftLabel {
    /// The dense target vector: `confidence` at the true class,
    /// `(1 - confidence) / (class_count - 1)` everywhere else.
    pub fn dense(&self) -> Vec<f64> {
        let off = (1.0 - self.confidence) / (self.class_count - 1) as f64;
        let mut v = vec![off; self.class_count];
        v[self.true_class] = self.confidence;
        v
    }

    /// Random-guessing accuracy for this label's class count.
    pub fn chance(&self) -> f64 {
        1.0 / self.class_count as f64
    }
}

/// Builds a soft label with unit loss weight.
///
/// Confidence below chance is permitted (the dense vector remains a valid
/// distribution, its argmax just moves off the true class) but logged,
/// since it usually means a composed product undercut the chance floor.
pub fn soft_target(true_class: usize, class_count: usize, confidence: f64) -> Result<SoftLabel> {
    if class_count < 2 {
        return Err(Error::contract(format!(
            "class count {class_count} must be at least 2"
        )));
    }
    if true_class >= class_count {
        return Err(Error::contract(format!(
            "class index {true_class} out of range for {class_count} classes"
        )));
    }
    if !(0.0..=1.0).contains(&confidence) {
        return Err(Error::contract(format!(
            "confidence {confidence} outside [0, 1]"
        )));
    }
    if confidence < 1.0 / class_count as f64 {
        log::debug!("confidence {confidence} below chance 1/{class_count}");
    }
    Ok(SoftLabel {
        class_count,
        true_class,
        confidence,
        loss_weight: 1.0,
    })
}

/// The loss weight for a sample: the reduced confidence when reweighting
/// is enabled, 1 otherwise.
pub fn loss_weight(confidence: f64, reweight_enabled: bool) -> f64 {
    if reweight_enabled {
        confidence
    } else {
        1.0
    }
}

/// Classic fixed label smoothing: redistributes mass `alpha` uniformly
/// over the non-target classes. Identical to `soft_target` with
/// confidence `1 - alpha`.
pub fn fixed_label_smoothing(
    true_class: usize,
    class_count: usize,
    alpha: f64,
) -> Result<SoftLabel> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::contract(format!("alpha {alpha} outside [0, 1)")));
    }
    soft_target(true_class, class_count, 1.0 - alpha)
}
