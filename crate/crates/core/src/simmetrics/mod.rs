//! Image-comparison metrics and the builder that turns metric statistics
//! into candidate confidence-mapping curves.
//!
//! All metrics operate on luma for 3-channel inputs. SSIM, NCC, SCC and
//! UIQ score in [-1, 1] and are rescaled linearly onto [chance, 1];
//! keypoint retention scores in [0, 1] and is rescaled from there.

mod correlation;
mod sift;
mod ssim;

pub use correlation::{ncc, scc, uiq};
pub use sift::{sift_retention, sift_retention_with, SiftParams};
pub use ssim::ssim;

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confidence::InterpolatedTable;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::cell_stream;
use crate::transforms::{apply_ta_transform, TransformKind, TransformSpec, TA_LEVELS};

/// The comparison metrics available to the curve builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Ssim,
    Ncc,
    Scc,
    Uiq,
    SiftRetention,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::Ssim,
        MetricKind::Ncc,
        MetricKind::Scc,
        MetricKind::Uiq,
        MetricKind::SiftRetention,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Ssim => "ssim",
            MetricKind::Ncc => "ncc",
            MetricKind::Scc => "scc",
            MetricKind::Uiq => "uiq",
            MetricKind::SiftRetention => "sift",
        }
    }

    /// Keypoint retention only makes sense for geometric transforms.
    pub fn compatible_with(self, kind: TransformKind) -> bool {
        match self {
            MetricKind::SiftRetention => kind.is_geometric(),
            _ => true,
        }
    }

    /// Scores one (original, transformed) pair.
    pub fn score(self, original: &Image, transformed: &Image, spec: &TransformSpec) -> Result<f64> {
        match self {
            MetricKind::Ssim => ssim(original, transformed),
            MetricKind::Ncc => ncc(original, transformed),
            MetricKind::Scc => scc(original, transformed),
            MetricKind::Uiq => uiq(original, transformed),
            MetricKind::SiftRetention => sift_retention(original, transformed, spec),
        }
    }

    /// Maps a raw score onto [chance, 1].
    pub fn rescale(self, score: f64, chance: f64) -> f64 {
        match self {
            MetricKind::SiftRetention => score + chance * (1.0 - score),
            _ => rescale_to_confidence(score, chance),
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config(format!("unknown metric `{s}`")))
    }
}

/// Linear map from a [-1, 1] score onto [chance, 1]. The endpoints map
/// exactly: -1 to chance, 1 to 1.
pub fn rescale_to_confidence(score: f64, chance: f64) -> f64 {
    let t = (score + 1.0) / 2.0;
    t + chance * (1.0 - t)
}

/// Mean rescaled metric score per magnitude bin for one transform kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingCurve {
    pub kind: TransformKind,
    pub metric: MetricKind,
    /// One `(phi, mean score)` entry per evaluated bin.
    pub points: Vec<(f64, f64)>,
    pub n_pairs: usize,
}

impl MappingCurve {
    /// Converts the curve into a confidence mapping table. Fails when the
    /// curve does not start at `(0, 1.0)`, which happens for transforms
    /// that act even at zero magnitude (equalize, auto-contrast).
    pub fn to_table(&self) -> Result<InterpolatedTable> {
        InterpolatedTable::new(self.points.clone())
    }

    /// Writes the curve in the mapping-table file format.
    pub fn write_table_file(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        writeln!(
            file,
            "# {} curve for {} over {} pairs per bin",
            self.metric, self.kind, self.n_pairs
        )?;
        writeln!(file, "phi,confidence")?;
        for &(phi, score) in &self.points {
            writeln!(file, "{phi},{score}")?;
        }
        Ok(())
    }
}

/// Builds a mapping curve: at each of `bins` magnitude bins, applies the
/// transform to `n_pairs` images drawn from `images` (with replacement),
/// scores each (original, transformed) pair, rescales onto [chance, 1] and
/// averages.
///
/// Work is parallelized across (bin, pair) cells; every cell has its own
/// derived RNG stream and results reduce in index order, so the output is
/// identical whatever the thread count.
pub fn build_curve(
    images: &[Image],
    kind: TransformKind,
    metric: MetricKind,
    bins: usize,
    n_pairs: usize,
    seed: u64,
    chance: f64,
) -> Result<MappingCurve> {
    if images.is_empty() {
        return Err(Error::config("curve builder needs a non-empty sample set"));
    }
    if !kind.is_ta() {
        return Err(Error::config(format!(
            "curve builder supports the TrivialAugment kinds, not `{kind}`"
        )));
    }
    if !metric.compatible_with(kind) {
        return Err(Error::config(format!(
            "metric `{metric}` is incompatible with transform `{kind}`"
        )));
    }
    if !(2..=TA_LEVELS as usize).contains(&bins) {
        return Err(Error::config(format!(
            "bins {bins} outside 2..={}",
            TA_LEVELS
        )));
    }
    if n_pairs == 0 {
        return Err(Error::config("n_pairs must be at least 1"));
    }

    let points: Result<Vec<(f64, f64)>> = (0..bins)
        .into_par_iter()
        .map(|bin| {
            let level =
                ((bin as f64 / (bins - 1) as f64) * (TA_LEVELS - 1) as f64).round() as u8;
            let scores: Result<Vec<f64>> = (0..n_pairs)
                .into_par_iter()
                .map(|pair| {
                    let mut rng = cell_stream(seed, bin as u64, pair as u64);
                    let img = &images[rng.random_range(0..images.len())];
                    let (out, spec) = apply_ta_transform(img, kind, level, &mut rng)?;
                    let raw = metric.score(img, &out, &spec)?;
                    Ok(metric.rescale(raw, chance))
                })
                .collect();
            let scores = scores?;
            // reduce sequentially in index order for bit-stable means
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            Ok((level as f64 / (TA_LEVELS - 1) as f64, mean))
        })
        .collect();

    Ok(MappingCurve {
        kind,
        metric,
        points: points?,
        n_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derived_stream;

    fn sample_images(n: usize) -> Vec<Image> {
        (0..n)
            .map(|i| {
                let mut rng = derived_stream(900, i as u64);
                let data: Vec<u8> = (0..32 * 32 * 3).map(|_| rng.random()).collect();
                Image::new(32, 32, 3, data).unwrap()
            })
            .collect()
    }

    #[test]
    fn rescale_endpoints_and_midpoint() {
        assert_eq!(rescale_to_confidence(1.0, 0.1), 1.0);
        assert_eq!(rescale_to_confidence(-1.0, 0.1), 0.1);
        assert!((rescale_to_confidence(0.0, 0.1) - 0.55).abs() < 1e-15);
        assert_eq!(MetricKind::SiftRetention.rescale(1.0, 0.1), 1.0);
        assert_eq!(MetricKind::SiftRetention.rescale(0.0, 0.1), 0.1);
    }

    #[test]
    fn rescale_is_affine_and_monotone() {
        let chance = 0.25;
        let mut prev = -1.0;
        for i in 0..=20 {
            let score = -1.0 + i as f64 / 10.0;
            let c = rescale_to_confidence(score, chance);
            assert!(c >= prev);
            assert!((chance..=1.0).contains(&c));
            prev = c;
        }
    }

    #[test]
    fn identity_curve_is_constant_one() {
        let images = sample_images(4);
        let curve = build_curve(
            &images,
            TransformKind::Identity,
            MetricKind::Ssim,
            5,
            3,
            42,
            0.1,
        )
        .unwrap();
        assert!(curve.points.iter().all(|&(_, s)| s == 1.0));
        assert!(curve.to_table().is_ok());
    }

    #[test]
    fn curves_are_reproducible_under_a_fixed_seed() {
        let images = sample_images(4);
        let build = || {
            build_curve(
                &images,
                TransformKind::Rotate,
                MetricKind::Ncc,
                5,
                4,
                7,
                0.1,
            )
            .unwrap()
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn incompatible_metric_kind_pairs_are_rejected() {
        let images = sample_images(1);
        let err = build_curve(
            &images,
            TransformKind::Brightness,
            MetricKind::SiftRetention,
            5,
            2,
            1,
            0.1,
        );
        assert!(err.is_err());
        assert!(build_curve(&images, TransformKind::RandomErase, MetricKind::Ssim, 5, 2, 1, 0.1)
            .is_err());
    }

    #[test]
    fn metric_symmetry_on_random_images() {
        let images = sample_images(2);
        let (a, b) = (&images[0], &images[1]);
        assert!((ssim(a, b).unwrap() - ssim(b, a).unwrap()).abs() < 1e-9);
        assert!((ncc(a, b).unwrap() - ncc(b, a).unwrap()).abs() < 1e-9);
        assert!((uiq(a, b).unwrap() - uiq(b, a).unwrap()).abs() < 1e-9);
        assert!((scc(a, b).unwrap() - scc(b, a).unwrap()).abs() < 1e-9);
    }
}
