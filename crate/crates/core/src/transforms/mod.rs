//! Pure, deterministic pixel-level transforms.
//!
//! Every operation takes an explicit RNG stream, returns a fresh image of
//! the input's shape, and reports a [`TransformSpec`] describing what was
//! actually done together with its normalized magnitude `phi` in `[0, 1]`.
//! For symmetric transforms (rotation sign, enhancement up vs. down) the
//! magnitude ignores the randomly drawn direction.

mod crop;
mod enhance;
mod erase;
mod geometry;
mod noise;

pub use crop::{random_crop, random_crop_at};
pub use enhance::{
    autocontrast, brightness, color, contrast, equalize, posterize, sharpness, solarize,
};
pub use erase::random_erase;
pub use geometry::{flip_horizontal, rotate, shear_x, shear_y, translate_x, translate_y};
pub use noise::{gaussian_noise, patch_gaussian, patch_gaussian_at};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::RngStream;

/// Fill value for regions a geometric transform exposes (mid-gray).
pub const GEOMETRIC_FILL: u8 = 128;

/// Number of discrete magnitude bins used by the TrivialAugment policy.
pub const TA_LEVELS: u8 = 31;

/// Every transformation kind known to the engine. The first 14 entries are
/// exactly the TrivialAugment set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    Rotate,
    ShearX,
    ShearY,
    TranslateX,
    TranslateY,
    Brightness,
    Contrast,
    Sharpness,
    Color,
    Posterize,
    Solarize,
    Equalize,
    AutoContrast,
    Identity,
    RandomErase,
    RandomCrop,
    GaussianNoise,
    PatchGaussianNoise,
    HorizontalFlip,
}

impl TransformKind {
    /// The 14 TrivialAugment kinds, in table order.
    pub const TA_KINDS: [TransformKind; 14] = [
        TransformKind::Rotate,
        TransformKind::ShearX,
        TransformKind::ShearY,
        TransformKind::TranslateX,
        TransformKind::TranslateY,
        TransformKind::Brightness,
        TransformKind::Contrast,
        TransformKind::Sharpness,
        TransformKind::Color,
        TransformKind::Posterize,
        TransformKind::Solarize,
        TransformKind::Equalize,
        TransformKind::AutoContrast,
        TransformKind::Identity,
    ];

    /// All kinds, TrivialAugment set first.
    pub const ALL: [TransformKind; 19] = [
        TransformKind::Rotate,
        TransformKind::ShearX,
        TransformKind::ShearY,
        TransformKind::TranslateX,
        TransformKind::TranslateY,
        TransformKind::Brightness,
        TransformKind::Contrast,
        TransformKind::Sharpness,
        TransformKind::Color,
        TransformKind::Posterize,
        TransformKind::Solarize,
        TransformKind::Equalize,
        TransformKind::AutoContrast,
        TransformKind::Identity,
        TransformKind::RandomErase,
        TransformKind::RandomCrop,
        TransformKind::GaussianNoise,
        TransformKind::PatchGaussianNoise,
        TransformKind::HorizontalFlip,
    ];

    pub fn is_ta(self) -> bool {
        Self::TA_KINDS.contains(&self)
    }

    /// Kinds that move pixel positions rather than remap values; the ones
    /// keypoint-retention metrics are meaningful for.
    pub fn is_geometric(self) -> bool {
        matches!(
            self,
            TransformKind::Rotate
                | TransformKind::ShearX
                | TransformKind::ShearY
                | TransformKind::TranslateX
                | TransformKind::TranslateY
                | TransformKind::Identity
        )
    }

    /// TrivialAugment kinds with a variable magnitude (all but Equalize,
    /// AutoContrast and Identity).
    pub fn has_variable_magnitude(self) -> bool {
        self.is_ta()
            && !matches!(
                self,
                TransformKind::Equalize | TransformKind::AutoContrast | TransformKind::Identity
            )
    }

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::Rotate => "rotate",
            TransformKind::ShearX => "shear-x",
            TransformKind::ShearY => "shear-y",
            TransformKind::TranslateX => "translate-x",
            TransformKind::TranslateY => "translate-y",
            TransformKind::Brightness => "brightness",
            TransformKind::Contrast => "contrast",
            TransformKind::Sharpness => "sharpness",
            TransformKind::Color => "color",
            TransformKind::Posterize => "posterize",
            TransformKind::Solarize => "solarize",
            TransformKind::Equalize => "equalize",
            TransformKind::AutoContrast => "auto-contrast",
            TransformKind::Identity => "identity",
            TransformKind::RandomErase => "random-erase",
            TransformKind::RandomCrop => "random-crop",
            TransformKind::GaussianNoise => "gaussian-noise",
            TransformKind::PatchGaussianNoise => "patch-gaussian-noise",
            TransformKind::HorizontalFlip => "horizontal-flip",
        }
    }
}

impl std::fmt::Display for TransformKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TransformKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown transform kind `{s}`")))
    }
}

/// Realized, kind-specific parameters of an applied transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum TransformParams {
    /// Parameter-free kinds (Identity, Equalize, AutoContrast) and
    /// probabilistic stages that fired as no-ops.
    None,
    Rotate {
        degrees: f64,
    },
    Shear {
        factor: f64,
    },
    Translate {
        pixels: i32,
    },
    /// Enhancement blend factor; 1.0 is the identity.
    Enhance {
        factor: f64,
    },
    Posterize {
        bits: u8,
    },
    Solarize {
        threshold: f64,
    },
    Erase {
        x: u32,
        y: u32,
        width: u32,
        height: u32,
    },
    Crop {
        padding: u32,
        offset_x: u32,
        offset_y: u32,
    },
    Noise {
        sigma: f64,
        scale: f64,
        area_fraction: f64,
    },
    Flip {
        applied: bool,
    },
}

/// What a transform actually did: the kind, the normalized magnitude
/// `phi` in `[0, 1]`, and the realized parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub kind: TransformKind,
    pub phi: f64,
    pub params: TransformParams,
}

impl TransformSpec {
    pub fn new(kind: TransformKind, phi: f64, params: TransformParams) -> Self {
        Self { kind, phi, params }
    }

    fn identity(kind: TransformKind) -> Self {
        Self::new(kind, 0.0, TransformParams::None)
    }

    /// Re-derives `phi` from the realized parameters where the mapping is
    /// continuous and invertible. Returns `None` for parameter-free kinds
    /// and for integer-quantized parameters (translate pixels, posterize
    /// bits), whose consistency is checked forward via
    /// [`TransformSpec::params_consistent`].
    pub fn phi_from_params(&self, ranges: &TaRanges, width: u32, height: u32) -> Option<f64> {
        match self.params {
            TransformParams::Rotate { degrees } => Some(degrees.abs() / ranges.rotate_max_degrees),
            TransformParams::Shear { factor } => Some(factor.abs() / ranges.shear_max_factor),
            TransformParams::Enhance { factor } => {
                Some((factor - 1.0).abs() / ranges.enhance_max_delta)
            }
            TransformParams::Solarize { threshold } => Some(1.0 - threshold / 255.0),
            TransformParams::Erase {
                width: w,
                height: h,
                ..
            } => Some(w as f64 * h as f64 / (width as f64 * height as f64)),
            TransformParams::Crop {
                padding,
                offset_x,
                offset_y,
            } => Some(crop::occluded_fraction(
                width, height, padding, offset_x, offset_y,
            )),
            TransformParams::Noise {
                sigma,
                scale,
                area_fraction,
            } => Some(sigma * scale * area_fraction),
            TransformParams::Flip { .. } | TransformParams::None => None,
            TransformParams::Translate { .. } | TransformParams::Posterize { .. } => None,
        }
    }

    /// Checks that the realized parameters agree with `phi` under the given
    /// range table: inverse re-derivation within 1e-9 where continuous,
    /// forward re-derivation for quantized parameters.
    pub fn params_consistent(&self, ranges: &TaRanges, width: u32, height: u32) -> bool {
        match self.params {
            TransformParams::Translate { pixels } => {
                let dim = match self.kind {
                    TransformKind::TranslateX => width,
                    _ => height,
                };
                let expected =
                    (self.phi * ranges.translate_max_fraction * dim as f64).round() as i32;
                pixels.abs() == expected
            }
            TransformParams::Posterize { bits } => {
                let drop = (self.phi * (8 - ranges.posterize_min_bits) as f64).round() as u8;
                bits == 8 - drop
            }
            TransformParams::None | TransformParams::Flip { .. } => self.phi == 0.0,
            _ => match self.phi_from_params(ranges, width, height) {
                Some(rederived) => (rederived - self.phi).abs() <= 1e-9,
                None => false,
            },
        }
    }
}

/// Magnitude ranges of the TrivialAugment transform space. The defaults are
/// the wide space (rotation up to ±135°, shear ±0.99, translation ±50% of
/// the dimension, enhancement factors 1±0.99, posterize down to 2 bits);
/// narrower spaces can be swapped in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaRanges {
    pub rotate_max_degrees: f64,
    pub shear_max_factor: f64,
    pub translate_max_fraction: f64,
    pub enhance_max_delta: f64,
    pub posterize_min_bits: u8,
}

impl Default for TaRanges {
    fn default() -> Self {
        Self {
            rotate_max_degrees: 135.0,
            shear_max_factor: 0.99,
            translate_max_fraction: 0.5,
            enhance_max_delta: 0.99,
            posterize_min_bits: 2,
        }
    }
}

/// Applies one TrivialAugment transform at the given magnitude bin using
/// the default (wide) range table. See [`apply_ta_transform_with`].
pub fn apply_ta_transform(
    img: &Image,
    kind: TransformKind,
    level: u8,
    rng: &mut RngStream,
) -> Result<(Image, TransformSpec)> {
    apply_ta_transform_with(img, kind, level, &TaRanges::default(), rng)
}

/// Applies one TrivialAugment transform at magnitude bin `level` (0..=30).
///
/// `phi = level / 30` for magnitude-variable kinds and 0 for Equalize,
/// AutoContrast and Identity. Where the parameter range is symmetric the
/// direction is drawn uniformly from `rng`; the sign does not affect `phi`.
/// Zero magnitude is the exact identity for every kind.
pub fn apply_ta_transform_with(
    img: &Image,
    kind: TransformKind,
    level: u8,
    ranges: &TaRanges,
    rng: &mut RngStream,
) -> Result<(Image, TransformSpec)> {
    if !kind.is_ta() {
        return Err(Error::contract(format!(
            "{kind} is not a TrivialAugment transform"
        )));
    }
    if level >= TA_LEVELS {
        return Err(Error::contract(format!(
            "magnitude level {level} out of range 0..={}",
            TA_LEVELS - 1
        )));
    }
    let phi = level as f64 / (TA_LEVELS - 1) as f64;

    let (out, spec) = match kind {
        TransformKind::Identity => (img.clone(), TransformSpec::identity(kind)),
        TransformKind::Equalize => (equalize(img), TransformSpec::identity(kind)),
        TransformKind::AutoContrast => (autocontrast(img), TransformSpec::identity(kind)),
        TransformKind::Rotate => {
            let degrees = draw_sign(rng) * phi * ranges.rotate_max_degrees;
            (
                rotate(img, degrees),
                TransformSpec::new(kind, phi, TransformParams::Rotate { degrees }),
            )
        }
        TransformKind::ShearX | TransformKind::ShearY => {
            let factor = draw_sign(rng) * phi * ranges.shear_max_factor;
            let out = if kind == TransformKind::ShearX {
                shear_x(img, factor)
            } else {
                shear_y(img, factor)
            };
            (
                out,
                TransformSpec::new(kind, phi, TransformParams::Shear { factor }),
            )
        }
        TransformKind::TranslateX | TransformKind::TranslateY => {
            let dim = if kind == TransformKind::TranslateX {
                img.width()
            } else {
                img.height()
            };
            let magnitude = (phi * ranges.translate_max_fraction * dim as f64).round() as i32;
            let pixels = if draw_sign(rng) < 0.0 {
                -magnitude
            } else {
                magnitude
            };
            let out = if kind == TransformKind::TranslateX {
                translate_x(img, pixels)
            } else {
                translate_y(img, pixels)
            };
            (
                out,
                TransformSpec::new(kind, phi, TransformParams::Translate { pixels }),
            )
        }
        TransformKind::Brightness
        | TransformKind::Contrast
        | TransformKind::Sharpness
        | TransformKind::Color => {
            let factor = 1.0 + draw_sign(rng) * phi * ranges.enhance_max_delta;
            let out = match kind {
                TransformKind::Brightness => brightness(img, factor),
                TransformKind::Contrast => contrast(img, factor),
                TransformKind::Sharpness => sharpness(img, factor),
                _ => color(img, factor),
            };
            (
                out,
                TransformSpec::new(kind, phi, TransformParams::Enhance { factor }),
            )
        }
        TransformKind::Posterize => {
            let bits = 8 - (phi * (8 - ranges.posterize_min_bits) as f64).round() as u8;
            (
                posterize(img, bits),
                TransformSpec::new(kind, phi, TransformParams::Posterize { bits }),
            )
        }
        TransformKind::Solarize => {
            let threshold = 255.0 * (1.0 - phi);
            (
                solarize(img, threshold, phi),
                TransformSpec::new(kind, phi, TransformParams::Solarize { threshold }),
            )
        }
        _ => unreachable!("non-TA kinds rejected above"),
    };
    Ok((out, spec))
}

fn draw_sign(rng: &mut RngStream) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Mirrors columns with probability `prob`. `phi` is always 0: flips never
/// reduce label confidence.
pub fn horizontal_flip(
    img: &Image,
    rng: &mut RngStream,
    prob: f64,
) -> Result<(Image, TransformSpec)> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::contract(format!(
            "flip probability {prob} outside [0, 1]"
        )));
    }
    let applied = rng.random::<f64>() < prob;
    let out = if applied {
        flip_horizontal(img)
    } else {
        img.clone()
    };
    Ok((
        out,
        TransformSpec::new(
            TransformKind::HorizontalFlip,
            0.0,
            TransformParams::Flip { applied },
        ),
    ))
}
