//! Noise injections: full-image gaussian noise and Patch Gaussian.
//!
//! Noise is added on the [0, 1] normalized pixel scale, clamped, and
//! re-quantized to 8 bits. The magnitude is the product of the gaussian
//! standard deviation, the scaling factor, and the relative area affected.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{TransformKind, TransformParams, TransformSpec};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::RngStream;

fn validate(sigma: f64, scale: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::contract(format!(
            "noise sigma {sigma} must lie in (0, 1] on the normalized pixel scale"
        )));
    }
    if !(0.0..=1.0).contains(&scale) {
        return Err(Error::contract(format!(
            "noise scale {scale} outside [0, 1]"
        )));
    }
    Ok(())
}

fn add_noise_region(
    img: &Image,
    rng: &mut RngStream,
    effective_sigma: f64,
    x_lo: u32,
    x_hi: u32,
    y_lo: u32,
    y_hi: u32,
) -> Image {
    let mut out = img.clone();
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            for c in 0..img.channels() {
                let z: f64 = rng.sample(StandardNormal);
                let v = img.get(x, y, c) as f64 / 255.0 + effective_sigma * z;
                out.set(x, y, c, (v.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    out
}

/// Adds gaussian noise with standard deviation `sigma * scale` to every
/// pixel. `phi = sigma * scale` (relative area 1). `scale = 0` is the
/// exact identity.
pub fn gaussian_noise(
    img: &Image,
    rng: &mut RngStream,
    sigma: f64,
    scale: f64,
) -> Result<(Image, TransformSpec)> {
    validate(sigma, scale)?;
    let spec = TransformSpec::new(
        TransformKind::GaussianNoise,
        sigma * scale * 1.0,
        TransformParams::Noise {
            sigma,
            scale,
            area_fraction: 1.0,
        },
    );
    let out = if scale == 0.0 {
        img.clone()
    } else {
        add_noise_region(
            img,
            rng,
            sigma * scale,
            0,
            img.width() - 1,
            0,
            img.height() - 1,
        )
    };
    Ok((out, spec))
}

/// Adds gaussian noise inside a square patch of side `patch_side` centered
/// at a uniformly random pixel; the patch is clipped at the borders.
/// `phi = sigma * scale * (clipped patch pixels / total pixels)`.
pub fn patch_gaussian(
    img: &Image,
    rng: &mut RngStream,
    sigma: f64,
    scale: f64,
    patch_side: u32,
) -> Result<(Image, TransformSpec)> {
    let cx = rng.random_range(0..img.width());
    let cy = rng.random_range(0..img.height());
    patch_gaussian_at(img, rng, sigma, scale, patch_side, cx, cy)
}

/// [`patch_gaussian`] with an explicit patch center, for deterministic use.
pub fn patch_gaussian_at(
    img: &Image,
    rng: &mut RngStream,
    sigma: f64,
    scale: f64,
    patch_side: u32,
    cx: u32,
    cy: u32,
) -> Result<(Image, TransformSpec)> {
    validate(sigma, scale)?;
    if patch_side == 0 {
        return Err(Error::contract("patch side must be at least 1"));
    }
    if cx >= img.width() || cy >= img.height() {
        return Err(Error::contract(format!(
            "patch center ({cx}, {cy}) outside {}x{} image",
            img.width(),
            img.height()
        )));
    }

    // A patch of side s centered at c spans c - (s-1)/2 ..= c + s/2.
    let x_lo = cx.saturating_sub((patch_side - 1) / 2);
    let y_lo = cy.saturating_sub((patch_side - 1) / 2);
    let x_hi = (cx + patch_side / 2).min(img.width() - 1);
    let y_hi = (cy + patch_side / 2).min(img.height() - 1);
    let affected = (x_hi - x_lo + 1) as f64 * (y_hi - y_lo + 1) as f64;
    let area_fraction = affected / (img.width() as f64 * img.height() as f64);

    let spec = TransformSpec::new(
        TransformKind::PatchGaussianNoise,
        sigma * scale * area_fraction,
        TransformParams::Noise {
            sigma,
            scale,
            area_fraction,
        },
    );
    let out = if scale == 0.0 {
        img.clone()
    } else {
        add_noise_region(img, rng, sigma * scale, x_lo, x_hi, y_lo, y_hi)
    };
    Ok((out, spec))
}
