//! Random Erasing: occludes a random rectangle with gaussian noise.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{TransformKind, TransformParams, TransformSpec};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::RngStream;

/// Attempts before giving up on finding a rectangle that fits.
const MAX_ATTEMPTS: usize = 100;

/// Erases a random rectangle, filling it with clamped standard-gaussian
/// values (`clamp(round(128 + 64z), 0, 255)` per sample).
///
/// The target area is drawn uniformly from `area_range` (as a fraction of
/// the image) and the aspect ratio (height/width) uniformly from
/// `aspect_range`; side lengths round to the nearest pixel with a one-pixel
/// floor. Rejection-samples until the rectangle fits, up to 100 attempts;
/// on failure the image is returned unchanged with `phi = 0`.
///
/// `phi` is the exact fraction of erased pixels.
pub fn random_erase(
    img: &Image,
    rng: &mut RngStream,
    area_range: (f64, f64),
    aspect_range: (f64, f64),
) -> Result<(Image, TransformSpec)> {
    let (area_lo, area_hi) = area_range;
    if !(area_lo > 0.0 && area_lo <= area_hi && area_hi <= 1.0) {
        return Err(Error::contract(format!(
            "erase area range ({area_lo}, {area_hi}) must satisfy 0 < lo <= hi <= 1"
        )));
    }
    let (aspect_lo, aspect_hi) = aspect_range;
    if !(aspect_lo > 0.0 && aspect_lo <= aspect_hi) {
        return Err(Error::contract(format!(
            "erase aspect range ({aspect_lo}, {aspect_hi}) must satisfy 0 < lo <= hi"
        )));
    }

    let (w, h) = (img.width(), img.height());
    let total = w as f64 * h as f64;

    for _ in 0..MAX_ATTEMPTS {
        let area = rng.random_range(area_lo..=area_hi) * total;
        let aspect = rng.random_range(aspect_lo..=aspect_hi);
        let rect_h = ((area * aspect).sqrt().round() as u32).max(1);
        let rect_w = ((area / aspect).sqrt().round() as u32).max(1);
        if rect_h > h || rect_w > w {
            continue;
        }
        let x0 = rng.random_range(0..=w - rect_w);
        let y0 = rng.random_range(0..=h - rect_h);

        let mut out = img.clone();
        for y in y0..y0 + rect_h {
            for x in x0..x0 + rect_w {
                for c in 0..img.channels() {
                    let z: f64 = rng.sample(StandardNormal);
                    out.set(x, y, c, (128.0 + 64.0 * z).round().clamp(0.0, 255.0) as u8);
                }
            }
        }
        let phi = rect_w as f64 * rect_h as f64 / total;
        let spec = TransformSpec::new(
            TransformKind::RandomErase,
            phi,
            TransformParams::Erase {
                x: x0,
                y: y0,
                width: rect_w,
                height: rect_h,
            },
        );
        return Ok((out, spec));
    }

    log::warn!(
        "random_erase: no rectangle fit {w}x{h} after {MAX_ATTEMPTS} attempts \
         (area {area_lo}..{area_hi}, aspect {aspect_lo}..{aspect_hi}); skipping"
    );
    Ok((
        img.clone(),
        TransformSpec::new(
            TransformKind::RandomErase,
            0.0,
            TransformParams::Erase {
                x: 0,
                y: 0,
                width: 0,
                height: 0,
            },
        ),
    ))
}
