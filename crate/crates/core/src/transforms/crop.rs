//! Random crop with mid-gray padding.

use rand::Rng;

use super::{TransformKind, TransformParams, TransformSpec, GEOMETRIC_FILL};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::RngStream;

/// Pads the image by `padding` pixels of mid-gray on all sides, then crops
/// a window of the original size at a uniformly random offset in
/// `[0, 2*padding]^2`. `phi` is the exact fraction of crop pixels that came
/// from the padding.
pub fn random_crop(
    img: &Image,
    rng: &mut RngStream,
    padding: u32,
) -> Result<(Image, TransformSpec)> {
    let offset_x = rng.random_range(0..=2 * padding);
    let offset_y = rng.random_range(0..=2 * padding);
    random_crop_at(img, padding, offset_x, offset_y)
}

/// [`random_crop`] with explicit offsets, for deterministic use.
pub fn random_crop_at(
    img: &Image,
    padding: u32,
    offset_x: u32,
    offset_y: u32,
) -> Result<(Image, TransformSpec)> {
    if offset_x > 2 * padding || offset_y > 2 * padding {
        return Err(Error::contract(format!(
            "crop offset ({offset_x}, {offset_y}) outside [0, {}]^2",
            2 * padding
        )));
    }
    let spec = TransformSpec::new(
        TransformKind::RandomCrop,
        occluded_fraction(img.width(), img.height(), padding, offset_x, offset_y),
        TransformParams::Crop {
            padding,
            offset_x,
            offset_y,
        },
    );
    if padding == 0 || (offset_x == padding && offset_y == padding) {
        return Ok((img.clone(), spec));
    }

    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let mut out = Image::filled(w, h, ch, GEOMETRIC_FILL).expect("shape preserved");
    let p = padding as i64;
    for y in 0..h as i64 {
        let sy = y + offset_y as i64 - p;
        if sy < 0 || sy >= h as i64 {
            continue;
        }
        for x in 0..w as i64 {
            let sx = x + offset_x as i64 - p;
            if sx < 0 || sx >= w as i64 {
                continue;
            }
            for c in 0..ch {
                out.set(x as u32, y as u32, c, img.get(sx as u32, sy as u32, c));
            }
        }
    }
    Ok((out, spec))
}

/// Fraction of the crop window covered by padding for the given geometry.
/// Computed from integer pixel counts so it matches counting exactly.
pub(super) fn occluded_fraction(
    width: u32,
    height: u32,
    padding: u32,
    offset_x: u32,
    offset_y: u32,
) -> f64 {
    let overlap_w = (width as i64 - (offset_x as i64 - padding as i64).abs()).max(0);
    let overlap_h = (height as i64 - (offset_y as i64 - padding as i64).abs()).max(0);
    let total = width as i64 * height as i64;
    (total - overlap_w * overlap_h) as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derived_stream;

    fn base() -> Image {
        let data: Vec<u8> = (0..32u32 * 32)
            .flat_map(|i| {
                let v = (i % 251) as u8;
                [v, v.wrapping_add(3), v.wrapping_add(7)]
            })
            .collect();
        Image::new(32, 32, 3, data).unwrap()
    }

    #[test]
    fn zero_padding_is_identity() {
        let img = base();
        let mut rng = derived_stream(31, 0);
        let (out, spec) = random_crop(&img, &mut rng, 0).unwrap();
        assert_eq!(out, img);
        assert_eq!(spec.phi, 0.0);
    }

    #[test]
    fn corner_offset_occludes_two_strips() {
        let img = base();
        let (out, spec) = random_crop_at(&img, 4, 0, 0).unwrap();
        // 4-pixel strips on the left and top, overlapping in a 4x4 corner:
        // 32*4 + 32*4 - 16 = 240 padding pixels
        assert_eq!(spec.phi, 240.0 / 1024.0);
        let counted = (0..32u32)
            .flat_map(|y| (0..32u32).map(move |x| (x, y)))
            .filter(|&(x, y)| (0..3).all(|c| out.get(x, y, c) == GEOMETRIC_FILL))
            .count();
        // the source image contains no mid-gray pixel triples, so counting
        // fill-colored pixels counts padding exactly
        assert_eq!(counted, 240);
    }

    #[test]
    fn centered_offset_is_identity() {
        let img = base();
        let (out, spec) = random_crop_at(&img, 4, 4, 4).unwrap();
        assert_eq!(out, img);
        assert_eq!(spec.phi, 0.0);
    }

    #[test]
    fn phi_equals_counted_padding_for_all_offsets() {
        let img = base();
        for ox in 0..=8 {
            for oy in 0..=8 {
                let (out, spec) = random_crop_at(&img, 4, ox, oy).unwrap();
                let counted = (0..32u32)
                    .flat_map(|y| (0..32u32).map(move |x| (x, y)))
                    .filter(|&(x, y)| (0..3).all(|c| out.get(x, y, c) == GEOMETRIC_FILL))
                    .count();
                assert_eq!(spec.phi, counted as f64 / 1024.0, "offset ({ox}, {oy})");
            }
        }
    }

    #[test]
    fn rejects_offset_beyond_window() {
        let img = base();
        assert!(random_crop_at(&img, 4, 9, 0).is_err());
    }
}
