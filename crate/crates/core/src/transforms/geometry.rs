//! Geometric transforms: rotation, shear, translation, horizontal flip.
//!
//! Rotation and shear use inverse affine mapping with bilinear sampling
//! around the image center; taps outside the frame read the mid-gray fill.
//! Translation is an exact integer pixel shift. A positive rotation angle
//! turns the image content clockwise.

use super::GEOMETRIC_FILL;
use crate::image::Image;

/// Samples each destination pixel through `map`, which converts destination
/// center coordinates to source coordinates.
fn affine_sample(img: &Image, map: impl Fn(f64, f64) -> (f64, f64)) -> Image {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let mut data = vec![0u8; w as usize * h as usize * ch as usize];
    let fill = GEOMETRIC_FILL as f64;
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = map(x as f64, y as f64);
            let x0 = sx.floor();
            let y0 = sy.floor();
            let dx = sx - x0;
            let dy = sy - y0;
            for c in 0..ch {
                let tap = |tx: f64, ty: f64| -> f64 {
                    if tx < 0.0 || ty < 0.0 || tx >= w as f64 || ty >= h as f64 {
                        fill
                    } else {
                        img.get(tx as u32, ty as u32, c) as f64
                    }
                };
                let v00 = tap(x0, y0);
                let v10 = tap(x0 + 1.0, y0);
                let v01 = tap(x0, y0 + 1.0);
                let v11 = tap(x0 + 1.0, y0 + 1.0);
                let v = v00 * (1.0 - dx) * (1.0 - dy)
                    + v10 * dx * (1.0 - dy)
                    + v01 * (1.0 - dx) * dy
                    + v11 * dx * dy;
                let idx = (y as usize * w as usize + x as usize) * ch as usize + c as usize;
                data[idx] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Image::new(w, h, ch, data).expect("shape preserved")
}

/// Rotates the image content clockwise by `degrees` about its center.
pub fn rotate(img: &Image, degrees: f64) -> Image {
    if degrees == 0.0 {
        return img.clone();
    }
    let theta = degrees.to_radians();
    let (sin, cos) = theta.sin_cos();
    let cx = (img.width() - 1) as f64 / 2.0;
    let cy = (img.height() - 1) as f64 / 2.0;
    affine_sample(img, |x, y| {
        let dx = x - cx;
        let dy = y - cy;
        (cx + cos * dx + sin * dy, cy - sin * dx + cos * dy)
    })
}

/// Shears rows horizontally about the center row: each row shifts by
/// `factor` times its distance from the vertical center.
pub fn shear_x(img: &Image, factor: f64) -> Image {
    if factor == 0.0 {
        return img.clone();
    }
    let cy = (img.height() - 1) as f64 / 2.0;
    affine_sample(img, |x, y| (x + factor * (y - cy), y))
}

/// Shears columns vertically about the center column.
pub fn shear_y(img: &Image, factor: f64) -> Image {
    if factor == 0.0 {
        return img.clone();
    }
    let cx = (img.width() - 1) as f64 / 2.0;
    affine_sample(img, |x, y| (x, y + factor * (x - cx)))
}

/// Shifts content right by `pixels` (left when negative); exposed columns
/// are filled mid-gray. An exact pixel copy, no interpolation.
pub fn translate_x(img: &Image, pixels: i32) -> Image {
    if pixels == 0 {
        return img.clone();
    }
    shift(img, pixels, 0)
}

/// Shifts content down by `pixels` (up when negative).
pub fn translate_y(img: &Image, pixels: i32) -> Image {
    if pixels == 0 {
        return img.clone();
    }
    shift(img, 0, pixels)
}

fn shift(img: &Image, dx: i32, dy: i32) -> Image {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let mut out = Image::filled(w, h, ch, GEOMETRIC_FILL).expect("shape preserved");
    for y in 0..h as i64 {
        let sy = y - dy as i64;
        if sy < 0 || sy >= h as i64 {
            continue;
        }
        for x in 0..w as i64 {
            let sx = x - dx as i64;
            if sx < 0 || sx >= w as i64 {
                continue;
            }
            for c in 0..ch {
                out.set(x as u32, y as u32, c, img.get(sx as u32, sy as u32, c));
            }
        }
    }
    out
}

/// Mirrors the image left to right.
pub fn flip_horizontal(img: &Image) -> Image {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                out.set(x, y, c, img.get(w - 1 - x, y, c));
            }
        }
    }
    out
}
