//! Value-remapping transforms: enhancement blends, posterize, solarize,
//! equalize and autocontrast.
//!
//! The four enhancement transforms blend the original image with a
//! degenerate counterpart (black, mean-gray, desaturated, smoothed):
//! factor 1.0 returns the original exactly, factor 0.0 the degenerate
//! image, and factors above 1.0 push past the original.

use crate::image::Image;

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// out = degenerate + factor * (original - degenerate), per sample.
fn blend_with(img: &Image, factor: f64, degenerate: impl Fn(usize, u8) -> f64) -> Image {
    if factor == 1.0 {
        return img.clone();
    }
    let mut out = img.clone();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        let d = degenerate(i, *v);
        *v = clamp_u8(d + factor * (*v as f64 - d));
    }
    out
}

/// Blend toward black: factor 0 is a black image.
pub fn brightness(img: &Image, factor: f64) -> Image {
    blend_with(img, factor, |_, _| 0.0)
}

/// Blend toward a constant image at the mean luma: factor 0 is flat gray.
pub fn contrast(img: &Image, factor: f64) -> Image {
    if factor == 1.0 {
        return img.clone();
    }
    let luma = img.luma();
    let mean = luma.iter().sum::<f64>() / luma.len() as f64;
    blend_with(img, factor, |_, _| mean)
}

/// Blend toward the per-pixel luma (desaturation): factor 0 is grayscale.
/// A no-op on single-channel images.
pub fn color(img: &Image, factor: f64) -> Image {
    if factor == 1.0 || img.channels() == 1 {
        return img.clone();
    }
    let luma = img.luma();
    let ch = img.channels() as usize;
    blend_with(img, factor, |i, _| luma[i / ch])
}

/// Blend toward a 3x3 box-smoothed image (kernel 1 1 1 / 1 5 1 / 1 1 1,
/// normalized by 13; border pixels stay original): factor 0 is smoothed,
/// factors above 1 sharpen.
pub fn sharpness(img: &Image, factor: f64) -> Image {
    if factor == 1.0 {
        return img.clone();
    }
    let (w, h, ch) = (
        img.width() as usize,
        img.height() as usize,
        img.channels() as usize,
    );
    let mut smooth: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
    if w > 2 && h > 2 {
        const KERNEL: [[f64; 3]; 3] = [[1.0, 1.0, 1.0], [1.0, 5.0, 1.0], [1.0, 1.0, 1.0]];
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                for c in 0..ch {
                    let mut acc = 0.0;
                    for (ky, row) in KERNEL.iter().enumerate() {
                        for (kx, k) in row.iter().enumerate() {
                            let idx = ((y + ky - 1) * w + (x + kx - 1)) * ch + c;
                            acc += k * img.data()[idx] as f64;
                        }
                    }
                    smooth[(y * w + x) * ch + c] = acc / 13.0;
                }
            }
        }
    }
    blend_with(img, factor, |i, _| smooth[i])
}

/// Keeps the top `bits` bits of every sample (1..=8); 8 is the identity.
pub fn posterize(img: &Image, bits: u8) -> Image {
    debug_assert!((1..=8).contains(&bits));
    if bits >= 8 {
        return img.clone();
    }
    let mask = 0xFFu8 << (8 - bits);
    let mut out = img.clone();
    for v in out.data_mut() {
        *v &= mask;
    }
    out
}

/// Inverts samples at or above `threshold`. Zero magnitude (`phi == 0`) is
/// defined as the exact identity even though its nominal threshold is 255,
/// so that every transform kind is an identity at zero magnitude.
pub fn solarize(img: &Image, threshold: f64, phi: f64) -> Image {
    if phi == 0.0 {
        return img.clone();
    }
    let mut out = img.clone();
    for v in out.data_mut() {
        if *v as f64 >= threshold {
            *v = 255 - *v;
        }
    }
    out
}

/// Histogram equalization, applied to each channel independently.
pub fn equalize(img: &Image) -> Image {
    let ch = img.channels() as usize;
    let mut out = img.clone();
    for c in 0..ch {
        let mut histo = [0u64; 256];
        for px in img.data()[c..].iter().step_by(ch) {
            histo[*px as usize] += 1;
        }
        let lut = equalize_lut(&histo);
        for px in out.data_mut()[c..].iter_mut().step_by(ch) {
            *px = lut[*px as usize];
        }
    }
    out
}

fn equalize_lut(histo: &[u64; 256]) -> [u8; 256] {
    let mut identity = [0u8; 256];
    for (i, v) in identity.iter_mut().enumerate() {
        *v = i as u8;
    }
    let nonzero: Vec<u64> = histo.iter().copied().filter(|&v| v > 0).collect();
    if nonzero.len() <= 1 {
        return identity;
    }
    let total: u64 = nonzero.iter().sum();
    let step = (total - nonzero.last().unwrap()) / 255;
    if step == 0 {
        return identity;
    }
    let mut lut = [0u8; 256];
    let mut n = step / 2;
    for i in 0..256 {
        lut[i] = (n / step).min(255) as u8;
        n += histo[i];
    }
    lut
}

/// Stretches each channel so its darkest sample maps to 0 and its brightest
/// to 255; constant channels are left unchanged.
pub fn autocontrast(img: &Image) -> Image {
    let ch = img.channels() as usize;
    let mut out = img.clone();
    for c in 0..ch {
        let mut lo = 255u8;
        let mut hi = 0u8;
        for px in img.data()[c..].iter().step_by(ch) {
            lo = lo.min(*px);
            hi = hi.max(*px);
        }
        if lo >= hi {
            continue;
        }
        let scale = 255.0 / (hi - lo) as f64;
        for px in out.data_mut()[c..].iter_mut().step_by(ch) {
            *px = clamp_u8((*px - lo) as f64 * scale);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient() -> Image {
        let data: Vec<u8> = (0..64).map(|i| (i * 4) as u8).collect();
        Image::new(8, 8, 1, data).unwrap()
    }

    #[test]
    fn factor_one_is_exact_identity() {
        let img = gradient();
        assert_eq!(brightness(&img, 1.0), img);
        assert_eq!(contrast(&img, 1.0), img);
        assert_eq!(color(&img, 1.0), img);
        assert_eq!(sharpness(&img, 1.0), img);
    }

    #[test]
    fn brightness_zero_is_black() {
        let img = gradient();
        assert!(brightness(&img, 0.0).data().iter().all(|&v| v == 0));
    }

    #[test]
    fn brightness_scales_values() {
        let img = Image::filled(2, 2, 1, 100).unwrap();
        assert!(brightness(&img, 0.5).data().iter().all(|&v| v == 50));
        assert!(brightness(&img, 1.5).data().iter().all(|&v| v == 150));
    }

    #[test]
    fn contrast_zero_collapses_to_mean() {
        let img = Image::new(2, 1, 1, vec![0, 200]).unwrap();
        let out = contrast(&img, 0.0);
        assert_eq!(out.data(), &[100, 100]);
    }

    #[test]
    fn color_zero_desaturates() {
        let img = Image::new(1, 1, 3, vec![255, 0, 0]).unwrap();
        let out = color(&img, 0.0);
        let luma = (0.299f64 * 255.0).round() as u8;
        assert_eq!(out.data(), &[luma, luma, luma]);
    }

    #[test]
    fn posterize_masks_low_bits() {
        let img = Image::new(2, 1, 1, vec![0b1011_0110, 0b0101_1111]).unwrap();
        let out = posterize(&img, 2);
        assert_eq!(out.data(), &[0b1000_0000, 0b0100_0000]);
        assert_eq!(posterize(&img, 8), img);
    }

    #[test]
    fn solarize_threshold_rule() {
        let img = Image::new(3, 1, 1, vec![10, 128, 250]).unwrap();
        let out = solarize(&img, 128.0, 0.5);
        assert_eq!(out.data(), &[10, 127, 5]);
        // phi == 0 is the identity even for a saturated pixel
        let white = Image::filled(2, 2, 1, 255).unwrap();
        assert_eq!(solarize(&white, 255.0, 0.0), white);
    }

    #[test]
    fn equalize_spreads_two_level_histogram() {
        // 2048 dark + 2048 bright pixels; equalization pushes them apart.
        // (Images with fewer than 255 pixels per gray step are left alone.)
        let mut data = vec![100u8; 2048];
        data.extend(vec![101u8; 2048]);
        let img = Image::new(64, 64, 1, data).unwrap();
        let out = equalize(&img);
        let lo = out.get(0, 0, 0);
        let hi = out.get(63, 63, 0);
        assert!(lo < hi);
        assert!(hi > 200, "bright level should stretch upward, got {hi}");
    }

    #[test]
    fn equalize_constant_image_is_identity() {
        let img = Image::filled(4, 4, 3, 42).unwrap();
        assert_eq!(equalize(&img), img);
    }

    #[test]
    fn autocontrast_stretches_to_full_range() {
        let img = Image::new(2, 1, 1, vec![64, 192]).unwrap();
        let out = autocontrast(&img);
        assert_eq!(out.data(), &[0, 255]);
        let flat = Image::filled(2, 2, 1, 90).unwrap();
        assert_eq!(autocontrast(&flat), flat);
    }
}
