//! Correlation-style metrics: NCC, UIQ and SCC.
//!
//! All three divide by signal variance, so zero-variance inputs need a
//! documented convention: when both signals are constant the score is 1 if
//! they are equal and 0 otherwise; when exactly one is constant the score
//! is 0. For SCC this rule applies to the Laplacian-filtered signals.

use super::ssim::{check_shapes, tiles};
use crate::error::{Error, Result};
use crate::image::Image;

/// Pearson correlation of two equal-length signals with the zero-variance
/// convention above. Computed from centered sums.
fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 && vb == 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// Mean-centered correlation coefficient over all luma pixels, in [-1, 1].
pub fn ncc(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    if a.data() == b.data() {
        return Ok(1.0);
    }
    Ok(correlation(&a.luma(), &b.luma()))
}

/// Universal image quality index: the Wang-Bovik Q index over disjoint 8x8
/// luma windows (population statistics), averaged.
pub fn uiq(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    if a.data() == b.data() {
        return Ok(1.0);
    }
    let la = a.luma();
    let lb = b.luma();
    let w = a.width() as usize;
    let h = a.height() as usize;

    let tiles = tiles(w, h);
    let mut total = 0.0;
    for &(x0, y0, tw, th) in &tiles {
        let n = (tw * th) as f64;
        let mut sx = 0.0;
        let mut sy = 0.0;
        for y in y0..y0 + th {
            for x in x0..x0 + tw {
                sx += la[y * w + x];
                sy += lb[y * w + x];
            }
        }
        let mx = sx / n;
        let my = sy / n;
        let mut vx = 0.0;
        let mut vy = 0.0;
        let mut cov = 0.0;
        let mut equal = true;
        for y in y0..y0 + th {
            for x in x0..x0 + tw {
                let dx = la[y * w + x] - mx;
                let dy = lb[y * w + x] - my;
                vx += dx * dx;
                vy += dy * dy;
                cov += dx * dy;
                equal &= la[y * w + x] == lb[y * w + x];
            }
        }
        vx /= n;
        vy /= n;
        cov /= n;
        total += if vx == 0.0 && vy == 0.0 {
            if equal {
                1.0
            } else {
                0.0
            }
        } else {
            4.0 * cov * mx * my / ((vx + vy) * (mx * mx + my * my))
        };
    }
    Ok(total / tiles.len() as f64)
}

/// 4-neighbor Laplacian (kernel 0 -1 0 / -1 4 -1 / 0 -1 0) over the valid
/// interior; border pixels are skipped.
fn laplacian(luma: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let c = luma[y * w + x];
            out.push(
                4.0 * c
                    - luma[y * w + x - 1]
                    - luma[y * w + x + 1]
                    - luma[(y - 1) * w + x]
                    - luma[(y + 1) * w + x],
            );
        }
    }
    out
}

/// Spatial correlation coefficient: correlation of the Laplacian-filtered
/// luma images. Requires at least a 3x3 image.
pub fn scc(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    let w = a.width() as usize;
    let h = a.height() as usize;
    if w < 3 || h < 3 {
        return Err(Error::contract(format!(
            "scc needs at least a 3x3 image, got {w}x{h}"
        )));
    }
    if a.data() == b.data() {
        return Ok(1.0);
    }
    Ok(correlation(
        &laplacian(&a.luma(), w, h),
        &laplacian(&b.luma(), w, h),
    ))
}
