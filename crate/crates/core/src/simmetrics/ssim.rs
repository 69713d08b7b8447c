//! Windowed structural similarity.
//!
//! Uses disjoint 8x8 uniform windows (partial tiles at the right/bottom
//! edges are included), population statistics and the standard
//! stabilization constants on the 8-bit dynamic range. The score is the
//! plain mean over windows.

use crate::error::{Error, Result};
use crate::image::Image;

pub(crate) const WINDOW: usize = 8;
const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

/// Disjoint tile origins and extents covering a w x h grid.
pub(crate) fn tiles(w: usize, h: usize) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    let mut y = 0;
    while y < h {
        let th = WINDOW.min(h - y);
        let mut x = 0;
        while x < w {
            let tw = WINDOW.min(w - x);
            out.push((x, y, tw, th));
            x += WINDOW;
        }
        y += WINDOW;
    }
    out
}

pub(crate) fn check_shapes(a: &Image, b: &Image) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::contract(format!(
            "image shapes differ: {}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    Ok(())
}

/// Mean windowed SSIM over luma, in [-1, 1]. Bit-identical inputs score
/// exactly 1.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_shapes(a, b)?;
    if a.data() == b.data() {
        return Ok(1.0);
    }
    let la = a.luma();
    let lb = b.luma();
    let w = a.width() as usize;
    let h = a.height() as usize;

    let mut total = 0.0;
    let tiles = tiles(w, h);
    for &(x0, y0, tw, th) in &tiles {
        // single pass: raw moments, then population statistics
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut sxx = 0.0;
        let mut syy = 0.0;
        let mut sxy = 0.0;
        for y in y0..y0 + th {
            for x in x0..x0 + tw {
                let va = la[y * w + x];
                let vb = lb[y * w + x];
                sx += va;
                sy += vb;
                sxx += va * va;
                syy += vb * vb;
                sxy += va * vb;
            }
        }
        let n = (tw * th) as f64;
        let mx = sx / n;
        let my = sy / n;
        let vx = sxx / n - mx * mx;
        let vy = syy / n - my * my;
        let cov = sxy / n - mx * my;
        total += (2.0 * mx * my + C1) * (2.0 * cov + C2)
            / ((mx * mx + my * my + C1) * (vx + vy + C2));
    }
    Ok(total / tiles.len() as f64)
}
