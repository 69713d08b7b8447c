//! Keypoint retention through a geometric transform.
//!
//! A compact difference-of-gaussians detector with gradient-histogram
//! descriptors: 4 octaves, 3 scales per octave, contrast threshold 0.04 on
//! [0, 1] intensities, edge-response threshold 10, 128-dimensional
//! descriptors (4x4 spatial bins x 8 orientation bins, single dominant
//! orientation per keypoint) and nearest-descriptor matching with ratio
//! test 0.75. Retention is the fraction of keypoints detected in the
//! original image whose descriptor finds a ratio-test match in the
//! transformed image.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::transforms::TransformSpec;

#[derive(Debug, Clone)]
pub struct SiftParams {
    pub octaves: usize,
    pub scales_per_octave: usize,
    pub base_sigma: f64,
    pub contrast_threshold: f64,
    pub edge_threshold: f64,
    pub ratio_threshold: f64,
}

impl Default for SiftParams {
    fn default() -> Self {
        Self {
            octaves: 4,
            scales_per_octave: 3,
            base_sigma: 1.6,
            contrast_threshold: 0.04,
            edge_threshold: 10.0,
            ratio_threshold: 0.75,
        }
    }
}

/// Fraction of `original`'s keypoints retained in `transformed`, in [0, 1].
///
/// `spec` must describe a geometric transform; keypoint retention is not
/// meaningful for value remappings. Returns 0 (with a warning) when the
/// original image yields no keypoints.
pub fn sift_retention(original: &Image, transformed: &Image, spec: &TransformSpec) -> Result<f64> {
    if !spec.kind.is_geometric() {
        return Err(Error::contract(format!(
            "keypoint retention requires a geometric transform, got {}",
            spec.kind
        )));
    }
    sift_retention_with(original, transformed, &SiftParams::default())
}

pub fn sift_retention_with(
    original: &Image,
    transformed: &Image,
    params: &SiftParams,
) -> Result<f64> {
    let detected = detect_and_describe(original, params);
    if detected.is_empty() {
        log::warn!("no keypoints detected in original image; retention undefined, reporting 0");
        return Ok(0.0);
    }
    let candidates = detect_and_describe(transformed, params);
    if candidates.is_empty() {
        return Ok(0.0);
    }

    let mut matched = 0usize;
    for kp in &detected {
        let mut d1 = f64::INFINITY;
        let mut d2 = f64::INFINITY;
        for cand in &candidates {
            let d = descriptor_distance(&kp.descriptor, &cand.descriptor);
            if d < d1 {
                d2 = d1;
                d1 = d;
            } else if d < d2 {
                d2 = d;
            }
        }
        // with a single candidate d2 stays infinite and the test passes
        if d1 <= params.ratio_threshold * d2 {
            matched += 1;
        }
    }
    Ok(matched as f64 / detected.len() as f64)
}

struct Keypoint {
    descriptor: [f32; 128],
}

fn descriptor_distance(a: &[f32; 128], b: &[f32; 128]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = (x - y) as f64;
            d * d
        })
        .sum()
}

struct GrayPlane {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl GrayPlane {
    fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.w + x]
    }

    fn from_image(img: &Image) -> Self {
        Self {
            w: img.width() as usize,
            h: img.height() as usize,
            data: img.luma().iter().map(|&v| v / 255.0).collect(),
        }
    }

    /// Separable gaussian blur with clamp-to-edge boundaries.
    fn blurred(&self, sigma: f64) -> GrayPlane {
        let radius = (3.0 * sigma).ceil() as i64;
        let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
        for i in -radius..=radius {
            kernel.push((-(i * i) as f64 / (2.0 * sigma * sigma)).exp());
        }
        let norm: f64 = kernel.iter().sum();
        for k in &mut kernel {
            *k /= norm;
        }

        let mut tmp = vec![0.0; self.w * self.h];
        for y in 0..self.h {
            for x in 0..self.w {
                let mut acc = 0.0;
                for (i, k) in kernel.iter().enumerate() {
                    let sx = (x as i64 + i as i64 - radius).clamp(0, self.w as i64 - 1) as usize;
                    acc += k * self.get(sx, y);
                }
                tmp[y * self.w + x] = acc;
            }
        }
        let mut out = vec![0.0; self.w * self.h];
        for y in 0..self.h {
            for x in 0..self.w {
                let mut acc = 0.0;
                for (i, k) in kernel.iter().enumerate() {
                    let sy = (y as i64 + i as i64 - radius).clamp(0, self.h as i64 - 1) as usize;
                    acc += k * tmp[sy * self.w + x];
                }
                out[y * self.w + x] = acc;
            }
        }
        GrayPlane {
            w: self.w,
            h: self.h,
            data: out,
        }
    }

    /// Every second pixel, for the next octave.
    fn halved(&self) -> GrayPlane {
        let w = (self.w / 2).max(1);
        let h = (self.h / 2).max(1);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                data.push(self.get(x * 2, y * 2));
            }
        }
        GrayPlane { w, h, data }
    }
}

fn detect_and_describe(img: &Image, params: &SiftParams) -> Vec<Keypoint> {
    let s = params.scales_per_octave;
    let mut keypoints = Vec::new();
    let mut octave_base = GrayPlane::from_image(img);

    for _octave in 0..params.octaves {
        if octave_base.w < 8 || octave_base.h < 8 {
            break;
        }
        // gaussian stack: sigma doubles across the s interior scales
        let gaussians: Vec<GrayPlane> = (0..s + 3)
            .map(|i| octave_base.blurred(params.base_sigma * 2f64.powf(i as f64 / s as f64)))
            .collect();
        let dogs: Vec<Vec<f64>> = (0..s + 2)
            .map(|i| {
                gaussians[i + 1]
                    .data
                    .iter()
                    .zip(&gaussians[i].data)
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect();

        let (w, h) = (octave_base.w, octave_base.h);
        for layer in 1..=s {
            for y in 1..h - 1 {
                for x in 1..w - 1 {
                    let v = dogs[layer][y * w + x];
                    if v.abs() < params.contrast_threshold {
                        continue;
                    }
                    if !is_extremum(&dogs, layer, x, y, w, v) {
                        continue;
                    }
                    if is_edge_like(&dogs[layer], x, y, w, params.edge_threshold) {
                        continue;
                    }
                    let sigma_rel = params.base_sigma * 2f64.powf(layer as f64 / s as f64);
                    if let Some(descriptor) =
                        describe(&gaussians[layer], x, y, sigma_rel)
                    {
                        keypoints.push(Keypoint { descriptor });
                    }
                }
            }
        }
        octave_base = octave_base.halved();
    }
    keypoints
}

fn is_extremum(dogs: &[Vec<f64>], layer: usize, x: usize, y: usize, w: usize, v: f64) -> bool {
    let mut is_max = true;
    let mut is_min = true;
    for (off, dog) in dogs[layer - 1..=layer + 1].iter().enumerate() {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if off == 1 && dx == 0 && dy == 0 {
                    continue;
                }
                let n = dog[(y as i64 + dy) as usize * w + (x as i64 + dx) as usize];
                if n >= v {
                    is_max = false;
                }
                if n <= v {
                    is_min = false;
                }
                if !is_max && !is_min {
                    return false;
                }
            }
        }
    }
    is_max || is_min
}

fn is_edge_like(dog: &[f64], x: usize, y: usize, w: usize, r: f64) -> bool {
    let v = dog[y * w + x];
    let dxx = dog[y * w + x + 1] + dog[y * w + x - 1] - 2.0 * v;
    let dyy = dog[(y + 1) * w + x] + dog[(y - 1) * w + x] - 2.0 * v;
    let dxy = (dog[(y + 1) * w + x + 1] - dog[(y + 1) * w + x - 1] - dog[(y - 1) * w + x + 1]
        + dog[(y - 1) * w + x - 1])
        / 4.0;
    let tr = dxx + dyy;
    let det = dxx * dyy - dxy * dxy;
    if det <= 0.0 {
        return true;
    }
    tr * tr / det >= (r + 1.0) * (r + 1.0) / r
}

fn gradient(plane: &GrayPlane, x: i64, y: i64) -> (f64, f64) {
    let sample = |x: i64, y: i64| {
        plane.get(
            x.clamp(0, plane.w as i64 - 1) as usize,
            y.clamp(0, plane.h as i64 - 1) as usize,
        )
    };
    let gx = (sample(x + 1, y) - sample(x - 1, y)) / 2.0;
    let gy = (sample(x, y + 1) - sample(x, y - 1)) / 2.0;
    (gx, gy)
}

/// Dominant gradient orientation followed by a 4x4x8 gradient histogram
/// over a 16x16 patch rotated into the keypoint frame.
fn describe(plane: &GrayPlane, x: usize, y: usize, sigma_rel: f64) -> Option<[f32; 128]> {
    // orientation: 36-bin weighted histogram
    let radius = (3.0 * 1.5 * sigma_rel).round() as i64;
    let mut orient_hist = [0.0f64; 36];
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let (gx, gy) = gradient(plane, x as i64 + dx, y as i64 + dy);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let weight =
                (-((dx * dx + dy * dy) as f64) / (2.0 * (1.5 * sigma_rel).powi(2))).exp();
            let angle = gy.atan2(gx).rem_euclid(std::f64::consts::TAU);
            let bin = ((angle / std::f64::consts::TAU * 36.0) as usize).min(35);
            orient_hist[bin] += mag * weight;
        }
    }
    let best = orient_hist
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if *best.1 == 0.0 {
        return None; // flat patch, no orientation
    }
    let theta = (best.0 as f64 + 0.5) / 36.0 * std::f64::consts::TAU;
    let (sin_t, cos_t) = theta.sin_cos();

    // descriptor: 16x16 samples, rotated, binned 4x4 spatial x 8 orientation
    let mut desc = [0.0f64; 128];
    for sy in -8i64..8 {
        for sx in -8i64..8 {
            // rotate the sample offset into the keypoint frame
            let rx = cos_t * sx as f64 + sin_t * sy as f64;
            let ry = -sin_t * sx as f64 + cos_t * sy as f64;
            let px = x as i64 + rx.round() as i64;
            let py = y as i64 + ry.round() as i64;
            let (gx, gy) = gradient(plane, px, py);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let angle = (gy.atan2(gx) - theta).rem_euclid(std::f64::consts::TAU);
            let obin = ((angle / std::f64::consts::TAU * 8.0) as usize).min(7);
            let cell_x = ((sx + 8) / 4) as usize;
            let cell_y = ((sy + 8) / 4) as usize;
            let weight = (-((sx * sx + sy * sy) as f64) / (2.0 * 64.0)).exp();
            desc[(cell_y * 4 + cell_x) * 8 + obin] += mag * weight;
        }
    }

    // normalize, clip at 0.2, renormalize
    let norm = desc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    for v in &mut desc {
        *v = (*v / norm).min(0.2);
    }
    let norm = desc.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = [0.0f32; 128];
    for (o, v) in out.iter_mut().zip(&desc) {
        *o = (*v / norm) as f32;
    }
    Some(out)
}
