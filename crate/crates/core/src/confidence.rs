//! Maps a transform's kind and normalized magnitude `phi` to a target
//! label confidence.
//!
//! Four mapping families are supported: polynomial curves
//! `p = 1 - phi^k * (1 - p_min)`, piecewise-linear interpolated tables
//! (digitized human-vision or proxy-model accuracy curves), per-kind
//! polynomial fits to those tables, and the constant-one mapping for
//! transforms that never reduce confidence. Confidences from several
//! stages compose by plain multiplication.
//!
//! # Mapping-table files
//!
//! One file per transform kind: plain comma-separated text with a required
//! `phi,confidence` header, one `phi,confidence` pair per line, `#`
//! comments allowed. The first data point must be `(0, 1.0)` and `phi`
//! must be strictly increasing. A profile manifest file maps kind names to
//! mappings, one per line:
//!
//! ```text
//! rotate = table tables/rotate.csv
//! sharpness = poly 2 0.7
//! color = poly 2 chance
//! posterize = one
//! ```
//!
//! Table paths are resolved relative to the manifest file. Kinds that are
//! pinned to constant-one (equalize, auto-contrast, identity,
//! horizontal-flip) may not be reassigned.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transforms::TransformKind;

/// Kinds that never smooth the label, whatever the profile says.
pub const PINNED_CONSTANT_ONE: [TransformKind; 4] = [
    TransformKind::Equalize,
    TransformKind::AutoContrast,
    TransformKind::Identity,
    TransformKind::HorizontalFlip,
];

/// Evaluates the polynomial mapping `1 - phi^k * (1 - p_min)`.
///
/// The result lies in `[p_min, 1]`: 1 at zero magnitude, `p_min` at full
/// magnitude.
pub fn poly_confidence(phi: f64, k: f64, p_min: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::contract(format!("phi {phi} outside [0, 1]")));
    }
    if k <= 0.0 {
        return Err(Error::contract(format!("polynomial exponent {k} not > 0")));
    }
    if !(0.0..=1.0).contains(&p_min) {
        return Err(Error::contract(format!("p_min {p_min} outside [0, 1]")));
    }
    // written as (1 - x) + x*p_min so both endpoints are exact in floats
    let x = phi.powf(k);
    Ok(1.0 - x + x * p_min)
}

/// Multiplies per-stage confidences; the empty product is 1.
pub fn compose_confidences(confidences: &[f64]) -> f64 {
    confidences.iter().product()
}

/// A validated piecewise-linear confidence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolatedTable {
    points: Vec<(f64, f64)>,
}

impl InterpolatedTable {
    /// Validates and builds a table: `phi` strictly increasing, first point
    /// `(0, 1.0)`, confidences in `[0, 1]`. A non-monotone confidence
    /// column is legal (measured curves can wiggle) but logged.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::config("mapping table has no points"));
        }
        if points[0] != (0.0, 1.0) {
            return Err(Error::config(format!(
                "mapping table must start at (0, 1.0), got ({}, {})",
                points[0].0, points[0].1
            )));
        }
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::config(format!(
                    "mapping table phi values must be strictly increasing ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
        }
        if let Some((phi, c)) = points
            .iter()
            .find(|(_, c)| !(0.0..=1.0).contains(c))
            .copied()
        {
            return Err(Error::config(format!(
                "mapping table confidence {c} at phi {phi} outside [0, 1]"
            )));
        }
        if points.windows(2).any(|p| p[1].1 > p[0].1) {
            log::warn!("mapping table confidence is not monotone non-increasing");
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Piecewise-linear interpolation; beyond the last measured point the
    /// last confidence is held (clamped, never extrapolated).
    pub fn evaluate(&self, phi: f64) -> f64 {
        let last = *self.points.last().unwrap();
        if phi >= last.0 {
            return last.1;
        }
        let hi = self.points.iter().position(|&(p, _)| p > phi).unwrap();
        let (x0, y0) = self.points[hi - 1];
        let (x1, y1) = self.points[hi];
        y0 + (phi - x0) / (x1 - x0) * (y1 - y0)
    }

    /// Parses the two-column `phi,confidence` file format.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read mapping table {path:?}: {e}")))?;
        Self::from_table_text(&text)
            .map_err(|e| Error::config(format!("mapping table {path:?}: {e}")))
    }

    /// Parses table text; used for both files and embedded presets.
    pub fn from_table_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some(header) if header.eq_ignore_ascii_case("phi,confidence") => {}
            other => {
                return Err(Error::config(format!(
                    "expected header `phi,confidence`, got {other:?}"
                )))
            }
        }
        let mut points = Vec::new();
        for line in lines {
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::config(format!("expected `phi,confidence`, got `{line}`")))?;
            let phi: f64 = a
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("bad phi value `{a}`")))?;
            let conf: f64 = b
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("bad confidence value `{b}`")))?;
            points.push((phi, conf));
        }
        Self::new(points)
    }
}

/// Evaluates a table mapping. `phi` outside `[0, 1]` is a contract error;
/// table validity is established at load time.
pub fn interp_confidence(phi: f64, table: &InterpolatedTable) -> Result<f64> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::contract(format!("phi {phi} outside [0, 1]")));
    }
    Ok(table.evaluate(phi))
}

/// One magnitude-to-confidence function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum ConfidenceMapping {
    Polynomial { k: f64, p_min: f64 },
    InterpolatedTable { table: InterpolatedTable },
    ConstantOne,
}

impl ConfidenceMapping {
    pub fn evaluate(&self, phi: f64) -> Result<f64> {
        match self {
            ConfidenceMapping::Polynomial { k, p_min } => poly_confidence(phi, *k, *p_min),
            ConfidenceMapping::InterpolatedTable { table } => interp_confidence(phi, table),
            ConfidenceMapping::ConstantOne => {
                if !(0.0..=1.0).contains(&phi) {
                    return Err(Error::contract(format!("phi {phi} outside [0, 1]")));
                }
                Ok(1.0)
            }
        }
    }
}

/// Least-squares fit of `(k, p_min)` to a measured confidence table.
///
/// For a fixed exponent the optimal floor has a closed form; the exponent
/// is found by a coarse scan refined over three zoom rounds. Deterministic.
pub fn fit_polynomial(points: &[(f64, f64)]) -> (f64, f64) {
    fn sse_and_pmin(points: &[(f64, f64)], k: f64) -> (f64, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        for &(phi, c) in points {
            let x = phi.powf(k);
            num += x * (1.0 - c);
            den += x * x;
        }
        let beta = if den > 0.0 {
            (num / den).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let p_min = 1.0 - beta;
        let sse = points
            .iter()
            .map(|&(phi, c)| {
                let pred = 1.0 - phi.powf(k) * beta;
                (pred - c) * (pred - c)
            })
            .sum();
        (sse, p_min)
    }

    let mut best_k = 1.0;
    let mut best = (f64::INFINITY, 1.0);
    let mut lo = 0.05;
    let mut hi = 8.0;
    let mut step = 0.05;
    for _ in 0..3 {
        let mut k = lo;
        while k <= hi + 1e-12 {
            let cand = sse_and_pmin(points, k);
            if cand.0 < best.0 {
                best = cand;
                best_k = k;
            }
            k += step;
        }
        lo = (best_k - step).max(1e-3);
        hi = best_k + step;
        step /= 10.0;
    }
    (best_k, best.1)
}

/// The built-in profile presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingPreset {
    /// `k=2, p_min = 1/classes`: smoothing floored at random guessing.
    PolyChance,
    /// `k=2, p_min = 0.7`: mean smoothing mass 0.1 under uniform magnitude.
    Poly07,
    /// `k=2, p_min = 0.3`: the noise-injection curve.
    PolyNoise,
    /// Per-kind polynomial fitted to the vision-study or proxy-model table.
    KEst,
    /// Vision-study tables where available, constant-one otherwise.
    Hvs,
    /// Proxy-model accuracy tables for all variable-magnitude kinds.
    ModelAccuracy,
}

impl MappingPreset {
    pub const ALL: [MappingPreset; 6] = [
        MappingPreset::PolyChance,
        MappingPreset::Poly07,
        MappingPreset::PolyNoise,
        MappingPreset::KEst,
        MappingPreset::Hvs,
        MappingPreset::ModelAccuracy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MappingPreset::PolyChance => "poly-chance",
            MappingPreset::Poly07 => "poly-0.7",
            MappingPreset::PolyNoise => "poly-noise",
            MappingPreset::KEst => "k-est",
            MappingPreset::Hvs => "hvs",
            MappingPreset::ModelAccuracy => "model-accuracy",
        }
    }
}

impl FromStr for MappingPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MappingPreset::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config(format!("unknown mapping preset `{s}`")))
    }
}

/// Bundled example tables. These are illustrative digitized approximations
/// of published accuracy curves, shipped as editable data files and
/// embedded here so the presets work without any setup.
mod tables {
    pub const HVS_ROTATION: &str = include_str!("../data/hvs/rotation.csv");
    pub const HVS_OCCLUSION: &str = include_str!("../data/hvs/occlusion.csv");
    pub const HVS_CONTRAST: &str = include_str!("../data/hvs/contrast.csv");

    pub const MODEL_ACCURACY: [(&str, &str); 11] = [
        ("rotate", include_str!("../data/model_accuracy/rotate.csv")),
        ("shear-x", include_str!("../data/model_accuracy/shear-x.csv")),
        ("shear-y", include_str!("../data/model_accuracy/shear-y.csv")),
        (
            "translate-x",
            include_str!("../data/model_accuracy/translate-x.csv"),
        ),
        (
            "translate-y",
            include_str!("../data/model_accuracy/translate-y.csv"),
        ),
        (
            "brightness",
            include_str!("../data/model_accuracy/brightness.csv"),
        ),
        (
            "contrast",
            include_str!("../data/model_accuracy/contrast.csv"),
        ),
        (
            "sharpness",
            include_str!("../data/model_accuracy/sharpness.csv"),
        ),
        ("color", include_str!("../data/model_accuracy/color.csv")),
        (
            "posterize",
            include_str!("../data/model_accuracy/posterize.csv"),
        ),
        (
            "solarize",
            include_str!("../data/model_accuracy/solarize.csv"),
        ),
    ];
}

/// The vision-study table covering a given kind, if one exists: rotation
/// data covers rotation and shear, occlusion data covers translation, and
/// contrast data covers brightness and contrast.
fn hvs_table_text(kind: TransformKind) -> Option<&'static str> {
    match kind {
        TransformKind::Rotate | TransformKind::ShearX | TransformKind::ShearY => {
            Some(tables::HVS_ROTATION)
        }
        TransformKind::TranslateX | TransformKind::TranslateY => Some(tables::HVS_OCCLUSION),
        TransformKind::Brightness | TransformKind::Contrast => Some(tables::HVS_CONTRAST),
        _ => None,
    }
}

fn model_accuracy_table_text(kind: TransformKind) -> Result<&'static str> {
    tables::MODEL_ACCURACY
        .iter()
        .find(|(name, _)| *name == kind.name())
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            Error::config(format!(
                "preset requires a proxy-model accuracy table for kind `{}` and none is bundled",
                kind.name()
            ))
        })
}

/// A complete per-kind assignment of confidence mappings.
#[derive(Debug, Clone)]
pub struct MappingProfile {
    mappings: HashMap<TransformKind, ConfidenceMapping>,
    chance: f64,
}

impl MappingProfile {
    /// Builds a preset profile for a dataset with `class_count` classes.
    ///
    /// Polynomial presets assign their curve to every variable-magnitude
    /// kind. Table presets assign tables to the TrivialAugment kinds and
    /// fall back to `k=2, p_min=chance` for erasing/cropping and
    /// `k=2, p_min=0.3` for the noise injections. Equalize, auto-contrast,
    /// identity and horizontal flip are always constant-one.
    pub fn preset(preset: MappingPreset, class_count: usize) -> Result<Self> {
        if class_count < 2 {
            return Err(Error::config(format!(
                "class count {class_count} must be at least 2"
            )));
        }
        let chance = 1.0 / class_count as f64;
        let mut mappings = HashMap::new();

        let uniform_poly = |p_min: f64| ConfidenceMapping::Polynomial { k: 2.0, p_min };
        let erase_default = uniform_poly(chance);
        let noise_default = uniform_poly(0.3);

        for kind in TransformKind::ALL {
            let mapping = if PINNED_CONSTANT_ONE.contains(&kind) {
                ConfidenceMapping::ConstantOne
            } else {
                match preset {
                    MappingPreset::PolyChance => uniform_poly(chance),
                    MappingPreset::Poly07 => uniform_poly(0.7),
                    MappingPreset::PolyNoise => uniform_poly(0.3),
                    MappingPreset::Hvs | MappingPreset::ModelAccuracy | MappingPreset::KEst => {
                        match kind {
                            TransformKind::RandomErase | TransformKind::RandomCrop => {
                                erase_default.clone()
                            }
                            TransformKind::GaussianNoise | TransformKind::PatchGaussianNoise => {
                                noise_default.clone()
                            }
                            _ => Self::preset_ta_mapping(preset, kind)?,
                        }
                    }
                }
            };
            mappings.insert(kind, mapping);
        }
        Ok(Self { mappings, chance })
    }

    fn preset_ta_mapping(preset: MappingPreset, kind: TransformKind) -> Result<ConfidenceMapping> {
        match preset {
            MappingPreset::Hvs => match hvs_table_text(kind) {
                Some(text) => Ok(ConfidenceMapping::InterpolatedTable {
                    table: InterpolatedTable::from_table_text(text)?,
                }),
                // no vision-study data: no smoothing
                None => Ok(ConfidenceMapping::ConstantOne),
            },
            MappingPreset::ModelAccuracy => Ok(ConfidenceMapping::InterpolatedTable {
                table: InterpolatedTable::from_table_text(model_accuracy_table_text(kind)?)?,
            }),
            MappingPreset::KEst => {
                let text = match hvs_table_text(kind) {
                    Some(text) => text,
                    None => model_accuracy_table_text(kind)?,
                };
                let table = InterpolatedTable::from_table_text(text)?;
                let (k, p_min) = fit_polynomial(table.points());
                Ok(ConfidenceMapping::Polynomial { k, p_min })
            }
            _ => unreachable!("polynomial presets handled by caller"),
        }
    }

    /// Loads a profile from a manifest file (see the module docs for the
    /// format). Kinds not listed stay unassigned and fail pipeline
    /// validation if a stage needs them.
    pub fn from_manifest_file(path: &Path, class_count: usize) -> Result<Self> {
        if class_count < 2 {
            return Err(Error::config(format!(
                "class count {class_count} must be at least 2"
            )));
        }
        let chance = 1.0 / class_count as f64;
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read profile manifest {path:?}: {e}")))?;
        let base = path.parent().unwrap_or(Path::new("."));

        let mut mappings = HashMap::new();
        for kind in PINNED_CONSTANT_ONE {
            mappings.insert(kind, ConfidenceMapping::ConstantOne);
        }
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!(
                    "{path:?}:{}: expected `kind = mapping`",
                    lineno + 1
                ))
            })?;
            let kind: TransformKind = key.trim().parse().map_err(|_| {
                Error::config(format!(
                    "{path:?}:{}: unknown transform kind `{}`",
                    lineno + 1,
                    key.trim()
                ))
            })?;
            let mapping = Self::parse_mapping(value.trim(), base, chance).map_err(|e| {
                Error::config(format!("{path:?}:{}: {e}", lineno + 1))
            })?;
            if PINNED_CONSTANT_ONE.contains(&kind)
                && mapping != ConfidenceMapping::ConstantOne
            {
                return Err(Error::config(format!(
                    "{path:?}:{}: kind `{kind}` is pinned to constant-one and cannot be remapped",
                    lineno + 1
                )));
            }
            mappings.insert(kind, mapping);
        }
        Ok(Self { mappings, chance })
    }

    fn parse_mapping(value: &str, base: &Path, chance: f64) -> Result<ConfidenceMapping> {
        let mut parts = value.split_whitespace();
        match parts.next() {
            Some("one") => Ok(ConfidenceMapping::ConstantOne),
            Some("table") => {
                let rel = parts
                    .next()
                    .ok_or_else(|| Error::config("`table` needs a file path"))?;
                let path = base.join(rel);
                Ok(ConfidenceMapping::InterpolatedTable {
                    table: InterpolatedTable::from_file(&path)?,
                })
            }
            Some("poly") => {
                let k: f64 = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::config("`poly` needs a numeric exponent"))?;
                let p_min_raw = parts
                    .next()
                    .ok_or_else(|| Error::config("`poly` needs a p_min value or `chance`"))?;
                let p_min = if p_min_raw == "chance" {
                    chance
                } else {
                    p_min_raw
                        .parse()
                        .map_err(|_| Error::config(format!("bad p_min `{p_min_raw}`")))?
                };
                if k <= 0.0 || !(0.0..=1.0).contains(&p_min) {
                    return Err(Error::config(format!(
                        "poly parameters k={k}, p_min={p_min} out of range"
                    )));
                }
                Ok(ConfidenceMapping::Polynomial { k, p_min })
            }
            other => Err(Error::config(format!(
                "unknown mapping form {other:?} (expected `one`, `table` or `poly`)"
            ))),
        }
    }

    /// Random-guessing accuracy, `1 / class_count`.
    pub fn chance(&self) -> f64 {
        self.chance
    }

    pub fn has(&self, kind: TransformKind) -> bool {
        self.mappings.contains_key(&kind)
    }

    pub fn mapping(&self, kind: TransformKind) -> Option<&ConfidenceMapping> {
        self.mappings.get(&kind)
    }

    /// Overrides a single kind's mapping (e.g. to switch smoothing off for
    /// all but a few kinds). Pinned kinds cannot be reassigned.
    pub fn set(&mut self, kind: TransformKind, mapping: ConfidenceMapping) -> Result<()> {
        if PINNED_CONSTANT_ONE.contains(&kind) && mapping != ConfidenceMapping::ConstantOne {
            return Err(Error::config(format!(
                "kind `{kind}` is pinned to constant-one and cannot be remapped"
            )));
        }
        self.mappings.insert(kind, mapping);
        Ok(())
    }

    /// Target confidence for one realized transform.
    pub fn confidence(&self, kind: TransformKind, phi: f64) -> Result<f64> {
        let mapping = self.mappings.get(&kind).ok_or_else(|| {
            Error::config(format!("mapping profile has no entry for kind `{kind}`"))
        })?;
        mapping.evaluate(phi)
    }
}

/// Where a profile comes from: a named preset or a manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "source", content = "value")]
pub enum ProfileSource {
    Preset(MappingPreset),
    File(PathBuf),
}

impl FromStr for ProfileSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(ProfileSource::File(PathBuf::from(path)));
        }
        s.parse().map(ProfileSource::Preset)
    }
}

/// Resolves a profile source against a class count.
pub fn load_mapping_profile(source: &ProfileSource, class_count: usize) -> Result<MappingProfile> {
    match source {
        ProfileSource::Preset(p) => MappingProfile::preset(*p, class_count),
        ProfileSource::File(path) => MappingProfile::from_manifest_file(path, class_count),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn poly_endpoints_and_midpoint() {
        assert_eq!(poly_confidence(0.0, 2.0, 0.3).unwrap(), 1.0);
        assert_eq!(poly_confidence(1.0, 2.0, 0.7).unwrap(), 0.7);
        assert_eq!(poly_confidence(0.5, 2.0, 0.1).unwrap(), 1.0 - 0.25 * 0.9);
        assert!(poly_confidence(1.2, 2.0, 0.5).is_err());
        assert!(poly_confidence(0.5, 0.0, 0.5).is_err());
    }

    #[test]
    fn poly_is_monotone_non_increasing() {
        let mut prev = f64::INFINITY;
        for i in 0..=100 {
            let phi = i as f64 / 100.0;
            let p = poly_confidence(phi, 2.0, 0.3).unwrap();
            assert!(p <= prev + 1e-15);
            prev = p;
        }
    }

    #[test]
    fn interpolation_and_clamping() {
        let table = InterpolatedTable::new(vec![(0.0, 1.0), (1.0, 0.3)]).unwrap();
        assert!((interp_confidence(0.5, &table).unwrap() - 0.65).abs() < 1e-12);
        assert_eq!(interp_confidence(0.0, &table).unwrap(), 1.0);

        let short = InterpolatedTable::new(vec![(0.0, 1.0), (0.6, 0.8)]).unwrap();
        assert_eq!(interp_confidence(0.9, &short).unwrap(), 0.8);
    }

    #[test]
    fn table_validation() {
        assert!(InterpolatedTable::new(vec![]).is_err());
        assert!(InterpolatedTable::new(vec![(0.0, 0.9)]).is_err());
        assert!(InterpolatedTable::new(vec![(0.0, 1.0), (0.5, 0.9), (0.5, 0.8)]).is_err());
        assert!(InterpolatedTable::new(vec![(0.0, 1.0), (0.5, 1.2)]).is_err());
    }

    #[test]
    fn table_text_parsing() {
        let table =
            InterpolatedTable::from_table_text("# note\nphi,confidence\n0,1.0\n0.5, 0.9\n1, 0.4\n")
                .unwrap();
        assert_eq!(table.points().len(), 3);
        assert!(InterpolatedTable::from_table_text("0,1.0\n1,0.4\n").is_err());
    }

    #[test]
    fn composition_is_a_product_with_identity() {
        assert_eq!(compose_confidences(&[]), 1.0);
        assert!((compose_confidences(&[0.9, 0.8]) - 0.72).abs() < 1e-15);
        for p in [0.0, 0.123, 0.5, 1.0] {
            assert_eq!(compose_confidences(&[1.0, p]), p);
        }
    }

    #[test]
    fn preset_poly07_mean_smoothing_mass() {
        let profile = MappingProfile::preset(MappingPreset::Poly07, 10).unwrap();
        let mut rng = crate::rng::derived_stream(41, 0);
        let n = 200_000;
        let mut total = 0.0;
        for _ in 0..n {
            let phi: f64 = rng.random();
            total += 1.0 - profile.confidence(TransformKind::Rotate, phi).unwrap();
        }
        let mean = total / n as f64;
        assert!((mean - 0.1).abs() < 0.002, "mean smoothing mass {mean}");
    }

    #[test]
    fn preset_hvs_has_no_smoothing_for_sharpness() {
        let profile = MappingProfile::preset(MappingPreset::Hvs, 10).unwrap();
        for phi in [0.0, 0.3, 1.0] {
            assert_eq!(
                profile.confidence(TransformKind::Sharpness, phi).unwrap(),
                1.0
            );
        }
        // but rotation does smooth
        assert!(profile.confidence(TransformKind::Rotate, 1.0).unwrap() < 1.0);
    }

    #[test]
    fn preset_poly_chance_floors_at_chance() {
        let profile = MappingProfile::preset(MappingPreset::PolyChance, 10).unwrap();
        assert_eq!(
            profile.confidence(TransformKind::Rotate, 1.0).unwrap(),
            0.1
        );
    }

    #[test]
    fn all_presets_cover_all_kinds_with_mapping_of_zero_one() {
        for preset in MappingPreset::ALL {
            let profile = MappingProfile::preset(preset, 10).unwrap();
            for kind in TransformKind::ALL {
                assert!(profile.has(kind), "{} missing {kind}", preset.name());
                assert_eq!(
                    profile.confidence(kind, 0.0).unwrap(),
                    1.0,
                    "{} {kind} at phi 0",
                    preset.name()
                );
            }
        }
    }

    #[test]
    fn pinned_kinds_resist_override() {
        let mut profile = MappingProfile::preset(MappingPreset::Poly07, 10).unwrap();
        assert!(profile
            .set(
                TransformKind::Identity,
                ConfidenceMapping::Polynomial { k: 2.0, p_min: 0.5 }
            )
            .is_err());
        assert!(profile
            .set(TransformKind::Rotate, ConfidenceMapping::ConstantOne)
            .is_ok());
    }

    #[test]
    fn profile_manifest_file_loads_tables_and_polys() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("tables")).unwrap();
        std::fs::write(
            dir.path().join("tables/rotate.csv"),
            "phi,confidence\n0,1.0\n1,0.5\n",
        )
        .unwrap();
        let manifest = dir.path().join("profile.txt");
        std::fs::write(
            &manifest,
            "# custom profile\n\
             rotate = table tables/rotate.csv\n\
             sharpness = poly 2 0.7\n\
             random-erase = poly 2 chance\n\
             solarize = one\n",
        )
        .unwrap();

        let profile = MappingProfile::from_manifest_file(&manifest, 10).unwrap();
        assert_eq!(profile.confidence(TransformKind::Rotate, 0.5).unwrap(), 0.75);
        assert_eq!(
            profile.confidence(TransformKind::Sharpness, 1.0).unwrap(),
            0.7
        );
        assert_eq!(
            profile.confidence(TransformKind::RandomErase, 1.0).unwrap(),
            0.1
        );
        assert_eq!(profile.confidence(TransformKind::Solarize, 0.9).unwrap(), 1.0);
        // pinned kinds come for free
        assert_eq!(profile.confidence(TransformKind::Identity, 0.0).unwrap(), 1.0);
        // unlisted kinds stay unassigned
        assert!(!profile.has(TransformKind::Posterize));
    }

    #[test]
    fn profile_manifest_file_rejects_bad_entries() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("profile.txt");

        std::fs::write(&manifest, "rotate = table missing.csv\n").unwrap();
        assert!(MappingProfile::from_manifest_file(&manifest, 10).is_err());

        std::fs::write(&manifest, "identity = poly 2 0.5\n").unwrap();
        assert!(MappingProfile::from_manifest_file(&manifest, 10).is_err());

        std::fs::write(&manifest, "swirl = one\n").unwrap();
        match MappingProfile::from_manifest_file(&manifest, 10) {
            Err(Error::Config(msg)) => assert!(msg.contains("swirl"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn fit_recovers_known_polynomial() {
        let points: Vec<(f64, f64)> = (0..=30)
            .map(|i| {
                let phi = i as f64 / 30.0;
                (phi, 1.0 - phi.powf(3.0) * 0.6)
            })
            .collect();
        let (k, p_min) = fit_polynomial(&points);
        assert!((k - 3.0).abs() < 0.01, "fitted k {k}");
        assert!((p_min - 0.4).abs() < 0.01, "fitted p_min {p_min}");
    }

    #[test]
    fn expected_smoothing_matches_closed_form() {
        // E[phi^k] under uniform phi is 1/(k+1)
        for (k, p_min) in [(2.0, 0.7), (1.0, 0.0), (3.5, 0.25)] {
            let mut rng = crate::rng::derived_stream(42, (k * 10.0) as u64);
            let n = 1_000_000;
            let mut total = 0.0;
            for _ in 0..n {
                let phi: f64 = rng.random();
                total += 1.0 - poly_confidence(phi, k, p_min).unwrap();
            }
            let mean = total / n as f64;
            let expected = (1.0 - p_min) / (k + 1.0);
            assert!(
                (mean - expected).abs() / expected.max(1e-9) < 0.005,
                "k={k} p_min={p_min}: {mean} vs {expected}"
            );
        }
    }
}
