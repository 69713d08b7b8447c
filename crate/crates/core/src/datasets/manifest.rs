//! Line-delimited augmentation manifests.
//!
//! A manifest starts with a versioned header line followed by one JSON
//! record per sample. Records carry the label compactly as
//! `(true_class, confidence)`; the dense soft-label vector is derivable on
//! demand. Images go to an [`ImageSink`], normally a PNG directory.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::labels::SoftLabel;
use crate::pipeline::AugmentationRecord;
use crate::transforms::{TransformKind, TransformParams};

pub const MANIFEST_HEADER: &str = "#softaug-manifest v1";

/// Marker file written next to a manifest that was aborted mid-run.
const PARTIAL_MARKER: &str = "PARTIAL";

/// One applied stage as persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    pub kind: TransformKind,
    pub phi: f64,
    pub confidence: f64,
    pub params: TransformParams,
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub sample_id: u64,
    pub image: String,
    pub true_class: usize,
    pub class_count: usize,
    pub confidence: f64,
    pub loss_weight: f64,
    pub stages: Vec<StageEntry>,
    pub rng_seed: u64,
    pub rng_sample_index: u64,
}

impl ManifestRecord {
    pub fn from_record(record: &AugmentationRecord, image_path: String) -> Self {
        let stages = record
            .applied
            .iter()
            .zip(&record.stage_confidences)
            .map(|(spec, &confidence)| StageEntry {
                kind: spec.kind,
                phi: spec.phi,
                confidence,
                params: spec.params,
            })
            .collect();
        Self {
            sample_id: record.sample_id,
            image: image_path,
            true_class: record.soft_label.true_class,
            class_count: record.soft_label.class_count,
            confidence: record.composed_confidence,
            loss_weight: record.loss_weight,
            stages,
            rng_seed: record.rng_seed,
            rng_sample_index: record.rng_sample_index,
        }
    }

    /// Rebuilds the soft label this record encodes.
    pub fn soft_label(&self) -> Result<SoftLabel> {
        let mut label =
            crate::labels::soft_target(self.true_class, self.class_count, self.confidence)?;
        label.loss_weight = self.loss_weight;
        Ok(label)
    }
}

/// Where augmented images go.
pub trait ImageSink {
    /// Persists one image, returning the path to record in the manifest
    /// (relative to the manifest's directory).
    fn write(&mut self, sample_id: u64, image: &Image) -> Result<String>;
}

/// Writes `images/NNNNNN.png` under a root directory.
pub struct PngSink {
    root: PathBuf,
}

impl PngSink {
    pub fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root.join("images"))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }
}

impl ImageSink for PngSink {
    fn write(&mut self, sample_id: u64, image: &Image) -> Result<String> {
        let rel = format!("images/{sample_id:06}.png");
        super::save_png(image, &self.root.join(&rel))?;
        Ok(rel)
    }
}

/// Names image paths without writing anything; for dry runs and tests.
pub struct NullSink;

impl ImageSink for NullSink {
    fn write(&mut self, sample_id: u64, _image: &Image) -> Result<String> {
        Ok(format!("images/{sample_id:06}.png"))
    }
}

/// Streaming manifest writer.
pub struct ManifestWriter {
    out: BufWriter<File>,
    path: PathBuf,
    count: u64,
    confidence_sum: f64,
    kind_counts: Vec<(TransformKind, u64)>,
}

impl ManifestWriter {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{MANIFEST_HEADER}")?;
        Ok(Self {
            out,
            path: path.to_path_buf(),
            count: 0,
            confidence_sum: 0.0,
            kind_counts: Vec::new(),
        })
    }

    pub fn write(&mut self, record: &ManifestRecord) -> Result<()> {
        let line = serde_json::to_string(record)
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        writeln!(self.out, "{line}")?;
        self.count += 1;
        self.confidence_sum += record.confidence;
        for stage in &record.stages {
            if stage_applied(stage) {
                match self.kind_counts.iter_mut().find(|(k, _)| *k == stage.kind) {
                    Some((_, n)) => *n += 1,
                    None => self.kind_counts.push((stage.kind, 1)),
                }
            }
        }
        Ok(())
    }

    /// Marks the output directory as incomplete; called on abort.
    pub fn mark_partial(&mut self, reason: &str) -> Result<()> {
        let marker = self
            .path
            .parent()
            .unwrap_or(Path::new("."))
            .join(PARTIAL_MARKER);
        std::fs::write(marker, format!("{reason}\n"))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<ManifestSummary> {
        self.out.flush()?;
        let mut kind_counts = self.kind_counts;
        kind_counts.sort_by_key(|(k, _)| k.name());
        Ok(ManifestSummary {
            samples: self.count,
            mean_confidence: if self.count == 0 {
                1.0
            } else {
                self.confidence_sum / self.count as f64
            },
            kind_counts,
        })
    }
}

/// Whether a stage entry represents an actual image modification (no-op
/// probabilistic stages are recorded but not counted).
fn stage_applied(stage: &StageEntry) -> bool {
    match stage.params {
        TransformParams::Flip { applied } => applied,
        TransformParams::None => matches!(
            stage.kind,
            TransformKind::Equalize | TransformKind::AutoContrast
        ),
        _ => stage.phi > 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestSummary {
    pub samples: u64,
    pub mean_confidence: f64,
    pub kind_counts: Vec<(TransformKind, u64)>,
}

/// Drains an augmentation stream into a manifest plus an image sink.
/// Aborts on the first stream error, leaving a partial-output marker.
pub fn write_manifest<I>(
    manifest_path: &Path,
    records: I,
    sink: &mut dyn ImageSink,
) -> Result<ManifestSummary>
where
    I: IntoIterator<Item = Result<(Image, AugmentationRecord)>>,
{
    let mut writer = ManifestWriter::create(manifest_path)?;
    for item in records {
        match item {
            Ok((image, record)) => {
                let rel = sink.write(record.sample_id, &image)?;
                writer.write(&ManifestRecord::from_record(&record, rel))?;
            }
            Err(e) => {
                writer.mark_partial(&e.to_string())?;
                return Err(e);
            }
        }
    }
    writer.finish()
}

/// Reads a manifest back, validating the header.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let file = BufReader::new(File::open(path)?);
    let mut lines = file.lines();
    match lines.next() {
        Some(Ok(header)) if header == MANIFEST_HEADER => {}
        other => {
            return Err(Error::format(
                path,
                format!("missing manifest header, got {other:?}"),
            ))
        }
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let record: ManifestRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(path, format!("line {}: {e}", lineno + 2)))?;
        records.push(record);
    }
    Ok(records)
}
