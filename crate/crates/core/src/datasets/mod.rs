//! Dataset ingestion, augmented-output persistence and the
//! corruption-robustness evaluator.

mod manifest;
mod robustness;

pub use manifest::{
    read_manifest, write_manifest, ImageSink, ManifestRecord, ManifestSummary, ManifestWriter,
    NullSink, PngSink, StageEntry, MANIFEST_HEADER,
};
pub use robustness::{
    eval_robustness, parse_prediction_file, CellAccuracy, PredictionRow, RobustnessReport,
    DEFAULT_CORRUPTIONS,
};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CifarVariant {
    Cifar10,
    Cifar100,
}

impl CifarVariant {
    /// Bytes per record: label byte(s) plus 32*32*3 planar pixels.
    fn record_size(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 3073,
            CifarVariant::Cifar100 => 3074,
        }
    }

    fn class_count(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 10,
            CifarVariant::Cifar100 => 100,
        }
    }
}

#[derive(Debug)]
enum Source {
    Cifar {
        variant: CifarVariant,
        data: Vec<u8>,
    },
    Folder {
        entries: Vec<(PathBuf, usize)>,
        class_names: Vec<String>,
    },
}

/// A readable dataset: every sample yields an image and a class index.
/// Reads are lock-free and safe to issue from many threads.
#[derive(Debug)]
pub struct DatasetHandle {
    source: Source,
    class_count: usize,
}

impl DatasetHandle {
    pub fn len(&self) -> u64 {
        match &self.source {
            Source::Cifar { variant, data } => (data.len() / variant.record_size()) as u64,
            Source::Folder { entries, .. } => entries.len() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Class names for folder datasets (directory names); CIFAR datasets
    /// use bare indices.
    pub fn class_name(&self, class: usize) -> String {
        match &self.source {
            Source::Folder { class_names, .. } if class < class_names.len() => {
                class_names[class].clone()
            }
            _ => class.to_string(),
        }
    }

    /// Decodes one sample. CIFAR access cannot fail (validated at load);
    /// folder images decode lazily and may fail per sample.
    pub fn get(&self, index: u64) -> Result<(Image, usize)> {
        match &self.source {
            Source::Cifar { variant, data } => {
                let record = variant.record_size();
                let offset = index as usize * record;
                if offset + record > data.len() {
                    return Err(Error::contract(format!(
                        "sample index {index} out of range for {} records",
                        self.len()
                    )));
                }
                let label = match variant {
                    CifarVariant::Cifar10 => data[offset] as usize,
                    // coarse label first, fine label second; we use fine
                    CifarVariant::Cifar100 => data[offset + 1] as usize,
                };
                let pixels = &data[offset + record - 3072..offset + record];
                // channel-planar R,G,B -> interleaved row-major
                let mut rgb = vec![0u8; 3072];
                for i in 0..1024 {
                    rgb[i * 3] = pixels[i];
                    rgb[i * 3 + 1] = pixels[1024 + i];
                    rgb[i * 3 + 2] = pixels[2048 + i];
                }
                Ok((Image::new(32, 32, 3, rgb)?, label))
            }
            Source::Folder { entries, .. } => {
                let (path, label) = entries.get(index as usize).ok_or_else(|| {
                    Error::contract(format!(
                        "sample index {index} out of range for {} entries",
                        entries.len()
                    ))
                })?;
                let decoded = image::open(path)
                    .map_err(|e| Error::format(path.clone(), format!("cannot decode: {e}")))?;
                let img = match decoded {
                    image::DynamicImage::ImageLuma8(gray) => {
                        let (w, h) = gray.dimensions();
                        Image::new(w, h, 1, gray.into_raw())?
                    }
                    other => {
                        let rgb = other.to_rgb8();
                        let (w, h) = rgb.dimensions();
                        Image::new(w, h, 3, rgb.into_raw())?
                    }
                };
                Ok((img, *label))
            }
        }
    }
}

/// Loads CIFAR binary data from a single `.bin` file or a directory of
/// them (sorted by name). Record layout: one label byte (CIFAR-10) or
/// coarse+fine label bytes (CIFAR-100), then 3072 channel-planar pixels.
pub fn load_cifar(path: &Path, variant: CifarVariant) -> Result<DatasetHandle> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut bins: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|ext| ext == "bin"))
            .collect();
        bins.sort();
        if bins.is_empty() {
            return Err(Error::format(path, "directory contains no .bin files"));
        }
        bins
    } else {
        vec![path.to_path_buf()]
    };

    let record = variant.record_size();
    let mut data = Vec::new();
    for file in &files {
        let bytes = std::fs::read(file)?;
        if bytes.len() % record != 0 {
            let offset = bytes.len() / record * record;
            return Err(Error::format(
                file,
                format!(
                    "length {} is not a multiple of the {record}-byte record size \
                     (partial record starts at byte offset {offset})",
                    bytes.len()
                ),
            ));
        }
        data.extend_from_slice(&bytes);
    }

    // validate all labels up front so per-sample reads cannot fail
    let class_count = variant.class_count();
    for (i, chunk) in data.chunks_exact(record).enumerate() {
        let label = match variant {
            CifarVariant::Cifar10 => chunk[0] as usize,
            CifarVariant::Cifar100 => chunk[1] as usize,
        };
        if label >= class_count {
            return Err(Error::format(
                path,
                format!("record {i}: label {label} out of range for {class_count} classes"),
            ));
        }
    }

    Ok(DatasetHandle {
        source: Source::Cifar { variant, data },
        class_count,
    })
}

/// Loads a class-per-directory image folder. Class indices follow sorted
/// directory names; files within a class are sorted, so ordering is
/// deterministic. Empty class directories are kept (with a warning).
pub fn load_image_folder(path: &Path) -> Result<DatasetHandle> {
    if !path.is_dir() {
        return Err(Error::format(path, "not a directory"));
    }
    let mut class_dirs: Vec<PathBuf> = std::fs::read_dir(path)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();

    let mut entries = Vec::new();
    let mut class_names = Vec::new();
    for (class, dir) in class_dirs.iter().enumerate() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        if files.is_empty() {
            log::warn!("class directory {dir:?} contains no files");
        }
        class_names.push(
            dir.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| class.to_string()),
        );
        entries.extend(files.into_iter().map(|f| (f, class)));
    }

    Ok(DatasetHandle {
        class_count: class_names.len(),
        source: Source::Folder {
            entries,
            class_names,
        },
    })
}

/// Saves an image as a lossless PNG.
pub fn save_png(img: &Image, path: &Path) -> Result<()> {
    let result = match img.channels() {
        1 => image::GrayImage::from_raw(img.width(), img.height(), img.data().to_vec())
            .expect("buffer length validated by Image")
            .save_with_format(path, image::ImageFormat::Png),
        _ => image::RgbImage::from_raw(img.width(), img.height(), img.data().to_vec())
            .expect("buffer length validated by Image")
            .save_with_format(path, image::ImageFormat::Png),
    };
    result.map_err(|e| Error::Io(std::io::Error::other(format!("saving {path:?}: {e}"))))
}
