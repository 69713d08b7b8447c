//! Flag-value parsing shared by the subcommands.

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use softaug::datasets::{load_cifar, load_image_folder, CifarVariant, DatasetHandle};
use softaug::pipeline::{PolicyStage, StageKind};
use softaug::transforms::TaRanges;

/// `cifar10:PATH`, `cifar100:PATH` or `folder:PATH`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub kind: String,
    pub path: PathBuf,
}

impl FromStr for DatasetSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (kind, path) = s
            .split_once(':')
            .context("dataset must be `cifar10:PATH`, `cifar100:PATH` or `folder:PATH`")?;
        if !["cifar10", "cifar100", "folder"].contains(&kind) {
            bail!("unknown dataset kind `{kind}` (expected cifar10, cifar100 or folder)");
        }
        Ok(DatasetSpec {
            kind: kind.to_string(),
            path: PathBuf::from(path),
        })
    }
}

impl DatasetSpec {
    pub fn load(&self) -> anyhow::Result<DatasetHandle> {
        if !self.path.exists() {
            bail!("dataset path {:?} does not exist", self.path);
        }
        let handle = match self.kind.as_str() {
            "cifar10" => load_cifar(&self.path, CifarVariant::Cifar10)?,
            "cifar100" => load_cifar(&self.path, CifarVariant::Cifar100)?,
            _ => load_image_folder(&self.path)?,
        };
        Ok(handle)
    }
}

/// Per-stage tuning knobs; combined with the `--stages` list to build the
/// pipeline.
#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct StageParams {
    /// Horizontal flip probability.
    #[arg(long, default_value_t = 0.5)]
    pub flip_prob: f64,
    /// Random-crop padding in pixels.
    #[arg(long, default_value_t = 4)]
    pub crop_pad: u32,
    /// Random-erasing application probability.
    #[arg(long, default_value_t = 0.25)]
    pub re_prob: f64,
    /// Random-erasing area-ratio range, `lo:hi`.
    #[arg(long, default_value = "0.02:0.33", value_parser = parse_range)]
    pub re_area: (f64, f64),
    /// Random-erasing aspect-ratio range, `lo:hi`.
    #[arg(long, default_value = "0.3:3.3", value_parser = parse_range)]
    pub re_aspect: (f64, f64),
    /// Full-image gaussian noise standard deviation.
    #[arg(long, default_value_t = 0.1)]
    pub gauss_sigma: f64,
    /// Patch gaussian noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub pgauss_sigma: f64,
    /// Patch side in pixels; omitted picks 25 (or 50 for inputs of 64 px
    /// and up).
    #[arg(long)]
    pub pgauss_side: Option<u32>,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `lo:hi`, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad number `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad number `{hi}`"))?;
    Ok((lo, hi))
}

/// Parses a `--stages` list such as `flip,rc:soft,ta:soft,re:soft` into
/// pipeline stages, applied in list order. Each entry is a stage name
/// (`flip`, `rc`, `ta`, `re`, `gauss`, `pgauss`) with an optional `:soft`
/// or `:hard` modifier (hard is the default). An empty list is the
/// identity pipeline.
pub fn parse_stages(spec: &str, params: &StageParams) -> anyhow::Result<Vec<PolicyStage>> {
    let mut stages = Vec::new();
    for entry in spec.split(',').map(str::trim) {
        if entry.is_empty() || entry == "none" {
            continue;
        }
        let (name, soft) = match entry.split_once(':') {
            Some((name, "soft")) => (name, true),
            Some((name, "hard")) => (name, false),
            Some((_, other)) => bail!("stage modifier `{other}` must be `soft` or `hard`"),
            None => (entry, false),
        };
        let kind = match name {
            "flip" => StageKind::HorizontalFlip {
                prob: params.flip_prob,
            },
            "rc" => StageKind::RandomCrop {
                padding: params.crop_pad,
            },
            "ta" => StageKind::TrivialAugment {
                ranges: TaRanges::default(),
            },
            "re" => StageKind::RandomErase {
                prob: params.re_prob,
                area_range: params.re_area,
                aspect_range: params.re_aspect,
            },
            "gauss" => StageKind::Gaussian {
                sigma: params.gauss_sigma,
            },
            "pgauss" => StageKind::PatchGaussian {
                sigma: params.pgauss_sigma,
                patch_side: params.pgauss_side,
            },
            other => bail!("unknown stage `{other}` (expected flip, rc, ta, re, gauss, pgauss)"),
        };
        stages.push(PolicyStage { kind, soft });
    }
    Ok(stages)
}

/// `RxC` grid dimensions.
pub fn parse_grid(s: &str) -> Result<(u32, u32), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected `ROWSxCOLS`, got `{s}`"))?;
    let rows: u32 = r.parse().map_err(|_| format!("bad row count `{r}`"))?;
    let cols: u32 = c.parse().map_err(|_| format!("bad column count `{c}`"))?;
    if rows == 0 || cols == 0 {
        return Err("grid must be at least 1x1".to_string());
    }
    Ok((rows, cols))
}
