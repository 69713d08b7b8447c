//! The `curves` subcommand: derive confidence-mapping tables from image
//! similarity metrics.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use softaug::simmetrics::{build_curve, MappingCurve, MetricKind};
use softaug::transforms::{TaRanges, TransformKind};

use crate::args::DatasetSpec;

#[derive(Debug, clap::Args)]
pub struct CurvesArgs {
    /// Dataset supplying the sample images.
    #[arg(long)]
    dataset: DatasetSpec,
    /// Comma-separated transform kinds (e.g. `rotate,shear-x,solarize`).
    #[arg(long)]
    kinds: String,
    /// Comma-separated metrics (`ssim`, `ncc`, `scc`, `uiq`, `sift`).
    #[arg(long)]
    metrics: String,
    /// Magnitude bins to evaluate.
    #[arg(long, default_value_t = 31)]
    bins: usize,
    /// Image pairs per bin.
    #[arg(long, default_value_t = 500)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the mapping-table files.
    #[arg(long)]
    out: PathBuf,
    /// Cap on how many sample images to load.
    #[arg(long, default_value_t = 1000)]
    limit: u64,
    /// Also write `.dat` plot data with magnitudes in natural units.
    #[arg(long)]
    plot_data: bool,
}

pub fn run(args: CurvesArgs) -> anyhow::Result<()> {
    let kinds: Vec<TransformKind> = args
        .kinds
        .split(',')
        .map(|s| s.trim().parse().context("invalid --kinds entry"))
        .collect::<anyhow::Result<_>>()?;
    let metrics: Vec<MetricKind> = args
        .metrics
        .split(',')
        .map(|s| s.trim().parse().context("invalid --metrics entry"))
        .collect::<anyhow::Result<_>>()?;

    // fail fast on incompatible pairs before loading anything
    for &kind in &kinds {
        for &metric in &metrics {
            if !metric.compatible_with(kind) {
                bail!(softaug::Error::config(format!(
                    "metric `{metric}` is incompatible with transform `{kind}`"
                )));
            }
        }
    }

    let dataset = args.dataset.load()?;
    if dataset.is_empty() {
        bail!(softaug::Error::config("dataset has no samples"));
    }
    let chance = 1.0 / dataset.class_count() as f64;
    let count = dataset.len().min(args.limit);
    let images: Vec<softaug::Image> = (0..count)
        .map(|i| dataset.get(i).map(|(img, _)| img))
        .collect::<softaug::Result<_>>()?;

    std::fs::create_dir_all(&args.out)?;
    for &kind in &kinds {
        for &metric in &metrics {
            let curve = build_curve(
                &images, kind, metric, args.bins, args.pairs, args.seed, chance,
            )?;
            let table_path = args.out.join(format!("{kind}_{metric}.csv"));
            curve.write_table_file(&table_path)?;
            println!("wrote {}", table_path.display());
            if args.plot_data {
                let dat_path = args.out.join(format!("{kind}_{metric}.dat"));
                write_plot_data(&curve, &dat_path)?;
                println!("wrote {}", dat_path.display());
            }
        }
    }
    Ok(())
}

/// Two-column plot data: magnitude in natural units against the mean
/// rescaled score.
fn write_plot_data(curve: &MappingCurve, path: &std::path::Path) -> anyhow::Result<()> {
    let ranges = TaRanges::default();
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "# {} vs {}", magnitude_label(curve.kind), curve.metric)?;
    for &(phi, score) in &curve.points {
        writeln!(file, "{} {score}", natural_magnitude(curve.kind, phi, &ranges))?;
    }
    Ok(())
}

fn magnitude_label(kind: TransformKind) -> &'static str {
    match kind {
        TransformKind::Rotate => "rotation degrees",
        TransformKind::ShearX | TransformKind::ShearY => "shear factor",
        TransformKind::TranslateX | TransformKind::TranslateY => "translation fraction",
        TransformKind::Posterize => "bits dropped",
        TransformKind::Solarize => "inversion threshold",
        TransformKind::Brightness
        | TransformKind::Contrast
        | TransformKind::Sharpness
        | TransformKind::Color => "enhancement delta",
        _ => "magnitude",
    }
}

fn natural_magnitude(kind: TransformKind, phi: f64, ranges: &TaRanges) -> f64 {
    match kind {
        TransformKind::Rotate => phi * ranges.rotate_max_degrees,
        TransformKind::ShearX | TransformKind::ShearY => phi * ranges.shear_max_factor,
        TransformKind::TranslateX | TransformKind::TranslateY => {
            phi * ranges.translate_max_fraction
        }
        TransformKind::Posterize => (phi * (8 - ranges.posterize_min_bits) as f64).round(),
        TransformKind::Solarize => 255.0 * (1.0 - phi),
        TransformKind::Brightness
        | TransformKind::Contrast
        | TransformKind::Sharpness
        | TransformKind::Color => phi * ranges.enhance_max_delta,
        _ => phi,
    }
}
