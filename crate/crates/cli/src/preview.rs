//! The `preview` subcommand: a captioned grid of augmented samples.

use std::path::PathBuf;

use anyhow::Context;
use softaug::confidence::load_mapping_profile;
use softaug::datasets::save_png;
use softaug::pipeline::Pipeline;
use softaug::transforms::{TransformKind, TransformParams};
use softaug::Image;

use crate::args::{parse_grid, parse_stages, DatasetSpec, StageParams};
use crate::font;

const CAPTION_LINES: u32 = 2;
const LINE_HEIGHT: u32 = font::GLYPH_HEIGHT + 2;
const CAPTION_HEIGHT: u32 = CAPTION_LINES * LINE_HEIGHT + 3;
const GAP: u32 = 2;
const BACKGROUND: u8 = 24;
const TEXT_LEVEL: u8 = 230;

#[derive(Debug, clap::Args)]
pub struct PreviewArgs {
    #[arg(long)]
    dataset: DatasetSpec,
    /// Stage list, as for `augment`.
    #[arg(long, default_value = "")]
    stages: String,
    #[arg(long, default_value = "poly-0.7")]
    profile: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid shape, `ROWSxCOLS`.
    #[arg(long, default_value = "2x4", value_parser = parse_grid)]
    grid: (u32, u32),
    /// Integer upscaling factor for the tiles.
    #[arg(long, default_value_t = 2)]
    tile_scale: u32,
    /// Output PNG path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    stage_params: StageParams,
}

/// Confidence rendered to three decimals for captions.
pub fn format_confidence(confidence: f64) -> String {
    format!("{confidence:.3}")
}

pub fn run(args: PreviewArgs) -> anyhow::Result<()> {
    let dataset = args.dataset.load()?;
    if dataset.is_empty() {
        anyhow::bail!(softaug::Error::config("dataset has no samples"));
    }
    let profile_source = args
        .profile
        .parse::<softaug::confidence::ProfileSource>()
        .context("invalid --profile")?;
    let profile = load_mapping_profile(&profile_source, dataset.class_count())?;
    let stages = parse_stages(&args.stages, &args.stage_params)?;
    let pipeline = Pipeline::new(stages, profile, dataset.class_count(), false)?;

    let (rows, cols) = args.grid;
    let tile_count = (rows * cols) as u64;
    if tile_count > dataset.len() {
        log::warn!(
            "grid needs {tile_count} samples but the dataset has {}; repeating",
            dataset.len()
        );
    }

    let mut tiles = Vec::new();
    for i in 0..tile_count {
        let sample_index = i % dataset.len();
        let (img, label) = dataset.get(sample_index)?;
        let (augmented, record) = pipeline.augment_sample(&img, label, args.seed, i)?;
        let kind = record
            .applied
            .iter()
            .find(|spec| spec.kind.is_ta())
            .map(|spec| spec.kind.name())
            .unwrap_or("-");
        let erased = record.applied.iter().any(|spec| {
            spec.kind == TransformKind::RandomErase
                && !matches!(
                    spec.params,
                    TransformParams::Erase { width: 0, .. } | TransformParams::None
                )
        });
        let line1 = format!("{kind} re:{}", if erased { "y" } else { "n" });
        let line2 = format!(
            "{} p={}",
            dataset.class_name(record.soft_label.true_class),
            format_confidence(record.composed_confidence)
        );
        tiles.push((augmented, line1, line2));
    }

    let composite = compose(&tiles, rows, cols, args.tile_scale.max(1));
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    save_png(&composite, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn compose(tiles: &[(Image, String, String)], rows: u32, cols: u32, scale: u32) -> Image {
    let cell_w = tiles.iter().map(|(t, _, _)| t.width()).max().unwrap() * scale;
    let cell_h =
        tiles.iter().map(|(t, _, _)| t.height()).max().unwrap() * scale + CAPTION_HEIGHT;
    let width = cols * cell_w + (cols + 1) * GAP;
    let height = rows * cell_h + (rows + 1) * GAP;
    let mut data = vec![BACKGROUND; (width * height * 3) as usize];

    for (i, (tile, line1, line2)) in tiles.iter().enumerate() {
        let row = i as u32 / cols;
        let col = i as u32 % cols;
        let x0 = GAP + col * (cell_w + GAP);
        let y0 = GAP + row * (cell_h + GAP);

        // nearest-neighbor upscale into the cell
        for ty in 0..tile.height() * scale {
            for tx in 0..tile.width() * scale {
                let sx = tx / scale;
                let sy = ty / scale;
                let idx = (((y0 + ty) * width + x0 + tx) * 3) as usize;
                match tile.channels() {
                    1 => {
                        let v = tile.get(sx, sy, 0);
                        data[idx] = v;
                        data[idx + 1] = v;
                        data[idx + 2] = v;
                    }
                    _ => {
                        data[idx] = tile.get(sx, sy, 0);
                        data[idx + 1] = tile.get(sx, sy, 1);
                        data[idx + 2] = tile.get(sx, sy, 2);
                    }
                }
            }
        }

        let text_y = y0 + tile.height() * scale + 2;
        font::draw_text(&mut data, width, height, x0, text_y, line1, TEXT_LEVEL);
        font::draw_text(
            &mut data,
            width,
            height,
            x0,
            text_y + LINE_HEIGHT,
            line2,
            TEXT_LEVEL,
        );
    }

    Image::new(width, height, 3, data).expect("composite dimensions are consistent")
}
