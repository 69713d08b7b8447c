//! The `augment` subcommand: run a pipeline over a dataset and persist a
//! manifest plus images.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use softaug::confidence::{load_mapping_profile, ProfileSource};
use softaug::datasets::{write_manifest, ImageSink, ManifestSummary, NullSink, PngSink};
use softaug::pipeline::{Pipeline, PolicyStage};

use crate::args::{parse_stages, DatasetSpec, StageParams};

#[derive(Debug, clap::Args)]
pub struct AugmentArgs {
    /// Dataset: `cifar10:PATH`, `cifar100:PATH` or `folder:PATH`.
    #[arg(long, required_unless_present = "config")]
    dataset: Option<DatasetSpec>,
    /// Comma-separated stage list in application order, e.g.
    /// `flip,rc:soft,ta:soft,re:soft`. Empty for the identity pipeline.
    #[arg(long, default_value = "")]
    stages: String,
    /// Mapping profile: a preset name (`poly-chance`, `poly-0.7`,
    /// `poly-noise`, `k-est`, `hvs`, `model-accuracy`) or `file:PATH`.
    #[arg(long, default_value = "poly-0.7")]
    profile: String,
    /// Multiply each sample's loss weight by its reduced confidence.
    #[arg(long)]
    reweight: bool,
    /// Global seed; every output is a pure function of it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (0 = automatic).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Process only the first N samples.
    #[arg(long)]
    limit: Option<u64>,
    /// Tolerated per-sample failures before aborting.
    #[arg(long, default_value_t = 0)]
    error_budget: usize,
    /// Skip writing PNGs; the manifest still names their paths.
    #[arg(long)]
    no_images: bool,
    #[command(flatten)]
    stage_params: StageParams,
    /// Re-run a previous run's serialized configuration. Explicit
    /// `--out`, `--seed` and `--workers` still apply.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Everything needed to reproduce a run; serialized into the output
/// directory as provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub stages: Vec<PolicyStage>,
    pub profile: ProfileSource,
    pub reweight: bool,
    pub seed: u64,
    pub workers: usize,
    pub limit: Option<u64>,
    pub error_budget: usize,
    pub write_images: bool,
}

impl RunConfig {
    fn from_args(args: &AugmentArgs) -> anyhow::Result<Self> {
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {path:?}"))?;
            let mut config: RunConfig = serde_json::from_str(&text)
                .map_err(|e| softaug::Error::config(format!("config {path:?}: {e}")))?;
            config.seed = args.seed;
            config.workers = args.workers;
            return Ok(config);
        }
        Ok(RunConfig {
            dataset: args.dataset.clone().expect("required by clap"),
            stages: parse_stages(&args.stages, &args.stage_params)?,
            profile: args
                .profile
                .parse::<ProfileSource>()
                .context("invalid --profile")?,
            reweight: args.reweight,
            seed: args.seed,
            workers: args.workers,
            limit: args.limit,
            error_budget: args.error_budget,
            write_images: !args.no_images,
        })
    }
}

pub fn run(args: AugmentArgs) -> anyhow::Result<()> {
    let config = RunConfig::from_args(&args)?;

    // fail-fast validation before touching the dataset
    let dataset = config.dataset.load()?;
    let profile = load_mapping_profile(&config.profile, dataset.class_count())?;
    let pipeline = Pipeline::new(
        config.stages.clone(),
        profile,
        dataset.class_count(),
        config.reweight,
    )?;

    std::fs::create_dir_all(&args.out)?;
    let config_json = serde_json::to_string_pretty(&config)?;
    std::fs::write(args.out.join("config.json"), config_json)?;

    let summary = run_pipeline(&pipeline, &dataset, &config, &args.out)?;
    print_summary(&args.out, &summary);
    Ok(())
}

fn run_pipeline(
    pipeline: &Pipeline,
    dataset: &softaug::datasets::DatasetHandle,
    config: &RunConfig,
    out: &Path,
) -> anyhow::Result<ManifestSummary> {
    let stream = pipeline.augment_dataset(dataset, config.seed, config.workers, config.error_budget)?;
    let limited = stream.take(config.limit.unwrap_or(u64::MAX) as usize);
    let manifest_path = out.join("manifest.jsonl");
    let summary = if config.write_images {
        let mut sink = PngSink::new(out)?;
        write_manifest(&manifest_path, limited, &mut sink)?
    } else {
        let mut sink: NullSink = NullSink;
        write_manifest(&manifest_path, limited, &mut sink as &mut dyn ImageSink)?
    };
    Ok(summary)
}

fn print_summary(out: &Path, summary: &ManifestSummary) {
    println!("samples: {}", summary.samples);
    println!("mean confidence: {:.6}", summary.mean_confidence);
    if summary.kind_counts.is_empty() {
        println!("applied transforms: none");
    } else {
        println!("applied transforms:");
        for (kind, count) in &summary.kind_counts {
            println!("  {kind}: {count}");
        }
    }
    println!("manifest: {}", out.join("manifest.jsonl").display());
}
