//! `softaug`: batch CLI for the soft-augmentation engine.
//!
//! Exit codes: 0 on success, 2 for configuration and usage errors, 1 for
//! runtime failures (I/O, malformed data mid-run).

mod args;
mod augment;
mod curves;
mod font;
mod preview;
mod robust;

use clap::Parser;

#[derive(Parser)]
#[command(
    name = "softaug",
    version,
    about = "Deterministic image augmentation with adaptive label smoothing"
)]
enum Cli {
    /// Augment a dataset and write a manifest plus images.
    Augment(augment::AugmentArgs),
    /// Derive confidence-mapping tables from image-similarity metrics.
    Curves(curves::CurvesArgs),
    /// Render a captioned grid of augmented samples.
    Preview(preview::PreviewArgs),
    /// Evaluate corruption robustness from a prediction file.
    EvalRobust(robust::RobustArgs),
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli {
        Cli::Augment(args) => augment::run(args),
        Cli::Curves(args) => curves::run(args),
        Cli::Preview(args) => preview::run(args),
        Cli::EvalRobust(args) => robust::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(exit_code(&e));
    }
}

/// Configuration and contract problems exit 2; runtime failures exit 1.
fn exit_code(error: &anyhow::Error) -> i32 {
    match error.downcast_ref::<softaug::Error>() {
        Some(softaug::Error::Config(_)) | Some(softaug::Error::Contract(_)) => 2,
        Some(_) => 1,
        // argument parsing problems outside the typed error: treat as config
        None => 2,
    }
}
