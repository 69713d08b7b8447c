//! The `eval-robust` subcommand: corruption-robustness report from a
//! prediction file.

use std::path::PathBuf;

use anyhow::bail;
use softaug::datasets::{eval_robustness, parse_prediction_file, RobustnessReport};

#[derive(Debug, clap::Args)]
pub struct RobustArgs {
    /// Prediction file (comma-separated with header
    /// `sample_id,true_class,predicted_class,corruption_name,severity`).
    #[arg(long)]
    predictions: PathBuf,
    /// Also write the full report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: RobustArgs) -> anyhow::Result<()> {
    if !args.predictions.exists() {
        bail!(softaug::Error::config(format!(
            "prediction file {:?} does not exist",
            args.predictions
        )));
    }
    let rows = parse_prediction_file(&args.predictions)?;
    let report = eval_robustness(&rows);
    print_report(&report);
    if let Some(out) = &args.out {
        std::fs::write(out, serde_json::to_string_pretty(&report)?)?;
        println!("report: {}", out.display());
    }
    Ok(())
}

fn pct(v: f64) -> String {
    format!("{:.2}%", v * 100.0)
}

fn print_report(report: &RobustnessReport) {
    match report.clean_accuracy {
        Some(acc) => println!("clean accuracy: {} ({} rows)", pct(acc), report.clean_rows),
        None => println!("clean accuracy: absent (no severity-0 rows)"),
    }
    match report.robustness {
        Some(r) => println!("robustness (cell mean): {}", pct(r)),
        None => println!("robustness: absent (no corrupted rows)"),
    }
    if let Some(r) = report.row_pooled_robustness {
        println!("robustness (row pooled): {}", pct(r));
    }
    if !report.per_corruption.is_empty() {
        println!("per corruption:");
        for (name, acc) in &report.per_corruption {
            println!("  {name}: {}", pct(*acc));
        }
        println!("per severity:");
        for (severity, acc) in &report.per_severity {
            println!("  {severity}: {}", pct(*acc));
        }
    }
}
