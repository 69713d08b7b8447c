//! Corruption-robustness evaluation over external prediction files.
//!
//! A prediction file is comma-separated text with a header naming the
//! columns `sample_id,true_class,predicted_class,corruption_name,severity`.
//! Severity 0 marks clean rows (corruption name `clean`); corrupted rows
//! carry severities 1..=5.
//!
//! The headline robustness number is the mean over (corruption, severity)
//! cells of per-cell accuracy, weighting every cell equally regardless of
//! its row count; the row-pooled mean is reported alongside for
//! comparison with conventions that pool all corrupted rows.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// The 19-corruption vocabulary of the common-corruptions benchmark.
/// Shipped as a default list, not enforced: unknown names are included
/// under their literal name with a warning.
pub const DEFAULT_CORRUPTIONS: [&str; 19] = [
    "gaussian_noise",
    "shot_noise",
    "impulse_noise",
    "defocus_blur",
    "glass_blur",
    "motion_blur",
    "zoom_blur",
    "snow",
    "frost",
    "fog",
    "brightness",
    "contrast",
    "elastic_transform",
    "pixelate",
    "jpeg_compression",
    "speckle_noise",
    "gaussian_blur",
    "spatter",
    "saturate",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionRow {
    pub sample_id: String,
    pub true_class: usize,
    pub predicted_class: usize,
    pub corruption: String,
    pub severity: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellAccuracy {
    pub corruption: String,
    pub severity: u8,
    pub correct: u64,
    pub total: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    /// Accuracy over severity-0 rows, absent without clean rows.
    pub clean_accuracy: Option<f64>,
    pub clean_rows: u64,
    /// Mean of per-cell accuracies (equal weight per cell); the headline.
    pub robustness: Option<f64>,
    /// Mean over all corrupted rows pooled together.
    pub row_pooled_robustness: Option<f64>,
    /// Per corruption: mean over its severity cells, sorted by name.
    pub per_corruption: Vec<(String, f64)>,
    /// Per severity: mean over corruptions present at that severity.
    pub per_severity: Vec<(u8, f64)>,
    pub cells: Vec<CellAccuracy>,
}

/// Parses a prediction file; malformed rows are format errors carrying
/// their line number.
pub fn parse_prediction_file(path: &Path) -> Result<Vec<PredictionRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    let mut lines = text.lines().enumerate();

    let header = loop {
        match lines.next() {
            Some((_, line)) if line.trim().is_empty() || line.trim_start().starts_with('#') => {}
            Some((_, line)) => break line,
            None => return Err(Error::format(path, "empty file, expected a header")),
        }
    };
    let expected = "sample_id,true_class,predicted_class,corruption_name,severity";
    if header.trim() != expected {
        return Err(Error::format(
            path,
            format!("expected header `{expected}`, got `{}`", header.trim()),
        ));
    }

    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::format(
                path,
                format!("line {}: expected 5 fields, got {}", lineno + 1, fields.len()),
            ));
        }
        let parse_usize = |s: &str, what: &str| -> Result<usize> {
            s.parse().map_err(|_| {
                Error::format(path, format!("line {}: bad {what} `{s}`", lineno + 1))
            })
        };
        let severity: u8 = fields[4].parse().map_err(|_| {
            Error::format(
                path,
                format!("line {}: bad severity `{}`", lineno + 1, fields[4]),
            )
        })?;
        let corruption = fields[3].to_string();
        let clean = corruption == "clean";
        if severity > 5 || (clean != (severity == 0)) {
            return Err(Error::format(
                path,
                format!(
                    "line {}: corruption `{corruption}` with severity {severity} \
                     (clean rows need severity 0, corrupted rows 1..=5)",
                    lineno + 1
                ),
            ));
        }
        if !clean && !DEFAULT_CORRUPTIONS.contains(&corruption.as_str()) {
            log::warn!(
                "{path:?}:{}: corruption `{corruption}` is not in the default vocabulary; \
                 including it under its literal name",
                lineno + 1
            );
        }
        rows.push(PredictionRow {
            sample_id: fields[0].to_string(),
            true_class: parse_usize(fields[1], "true_class")?,
            predicted_class: parse_usize(fields[2], "predicted_class")?,
            corruption,
            severity,
        });
    }
    Ok(rows)
}

/// Computes the robustness report; invariant to row order and to
/// duplicating entire cells.
pub fn eval_robustness(rows: &[PredictionRow]) -> RobustnessReport {
    let mut clean_correct = 0u64;
    let mut clean_total = 0u64;
    let mut cells: BTreeMap<(String, u8), (u64, u64)> = BTreeMap::new();

    for row in rows {
        let correct = (row.true_class == row.predicted_class) as u64;
        if row.severity == 0 {
            clean_correct += correct;
            clean_total += 1;
        } else {
            let cell = cells
                .entry((row.corruption.clone(), row.severity))
                .or_insert((0, 0));
            cell.0 += correct;
            cell.1 += 1;
        }
    }

    let cells: Vec<CellAccuracy> = cells
        .into_iter()
        .map(|((corruption, severity), (correct, total))| CellAccuracy {
            corruption,
            severity,
            correct,
            total,
            accuracy: correct as f64 / total as f64,
        })
        .collect();

    let robustness = if cells.is_empty() {
        None
    } else {
        Some(cells.iter().map(|c| c.accuracy).sum::<f64>() / cells.len() as f64)
    };
    let row_pooled_robustness = if cells.is_empty() {
        None
    } else {
        let correct: u64 = cells.iter().map(|c| c.correct).sum();
        let total: u64 = cells.iter().map(|c| c.total).sum();
        Some(correct as f64 / total as f64)
    };

    let mut by_corruption: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut by_severity: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    for cell in &cells {
        by_corruption
            .entry(cell.corruption.clone())
            .or_default()
            .push(cell.accuracy);
        by_severity.entry(cell.severity).or_default().push(cell.accuracy);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    RobustnessReport {
        clean_accuracy: (clean_total > 0).then(|| clean_correct as f64 / clean_total as f64),
        clean_rows: clean_total,
        robustness,
        row_pooled_robustness,
        per_corruption: by_corruption
            .into_iter()
            .map(|(name, accs)| (name, mean(&accs)))
            .collect(),
        per_severity: by_severity
            .into_iter()
            .map(|(sev, accs)| (sev, mean(&accs)))
            .collect(),
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(
        id: &str,
        true_class: usize,
        predicted: usize,
        corruption: &str,
        severity: u8,
    ) -> PredictionRow {
        PredictionRow {
            sample_id: id.to_string(),
            true_class,
            predicted_class: predicted,
            corruption: corruption.to_string(),
            severity,
        }
    }

    #[test]
    fn all_correct_gives_robustness_one() {
        let rows = vec![
            row("a", 1, 1, "fog", 1),
            row("b", 2, 2, "fog", 2),
            row("c", 3, 3, "snow", 1),
        ];
        let report = eval_robustness(&rows);
        assert_eq!(report.robustness, Some(1.0));
        assert_eq!(report.clean_accuracy, None);
    }

    #[test]
    fn single_cell_three_of_four() {
        let rows = vec![
            row("a", 1, 1, "fog", 3),
            row("b", 2, 2, "fog", 3),
            row("c", 3, 3, "fog", 3),
            row("d", 4, 0, "fog", 3),
        ];
        let report = eval_robustness(&rows);
        assert_eq!(report.robustness, Some(0.75));
    }

    #[test]
    fn cell_mean_not_pooled_mean_when_sizes_differ() {
        // fog: 2/2 correct; snow: 2/4 correct. Cell mean = 0.75 even
        // though pooled rows give 4/6.
        let rows = vec![
            row("a", 1, 1, "fog", 1),
            row("b", 1, 1, "fog", 1),
            row("c", 1, 1, "snow", 1),
            row("d", 1, 1, "snow", 1),
            row("e", 1, 0, "snow", 1),
            row("f", 1, 0, "snow", 1),
        ];
        let report = eval_robustness(&rows);
        assert_eq!(report.robustness, Some(0.75));
        assert_eq!(report.row_pooled_robustness, Some(4.0 / 6.0));
    }

    #[test]
    fn invariant_to_row_order_and_cell_duplication() {
        let rows = vec![
            row("a", 1, 1, "fog", 1),
            row("b", 1, 0, "fog", 1),
            row("c", 2, 2, "snow", 2),
            row("d", 0, 0, "clean", 0),
        ];
        let mut reversed = rows.clone();
        reversed.reverse();
        assert_eq!(eval_robustness(&rows), eval_robustness(&reversed));

        // duplicating an entire cell's rows leaves every accuracy unchanged
        let mut doubled = rows.clone();
        doubled.push(row("a2", 1, 1, "fog", 1));
        doubled.push(row("b2", 1, 0, "fog", 1));
        assert_eq!(
            eval_robustness(&rows).robustness,
            eval_robustness(&doubled).robustness
        );
    }

    #[test]
    fn clean_rows_split_out() {
        let rows = vec![
            row("a", 1, 1, "clean", 0),
            row("b", 2, 0, "clean", 0),
            row("c", 3, 3, "fog", 1),
        ];
        let report = eval_robustness(&rows);
        assert_eq!(report.clean_accuracy, Some(0.5));
        assert_eq!(report.clean_rows, 2);
        assert_eq!(report.robustness, Some(1.0));
    }

    #[test]
    fn per_corruption_and_per_severity_breakdowns() {
        let rows = vec![
            row("a", 1, 1, "fog", 1),
            row("b", 1, 0, "fog", 2),
            row("c", 1, 1, "snow", 1),
            row("d", 1, 1, "snow", 2),
        ];
        let report = eval_robustness(&rows);
        assert_eq!(
            report.per_corruption,
            vec![("fog".to_string(), 0.5), ("snow".to_string(), 1.0)]
        );
        assert_eq!(report.per_severity, vec![(1, 1.0), (2, 0.5)]);
    }

    #[test]
    fn file_parsing_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("preds.csv");
        std::fs::write(
            &path,
            "sample_id,true_class,predicted_class,corruption_name,severity\n\
             s0,1,1,clean,0\n\
             s1,1,1,fog,3\n",
        )
        .unwrap();
        let rows = parse_prediction_file(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].severity, 3);

        std::fs::write(&path, "bad header\n").unwrap();
        assert!(parse_prediction_file(&path).is_err());

        std::fs::write(
            &path,
            "sample_id,true_class,predicted_class,corruption_name,severity\n\
             s0,1,1,fog,0\n",
        )
        .unwrap();
        match parse_prediction_file(&path) {
            Err(Error::Format { detail, .. }) => assert!(detail.contains("line 2"), "{detail}"),
            other => panic!("expected format error, got {other:?}"),
        }

        std::fs::write(
            &path,
            "sample_id,true_class,predicted_class,corruption_name,severity\n\
             s0,1,one,fog,2\n",
        )
        .unwrap();
        assert!(parse_prediction_file(&path).is_err());
    }
}
