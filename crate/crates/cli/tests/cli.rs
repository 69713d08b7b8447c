//! End-to-end tests against the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn softaug() -> Command {
    Command::new(env!("CARGO_BIN_EXE_softaug"))
}

fn run(args: &[&str]) -> Output {
    softaug().args(args).output().expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// A synthetic CIFAR-10 file with `n` deterministic records.
fn write_cifar_fixture(path: &Path, n: usize) {
    let mut data = Vec::with_capacity(n * 3073);
    for i in 0..n {
        data.push((i % 10) as u8);
        for j in 0..3072u32 {
            data.push(((i as u32 * 31 + j * 7) % 256) as u8);
        }
    }
    std::fs::write(path, data).unwrap();
}

/// All files under a directory with their contents, sorted by path.
fn tree_bytes(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(&path, out);
            } else {
                out.push((path.clone(), std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, &mut out);
    out
}

fn manifest_lines(path: &Path) -> Vec<serde_json::Value> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("#softaug-manifest v1"));
    lines
        .filter(|l| !l.is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn identity_pipeline_over_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.bin");
    write_cifar_fixture(&data, 4);
    let out = dir.path().join("out");

    let result = run(&[
        "augment",
        "--dataset",
        &format!("cifar10:{}", data.display()),
        "--stages",
        "",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
        "--no-images",
    ]);
    assert_success(&result);
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("samples: 4"), "{stdout}");
    assert!(stdout.contains("mean confidence: 1.000000"), "{stdout}");

    let lines = manifest_lines(&out.join("manifest.jsonl"));
    assert_eq!(lines.len(), 4);
    for line in &lines {
        assert_eq!(line["confidence"], 1.0);
        assert!(line["stages"].as_array().unwrap().is_empty());
    }
}

#[test]
fn repeated_runs_produce_identical_output_trees() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.bin");
    write_cifar_fixture(&data, 24);

    let run_once = |out: &Path| {
        let result = run(&[
            "augment",
            "--dataset",
            &format!("cifar10:{}", data.display()),
            "--stages",
            "ta:soft",
            "--profile",
            "poly-0.7",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_success(&result);
    };
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run_once(&out_a);
    run_once(&out_b);

    let tree_a: Vec<_> = tree_bytes(&out_a)
        .into_iter()
        .map(|(p, b)| (p.strip_prefix(&out_a).unwrap().to_path_buf(), b))
        .collect();
    let tree_b: Vec<_> = tree_bytes(&out_b)
        .into_iter()
        .map(|(p, b)| (p.strip_prefix(&out_b).unwrap().to_path_buf(), b))
        .collect();
    assert_eq!(tree_a.len(), tree_b.len());
    assert!(tree_a.len() > 24, "expected images plus manifest and config");
    for ((pa, ba), (pb, bb)) in tree_a.iter().zip(&tree_b) {
        assert_eq!(pa, pb);
        assert_eq!(ba, bb, "file {pa:?} differs between identical runs");
    }
}

#[test]
fn config_round_trip_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.bin");
    write_cifar_fixture(&data, 12);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    let result = run(&[
        "augment",
        "--dataset",
        &format!("cifar10:{}", data.display()),
        "--stages",
        "flip,rc:soft,ta:soft,re:soft",
        "--re-prob",
        "0.5",
        "--seed",
        "3",
        "--out",
        out_a.to_str().unwrap(),
        "--no-images",
    ]);
    assert_success(&result);

    let result = run(&[
        "augment",
        "--config",
        out_a.join("config.json").to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        out_b.to_str().unwrap(),
    ]);
    assert_success(&result);

    assert_eq!(
        std::fs::read(out_a.join("manifest.jsonl")).unwrap(),
        std::fs::read(out_b.join("manifest.jsonl")).unwrap()
    );
}

#[test]
fn erase_only_run_records_bounded_magnitudes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.bin");
    write_cifar_fixture(&data, 64);
    let out = dir.path().join("out");

    let result = run(&[
        "augment",
        "--dataset",
        &format!("cifar10:{}", data.display()),
        "--stages",
        "re:soft",
        "--re-prob",
        "1.0",
        "--re-area",
        "0.02:0.33",
        "--profile",
        "poly-chance",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
        "--no-images",
    ]);
    assert_success(&result);

    let lines = manifest_lines(&out.join("manifest.jsonl"));
    assert_eq!(lines.len(), 64);
    for line in &lines {
        let stages = line["stages"].as_array().unwrap();
        assert_eq!(stages.len(), 1);
        assert_eq!(stages[0]["kind"], "random-erase");
        let phi = stages[0]["phi"].as_f64().unwrap();
        assert!(phi > 0.0, "erase with prob 1 must always fire");
        assert!((0.5 * 0.02..=1.2 * 0.33).contains(&phi), "phi {phi}");
    }
}

#[test]
fn bad_configuration_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.bin");
    write_cifar_fixture(&data, 2);

    // unknown stage name
    let result = run(&[
        "augment",
        "--dataset",
        &format!("cifar10:{}", data.display()),
        "--stages",
        "swirl",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));

    // missing dataset path
    let result = run(&[
        "augment",
        "--dataset",
        "cifar10:/does/not/exist",
        "--out",
        dir.path().join("y").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn curves_identity_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.bin");
    write_cifar_fixture(&data, 8);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    let run_curves = |out: &Path| {
        let result = run(&[
            "curves",
            "--dataset",
            &format!("cifar10:{}", data.display()),
            "--kinds",
            "identity,rotate",
            "--metrics",
            "ncc",
            "--bins",
            "31",
            "--pairs",
            "4",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_success(&result);
    };
    run_curves(&out_a);
    run_curves(&out_b);

    let table = std::fs::read_to_string(out_a.join("identity_ncc.csv")).unwrap();
    let rows: Vec<&str> = table
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty() && !l.starts_with("phi"))
        .collect();
    assert_eq!(rows.len(), 31);
    for row in &rows {
        let (_, score) = row.split_once(',').unwrap();
        assert_eq!(score.parse::<f64>().unwrap(), 1.0);
    }

    assert_eq!(
        std::fs::read(out_a.join("rotate_ncc.csv")).unwrap(),
        std::fs::read(out_b.join("rotate_ncc.csv")).unwrap()
    );
}

#[test]
fn curves_rejects_incompatible_pair() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.bin");
    write_cifar_fixture(&data, 2);
    let result = run(&[
        "curves",
        "--dataset",
        &format!("cifar10:{}", data.display()),
        "--kinds",
        "brightness",
        "--metrics",
        "sift",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("sift"), "{stderr}");
    assert!(stderr.contains("brightness"), "{stderr}");
}

#[test]
fn preview_renders_deterministic_grid() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.bin");
    write_cifar_fixture(&data, 4);

    // 1x1 identity grid
    let single = dir.path().join("single.png");
    let result = run(&[
        "preview",
        "--dataset",
        &format!("cifar10:{}", data.display()),
        "--stages",
        "",
        "--grid",
        "1x1",
        "--seed",
        "2",
        "--out",
        single.to_str().unwrap(),
    ]);
    assert_success(&result);
    assert!(single.exists());

    // 2x4 soft TA+RE grid, fixed seed: byte-identical reruns
    let grid_a = dir.path().join("grid_a.png");
    let grid_b = dir.path().join("grid_b.png");
    for out in [&grid_a, &grid_b] {
        let result = run(&[
            "preview",
            "--dataset",
            &format!("cifar10:{}", data.display()),
            "--stages",
            "ta:soft,re:soft",
            "--re-prob",
            "1.0",
            "--grid",
            "2x4",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_success(&result);
    }
    assert_eq!(
        std::fs::read(&grid_a).unwrap(),
        std::fs::read(&grid_b).unwrap()
    );
}

#[test]
fn eval_robust_prints_percentages() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("preds.csv");

    std::fs::write(
        &preds,
        "sample_id,true_class,predicted_class,corruption_name,severity\n\
         a,1,1,fog,1\nb,2,2,fog,1\nc,3,3,snow,2\n",
    )
    .unwrap();
    let result = run(&["eval-robust", "--predictions", preds.to_str().unwrap()]);
    assert_success(&result);
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("100.00%"), "{stdout}");

    std::fs::write(
        &preds,
        "sample_id,true_class,predicted_class,corruption_name,severity\n\
         a,1,1,fog,1\nb,2,2,fog,1\nc,3,3,fog,1\nd,4,0,fog,1\n",
    )
    .unwrap();
    let report = dir.path().join("report.json");
    let result = run(&[
        "eval-robust",
        "--predictions",
        preds.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_success(&result);
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("75.00%"), "{stdout}");
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed["robustness"], 0.75);

    let result = run(&["eval-robust", "--predictions", "/no/such/file.csv"]);
    assert_eq!(result.status.code(), Some(2));
}
