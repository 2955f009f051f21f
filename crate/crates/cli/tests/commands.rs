use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use labelshift_cli::report::{read_table_csv, ModelDocument, ReportDocument};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_labelshift"));
    c.env_remove("SOURCE_DATE_EPOCH");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Source file with joint frequencies [[0.4, 0.1], [0.1, 0.4]] and target
/// predictions with marginal [0.35, 0.65].
fn two_by_two(dir: &Path) -> (PathBuf, PathBuf) {
    let mut src = String::from("y_true,y_pred\n");
    for (t, p, count) in [(0, 0, 4), (1, 0, 1), (0, 1, 1), (1, 1, 4)] {
        for _ in 0..count {
            src.push_str(&format!("{t},{p}\n"));
        }
    }
    let mut tgt = String::from("y_pred\n");
    tgt.push_str(&"0\n".repeat(7));
    tgt.push_str(&"1\n".repeat(13));
    (write(dir, "s.csv", &src), write(dir, "t.csv", &tgt))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn estimate_two_by_two() {
    let dir = tempfile::tempdir().unwrap();
    let (src, tgt) = two_by_two(dir.path());
    let out = run(&["estimate", "--source", s(&src), "--target", s(&tgt), "--k", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = ReportDocument::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let w = doc.weights.unwrap();
    assert!((w.w[0] - 0.5).abs() < 1e-12 && (w.w[1] - 1.5).abs() < 1e-12);
    assert!((w.sigma_min - 0.3).abs() < 1e-12);
    assert!(!w.fallback);
    assert_eq!(doc.meta.k, 2);

    let out = run(&["estimate", "--source", s(&src), "--target", s(&tgt), "--k", "2", "--solver", "pinv", "--format", "csv"]);
    let doc = ReportDocument::read_csv(out.stdout.as_slice()).unwrap();
    let w = doc.weights.unwrap();
    assert!((w.w[0] - 0.5).abs() < 1e-10 && (w.w[1] - 1.5).abs() < 1e-10);
}

#[test]
fn estimate_rejects_large_delta() {
    let dir = tempfile::tempdir().unwrap();
    let (src, tgt) = two_by_two(dir.path());
    let out = run(&["estimate", "--source", s(&src), "--target", s(&tgt), "--k", "2", "--delta", "0.9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--delta"));
}

#[test]
fn detect_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (src, tgt) = two_by_two(dir.path());
    let out = run(&["detect", "--source", s(&src), "--target", s(&src), "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = ReportDocument::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let d = doc.detection.unwrap();
    assert_eq!(d.p_value, 1.0);
    assert!(!d.reject);

    let zeros = write(dir.path(), "z.csv", &format!("y_pred\n{}", "0\n".repeat(100)));
    let ones = write(dir.path(), "o.csv", &format!("y_pred\n{}", "1\n".repeat(100)));
    for method in ["chi2", "ks"] {
        let out = run(&["detect", "--source", s(&zeros), "--target", s(&ones), "--k", "2", "--method", method]);
        assert_eq!(out.status.code(), Some(3), "{method}");
    }
    let out = run(&["detect", "--source", s(&src), "--target", s(&tgt), "--k", "2", "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let (src, _) = two_by_two(dir.path());
    let bad = write(dir.path(), "bad.csv", "p0,p1\n0.5,0.5\n0.7,0.4\n");
    let out = run(&["estimate", "--source", s(&src), "--target", s(&bad), "--k", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv:3"));

    let missing = dir.path().join("missing.csv");
    let out = run(&["detect", "--source", s(&missing), "--target", s(&src), "--k", "2"]);
    assert_eq!(out.status.code(), Some(2));

    let unlabeled = write(dir.path(), "u.csv", "y_pred\n0\n1\n");
    let out = run(&["estimate", "--source", s(&unlabeled), "--target", s(&src), "--k", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mode_mismatch_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (src, _) = two_by_two(dir.path());
    let soft = write(dir.path(), "soft.csv", "p0,p1\n0.2,0.8\n0.6,0.4\n");
    let out = run(&["estimate", "--source", s(&src), "--target", s(&soft), "--k", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["estimate", "--source", s(&src), "--target", s(&soft), "--k", "2", "--mode", "hard"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_then_correct() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.csv");
    let target = dir.path().join("target.csv");
    let model = dir.path().join("model.json");
    let out = run(&["simulate", "--k", "3", "--shift", "knockout:0:0", "--n", "3000", "--seed", "1", "--out", s(&train)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["simulate", "--k", "3", "--shift", "tweak-one:0:0.8", "--n", "3000", "--seed", "2", "--out", s(&target)]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&target).unwrap();
    assert!(text.starts_with("y,x0,x1\n"));
    let zeros = text.lines().skip(1).filter(|l| l.starts_with("0,")).count();
    assert!((zeros as f64 / 3000.0 - 0.8).abs() < 0.03);

    let out = run(&[
        "correct", "--train", s(&train), "--target", s(&target), "--eval", s(&target), "--k", "3", "--out", s(&model),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = ReportDocument::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let w = doc.weights.unwrap();
    assert!(w.w[0] > 1.8 && w.w[1] < 0.6, "{:?}", w.w);
    let c = doc.correction.unwrap();
    assert!(c.reweighted);
    assert!(c.target_accuracy.unwrap() >= c.baseline_accuracy.unwrap() - 0.01);
    let m = ModelDocument::from_json(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!((m.k, m.d), (3, 2));
    m.into_model().unwrap();
}

#[test]
fn experiment_table_independent_of_threads() {
    let args = |threads: &str| {
        run(&[
            "experiment", "--kind", "estimation", "--shift", "dirichlet:1", "--shift", "knockout:1:0.5",
            "--sizes", "300,600", "--replications", "3", "--seed", "4", "--threads", threads,
        ])
    };
    let one = args("1");
    assert_eq!(one.status.code(), Some(0), "{}", String::from_utf8_lossy(&one.stderr));
    let four = args("4");
    assert_eq!(one.stdout, four.stdout);
    let rows = read_table_csv(one.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 3);
    assert!(rows.iter().all(|r| r.mse_w.is_some() && r.p_value.is_none() && r.acc_corrected.is_none()));
    assert_eq!(rows[0].shift, "dirichlet");
    assert_eq!(rows[11].shift, "knockout");
    assert_eq!(rows[11].class, Some(1));
}

#[test]
fn mmd_check_on_soft_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let mut src = String::from("y_true,p0,p1\n");
    let mut tgt = String::from("p0,p1\n");
    for i in 0..200 {
        let y = i % 2;
        let p = if y == 0 { 0.7 + 0.001 * (i % 50) as f64 } else { 0.3 - 0.001 * (i % 50) as f64 };
        src.push_str(&format!("{y},{p},{}\n", 1.0 - p));
        if i % 4 != 3 || y == 0 {
            tgt.push_str(&format!("{p},{}\n", 1.0 - p));
        }
    }
    let src = write(dir.path(), "s.csv", &src);
    let tgt = write(dir.path(), "t.csv", &tgt);
    let out = run(&["detect", "--method", "mmd", "--source", s(&src), "--target", s(&tgt), "--k", "2", "--seed", "3"]);
    assert!(matches!(out.status.code(), Some(0 | 3)), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = ReportDocument::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(doc.detection.unwrap().method, "mmd");
    assert!(doc.weights.is_some());
}

#[test]
fn idx_training_data() {
    use labelshift_cli::idx::{write_idx_images, write_idx_labels, IdxImages};
    let dir = tempfile::tempdir().unwrap();
    let n = 200;
    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let pixels: Vec<u8> = labels.iter().flat_map(|&l| if l == 0 { [250, 10, 200, 30] } else { [5, 240, 20, 220] }).collect();
    let images = IdxImages { count: n, rows: 2, cols: 2, pixels };
    let img = dir.path().join("img.idx");
    let lab = dir.path().join("lab.idx");
    write_idx_images(fs::File::create(&img).unwrap(), &images).unwrap();
    write_idx_labels(fs::File::create(&lab).unwrap(), &labels).unwrap();
    let model = dir.path().join("m.json");
    let out = run(&[
        "correct", "--train-idx", s(&img), s(&lab), "--target-idx", s(&img), s(&lab), "--k", "2", "--out", s(&model),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(ModelDocument::from_json(&fs::read_to_string(&model).unwrap()).unwrap().d, 4);

    let out = run(&["correct", "--train-idx", s(&lab), s(&img), "--target-idx", s(&img), s(&lab), "--k", "2", "--out", s(&model)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn timestamp_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (src, tgt) = two_by_two(dir.path());
    let out = bin()
        .args(["estimate", "--source", s(&src), "--target", s(&tgt), "--k", "2"])
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap();
    let doc = ReportDocument::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(doc.meta.created, Some(1_700_000_000));
}

#[test]
fn normalize_rescales_clipped_target_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let (src, _) = two_by_two(dir.path());
    let zeros = write(dir.path(), "z.csv", &format!("y_pred\n{}", "0\n".repeat(10)));
    let report = |extra: &[&str]| {
        let mut args = vec!["estimate", "--source", s(&src), "--target", s(&zeros), "--k", "2"];
        args.extend_from_slice(extra);
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        ReportDocument::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap().weights.unwrap()
    };
    let raw = report(&[]);
    assert_eq!(raw.clipped, vec![false, true]);
    assert!((raw.mu_y[0] - 4.0 / 3.0).abs() < 1e-12 && raw.mu_y[1] == 0.0);
    let norm = report(&["--normalize"]);
    assert_eq!(norm.mu_y, vec![1.0, 0.0]);
    assert_eq!(norm.w, raw.w);
}
