use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DMatrix;
use tempfile::TempDir;
use tsl_lsr::data::{load_csv, save_csv};
use tsl_lsr::model_io::load_model;
use tsl_lsr::solver::fit_state;
use tsl_lsr::synthetic::{gaussian_blobs, orthogonal_centers};
use tsl_lsr::Hyperparams;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tsl-lsr"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn blobs_csv(dir: &Path, classes: usize, dim: usize, per_class: usize) -> PathBuf {
    let centers = orthogonal_centers(classes, dim, 3.0).unwrap();
    let ds = gaussian_blobs(&centers, per_class, 0.2, 99).unwrap();
    let path = dir.join("blobs.csv");
    save_csv(&ds, &path).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_writes_model_and_trace() {
    let dir = TempDir::new().unwrap();
    let data = blobs_csv(dir.path(), 3, 8, 10);
    let model = dir.path().join("m.txt");
    let trace = dir.path().join("trace.csv");
    let o = run(&["train", "--data", s(&data), "--out", s(&model), "--trace", s(&trace)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let m = load_model(&model).unwrap();
    assert_eq!(m.dims(), (8, 3, 3));
    assert_eq!(m.hyperparams().lambda1(), 0.01);
    assert_eq!(m.hyperparams().lambda2(), 0.01);

    let text = fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,objective,residual,mu"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(!rows.is_empty());
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert!(rows.last().unwrap()[2] <= 1e-6);
    assert!(stdout(&o).contains("converged"));
}

#[test]
fn eval_counts_rows_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let data = blobs_csv(dir.path(), 3, 8, 12);
    let out = dir.path().join("eval.csv");
    let args = [
        "eval", "--data", s(&data), "--per-class-train", "4", "--repeats", "10", "--seed", "3",
        "--baseline", "--out", s(&out),
    ];
    let first = run(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let csv_first = fs::read_to_string(&out).unwrap();
    let second = run(&args);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(csv_first, fs::read_to_string(&out).unwrap());

    let mut lines = csv_first.lines();
    assert_eq!(lines.next(), Some("algorithm,repeat,accuracy"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    for alg in ["tsl-lsr", "lsr"] {
        let mine: Vec<_> = rows.iter().filter(|r| r[0] == alg).collect();
        assert_eq!(mine.len(), 11);
        assert_eq!(mine.iter().filter(|r| r[1] == "mean").count(), 1);
    }
    let mean = |alg: &str| -> f64 {
        rows.iter().find(|r| r[0] == alg && r[1] == "mean").unwrap()[2].parse().unwrap()
    };
    assert!(mean("tsl-lsr") >= mean("lsr"));
}

#[test]
fn grid_rows() {
    let dir = TempDir::new().unwrap();
    let data = blobs_csv(dir.path(), 2, 4, 6);
    let o = run(&["grid", "--data", s(&data), "--per-class-train", "3", "--repeats", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,beta,mean_acc,std"));
    assert_eq!(lines.count(), 49);

    let o = run(&[
        "grid", "--data", s(&data), "--per-class-train", "3", "--repeats", "2", "--alphas", "0.5",
        "--betas", "0.05",
    ]);
    assert_eq!(stdout(&o).lines().count(), 2);
    assert!(stdout(&o).contains("0.5,0.05,"));
}

#[test]
fn sweep_p_rows_and_consistency() {
    let dir = TempDir::new().unwrap();
    let data = blobs_csv(dir.path(), 4, 8, 8);
    let common = ["--data", s(&data), "--per-class-train", "3", "--repeats", "3", "--seed", "8"];

    let o = bin().arg("sweep-p").args(common).args(["--p-values", "2,4,8"]).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("p,mean_acc,std"));
    assert_eq!(text.lines().count(), 4);

    let out = dir.path().join("eval.csv");
    let o = bin().arg("sweep-p").args(common).args(["--p-values", "4"]).output().unwrap();
    let sweep_mean: f64 = stdout(&o).lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    bin().arg("eval").args(common).args(["--out", s(&out)]).output().unwrap();
    let eval_mean: f64 = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .find(|l| l.starts_with("tsl-lsr,mean,"))
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(sweep_mean, eval_mean);

    let o = bin().arg("sweep-p").args(common).args(["--p-values", "0"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn features_shape_and_agreement_with_stored() {
    let dir = TempDir::new().unwrap();
    let data = blobs_csv(dir.path(), 3, 40, 4);
    let model = dir.path().join("m.txt");
    let feats = dir.path().join("f.csv");
    let o = run(&["train", "--data", s(&data), "--lambda1", "1e-8", "--out", s(&model)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["features", "--model", s(&model), "--data", s(&data), "--out", s(&feats)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let text = fs::read_to_string(&feats).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.len() == 4));

    // Emitted features are Q(WX) of the normalized samples.
    let m = load_model(&model).unwrap();
    let ds = load_csv(&data, false).unwrap().normalized();
    let direct = m.q() * (m.w() * ds.samples());
    let emitted = DMatrix::from_fn(3, 12, |i, j| rows[j][i]);
    assert!((&emitted - &direct).amax() < 1e-12);

    // They match the stored QΩ up to ‖Q‖·‖WX − Ω‖, so exactly once WX ≈ Ω.
    let hp = Hyperparams::builder().lambda1(1e-8).build().unwrap();
    let (state, _) = fit_state(&ds, &hp).unwrap();
    let gap = (&state.w * ds.samples() - &state.transition).norm();
    let bound = m.q().norm() * gap + 1e-9;
    let stored = m.stored().unwrap().features();
    assert!((&emitted - stored).norm() <= bound);
    if gap < 1e-4 {
        assert!((&emitted - stored).amax() < 1e-4);
    }

    // The output is itself a loadable dataset.
    let back = load_csv(&feats, false).unwrap();
    assert_eq!((back.dim(), back.len()), (3, 12));
}

#[test]
fn predict_reports_accuracy() {
    let dir = TempDir::new().unwrap();
    let data = blobs_csv(dir.path(), 3, 8, 10);
    let model = dir.path().join("m.txt");
    let preds = dir.path().join("p.csv");
    run(&["train", "--data", s(&data), "--out", s(&model)]);
    for rule in ["nn", "argmax"] {
        let o = run(&["predict", "--model", s(&model), "--data", s(&data), "--rule", rule, "--out", s(&preds)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("accuracy 100.00%"), "{}", stdout(&o));
        assert_eq!(fs::read_to_string(&preds).unwrap().lines().count(), 31);
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let data = blobs_csv(dir.path(), 2, 3, 4);
    let o = run(&["features", "--data", s(&data), "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,2,0\n3,oops,1\n").unwrap();
    let o = run(&["train", "--data", s(&bad), "--out", s(&dir.path().join("m.txt"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 2, column 2"));

    let o = run(&["train", "--data", s(&data), "--alpha", "0", "--out", s(&dir.path().join("m.txt"))]);
    assert_eq!(o.status.code(), Some(1));
}
