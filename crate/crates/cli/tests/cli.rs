use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn recab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

#[test]
fn help_and_version_succeed_and_bad_usage_exits_one() {
    assert_eq!(code(&recab(&["--help"])), 0);
    assert_eq!(code(&recab(&["--version"])), 0);
    assert_eq!(code(&recab(&[])), 1);
    assert_eq!(code(&recab(&["heatmap", "--bogus"])), 1);
    assert_eq!(
        code(&recab(&[
            "fit",
            "--estimator",
            "nope",
            "--target-logits",
            "1,2"
        ])),
        1
    );
}

#[test]
fn heatmap_single_cell_has_one_row_per_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    let o = recab(&[
        "heatmap",
        "--target-logits",
        "0.57,0.14,0.28",
        "--resolution",
        "3",
        "--estimators",
        "mc,ca,recab",
        "--mc-samples",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "b1,b2,b3,estimator,value,std_error");
    assert_eq!(lines.len(), 4);
    let estimators: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(3).unwrap())
        .collect();
    assert_eq!(estimators, ["mc", "ca", "recab"]);
    for line in &lines[1..] {
        let b1: f64 = line.split(',').next().unwrap().parse().unwrap();
        assert!((b1 - 1.0 / 3.0).abs() < 1e-15);
    }
    // Only the Monte-Carlo row carries a standard error.
    assert!(!lines[1].ends_with(','));
    assert!(lines[2].ends_with(',') && lines[3].ends_with(','));

    let manifest = read_json(&dir.path().join("grid.csv.manifest.json"));
    assert_eq!(manifest["command"], "heatmap");
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["params"]["resolution"], 3);
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn heatmap_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = recab(&[
            "heatmap",
            "--target-logits",
            "0.57,0.14,0.28",
            "--resolution",
            "8",
            "--estimators",
            "mc,recab",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        fs::read(out).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    // (8 - 1)(8 - 2)/2 cells, two estimators, plus the header.
    assert_eq!(a.iter().filter(|&&b| b == b'\n').count(), 1 + 2 * 21);
}

#[test]
fn heatmap_rejects_malformed_logits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    for logits in ["0.5,-0.2,0.7", "0.5,0.5", "a,b,c"] {
        let o = recab(&[
            "heatmap",
            "--target-logits",
            logits,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 1, "{logits}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn categorical_fit_recovers_target_and_recab_differs() {
    let dir = tempfile::tempdir().unwrap();
    let fit = |estimator: &str| {
        let out = dir.path().join(format!("{estimator}.json"));
        let o = recab(&[
            "fit",
            "--estimator",
            estimator,
            "--target-logits",
            "0.57,0.14,0.28",
            "--target-temp",
            "0.2",
            "--posterior-temp",
            "1",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        read_json(&out)
    };
    let ca = fit("ca");
    assert_eq!(ca["converged"], true);
    assert_eq!(ca["manifest"]["command"], "fit");
    let fitted = floats(&ca["fitted_logits"]);
    for (f, e) in fitted.iter().zip([0.576, 0.141, 0.283]) {
        assert!((f - e).abs() < 1e-3, "{fitted:?}");
    }
    let rc = floats(&fit("recab")["fitted_logits"]);
    assert!(rc[0] > fitted[0] + 0.1, "{rc:?}");
}

#[test]
fn fit_trace_and_iteration_precondition() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit.json");
    let o = recab(&[
        "fit",
        "--estimator",
        "mc",
        "--target-logits",
        "0.57,0.14,0.28",
        "--iters",
        "5",
        "--trace",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let v = read_json(&out);
    assert_eq!(v["trajectory"].as_array().unwrap().len(), 6);
    assert!(v["final_std_error"].as_f64().unwrap() > 0.0);

    let o = recab(&[
        "fit",
        "--estimator",
        "ca",
        "--target-logits",
        "0.57,0.14,0.28",
        "--iters",
        "0",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn divergent_fit_writes_partial_result_and_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit.json");
    let o = recab(&[
        "fit",
        "--estimator",
        "recab",
        "--target-logits",
        "0.9,0.05,0.05",
        "--target-temp",
        "5",
        "--posterior-temp",
        "0.05",
        "--step",
        "1e308",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    let v = read_json(&out);
    assert_eq!(v["converged"], false);
    assert!(v["diverged_at"].is_u64());
}

#[test]
fn verify_bound_reports_are_reproducible() {
    let run = |args: &[&str]| {
        let o = recab(args);
        let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v["manifest"]["wall_time_seconds"] = Value::Null;
        (code(&o), v)
    };
    let args = [
        "verify-bound",
        "--trials",
        "1",
        "--seed",
        "42",
        "--mc-samples",
        "2000",
    ];
    let (c1, a) = run(&args);
    let (c2, b) = run(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    assert_eq!(a["report"]["trials"].as_array().unwrap().len(), 1);

    let (c, v) = run(&[
        "verify-bound",
        "--trials",
        "30",
        "--dims",
        "2..6",
        "--mc-samples",
        "2000",
    ]);
    assert_eq!(c, 0);
    assert_eq!(v["passed"], true);
    assert!(v["report"]["max_gap_error"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn verify_bound_rejects_bad_ranges() {
    assert_eq!(code(&recab(&["verify-bound", "--dims", "5..2"])), 1);
    assert_eq!(code(&recab(&["verify-bound", "--temp-range", "-1,2"])), 1);
}

#[test]
fn uniform_samples_average_to_barycentre() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z.csv");
    let o = recab(&[
        "sample",
        "--logits",
        "1,1,1",
        "--temp",
        "1",
        "--count",
        "100000",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("z1,z2,z3"));
    let mut sums = [0.0; 3];
    let mut count = 0;
    for line in lines {
        for (s, v) in sums.iter_mut().zip(line.split(',')) {
            *s += v.parse::<f64>().unwrap();
        }
        count += 1;
    }
    assert_eq!(count, 100_000);
    for s in sums {
        assert!((s / count as f64 - 1.0 / 3.0).abs() < 0.005);
    }
    assert!(dir.path().join("z.csv.manifest.json").exists());
}

#[test]
fn zero_samples_write_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z.csv");
    let o = recab(&[
        "sample",
        "--logits",
        "0.2,0.8",
        "--count",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(&out).unwrap(), "z1,z2\n");
}

#[test]
fn density_grid_covers_interior_and_needs_three_categories() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = recab(&[
        "density",
        "--logits",
        "0.57,0.14,0.28",
        "--temp",
        "0.2",
        "--resolution",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("b1,b2,b3,density\n"));
    assert_eq!(text.lines().count(), 1 + 36);
    let manifest = read_json(&dir.path().join("d.csv.manifest.json"));
    assert_eq!(manifest["command"], "density");
    assert_eq!(manifest["params"]["temp"], 0.2);

    let o = recab(&[
        "density",
        "--logits",
        "0.5,0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
}
