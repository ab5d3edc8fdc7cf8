use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ddreg_cli::report::{Report, REPORT_SCHEMA};

fn ddreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddreg"))
        .args(args)
        .env_remove("DDREG_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn validate(dir: &Path) -> Report {
    let text = std::fs::read_to_string(dir.join("report.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(&value)
        .map(|e| e.to_string())
        .collect();
    assert!(errors.is_empty(), "schema violations: {errors:?}");
    serde_json::from_str(&text).unwrap()
}

fn simulate(dir: &Path, preset: &str, n: &str, seed: &str) -> PathBuf {
    ok(ddreg(&[
        "simulate",
        "--design",
        preset,
        "--n",
        n,
        "--seed",
        seed,
        "--out-dir",
        dir.to_str().unwrap(),
    ]));
    dir.join("data.csv")
}

const SHORT_CHAIN: [&str; 6] = ["--iters", "300", "--burn-in", "150", "--keep", "50"];

#[test]
fn simulate_then_fit_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    let data = simulate(&sim, "matching-easy", "300", "5");
    let r = validate(&sim);
    assert_eq!(
        r.simulation.as_ref().unwrap().true_alpha,
        [1.0, 0.3, 0.2, 0.2, 0.1, -0.1]
    );
    assert!(sim.join("jump_profiles.csv").exists());

    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let mut args = vec!["fit", "--data", data.to_str().unwrap(), "--seed", "3"];
        args.extend(SHORT_CHAIN);
        args.extend(["--out-dir", out.to_str().unwrap()]);
        ok(ddreg(&args));
        reports.push(validate(&out));
    }
    for file in [
        "report.json",
        "draws.csv",
        "table.txt",
        "jump_profiles.csv",
        "jump_contour.csv",
    ] {
        let a = std::fs::read(tmp.path().join("a").join(file)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(file)).unwrap();
        assert!(a == b, "{file} differs between identical runs");
    }
    let fit = reports[0].fit.as_ref().unwrap();
    assert_eq!(fit.n_window, 300);
    assert_eq!(fit.coefficients.len(), 18);
    assert_eq!(
        reports[0].data.as_ref().unwrap().columns[0].name,
        "intercept"
    );

    let contour = std::fs::read_to_string(tmp.path().join("a/jump_contour.csv")).unwrap();
    assert_eq!(contour.lines().count(), 1 + 41 * 41);
    assert!(contour.starts_with("x1,x2,jump,zero_jump\n"));
}

#[test]
fn select_and_baseline_reports_validate() {
    let tmp = tempfile::tempdir().unwrap();
    let data = simulate(&tmp.path().join("sim"), "mixture-easy", "400", "1");
    let sel = tmp.path().join("sel");
    let mut args = vec![
        "select",
        "--data",
        data.to_str().unwrap(),
        "--delta-grid",
        "0.5,0.25",
    ];
    args.extend(SHORT_CHAIN);
    args.extend(["--out-dir", sel.to_str().unwrap()]);
    ok(ddreg(&args));
    let r = validate(&sel);
    let s = r.selection.unwrap();
    assert_eq!(s.deltas.len(), 2);
    assert!(s.selected_delta == 0.5 || s.selected_delta == 0.25);
    assert_eq!(r.fit.unwrap().delta, s.selected_delta);

    let base = tmp.path().join("base");
    ok(ddreg(&[
        "baseline",
        "--data",
        data.to_str().unwrap(),
        "--delta",
        "0.1",
        "--out-dir",
        base.to_str().unwrap(),
    ]));
    let b = validate(&base).baseline.unwrap();
    assert_eq!(b.coefficients.len(), 6);
    ok(ddreg(&[
        "baseline",
        "--data",
        data.to_str().unwrap(),
        "--method",
        "ols",
        "--out-dir",
        base.to_str().unwrap(),
    ]));
    validate(&base);
}

#[test]
fn transforms_expand_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let data = simulate(&tmp.path().join("sim"), "matching-hard", "300", "2");
    let out = tmp.path().join("fit");
    let mut args = vec![
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--covariates",
        "x1,x2,x3",
        "--transform",
        "x3=bspline:3",
        "--delta",
        "0.4",
    ];
    args.extend(SHORT_CHAIN);
    args.extend(["--out-dir", out.to_str().unwrap()]);
    ok(ddreg(&args));
    let r = validate(&out);
    let names: Vec<String> = r
        .data
        .unwrap()
        .columns
        .into_iter()
        .map(|c| c.name)
        .collect();
    assert_eq!(
        names,
        ["intercept", "x1", "x2", "x3_bs1", "x3_bs2", "x3_bs3"]
    );
    assert_eq!(r.fit.unwrap().delta, 0.4);
}

#[test]
fn study_runs_and_resumes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("study.toml");
    std::fs::write(
        &cfg,
        "replicates = 3\n\n[design]\npreset = \"matching-easy\"\nn = 300\nseed = 4\n\n[estimator]\nkind = \"bolr\"\ndelta = 0.1\n",
    )
    .unwrap();
    let out = tmp.path().join("study");
    ok(ddreg(&[
        "study",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]));
    let first = std::fs::read(out.join("report.json")).unwrap();
    let r = validate(&out);
    let study = r.study.unwrap();
    assert_eq!(study.replicates, 3);
    assert_eq!(study.rows.len(), 6);
    assert_eq!(
        std::fs::read_to_string(out.join("replicates.jsonl"))
            .unwrap()
            .lines()
            .count(),
        3
    );
    ok(ddreg(&[
        "study",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]));
    assert_eq!(std::fs::read(out.join("report.json")).unwrap(), first);
    assert!(out.join("study_table.csv").exists());
}

#[test]
fn out_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_ddreg"))
        .args(["simulate", "--design", "decay-easy", "--n", "100"])
        .env("DDREG_OUT_DIR", &dir)
        .output()
        .unwrap();
    ok(out);
    assert!(dir.join("data.csv").exists());
    validate(&dir);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let data = simulate(&tmp.path().join("sim"), "matching-easy", "100", "1");
    let data = data.to_str().unwrap();

    let bad_transform = ddreg(&[
        "fit",
        "--data",
        data,
        "--transform",
        "x1=cube",
        "--out-dir",
        out,
    ]);
    assert_eq!(bad_transform.status.code(), Some(2));
    let bad_chain = ddreg(&[
        "fit",
        "--data",
        data,
        "--iters",
        "10",
        "--burn-in",
        "20",
        "--out-dir",
        out,
    ]);
    assert_eq!(bad_chain.status.code(), Some(2));
    let bad_preset = ddreg(&["simulate", "--design", "nonsense", "--out-dir", out]);
    assert_eq!(bad_preset.status.code(), Some(2));

    let missing = ddreg(&[
        "fit",
        "--data",
        "/nonexistent/file.csv",
        "--covariates",
        "a",
        "--out-dir",
        out,
    ]);
    assert_eq!(missing.status.code(), Some(3));
    let unknown = ddreg(&[
        "baseline",
        "--data",
        data,
        "--covariates",
        "nope",
        "--out-dir",
        out,
    ]);
    assert_eq!(unknown.status.code(), Some(3));

    // y >= t exactly when a > 0: logistic fit diverges
    let sep = tmp.path().join("sep.csv");
    let mut csv = String::from("y,a\n");
    for i in 0..30 {
        let a = i as f64 - 14.5;
        let y = if a > 0.0 { 0.55 } else { 0.45 };
        csv.push_str(&format!("{y},{a}\n"));
    }
    std::fs::write(&sep, csv).unwrap();
    let separated = ddreg(&[
        "baseline",
        "--data",
        sep.to_str().unwrap(),
        "--out-dir",
        out,
    ]);
    assert_eq!(
        separated.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&separated.stderr)
    );
}
