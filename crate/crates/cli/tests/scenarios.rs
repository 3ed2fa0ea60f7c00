use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use clap::Parser;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use zohpde_cli::output::Manifest;
use zohpde_cli::{execute, Cli};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn load(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(configs().join(name)).unwrap()).unwrap()
}

/// Writes `cfg` with its output directory moved under `dir`.
fn stage(dir: &Path, name: &str, mut cfg: Value) -> PathBuf {
    cfg["output_dir"] = json!(dir.join(format!("{name}_out")));
    let path = dir.join(format!("{name}.cfg"));
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn run(args: &[&str]) {
    let mut argv = vec!["zohpde"];
    argv.extend_from_slice(args);
    execute(Cli::parse_from(argv)).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let idx = rdr.headers().unwrap().iter().position(|h| h == name).unwrap();
    rdr.records().map(|r| r.unwrap()[idx].parse().unwrap()).collect()
}

fn files_under(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn assert_manifest_complete(root: &Path) {
    let manifest: Manifest = serde_json::from_value(read_json(&root.join("manifest.json"))).unwrap();
    let files = files_under(root);
    let listed: Vec<&str> = manifest.files.iter().map(|e| e.path.as_str()).collect();
    for name in files.keys().filter(|n| !n.ends_with("manifest.json")) {
        assert!(listed.contains(&name.as_str()), "{name} missing from manifest");
    }
    for entry in &manifest.files {
        let bytes = &files[&entry.path];
        assert_eq!(hex::encode(Sha256::digest(bytes)), entry.sha256, "{}", entry.path);
    }
}

#[test]
fn bundled_example_reproduces_bound_and_decay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = stage(dir.path(), "example", load("paper_example.cfg"));
    run(&["run", "--config", cfg.to_str().unwrap()]);
    let out = dir.path().join("example_out");
    let report = read_json(&out.join("stability_report.json"));
    let sigma_max = report["sigma_max"].as_f64().unwrap();
    assert!((sigma_max - 1.0578).abs() < 1e-3, "sigma_max = {sigma_max}");
    assert_eq!(report["envelope_ok"], json!(true));
    assert_eq!(report["sigma_used"], json!(1.0));
    assert!(report["sigma_fit"].as_f64().unwrap() > 1.0);

    let summary = read_json(&out.join("summary.json"));
    assert!(summary["max_cross_pathway_error"].as_f64().unwrap() < 2e-2);

    // Outlet decays; the input is piecewise constant on the sampling grid.
    let y1 = column(&out.join("fd_trace.csv"), "y1");
    assert!(y1[7000..].iter().all(|v| v.abs() < 1e-6));
    let u = column(&out.join("ide_trace.csv"), "u");
    for i in 1..u.len() {
        if u[i] != u[i - 1] {
            assert_eq!(i % 100, 0, "input changed off-sample at {i}");
        }
    }
    assert_manifest_complete(&out);
}

#[test]
fn open_loop_is_flagged_unstable_and_grows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = stage(dir.path(), "open", load("open_loop.cfg"));
    run(&["run", "--config", cfg.to_str().unwrap()]);
    let out = dir.path().join("open_out");
    let report = read_json(&out.join("open_loop_report.json"));
    assert_eq!(report["stable"], json!(false));
    let lambda = report["lambda"].as_f64().unwrap();
    let growth = read_json(&out.join("summary.json"))["open_loop_growth"].as_f64().unwrap();
    assert!((growth - lambda).abs() / lambda < 0.05);
}

#[test]
fn zero_problem_outputs_vanish_after_one_time_unit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = stage(dir.path(), "zero", load("zero_problem.cfg"));
    run(&["run", "--config", cfg.to_str().unwrap()]);
    let out = dir.path().join("zero_out");
    let n = 200;
    for (file, col) in [("fd_trace.csv", "supnorm"), ("fd_trace.csv", "y1"), ("fd_trace.csv", "u"), ("ide_trace.csv", "v"), ("ide_trace.csv", "u")] {
        let values = column(&out.join(file), col);
        assert!(values[n..].iter().all(|&v| v == 0.0), "{file}:{col}");
    }
    for t in ["1", "2", "3"] {
        for pathway in ["fd", "ide"] {
            let y = column(&out.join(format!("profile_{pathway}_t{t}.csv")), "y");
            assert!(y.iter().all(|&v| v == 0.0));
        }
    }
    assert_eq!(read_json(&out.join("stability_report.json"))["sigma_max"], json!("unbounded"));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = load("paper_example.cfg");
    cfg["resolution"] = json!(200);
    cfg["horizon"] = json!(3.0);
    cfg["snapshot_times"] = json!([1.0, 2.0]);
    cfg["schedule"] = json!({"kind": "jittered", "T": 0.1, "seed": 11});
    let a = stage(dir.path(), "a", cfg.clone());
    let b = stage(dir.path(), "b", cfg);
    run(&["run", "--config", a.to_str().unwrap()]);
    run(&["run", "--config", b.to_str().unwrap()]);
    let fa = files_under(&dir.path().join("a_out"));
    let fb = files_under(&dir.path().join("b_out"));
    assert_eq!(fa, fb);
    // A different seed changes the schedule and so the traces.
    let c = stage(dir.path(), "c", read_json(&a));
    run(&["run", "--config", c.to_str().unwrap(), "--seed", "12"]);
    assert_ne!(fa["ide_trace.csv"], files_under(&dir.path().join("c_out"))["ide_trace.csv"]);
}

#[test]
fn solve_kernels_and_curve_commands() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = load("paper_example.cfg");
    cfg["resolution"] = json!(200);
    let path = stage(dir.path(), "k", cfg);
    run(&["solve-kernels", "--config", path.to_str().unwrap()]);
    let out = dir.path().join("k_out");
    let consts = read_json(&out.join("gain_constants.json"));
    assert!((consts["M"].as_f64().unwrap() - std::f64::consts::E).abs() < 1e-3);
    assert_eq!(column(&out.join("gain.csv"), "ktilde").len(), 201);
    assert_manifest_complete(&out);

    let curve = dir.path().join("curve");
    run(&["stability-curve", "--M", "1", "--a", "0", "--points", "50", "--t-max", "0.9", "--out", curve.to_str().unwrap()]);
    let sigma = column(&curve.join("sigma_curve.csv"), "sigma_max");
    assert_eq!(sigma.len(), 50);
    assert!(sigma.windows(2).all(|w| w[1] < w[0]));
}

fn binary(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_zohpde"))
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = stage(dir.path(), "good", load("zero_problem.cfg"));
    assert_eq!(binary(&["run", "--config", good.to_str().unwrap()]), 0);

    let mut bad = load("zero_problem.cfg");
    bad["resolution"] = json!(10);
    let bad = stage(dir.path(), "bad", bad);
    assert_eq!(binary(&["run", "--config", bad.to_str().unwrap()]), 2);
    assert_eq!(binary(&["run", "--config", dir.path().join("missing.cfg").to_str().unwrap()]), 2);
    assert_eq!(binary(&["run"]), 2);

    // The boundary pivot 1 + Δ/2 k̃(0) vanishes.
    let mut degenerate = load("zero_problem.cfg");
    degenerate["problem"]["p"] = json!({"kind": "polynomial", "coefficients": [-400.0]});
    let degenerate = stage(dir.path(), "degenerate", degenerate);
    assert_eq!(binary(&["run", "--config", degenerate.to_str().unwrap()]), 3);
}
