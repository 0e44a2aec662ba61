use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cspgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cspgap")).args(args).output().expect("spawn cspgap")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json stdout")
}

fn write_spec(dir: &Path) -> String {
    let spec = dir.join("spec.json");
    let out = cspgap(&["uniformize", "triangle-cut", "--copies", "2", "--out", spec.to_str().unwrap()]);
    assert!(out.status.success());
    spec.to_str().unwrap().to_string()
}

#[test]
fn gap_find_triangle() {
    let v = json_of(&cspgap(&["gap-find", "triangle-cut"]));
    assert_eq!(v["gamma"], "1/1");
    assert_eq!(v["beta"], "2/3");
    assert_eq!(v["seed"], 0);
    assert!(v["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn lp_solve_reads_instance_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    std::fs::write(
        &path,
        r#"{"q0": 2, "k": 2, "num_vars": 2, "constraints": [{"pred": "dicut", "vars": [0, 1]}]}"#,
    )
    .unwrap();
    let v = json_of(&cspgap(&["lp-solve", path.to_str().unwrap()]));
    assert_eq!(v["feasible"], true);
    assert_eq!(v["objective"], "1/1");
}

#[test]
fn sample_stream_and_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path());
    let sample = dir.path().join("yes.json");
    let s = sample.to_str().unwrap();
    let gen = ["dihp-gen", "--spec", &spec, "--n", "30", "--m", "3", "--case", "yes", "--seed", "5"];
    let mut args = gen.to_vec();
    args.extend(["--out", s]);
    assert!(cspgap(&args).status.success());
    let first = std::fs::read(&sample).unwrap();
    assert!(cspgap(&args).status.success());
    assert_eq!(first, std::fs::read(&sample).unwrap());

    let out = cspgap(&["stream-emit", "--spec", &spec, "--sample", s]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(header["seed"], 5);
    assert_eq!(header["constraints"].as_u64().unwrap() as usize, lines.count());

    let v = json_of(&cspgap(&["sim-run", "--spec", &spec, "--n", "30", "--m", "3", "--trials", "200", "--seed", "1"]));
    assert_eq!(v["advantage"], 0.0);
    assert_eq!(v["comm_bits"], 0);
}

#[test]
fn fourier_and_lemma_reports() {
    let v = json_of(&cspgap(&["fourier-check", "--q", "3", "--N", "4", "--seed", "2"]));
    assert_eq!(v["pass"], true);
    let v = json_of(&cspgap(&["lemma-verify", "--suite", "sums", "--seed", "2"]));
    assert_eq!(v["pass"], true);
    assert_eq!(v["suite"], "sums");
}

#[test]
fn pipeline_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("artifacts");
    let good = dir.path().join("good.json");
    let cfg = serde_json::json!({
        "seed": 11,
        "stages": ["lp-solve", "uniformize", "dihp-gen", "sim-run"],
        "instance": { "preset": "triangle-cut" },
        "copies": 2,
        "n": 30,
        "m": 3,
        "trials": 200,
        "output_dir": out_dir,
    });
    std::fs::write(&good, cfg.to_string()).unwrap();
    let v = json_of(&cspgap(&["pipeline", "--config", good.to_str().unwrap()]));
    assert_eq!(v["seed"], 11);
    assert!(out_dir.join("report.json").is_file());

    let mut bad_cfg = cfg.clone();
    bad_cfg["m"] = serde_json::json!(40);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, bad_cfg.to_string()).unwrap();
    let out = cspgap(&["pipeline", "--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());

    let out = cspgap(&["lp-solve", "no-such-preset"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-preset"));
}
