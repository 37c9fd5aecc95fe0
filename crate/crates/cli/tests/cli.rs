use std::path::Path;
use std::process::Command;

const CONFIG: &str = r#"{
    "lattice": {"kind": "square", "nx": 2, "ny": 2},
    "model": {"j_par": -1.0, "j_perp": 0.5, "dmi_mode": "parallel"},
    "solver": {"kind": "lanczos"},
    "sweep": {"start": 0.0, "stop": 1.0, "step": 0.25, "dump_fields_at": [0.5]},
    "output": {"wall_time": false},
    "rng_seed": 3
}"#;

fn skyrmion(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_skyrmion")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn sweep_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", CONFIG);
    let out = dir.path().join("out");
    let o = skyrmion(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(out.join("manifest.json").exists());
    assert!(out.join("field_bz0.5.txt").exists());
}

#[test]
fn identical_runs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", CONFIG);
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = skyrmion(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--solver", "dense"]);
        assert!(o.status.success());
        std::fs::read(out.join("sweep.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", CONFIG);
    let out = dir.path().join("o");
    let o = skyrmion(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--solver", "dense", "--seed", "9"]);
    assert!(o.status.success());
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(v["config"]["solver"]["kind"], "dense");
    assert_eq!(v["config"]["rng_seed"], 9);
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",dense,"));
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", &CONFIG.replace("\"step\": 0.25", "\"step\": -1"));
    assert_eq!(skyrmion(&["sweep", "--config", &bad]).status.code(), Some(1));
    let garbled = write(dir.path(), "garbled.json", "{ not json");
    assert_eq!(skyrmion(&["sweep", "--config", &garbled]).status.code(), Some(1));
    let cfg = write(dir.path(), "run.json", CONFIG);
    let o = skyrmion(&["sweep", "--config", &cfg, "--solver", "qpu"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn missing_config_exits_3() {
    let o = skyrmion(&["sweep", "--config", "/nonexistent/run.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/run.json"));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", CONFIG);
    let blocker = write(dir.path(), "blocker", "");
    let o = skyrmion(&["sweep", "--config", &cfg, "--out", &format!("{blocker}/x")]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn all_points_unconverged_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = CONFIG.replace(
        "\"solver\": {\"kind\": \"lanczos\"}",
        "\"solver\": {\"kind\": \"lanczos\", \"exact\": {\"max_krylov\": 2, \"max_matvecs\": 2, \"residual_tol\": 1e-14}}",
    );
    let cfg = write(dir.path(), "run.json", &text);
    let out = dir.path().join("o");
    let o = skyrmion(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.contains("lanczos-failed"));
}

#[test]
fn pattern_dumps_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", CONFIG);
    let out = dir.path().join("p");
    let o = skyrmion(&["pattern", "--config", &cfg, "--bz", "1.5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let dump = std::fs::read_to_string(out.join("field_bz1.5.txt")).unwrap();
    assert_eq!(dump.lines().count(), 4);
}

#[test]
fn bench_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bench.json",
        r#"{"sizes": [{"kind": "square", "nx": 2, "ny": 2}, {"kind": "square", "nx": 3, "ny": 2}],
            "solvers": ["lanczos"],
            "model": {"j_par": -1.0, "j_perp": 0.5, "dmi_mode": "parallel"},
            "b_z": 1.0}"#,
    );
    let out = dir.path().join("b");
    let o = skyrmion(&["bench", "--config", &cfg, "--out", out.to_str().unwrap(), "--solver", "dense"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("bench.json")).unwrap()).unwrap();
    assert_eq!(json["cells"].as_array().unwrap().len(), 2);
    assert!(std::fs::read_to_string(out.join("bench.txt")).unwrap().contains("exponent"));
}
