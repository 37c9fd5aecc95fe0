use skyrmion_core::ansatz::AnsatzConfig;
use skyrmion_core::exact::{dense_ground, lanczos_ground, LanczosConfig};
use skyrmion_core::hamiltonian::build_hamiltonian;
use skyrmion_core::io::{csv_string, read_csv, write_outputs, Manifest, CSV_HEADER};
use skyrmion_core::sweep::{run_sweep, RunConfig, SolverKind};
use skyrmion_core::vqe::{minimize, minimize_with_starts, Optimizer, VqeConfig};

fn config(kind: &str, lattice: &str, start: f64, stop: f64, step: f64) -> RunConfig {
    RunConfig::from_json(&format!(
        r#"{{
            "lattice": {lattice},
            "model": {{"j_par": -1.0, "j_perp": 0.5, "dmi_mode": "parallel"}},
            "solver": {{"kind": "{kind}",
                        "vqe": {{"optimizer": "lbfgs", "restarts": 4, "max_evals": 3000,
                                 "ansatz": {{"layers": 6}}}}}},
            "sweep": {{"start": {start}, "stop": {stop}, "step": {step}, "dump_fields_at": [{start}]}},
            "output": {{"wall_time": false}},
            "rng_seed": 11
        }}"#
    ))
    .unwrap()
}

const SQUARE_2X2: &str = r#"{"kind": "square", "nx": 2, "ny": 2}"#;

#[test]
fn single_point_dense_sweep_matches_dense_ground() {
    let cfg = config("dense", SQUARE_2X2, 0.7, 0.7, 0.1);
    let out = run_sweep(&cfg).unwrap();
    assert_eq!(out.records.len(), 1);
    let lattice = cfg.build_lattice().unwrap();
    let h = build_hamiltonian(&lattice, &cfg.model.at(0.7)).unwrap();
    assert_eq!(out.records[0].energy, dense_ground(&h).unwrap().energy);
    assert_eq!(out.records[0].solver, "dense");
    assert_eq!(csv_string(&out.records).lines().count(), 2);
}

#[test]
fn lanczos_sweep_is_byte_identical_across_runs() {
    let cfg = config("lanczos", r#"{"kind": "square", "nx": 3, "ny": 2}"#, 0.0, 1.0, 0.25);
    let a = csv_string(&run_sweep(&cfg).unwrap().records);
    let b = csv_string(&run_sweep(&cfg).unwrap().records);
    assert_eq!(a, b);
    assert!(a.starts_with(CSV_HEADER));
}

#[test]
fn vqe_sweep_is_byte_identical_across_runs() {
    let cfg = config("vqe", SQUARE_2X2, 0.5, 1.0, 0.5);
    let a = run_sweep(&cfg).unwrap();
    let b = run_sweep(&cfg).unwrap();
    assert_eq!(csv_string(&a.records), csv_string(&b.records));
}

#[test]
fn outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("lanczos", SQUARE_2X2, 0.0, 1.0, 0.25);
    cfg.output.dir = dir.path().join("run");
    cfg.output.wall_time = true;
    let lattice = cfg.build_lattice().unwrap();
    let out = run_sweep(&cfg).unwrap();
    let written = write_outputs(&cfg, &lattice, &out).unwrap();
    assert_eq!(written.len(), 3);

    let back = read_csv(&written[0]).unwrap();
    assert_eq!(back.len(), out.records.len());
    for (a, b) in out.records.iter().zip(&back) {
        for (x, y) in [
            (a.b_z, b.b_z),
            (a.energy, b.energy),
            (a.q, b.q),
            (a.m[0], b.m[0]),
            (a.m[1], b.m[1]),
            (a.m[2], b.m[2]),
            (a.wall_time_s, b.wall_time_s),
        ] {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    let dump = std::fs::read_to_string(&written[1]).unwrap();
    assert_eq!(dump.lines().count(), 4);
    assert_eq!(dump.lines().next().unwrap().split_whitespace().count(), 6);

    let text = std::fs::read_to_string(&written[2]).unwrap();
    let manifest = Manifest::from_json(&text).unwrap();
    assert_eq!(manifest.config, cfg);
    assert_eq!(manifest.version, env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest.points, 5);
}

#[test]
fn write_failure_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let mut cfg = config("dense", SQUARE_2X2, 0.0, 0.0, 0.1);
    cfg.output.dir = blocker.join("sub");
    let lattice = cfg.build_lattice().unwrap();
    let out = run_sweep(&cfg).unwrap();
    let err = write_outputs(&cfg, &lattice, &out).unwrap_err();
    assert!(err.to_string().contains(&blocker.display().to_string()), "{err}");
}

#[test]
fn vqe_and_lanczos_agree_on_small_sweep() {
    let vqe = run_sweep(&config("vqe", SQUARE_2X2, 0.0, 2.0, 0.5)).unwrap();
    let exact = run_sweep(&config("lanczos", SQUARE_2X2, 0.0, 2.0, 0.5)).unwrap();
    for (v, e) in vqe.records.iter().zip(&exact.records) {
        assert_eq!(v.b_z, e.b_z);
        assert!((v.energy - e.energy).abs() <= 1e-2, "{} vs {} at {}", v.energy, e.energy, v.b_z);
        assert!(v.energy >= e.energy - 1e-9);
    }
}

#[test]
fn warm_start_never_worse_than_cold() {
    let cfg = config("vqe", SQUARE_2X2, 1.0, 1.0, 0.1);
    let lattice = cfg.build_lattice().unwrap();
    let h = build_hamiltonian(&lattice, &cfg.model.at(1.0)).unwrap();
    let h_prev = build_hamiltonian(&lattice, &cfg.model.at(0.9)).unwrap();
    let vqe = VqeConfig { max_evals: 200, ..cfg.solver.vqe };
    let prev = minimize(&h_prev, &vqe).unwrap();
    let cold = minimize(&h, &vqe).unwrap();
    let warm = minimize_with_starts(&h, &vqe, &[prev.best_theta]).unwrap();
    assert!(warm.energy <= cold.energy);
    assert_eq!(&warm.restart_energies[..cold.restart_energies.len()], &cold.restart_energies[..]);
}

#[test]
fn refinement_adds_points_around_the_jump() {
    let mut cfg = config("lanczos", r#"{"kind": "square", "nx": 3, "ny": 2}"#, 0.0, 3.0, 0.25);
    let coarse = run_sweep(&cfg).unwrap();
    let t = coarse.transition.clone().expect("the 3x2 sweep has a level crossing near 2.6");
    cfg.sweep.refine = Some(skyrmion_core::sweep::RefineConfig { step: 0.05, window: 0.1 });
    let fine = run_sweep(&cfg).unwrap();
    assert!(fine.records.len() > coarse.records.len());
    for w in fine.records.windows(2) {
        assert!(w[0].b_z < w[1].b_z);
    }
    let t2 = fine.transition.unwrap();
    assert!(t2.b_after - t2.b_before < t.b_after - t.b_before + 1e-12);
}

#[test]
fn lanczos_matches_dense_across_the_pipeline() {
    let cfg = config("lanczos", r#"{"kind": "triangular", "shells": 1}"#, 1.0, 1.0, 0.1);
    let lattice = cfg.build_lattice().unwrap();
    let h = build_hamiltonian(&lattice, &cfg.model.at(1.0)).unwrap();
    let l = lanczos_ground(&h, &LanczosConfig::default()).unwrap();
    let d = dense_ground(&h).unwrap();
    assert!((l.energy - d.energy).abs() < 1e-10);
}

#[test]
fn solver_override_and_caps() {
    let mut cfg = config("lanczos", r#"{"kind": "square", "nx": 4, "ny": 4}"#, 1.0, 1.0, 0.1);
    cfg.solver.kind = SolverKind::Dense;
    assert!(cfg.validate().is_err());
    cfg.solver.kind = SolverKind::Vqe;
    cfg.solver.vqe = VqeConfig {
        optimizer: Optimizer::GradientDescentParameterShift,
        ansatz: AnsatzConfig::default(),
        ..VqeConfig::default()
    };
    assert!(cfg.validate().is_ok());
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        if path.file_name().unwrap().to_str().unwrap().starts_with("bench") {
            let cfg: skyrmion_core::bench::BenchConfig = serde_json::from_str(&text).unwrap();
            cfg.validate().unwrap();
        } else {
            RunConfig::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
        seen += 1;
    }
    assert!(seen >= 5);
}
