use lorvar::experiments::{run, ExperimentConfig, EXPERIMENTS};

fn quick(name: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(name);
    match name {
        "string-run" => {
            cfg.builtin = Some("kink".into());
            cfg.parameter = Some(1.0);
            cfg.grid_dt = Some(0.05);
            cfg.grid_du = Some(0.05);
            cfg.refinements = 2;
        }
        "converge-zigzag" | "converge-diffuse" => cfg.n_values = vec![4, 8],
        "converge-kinks" => cfg.n_values = vec![1, 2],
        "junction-solve" => {
            cfg.theta1 = Some(4.0);
            cfg.theta2 = Some(1.0);
            cfg.theta3 = Some(1.0);
            cfg.refinements = 2;
        }
        _ => {}
    }
    cfg
}

#[test]
fn every_experiment_is_deterministic_and_refined() {
    for name in EXPERIMENTS {
        let cfg = quick(name);
        let a = run(&cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
        let b = run(&cfg).unwrap();
        assert_eq!(a.to_json_string().unwrap(), b.to_json_string().unwrap(), "{name}");
        assert!(a.refinement.len() >= 2, "{name}: {} rows", a.refinement.len());
        assert!(!a.checks.is_empty(), "{name}");
        assert_eq!(a.passed, a.checks.iter().all(|c| c.passed), "{name}");
        let table = a.refinement_table();
        assert_eq!(table.rows.len(), a.refinement.len());
        assert!(table.rows.iter().all(|r| r.len() == table.columns.len()));
    }
}

#[test]
fn reports_are_written_as_json_and_csv() {
    let dir = std::env::temp_dir().join(format!("lorvar-experiments-{}", std::process::id()));
    let rep = run(&quick("junction-solve")).unwrap();
    let paths = rep.write(&dir).unwrap();
    assert!(paths[0].ends_with("junction-solve.json"));
    let csv = std::fs::read_to_string(dir.join("junction-solve_refinement.csv")).unwrap();
    assert!(csv.starts_with("width,"));
    assert_eq!(csv.lines().count(), rep.refinement.len() + 1);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
    assert_eq!(json["experiment"], "junction-solve");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn bad_configurations_are_rejected() {
    assert!(run(&ExperimentConfig::new("warp-drive")).is_err());
    let mut cfg = quick("string-run");
    cfg.refinements = 1;
    assert!(run(&cfg).is_err());
    let mut cfg = quick("string-run");
    cfg.grid_dt = Some(-0.1);
    assert!(run(&cfg).is_err());
    let mut cfg = quick("converge-zigzag");
    cfg.n_values = vec![0, 4];
    assert!(run(&cfg).is_err());
    let mut cfg = quick("string-run");
    cfg.window = Some([1.0, 0.0]);
    assert!(run(&cfg).is_err());
}
