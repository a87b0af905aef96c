//! End-to-end tests of the command-line interface: exit codes, file
//! contracts, and byte-level determinism. Everything runs through
//! `qgnls::cli::run` in process, with outputs in temporary directories.

use std::fs;
use std::path::Path;

fn star4_delta(dir: &Path) -> String {
    let path = dir.join("star4_delta.json");
    fs::write(
        &path,
        r#"{
  "vertices": [{"id": "c", "condition": {"type": "delta", "gamma": -2.0}}],
  "edges": [
    {"id": "e1", "from": "c", "length": "inf"},
    {"id": "e2", "from": "c", "length": "inf"},
    {"id": "e3", "from": "c", "length": "inf"},
    {"id": "e4", "from": "c", "length": "inf"}
  ]
}"#,
    )
    .unwrap();
    path.display().to_string()
}

fn run(args: &[&str]) -> u8 {
    let argv: Vec<String> =
        std::iter::once("qgnls".to_string()).chain(args.iter().map(|s| s.to_string())).collect();
    qgnls::cli::run(&argv)
}

fn summary(dir: &Path) -> serde_json::Value {
    let text = fs::read_to_string(dir.join("summary.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn spectrum_emits_one_row_with_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = star4_delta(tmp.path());
    let out = tmp.path().join("out");
    let code =
        run(&["spectrum", "--graph", &graph, "--h", "0.02", "--out", &out.display().to_string()]);
    assert_eq!(code, 0);

    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "lambda_min,closed_form,residual,truncation_drift");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(lines.next().is_none(), "exactly one data row");
    let lambda: f64 = row[0].parse().unwrap();
    let closed: f64 = row[1].parse().unwrap();
    assert!((lambda + 0.25).abs() < 2e-3, "lambda_min {lambda}");
    assert_eq!(closed, -0.25);

    let s = summary(&out);
    assert_eq!(s["existence"]["verdict"], "exists-critical-frequency");
}

#[test]
fn action_gs_writes_per_edge_profiles_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = star4_delta(tmp.path());
    let out = tmp.path().join("out");
    let code = run(&[
        "action-gs",
        "--graph",
        &graph,
        "--p",
        "3",
        "--omega",
        "0.125",
        "--h",
        "0.02",
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(code, 0);

    for edge in ["e1", "e2", "e3", "e4"] {
        let text = fs::read_to_string(out.join(format!("{edge}.csv"))).unwrap();
        assert!(text.starts_with("x,value\n"), "profile header for {edge}");
    }
    let s = summary(&out);
    assert_eq!(s["existence"], "exists");
    assert_eq!(s["ground_state"]["status"], "converged");
    let mass = s["ground_state"]["mass"].as_f64().unwrap();
    assert!((mass - 0.5857864376269049).abs() < 2e-3, "mass {mass}");
    assert!(s["ground_state"]["residuals"]["nehari"].as_f64().unwrap() < 1e-6);
}

#[test]
fn action_gs_above_window_reports_zero_solution_with_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = star4_delta(tmp.path());
    let out = tmp.path().join("out");
    let code = run(&[
        "action-gs",
        "--graph",
        &graph,
        "--omega",
        "0.5",
        "--h",
        "0.05",
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(code, 0, "the zero solution is a successful, classified outcome");
    let s = summary(&out);
    assert_eq!(s["ground_state"]["status"], "converged_to_zero");
    assert_eq!(s["existence"], "not-exists");
    assert_eq!(s["ground_state"]["s_omega"].as_f64().unwrap(), 0.0);
}

#[test]
fn validation_failures_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = star4_delta(tmp.path());

    // Negative frequency.
    assert_eq!(run(&["action-gs", "--graph", &graph, "--omega", "-0.1"]), 2);
    // Unknown flag.
    assert_eq!(run(&["spectrum", "--graph", &graph, "--frobnicate"]), 2);
    // Unknown subcommand.
    assert_eq!(run(&["eigensolve", "--graph", &graph]), 2);
    // Unreadable graph file.
    assert_eq!(run(&["spectrum", "--graph", "/nonexistent/g.json"]), 2);
    // Malformed grid.
    assert_eq!(run(&[
        "mass-curve",
        "--graph",
        &graph,
        "--omega-grid",
        "0.3:0.1:5",
    ]), 2);

    // Malformed JSON.
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run(&["spectrum", "--graph", &bad.display().to_string()]), 2);
}

#[test]
fn non_convergence_exits_3_after_writing_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = star4_delta(tmp.path());
    let out = tmp.path().join("out");
    // A three-iteration budget cannot reach the default tolerance.
    let code = run(&[
        "action-gs",
        "--graph",
        &graph,
        "--omega",
        "0.125",
        "--h",
        "0.1",
        "--max-iter",
        "3",
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(code, 3);
    let s = summary(&out);
    assert_eq!(s["ground_state"]["status"], "max_iter");
}

#[test]
fn mass_curve_csv_has_closed_form_column_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = star4_delta(tmp.path());
    let args = |out: &Path| {
        vec![
            "mass-curve".to_string(),
            "--graph".into(),
            graph.clone(),
            "--p".into(),
            "3".into(),
            "--omega-grid".into(),
            "0.05:0.2:4".into(),
            "--jobs".into(),
            "2".into(),
            "--h".into(),
            "0.05".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let (o1, o2) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&o1, &o2] {
        let owned = args(out);
        let argv: Vec<&str> = owned.iter().map(|s| s.as_str()).collect();
        assert_eq!(run(&argv), 0);
    }

    let c1 = fs::read(o1.join("mass_curve.csv")).unwrap();
    let c2 = fs::read(o2.join("mass_curve.csv")).unwrap();
    assert_eq!(c1, c2, "reruns must be byte-identical");

    let text = String::from_utf8(c1).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "omega,mass,closed_form,s_omega,p_norm,grad_norm,status,note"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let mass: f64 = row[1].parse().unwrap();
        let closed: f64 = row[2].parse().unwrap();
        assert!((mass - closed).abs() < 1e-3 * closed, "mass {mass} vs closed form {closed}");
    }

    let s = summary(&o1);
    assert_eq!(s["existence"].as_array().unwrap().len(), 4);
}

#[test]
fn evolve_and_stability_write_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = star4_delta(tmp.path());

    let out_e = tmp.path().join("evolve");
    let code = run(&[
        "evolve",
        "--graph",
        &graph,
        "--omega",
        "0.125",
        "--h",
        "0.05",
        "--dt",
        "0.01",
        "--t-end",
        "0.5",
        "--out",
        &out_e.display().to_string(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(out_e.join("trajectory.csv")).unwrap();
    assert!(text.starts_with("t,mass,energy,orbit_distance\n"));
    let s = summary(&out_e);
    assert!(s["mass_drift"].as_f64().unwrap() < 1e-10);
    assert!(s["max_orbit_distance"].as_f64().unwrap() < 1e-3);

    let out_s = tmp.path().join("stability");
    let code = run(&[
        "stability",
        "--graph",
        &graph,
        "--omega",
        "0.125",
        "--h",
        "0.05",
        "--dt",
        "0.01",
        "--t-end",
        "0.5",
        "--epsilon",
        "0.01",
        "--seed",
        "7",
        "--out",
        &out_s.display().to_string(),
    ]);
    assert_eq!(code, 0);
    let s = summary(&out_s);
    let initial = s["initial_distance"].as_f64().unwrap();
    assert!((initial - 0.01).abs() < 1e-6, "perturbation size {initial}");
    assert!(s["max_distance"].as_f64().unwrap() < 0.05);
    assert!(s["grid_max_distance"].as_f64().unwrap() >= s["max_distance"].as_f64().unwrap());
}

#[test]
fn verify_star_reports_pass_fail_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = star4_delta(tmp.path());
    let out = tmp.path().join("out");
    let code =
        run(&["verify-star", "--graph", &graph, "--out", &out.display().to_string()]);
    assert_eq!(code, 0);

    let text = fs::read_to_string(out.join("verify_star.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "check,reference,computed,difference,tolerance,pass");
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() >= 10, "got {} checks", rows.len());
    assert!(rows.iter().all(|r| r.ends_with(",true")), "all default checks pass:\n{text}");
    let s = summary(&out);
    assert_eq!(s["all_passed"], true);

    // Checks are reported, not asserted: a failing comparison still exits 0
    // and carries the failure in the table.
    let out5 = tmp.path().join("out5");
    let code = run(&[
        "verify-star",
        "--graph",
        &graph,
        "--p",
        "5",
        "--out",
        &out5.display().to_string(),
    ]);
    assert_eq!(code, 0);
    let s5 = summary(&out5);
    assert_eq!(s5["all_passed"], false);
    assert_eq!(s5["failed"].as_array().unwrap()[0], "mass_closed_form_vs_quadrature");
}

#[test]
fn env_var_sets_default_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = star4_delta(tmp.path());
    let out = tmp.path().join("from-env");

    // Process-global state: this test is the only one touching QGNLS_OUT.
    std::env::set_var("QGNLS_OUT", &out);
    let code = run(&["spectrum", "--graph", &graph, "--h", "0.05"]);
    std::env::remove_var("QGNLS_OUT");
    assert_eq!(code, 0);
    assert!(out.join("spectrum.csv").exists());

    // An explicit --out still wins over the environment.
    let explicit = tmp.path().join("explicit");
    std::env::set_var("QGNLS_OUT", tmp.path().join("ignored"));
    let code = run(&[
        "spectrum",
        "--graph",
        &graph,
        "--h",
        "0.05",
        "--out",
        &explicit.display().to_string(),
    ]);
    std::env::remove_var("QGNLS_OUT");
    assert_eq!(code, 0);
    assert!(explicit.join("spectrum.csv").exists());
    assert!(!tmp.path().join("ignored").exists());
}
