//! End-to-end tests for the `monopole-lab` binary: exit codes, artifact
//! schemas, and byte-level determinism of the outputs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_monopole-lab"));
    // Keep the ambient environment from leaking into determinism checks.
    cmd.env_remove("MONOPOLE_LAB_THREADS");
    cmd
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    lab()
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary launches")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exits normally")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("artifact {name} should exist: {e}"))
}

fn read_json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap_or_else(|e| panic!("{name} parses: {e}"))
}

#[test]
fn coarse_grid_is_rejected_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["spectrum", "--grid", "32"]);
    assert_eq!(code(&out), 2, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(
        !dir.path().join("spectrum_numeric.csv").exists(),
        "no artifact should be written on validation failure"
    );
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lab.cfg");
    fs::write(&cfg, "grd_size=100\n").unwrap();
    let out = run_in(
        dir.path(),
        &["spectrum", "--config", cfg.to_str().unwrap()],
    );
    assert_eq!(code(&out), 2);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("grd_size"), "error names the bad key: {msg}");
}

#[test]
fn bad_format_value_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["spectrum", "--format", "xml"]);
    assert_eq!(code(&out), 2);

    let cfg = dir.path().join("lab.cfg");
    fs::write(&cfg, "format=yaml\n").unwrap();
    let out = run_in(dir.path(), &["report", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab()
        .args(["report", "--out"])
        .arg(dir.path())
        .env("MONOPOLE_LAB_THREADS", "abc")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn coarse_spectrum_fails_its_own_comparison() {
    // grid 64 passes validation but cannot resolve levels near E = 35 to
    // one part in a thousand, so the run must finish with the solver code.
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["spectrum", "--n", "-1", "--e-max", "50", "--grid", "64"],
    );
    assert_eq!(code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(dir.path(), "spectrum_compare.json");
    assert_eq!(
        doc["within_tolerance"], false,
        "comparison file records the failure"
    );
}

#[test]
fn spectrum_outputs_are_byte_deterministic() {
    let args = ["spectrum", "--n", "0", "--e-max", "7", "--grid", "600"];
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let dir_c = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(dir_a.path(), &args)), 0);
    assert_eq!(code(&run_in(dir_b.path(), &args)), 0);
    let out = lab()
        .args(args)
        .arg("--out")
        .arg(dir_c.path())
        .env("MONOPOLE_LAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);

    for name in ["spectrum_numeric.csv", "spectrum_exact.csv", "spectrum_compare.json"] {
        let a = read(dir_a.path(), name);
        assert_eq!(a, read(dir_b.path(), name), "{name} differs between runs");
        assert_eq!(a, read(dir_c.path(), name), "{name} depends on thread count");
    }
}

#[test]
fn free_sphere_spectrum_has_the_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["spectrum", "--n", "0", "--e-max", "7", "--grid", "600"],
    );
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let text = read(dir.path(), "spectrum_numeric.csv");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("value,multiplicity,source,sectors"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3, "three levels below the cutoff");
    for (row, (value, mult)) in rows.iter().zip([(0.0, "1"), (2.0, "3"), (6.0, "5")]) {
        let got: f64 = row[0].parse().unwrap();
        assert!(
            (got - value).abs() < 1e-3,
            "level {got} should sit near {value}"
        );
        assert_eq!(row[1], mult);
    }

    let doc = read_json(dir.path(), "spectrum_compare.json");
    assert_eq!(doc["within_tolerance"], true);
    assert_eq!(doc["levels_compared"], 3);
}

#[test]
fn config_file_applies_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lab.cfg");
    fs::write(
        &cfg,
        "# free sphere, json tables\nn = 0\ne_max = 7\ngrid_size = 600\nformat = json\n",
    )
    .unwrap();

    let out = run_in(dir.path(), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(dir.path(), "spectrum_numeric.json");
    assert_eq!(doc.as_array().unwrap().len(), 3);
    assert!(!dir.path().join("spectrum_numeric.csv").exists());

    // A flag on top of the same file switches the table format back.
    let out = run_in(
        dir.path(),
        &["spectrum", "--config", cfg.to_str().unwrap(), "--format", "csv"],
    );
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("spectrum_numeric.csv").exists());
}

#[test]
fn report_collects_the_coupling_constants() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(dir.path(), &["report"])), 0);
    let doc = read_json(dir.path(), "report.json");

    let mass_ratio = doc["mass_ratio"].as_f64().unwrap();
    assert!(
        (mass_ratio - 4692.25).abs() < 1e-9,
        "mass ratio {mass_ratio} should be 4692.25"
    );
    assert_eq!(doc["g_over_e"].as_f64().unwrap(), 68.5);

    let series = doc["unit_charge_series"].as_array().unwrap();
    assert_eq!(series.len(), 6);
    assert_eq!(series[0]["value"].as_f64().unwrap(), 0.5);
    assert_eq!(series[0]["multiplicity"], 2);

    for sample in doc["dirac_samples"].as_array().unwrap() {
        assert!(sample["residual"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn wkb_levels_match_the_harmonic_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["wkb"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let text = read(dir.path(), "wkb_levels.csv");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("q,hbar,energy,exact,abs_err"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 12, "q = 0..=5 for each of two step sizes");
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 5);
        let err: f64 = fields[4].parse().unwrap();
        assert!(err < 1e-9, "row {row} exceeds the self-check tolerance");
    }
}

#[test]
fn dynamics_artifacts_carry_tiny_drifts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["dynamics", "--duration", "5"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let traj = read(dir.path(), "trajectory.csv");
    assert!(traj.starts_with("t,x,y,z,vx,vy,vz\n"));
    assert_eq!(traj.lines().count(), 5002, "header plus one row per state");
    let cone = read(dir.path(), "unrolled_cone.csv");
    assert!(cone.starts_with("s,rho_x,rho_y\n"));

    let doc = read_json(dir.path(), "dynamics_invariants.json");
    for key in ["speed_squared_drift", "conserved_vector_drift", "cone_residual"] {
        let v = doc[key].as_f64().unwrap();
        assert!(v < 1e-8, "{key} = {v} should be tiny");
    }
    let fit = &doc["quadratic_fit"];
    assert!((fit["a"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(fit["b"].as_f64().unwrap().abs() < 1e-6);
    assert!((fit["c"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(doc["max_turn_angle"].as_f64().unwrap() < 1e-5);
}

#[test]
fn dynamics_rejects_zero_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["dynamics", "--lambda", "0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn torus_route_reproduces_the_level_formula() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["semiclassical", "--N", "2"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let doc = read_json(dir.path(), "quantized_tori.json");
    assert_eq!(doc["n_inv"], 2);
    assert_eq!(doc["charge"], -2, "charge defaults to -N");
    assert_eq!(doc["agrees"], true);
    assert!(doc["max_abs_err"].as_f64().unwrap() < 1e-6);

    let ground = &doc["torus_levels"][0];
    assert!((ground["energy"].as_f64().unwrap() - 1.25).abs() < 1e-6);
    assert_eq!(ground["multiplicity"], 3);
    assert_eq!(
        ground["p_values"].as_array().unwrap().len(),
        3,
        "three lattice columns feed the ground level"
    );

    let levels = read(dir.path(), "semiclassical_levels.csv");
    assert!(levels.starts_with("value,multiplicity,source,sectors\n"));
}

#[test]
fn torus_route_rejects_an_incompatible_charge() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["semiclassical", "--N", "2", "--n", "1"]);
    assert_eq!(code(&out), 2, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}
