use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pptes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pptes"))
        .args(args)
        .env_remove("QUTRIT_PPTES_SEED")
        .output()
        .expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = pptes(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, value.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn angles() -> Value {
    serde_json::json!({
        "gamma_A": 0.7, "theta_A": 0.5, "phi_A": 1.1,
        "gamma_B": 0.9, "theta_B": 0.6, "phi_B": -0.4
    })
}

#[test]
fn build_then_reconstruct() {
    let dir = tempfile::tempdir().unwrap();
    let ilo = serde_json::json!({
        "A": [[[1.0, 0.0], [0.3, 0.1], [0.0, 0.0]], [[0.0, 0.0], [1.2, 0.0], [0.2, -0.4]], [[0.1, 0.0], [0.0, 0.0], [0.9, 0.2]]],
        "B": [[[0.8, 0.0], [0.0, 0.0], [0.1, 0.1]], [[0.2, 0.0], [1.0, 0.3], [0.0, 0.0]], [[0.0, 0.5], [0.0, 0.0], [1.1, 0.0]]]
    });
    let angles_path = write(dir.path(), "angles.json", &angles());
    let ilo_path = write(dir.path(), "ilo.json", &ilo);
    let state = json_ok(&[
        "pptes",
        "build",
        "--angles",
        &angles_path,
        "--ilo",
        &ilo_path,
    ]);
    let state_path = write(dir.path(), "state.json", &state);

    let check = json_ok(&["pptes", "check", "--state", &state_path]);
    assert_eq!(check["rank"], 4);
    assert_eq!(check["ppt"], true);
    assert_eq!(check["entangled"], true);

    let r = json_ok(&["pptes", "reconstruct", "--state", &state_path]);
    assert!(r["residual"].as_f64().unwrap() <= 1e-6, "{}", r["residual"]);
    assert_eq!(r["kernel_products"].as_array().unwrap().len(), 6);

    let products = json_ok(&["kernel", "products", "--state", &state_path]);
    assert_eq!(products.as_array().unwrap().len(), 6);

    let w = json_ok(&["witness", "--state", &state_path, "--restarts", "4"]);
    assert!(w["epsilon"].as_f64().unwrap() > 0.0);
}

#[test]
fn generated_upb_has_family_symbol() {
    let dir = tempfile::tempdir().unwrap();
    let upb = json_ok(&[
        "upb",
        "gen",
        "--gamma-a",
        "0.7",
        "--theta-a",
        "0.5",
        "--phi-a",
        "1.1",
        "--gamma-b",
        "0.9",
        "--theta-b",
        "0.6",
        "--phi-b",
        "-0.4",
    ]);
    assert_eq!(upb.as_array().unwrap().len(), 5);
    let path = write(dir.path(), "upb.json", &upb);
    let inv = json_ok(&["invariants", "--quintuple", &path]);
    assert_eq!(inv["symbol"], "NPNPpP");
    let classify = json_ok(&["classify", "--quintuple", &path]);
    assert_eq!(classify["class"], "Regular");
    assert!(classify["sixth"].is_object());
}

#[test]
fn pyramid_stabilizer_has_order_sixty() {
    let dir = tempfile::tempdir().unwrap();
    let sextet = json_ok(&["upb", "pyramid"]);
    let sextet_path = write(dir.path(), "sextet.json", &sextet);
    assert_eq!(
        json_ok(&["stabilizer", "--sextet", &sextet_path])["order"],
        60
    );
    let state = json_ok(&["upb", "pyramid", "--state"]);
    let state_path = write(dir.path(), "state.json", &state);
    assert_eq!(
        json_ok(&["stabilizer", "--state", &state_path])["order"],
        60
    );
}

#[test]
fn tiles_stabilizer_has_order_twelve() {
    let dir = tempfile::tempdir().unwrap();
    let state = json_ok(&["upb", "tiles", "--state"]);
    let path = write(dir.path(), "tiles.json", &state);
    assert_eq!(json_ok(&["stabilizer", "--state", &path])["order"], 12);
}

#[test]
fn fixtures_verify_passes() {
    let report = json_ok(&["fixtures", "verify"]);
    assert_eq!(report["pass"], true);
    assert_eq!(report["symbol_closure"].as_array().unwrap().len(), 3);
}

#[test]
fn same_seed_gives_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let state = json_ok(&["upb", "tiles", "--state"]);
    let path = write(dir.path(), "tiles.json", &state);
    let run = |seed: &str| {
        pptes(&[
            "--seed",
            seed,
            "witness",
            "--state",
            &path,
            "--restarts",
            "3",
        ])
        .stdout
    };
    assert_eq!(run("7"), run("7"));
    let env_run = Command::new(env!("CARGO_BIN_EXE_pptes"))
        .args(["witness", "--state", &path, "--restarts", "3"])
        .env("QUTRIT_PPTES_SEED", "7")
        .output()
        .unwrap()
        .stdout;
    assert_eq!(env_run, run("7"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pptes(&["--help"]).status.code(), Some(0));
    assert_eq!(pptes(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        pptes(&["pptes", "check", "--state", "/nonexistent/state.json"])
            .status
            .code(),
        Some(1)
    );

    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "{not json").unwrap();
    let out = pptes(&["pptes", "reconstruct", "--state", garbage.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());

    let mut bad = angles();
    bad["theta_A"] = serde_json::json!(3.0);
    let bad_path = write(dir.path(), "bad.json", &bad);
    assert_eq!(
        pptes(&["pptes", "build", "--angles", &bad_path])
            .status
            .code(),
        Some(1)
    );

    let four = json_ok(&["upb", "tiles"]).as_array().unwrap()[..4].to_vec();
    let four_path = write(dir.path(), "four.json", &Value::Array(four));
    assert_eq!(
        pptes(&["invariants", "--quintuple", &four_path])
            .status
            .code(),
        Some(1)
    );

    // a separable rank-4 state is not a PPTES
    let mut rho = vec![vec![[0.0, 0.0]; 9]; 9];
    for k in [0, 4, 8, 1] {
        rho[k][k] = [0.25, 0.0];
    }
    let sep_path = write(dir.path(), "sep.json", &serde_json::json!(rho));
    assert_eq!(
        pptes(&["pptes", "reconstruct", "--state", &sep_path])
            .status
            .code(),
        Some(1)
    );
}
