use std::path::PathBuf;
use std::process::{Command, Output};

fn qemerge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qemerge"))
        .args(args)
        .output()
        .unwrap()
}

fn config(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name]
        .iter()
        .collect();
    path.to_string_lossy().into_owned()
}

fn temp_file(name: &str, contents: &str) -> String {
    let path = std::env::temp_dir().join(format!("qemerge-cli-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn builtin_basis_validates() {
    let v = json(&qemerge(&["validate-basis", "--dim", "4"]));
    assert_eq!(v["report"]["violations"].as_array().unwrap().len(), 0);
    assert_eq!(v["labels"][13], "-(τ2⊗τ2)");
    assert!(v["reconstruction_error"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["provenance"]["command"], "validate-basis");
}

#[test]
fn broken_basis_exits_with_validation_code() {
    let out = qemerge(&["validate-basis", "--config", &config("basis_broken.json")]);
    assert_eq!(out.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!v["report"]["violations"].as_array().unwrap().is_empty());
}

#[test]
fn exit_codes() {
    let unknown = temp_file("unknown.json", r#"{"M": 4, "bogus": 1}"#);
    assert_eq!(
        qemerge(&["measure", "--config", &unknown]).status.code(),
        Some(2)
    );
    assert_eq!(
        qemerge(&["measure", "--config", "/nonexistent/config.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qemerge(&["validate-basis", "--dim", "64"]).status.code(),
        Some(4)
    );
    let dependent = temp_file(
        "dependent.json",
        r#"{"M": 4, "operators": [{"label": 1}, {"label": 1}], "state": {"named": "singlet"}}"#,
    );
    assert_eq!(
        qemerge(&["ensemble-build", "--config", &dependent])
            .status
            .code(),
        Some(3)
    );
    let out = Command::new(env!("CARGO_BIN_EXE_qemerge"))
        .args(["demo", "ks"])
        .env("QEMERGE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bell_csv_has_the_golden_row() {
    let out = qemerge(&["demo", "bell"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# qemerge "));
    let row = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            l.split(',')
                .map(|x| x.parse::<f64>().unwrap())
                .collect::<Vec<_>>()
        })
        .find(|r| {
            (r[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-12
                && (r[1] - std::f64::consts::FRAC_PI_4).abs() < 1e-12
        })
        .unwrap();
    assert!((row[2] - (1.0 - std::f64::consts::SQRT_2)).abs() <= 1e-10);
}

#[test]
fn ks_trace_ends_in_contradiction() {
    let out = qemerge(&["demo", "ks"]);
    let v = json(&out);
    assert_eq!(v["verdict"], "CONTRADICTION");
    assert_eq!(v["witness_verified"], true);
    assert_eq!(v["q_proper"]["consistent"], true);
    assert!(v["chains"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["consistent"] == true));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text
        .trim_end()
        .trim_end_matches('}')
        .trim_end()
        .ends_with("\"CONTRADICTION\""));
}

#[test]
fn singlet_demo_contents() {
    let v = json(&qemerge(&["demo", "singlet", "--divisions", "12"]));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi: Vec<[f64; 2]> = serde_json::from_value(v["wave_function"].clone()).unwrap();
    let expected = [[0.0, 0.0], [h, 0.0], [-h, 0.0], [0.0, 0.0]];
    for (x, y) in psi.iter().zip(expected) {
        assert!(
            (x[0] - y[0]).abs() <= 1e-12 && (x[1] - y[1]).abs() <= 1e-12,
            "{psi:?}"
        );
    }
    assert!((v["density_matrix"][1][2][0].as_f64().unwrap() + 0.5).abs() <= 1e-12);
    assert_eq!(v["correlation"].as_array().unwrap().len(), 13);
    assert!(v["max_deviation_from_cosine"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["bell"][0]["violated"], true);
    assert_eq!(v["bell"][1]["violated"], false);
}

#[test]
fn chains_demo_anticorrelates() {
    let v = json(&qemerge(&["demo", "chains"]));
    let first = &v["anticorrelation"]["realizations"][0];
    assert_eq!(first["state"], "singlet");
    assert!((first["classical_correlation"].as_f64().unwrap() + 1.0).abs() <= 1e-12);
    assert!((first["table"]["pm"].as_f64().unwrap() - 0.5).abs() <= 1e-12);
    assert_eq!(v["kochen_specker"]["verdict"], "CONTRADICTION");
}

#[test]
fn measure_reports_both_branches() {
    let v = json(&qemerge(&[
        "measure",
        "--config",
        &config("measure_singlet.json"),
    ]));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((v["measurement_correlation"].as_f64().unwrap() + h).abs() <= 1e-12);
    assert_eq!(v["branches"].as_array().unwrap().len(), 2);
    assert!((v["branches"][0]["probability"].as_f64().unwrap() - 0.5).abs() <= 1e-12);
}

#[test]
fn evolve_precession_returns_after_one_period() {
    let out = qemerge(&["evolve", "--config", &config("evolve_precession.json")]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((last[0] - 2.0 * std::f64::consts::PI).abs() <= 1e-12);
    assert!((last[1] - 1.0).abs() <= 1e-9 && last[2].abs() <= 1e-9);
}

#[test]
fn overrides_and_output_file() {
    let path = std::env::temp_dir().join(format!("qemerge-cli-{}-evolve.json", std::process::id()));
    let out = qemerge(&[
        "evolve",
        "--config",
        &config("evolve_precession.json"),
        "--t-final",
        "1.0",
        "--dt",
        "0.01",
        "--stride",
        "10",
        "--format",
        "json",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["times"].as_array().unwrap().len(), 11);
}

#[test]
fn ensemble_product_probabilities_on_the_singlet() {
    let v = json(&qemerge(&[
        "ensemble-build",
        "--config",
        &config("ensemble_singlet.json"),
    ]));
    assert_eq!(v["assignment"], "product");
    for row in v["states"].as_array().unwrap() {
        assert!((row["p"].as_f64().unwrap() - 0.25).abs() <= 1e-12);
    }
    for e in v["expectations"].as_array().unwrap() {
        assert!((e["classical"].as_f64().unwrap() - e["quantum"].as_f64().unwrap()).abs() <= 1e-12);
    }
}
