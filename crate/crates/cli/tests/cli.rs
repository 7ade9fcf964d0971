use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use llip_core::grid::{make_interval_grid, tabulate};
use llip_core::operators::{multiplication_operator, saturating_operator};
use llip_core::reference_cases::{envelope_example, extension_example};
use llip_core::{GridFunction, OperatorRep, ScalarPwl, SuperpositionField};
use serde::Serialize;
use serde_json::{json, Value};
use tempfile::TempDir;

fn llip() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_llip"));
    cmd.env_remove("LLIP_CONFIG");
    cmd
}

fn run(cmd: &mut Command) -> (i32, Value, String) {
    let Output {
        status,
        stdout,
        stderr,
    } = cmd.output().expect("llip runs");
    let stdout = String::from_utf8(stdout).unwrap();
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (
        status.code().unwrap(),
        json,
        String::from_utf8(stderr).unwrap(),
    )
}

fn write(dir: &TempDir, name: &str, value: &impl Serialize) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_string(value).unwrap()).unwrap();
    path
}

fn values(v: &Value) -> Vec<f64> {
    v["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn minimal_bound_of_the_jump_example() {
    let dir = TempDir::new().unwrap();
    let (grid, source) = envelope_example(401).unwrap();
    let s = write(&dir, "s.json", &json!({"grid": grid, "operator": source}));
    let (code, out, _) = run(llip().args(["bound", "--source", p(&s), "--mode", "minimal"]));
    assert_eq!(code, 0);
    assert_eq!(out["flagged_discontinuous"], true);
    assert_eq!(out["source"], "minimal-envelope");
    let phi = values(&out["phi"]);
    assert_eq!(phi[50], 2.0);
    assert_eq!(phi[200], 0.0);
    assert_eq!(phi[350], 1.0);
}

#[test]
fn verify_reports_violation_with_exit_one() {
    let dir = TempDir::new().unwrap();
    let (grid, source) = envelope_example(41).unwrap();
    let g = write(&dir, "g.json", &grid);
    let s = write(&dir, "s.json", &source);
    let phi = write(
        &dir,
        "phi.json",
        &GridFunction::constant(&grid, 1.5).unwrap(),
    );
    let (code, out, err) = run(llip().args([
        "bound",
        "--grid",
        p(&g),
        "--source",
        p(&s),
        "--mode",
        "verify",
        "--phi",
        p(&phi),
    ]));
    assert_eq!(code, 1);
    assert_eq!(out["accepted"], false);
    assert!(out["max_violation"].as_f64().unwrap() > 0.0);
    assert!(err.contains("bound violated"));

    let phi = write(
        &dir,
        "phi2.json",
        &GridFunction::constant(&grid, 2.0).unwrap(),
    );
    let (code, out, _) = run(llip().args([
        "bound",
        "--grid",
        p(&g),
        "--source",
        p(&s),
        "--mode",
        "verify",
        "--phi",
        p(&phi),
    ]));
    assert_eq!(code, 0);
    assert_eq!(out["max_violation"], 0.0);
}

#[test]
fn constant_majorant_and_ratio_modes() {
    let dir = TempDir::new().unwrap();
    let (grid, source) = envelope_example(41).unwrap();
    let s = write(&dir, "s.json", &json!({"grid": grid, "operator": source}));
    let (code, out, _) = run(llip().args(["bound", "--source", p(&s), "--mode", "constant"]));
    assert_eq!(code, 0);
    assert!(values(&out["phi"]).iter().all(|&v| v == 2.0));

    let (code, out, _) = run(llip().args([
        "bound",
        "--source",
        p(&s),
        "--mode",
        "majorant",
        "--lipschitz",
        "8",
    ]));
    assert_eq!(code, 0);
    assert_eq!(out["source"], "lipschitz-majorant");
    assert_eq!(out["max_violation"], 0.0);

    let (code, out, _) = run(llip().args(["bound", "--source", p(&s), "--mode", "ratio"]));
    assert_eq!(code, 0);
    assert_eq!(out["pair"], json!([0, 1]));
    assert_eq!(values(&out["ratio"]).len(), 41);

    let (code, _, err) = run(llip().args([
        "bound",
        "--source",
        p(&s),
        "--mode",
        "ratio",
        "--pair",
        "0",
        "7",
    ]));
    assert_eq!(code, 2);
    assert!(err.contains("out of range"));
}

#[test]
fn extend_diagnoses_the_jump_and_the_repair() {
    let dir = TempDir::new().unwrap();
    let ex = extension_example(401).unwrap();
    let s = write(
        &dir,
        "s.json",
        &json!({"grid": ex.grid, "operator": ex.source}),
    );
    let f = write(&dir, "f.json", &ex.probe);
    let jump = write(&dir, "jump.json", &ex.jump_bound);
    let cont = write(&dir, "cont.json", &ex.continuous_bound);

    let (code, out, err) = run(llip().args([
        "extend",
        "--source",
        p(&s),
        "--phi",
        p(&jump),
        "--input",
        p(&f),
        "--diagnose",
    ]));
    assert_eq!(code, 0);
    assert_eq!(out["continuity"]["is_flagged_discontinuous"], true);
    assert!(err.contains("flagged discontinuous"));
    for key in ["extension", "continuity", "bound_report", "gap"] {
        assert!(out.get(key).is_some(), "missing {key}");
    }

    let (code, out, _) = run(llip().args([
        "extend",
        "--source",
        p(&s),
        "--phi",
        p(&cont),
        "--input",
        p(&f),
        "--diagnose",
    ]));
    assert_eq!(code, 0);
    assert_eq!(out["continuity"]["is_flagged_discontinuous"], false);
    let ext = values(&out["extension"]);
    for (i, w) in ex.grid.points().iter().enumerate() {
        let w = w[0];
        let expected = if w < 0.0 { -1.0 - w } else { 2.0 * w - 1.0 };
        assert!((ext[i] - expected).abs() <= 1e-12);
    }

    let (code, out, _) = run(llip().args([
        "extend",
        "--source",
        p(&s),
        "--phi",
        p(&cont),
        "--input",
        p(&f),
        "--method",
        "whitney",
    ]));
    assert_eq!(code, 0);
    assert!(out.get("gap").is_none());
}

#[test]
fn malformed_json_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"grid_id\": ").unwrap();
    let (code, out, err) = run(llip().args([
        "extend",
        "--source",
        p(&bad),
        "--phi",
        p(&bad),
        "--input",
        p(&bad),
    ]));
    assert_eq!(code, 2);
    assert_eq!(out, Value::Null);
    assert!(err.contains("schema error"), "{err}");

    let unknown = write(
        &dir,
        "unknown.json",
        &json!({"grid_id": "00", "values": [1.0], "extra": 1}),
    );
    let (code, _, err) = run(llip().args([
        "extend",
        "--source",
        p(&unknown),
        "--phi",
        p(&unknown),
        "--input",
        p(&unknown),
    ]));
    assert_eq!(code, 2);
    assert!(err.contains("schema error"));
}

#[test]
fn missing_grid_is_reported() {
    let dir = TempDir::new().unwrap();
    let (_, source) = envelope_example(11).unwrap();
    let s = write(&dir, "s.json", &source);
    let (code, _, err) = run(llip().args(["bound", "--source", p(&s), "--mode", "minimal"]));
    assert_eq!(code, 2);
    assert!(err.contains("needs a grid"));
}

#[test]
fn grid_mismatch_is_rejected() {
    let dir = TempDir::new().unwrap();
    let (_, source) = envelope_example(11).unwrap();
    let other = make_interval_grid(0.0, 2.0, 11).unwrap();
    let g = write(&dir, "g.json", &other);
    let s = write(&dir, "s.json", &source);
    let (code, _, _) = run(llip().args([
        "bound",
        "--grid",
        p(&g),
        "--source",
        p(&s),
        "--mode",
        "minimal",
    ]));
    assert_eq!(code, 2);
}

#[test]
fn eval_accepts_csv_functions() {
    let dir = TempDir::new().unwrap();
    let grid = make_interval_grid(0.0, 1.0, 5).unwrap();
    let h = tabulate(&grid, |w| 1.0 + w[0]).unwrap();
    let op = write(&dir, "op.json", &multiplication_operator(&grid, h).unwrap());
    let g = write(&dir, "g.json", &grid);
    let csv = dir.path().join("f.csv");
    std::fs::write(&csv, "# w, f\n0,1\n0.25,1\n0.5,1\n0.75,1\n1,1\n").unwrap();
    let (code, out, _) =
        run(llip().args(["eval", "--grid", p(&g), "--op", p(&op), "--input", p(&csv)]));
    assert_eq!(code, 0);
    assert_eq!(values(&out), vec![1.0, 1.25, 1.5, 1.75, 2.0]);

    std::fs::write(&csv, "0,1\n0.3,1\n0.5,1\n0.75,1\n1,1\n").unwrap();
    let (code, _, err) =
        run(llip().args(["eval", "--grid", p(&g), "--op", p(&op), "--input", p(&csv)]));
    assert_eq!(code, 2);
    assert!(err.contains("do not match"));
}

#[test]
fn grid_from_interval_and_csv_agree() {
    let dir = TempDir::new().unwrap();
    let (code, built, _) = run(llip().args(["grid", "--interval", "-1", "1", "5"]));
    assert_eq!(code, 0);
    let csv = dir.path().join("g.csv");
    std::fs::write(&csv, "-1\n-0.5\n0\n0.5\n1\n").unwrap();
    let (code, read, _) = run(llip().args(["grid", "--input", p(&csv)]));
    assert_eq!(code, 0);
    assert_eq!(built["id"], read["id"]);

    let (code, cheb, _) = run(llip().args(["grid", "--input", p(&csv), "--metric", "chebyshev"]));
    assert_eq!(code, 0);
    assert_ne!(cheb["id"], read["id"]);

    std::fs::write(&csv, "0\n0\n").unwrap();
    let (code, _, _) = run(llip().args(["grid", "--input", p(&csv)]));
    assert_eq!(code, 2);
}

#[test]
fn norms_report_the_witness() {
    let dir = TempDir::new().unwrap();
    let grid = make_interval_grid(-1.0, 1.0, 21).unwrap();
    let op = saturating_operator(&grid, 2.0, (-5.0, 5.0), 41).unwrap();
    let path = write(&dir, "op.json", &OperatorRep::from(op));
    let (code, out, _) = run(llip().args(["norms", "--op", p(&path)]));
    assert_eq!(code, 0);
    let norm = out["llip_norm"]["value"].as_f64().unwrap();
    assert_eq!(out["llip_norm"]["kind"], "exact");
    assert_eq!(out["lip_norm_estimate"].as_f64().unwrap(), norm);
    assert_eq!(out["witness"]["ratio"].as_f64().unwrap(), norm);
    assert_eq!(out["probe_count"], 65);

    let (grid, source) = envelope_example(41).unwrap();
    let path = write(&dir, "s.json", &OperatorRep::from(source));
    let g = write(&dir, "g.json", &grid);
    let (code, out, _) = run(llip().args(["norms", "--grid", p(&g), "--op", p(&path)]));
    assert_eq!(code, 0);
    assert_eq!(out["llip_norm"]["kind"], "lower-bound");
    assert_eq!(out["llip_norm"]["value"], 2.0);
    assert_eq!(out["witness"], Value::Null);
}

fn shift(grid: &llip_core::CompactGrid, c: f64) -> SuperpositionField {
    SuperpositionField::uniform(grid, ScalarPwl::linear(1.0, c).unwrap())
}

#[test]
fn compose_writes_the_product_and_checks_submultiplicativity() {
    let dir = TempDir::new().unwrap();
    let grid = make_interval_grid(0.0, 1.0, 5).unwrap();
    let abs = SuperpositionField::uniform(
        &grid,
        ScalarPwl::new(vec![0.0], vec![0.0], -1.0, 1.0).unwrap(),
    );
    let left = write(
        &dir,
        "l.json",
        &json!({"grid": grid, "operator": OperatorRep::from(abs)}),
    );
    let right = write(&dir, "r.json", &OperatorRep::from(shift(&grid, -1.0)));
    let out = dir.path().join("c.json");
    let (code, report, _) = run(llip().args([
        "compose",
        "--left",
        p(&left),
        "--right",
        p(&right),
        "--out",
        p(&out),
        "--check-submult",
    ]));
    assert_eq!(code, 0);
    assert_eq!(report["submultiplicativity"]["pointwise_ok"], true);
    assert_eq!(report["llip_norm"]["value"], 1.0);
    assert!(report.get("operator").is_none());

    let composed: OperatorRep =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let zero = GridFunction::constant(&grid, 0.0).unwrap();
    assert!(composed
        .eval(&zero)
        .unwrap()
        .values
        .iter()
        .all(|&v| v == 1.0));
}

#[test]
fn tensor_round_trip_reports_the_epsilon_norm() {
    let dir = TempDir::new().unwrap();
    let grid = make_interval_grid(0.0, 1.0, 4).unwrap();
    let field = SuperpositionField::new(
        &grid,
        vec![
            ScalarPwl::linear(0.5, 0.0).unwrap(),
            ScalarPwl::linear(-3.0, 1.0).unwrap(),
            ScalarPwl::identity(),
            ScalarPwl::new(vec![0.0, 1.0], vec![0.0, 2.0], 0.0, 0.0).unwrap(),
        ],
    )
    .unwrap();
    let path = write(&dir, "field.json", &OperatorRep::from(field.clone()));
    let (code, out, _) = run(llip().args(["tensor", "--op", p(&path)]));
    assert_eq!(code, 0);
    assert_eq!(out["from"], "superposition");
    assert_eq!(out["to"], "tensor");
    assert_eq!(out["epsilon_norm"], 3.0);

    let t = write(&dir, "t.json", &out["operator"]);
    let (code, back, _) = run(llip().args(["tensor", "--op", p(&t)]));
    assert_eq!(code, 0);
    assert_eq!(back["epsilon_norm"], 3.0);
    let back: OperatorRep = serde_json::from_value(back["operator"].clone()).unwrap();
    assert_eq!(back, OperatorRep::from(field));
}

#[test]
fn config_precedence_env_then_file_then_flags() {
    let dir = TempDir::new().unwrap();
    let (grid, source) = envelope_example(41).unwrap();
    let s = write(&dir, "s.json", &json!({"grid": grid, "operator": source}));
    let env_cfg = write(
        &dir,
        "env.json",
        &json!({"continuity_threshold_factor": 10.0}),
    );
    let file_cfg = write(
        &dir,
        "file.json",
        &json!({"continuity_threshold_factor": 20.0}),
    );
    let threshold = |cmd: &mut Command| {
        let (code, out, _) = run(cmd.args(["bound", "--source", p(&s), "--mode", "minimal"]));
        assert_eq!(code, 0);
        out["continuity"]["threshold"].as_f64().unwrap()
    };
    let base = threshold(&mut llip());
    let from_env = threshold(llip().env("LLIP_CONFIG", &env_cfg));
    let from_file = threshold(
        llip()
            .env("LLIP_CONFIG", &env_cfg)
            .args(["--config", p(&file_cfg)]),
    );
    let from_flag = threshold(llip().env("LLIP_CONFIG", &env_cfg).args([
        "--config",
        p(&file_cfg),
        "--continuity-threshold-factor",
        "30",
    ]));
    assert!((from_env / base - 10.0 / 50.0).abs() < 1e-12);
    assert!((from_file / base - 20.0 / 50.0).abs() < 1e-12);
    assert!((from_flag / base - 30.0 / 50.0).abs() < 1e-12);

    let bad = write(&dir, "bad.json", &json!({"zero_tol": 1e-12, "typo": 1}));
    let (code, _, _) = run(llip().env("LLIP_CONFIG", &bad).arg("selftest"));
    assert_eq!(code, 2);
    let (code, _, _) = run(llip().args(["selftest", "--zero-tol=-1"]));
    assert_eq!(code, 2);
}

#[test]
fn selftest_passes_and_is_stable() {
    let (code, out, _) = run(llip().arg("selftest"));
    assert_eq!(code, 0);
    assert_eq!(out["passed"], out["total"]);
    let a = llip().arg("selftest").output().unwrap().stdout;
    let b = llip().arg("selftest").output().unwrap().stdout;
    assert_eq!(a, b);
}
