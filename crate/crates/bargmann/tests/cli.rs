use std::path::Path;
use std::process::{Command, Output};

fn bargmann(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bargmann"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn path(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

#[test]
fn invariants_from_inline_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(&dir, "inv.json");
    let o = bargmann(&[
        "invariants",
        "--model",
        "spin_half",
        "--point",
        "0,0",
        "--point",
        "1,0",
        "--point",
        "0,1",
        "--out",
        &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["two_point"].as_array().unwrap().len(), 9);
    assert_eq!(doc["three_point"].as_array().unwrap().len(), 1);
    let summary: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(summary["points"], 3);
    assert!(
        (summary["max_abs_phase"].as_f64().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-12
    );

    let states = path(&dir, "states.json");
    let o = bargmann(&["tomography", "--input", &out, "--out", &states]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(summary["max_dp2"].as_f64().unwrap() < 1e-8);
    assert!(summary["max_dphi"].as_f64().unwrap() < 1e-8);
}

#[test]
fn malformed_points_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let pts = path(&dir, "pts.json");
    std::fs::write(&pts, "[[0, 0], [1,").unwrap();
    let o = bargmann(&["invariants", "--model", "spin_half", "--points", &pts]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "FormatError");
}

#[test]
fn unknown_keys_are_rejected() {
    let o = bargmann(&[
        "geometry", "--model", "veronese", "--param", "q=1", "--grid", "4x4",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = bargmann(&[
        "geometry", "--model", "veronese", "--grid", "4x4", "--tol", "bogus=1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = bargmann(&["geometry", "--model", "veronese", "--grid", "0x4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dry_run_prints_resolved_config() {
    let o = bargmann(&[
        "band",
        "cumulants",
        "--model",
        "veronese",
        "--param",
        "n=2",
        "--grid",
        "8x8",
        "--tol",
        "rank=1e-9",
        "--dry-run",
    ]);
    assert!(o.status.success());
    let cfg: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(cfg["command"], "band cumulants");
    assert_eq!(cfg["parameters"]["n"], 2.0);
    assert_eq!(cfg["tolerances"]["rank"], 1e-9);
    assert_eq!(cfg["grid"], serde_json::json!([8, 8]));
}

#[test]
fn veronese_t_sweep_matches_closed_form() {
    let o = bargmann(&[
        "geometry", "--model", "veronese", "--param", "n=2", "--param", "m=3", "--grid", "6x5",
        "--which", "t",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("k0,k1,T_000,T_001"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 30);
    for row in rows {
        let v: Vec<f64> = row.iter().map(|s| s.parse().unwrap()).collect();
        assert!((v[2] - bargmann_core::models::veronese::t_component(2, v[0])).abs() < 1e-5);
        assert!((v[9] - bargmann_core::models::veronese::t_component(3, v[1])).abs() < 1e-5);
    }
}

#[test]
fn spin_one_curvature_integrates_to_the_sphere() {
    let o = bargmann(&[
        "geometry", "--model", "spin_one", "--grid", "64x8", "--which", "omega", "--format", "json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let cell = (std::f64::consts::PI / 64.0) * (2.0 * std::f64::consts::PI / 8.0);
    let flux: f64 = doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r[3].as_f64().unwrap() * cell)
        .sum();
    assert!((flux + 4.0 * std::f64::consts::PI).abs() < 1e-2, "{flux}");
}

#[test]
fn berry_methods_agree() {
    let o = bargmann(&[
        "berry",
        "--model",
        "spin_one",
        "--center",
        "1.0,2.0",
        "--radius",
        "0.3",
        "--samples",
        "512",
        "--reference",
        "0.9,1.8",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    let values: Vec<f64> = rows
        .iter()
        .map(|r| r.last().unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 3);
    assert!(
        (values[0] - values[1]).abs() < 1e-4 && (values[0] - values[2]).abs() < 1e-4,
        "{values:?}"
    );
}

#[test]
fn random_tomography_is_deterministic() {
    let run = || bargmann(&["tomography", "--random", "12", "--dim", "5", "--seed", "7"]);
    let (a, b) = (run(), run());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn grid_export_reload_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    for payload in ["json", "binary"] {
        let file = path(&dir, &format!("grid.{payload}"));
        let o = bargmann(&[
            "band",
            "export",
            "--model",
            "veronese",
            "--param",
            "n=1",
            "--grid",
            "16x8",
            "--payload",
            payload,
            "--out",
            &file,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let from_file = bargmann(&["band", "polarization", "--input", &file]);
        let from_model = bargmann(&[
            "band",
            "polarization",
            "--model",
            "veronese",
            "--param",
            "n=1",
            "--grid",
            "16x8",
        ]);
        assert!(
            from_file.status.success(),
            "{}",
            String::from_utf8_lossy(&from_file.stderr)
        );
        assert_eq!(from_file.stdout, from_model.stdout);
        let bytes = std::fs::read(&file).unwrap();
        std::fs::write(&file, &bytes[..bytes.len() - 20]).unwrap();
        let o = bargmann(&["band", "polarization", "--input", &file]);
        assert_eq!(o.status.code(), Some(2));
    }
    let o = bargmann(&[
        "band",
        "polarization",
        "--input",
        &path(&dir, "missing.json"),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn broken_periodicity_is_reported() {
    use bargmann::formats::{grid_from_bytes, grid_to_bytes, Payload};
    use bargmann_core::band::BzGrid;
    let g = BzGrid::sample(&bargmann_core::models::veronese::veronese(1, 2), &[8, 8]).unwrap();
    let text = String::from_utf8(grid_to_bytes(&g, Payload::Json)).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    // Rotate the first two amplitudes of the last node by 1e-3.
    let amps = doc["amplitudes"].as_array_mut().unwrap();
    let last = amps.len() - 4;
    let (a, b) = (amps[last].clone(), amps[last + 1].clone());
    let (c, s) = (1e-3f64.cos(), 1e-3f64.sin());
    for k in 0..2 {
        let (x, y) = (a[k].as_f64().unwrap(), b[k].as_f64().unwrap());
        amps[last][k] = (c * x - s * y).into();
        amps[last + 1][k] = (s * x + c * y).into();
    }
    let err = grid_from_bytes(doc.to_string().as_bytes()).unwrap_err();
    assert!(err.to_string().contains("not periodic"), "{err}");
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("broken.json");
    std::fs::write(&file, doc.to_string()).unwrap();
    let o = bargmann(&["band", "polarization", "--input", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "PeriodicityViolation");
    assert!(Path::new(&file).exists());
}

#[test]
fn cumulant_table_and_conductivity_fit() {
    let o = bargmann(&[
        "band",
        "cumulants",
        "--model",
        "veronese",
        "--param",
        "n=2",
        "--param",
        "m=3",
        "--grid",
        "32x32",
        "--order",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for row in csv_rows(&stdout(&o)) {
        let (a, b): (f64, f64) = (row[2].parse().unwrap(), row[3].parse().unwrap());
        assert!((a - b).abs() < 1e-4 * b.abs().max(1.0));
    }
    let o = bargmann(&[
        "band",
        "conductivity",
        "--model",
        "qwz",
        "--grid",
        "32x32",
        "--q",
        "0.2,0.1,0.05",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(fit["axis_form_slope"].as_f64().unwrap() > 3.5, "{fit}");
    let o = bargmann(&[
        "band",
        "conductivity",
        "--model",
        "spin_one",
        "--grid",
        "8x8",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn curve_actions() {
    let o = bargmann(&[
        "curve",
        "--curve",
        "circle:0.01",
        "--action",
        "intersection",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let row = &csv_rows(&stdout(&o))[0];
    let normalized: f64 = row[1].parse().unwrap();
    assert!((normalized - normalized.round()).abs() < 1e-3);
    let o = bargmann(&[
        "curve",
        "--curve",
        "winding:1:0.25",
        "--action",
        "profile",
        "--samples",
        "16",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_rows(&stdout(&o)).len(), 16);
    let o = bargmann(&[
        "curve",
        "--curve",
        "circle:0.5",
        "--action",
        "reconstruct",
        "--samples",
        "8",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bargmann(&["curve", "--curve", "spiral"]);
    assert_eq!(o.status.code(), Some(2));
}
