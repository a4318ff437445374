use std::path::Path;
use std::process::{Command, Output};

fn mdvs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdvs")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = mdvs(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read(&dir.join("manifest.json"))).unwrap()
}

#[test]
fn field_default_grid_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("f");
    ok(&["field", "--out", s(&out)]);
    let csv = read(&out.join("field.csv"));
    assert_eq!(csv.lines().count(), 121 * 81 + 1);
    let m = manifest(&out);
    assert_eq!(m["command"], "field");
    assert_eq!(m["outputs"][0], "field.csv");
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[magnet]\nradius = \"5 mm\"\nradius = 3\n").unwrap();
    let out = tmp.path().join("o");
    let r = mdvs(&["field", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 3"));
    assert!(!out.exists());

    std::fs::write(&cfg, "[magnet]\nradius = \"5 parsecs\"\n").unwrap();
    let r = mdvs(&["sweep", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("magnet.radius"));
    assert!(!out.exists());
}

#[test]
fn perturb_needs_exactly_one_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(mdvs(&["perturb", "--out", s(&out)]).status.code(), Some(2));
    assert_eq!(
        mdvs(&["perturb", "--dz", "5e-5", "--beta", "1e-3", "--out", s(&out)]).status.code(),
        Some(2)
    );
    assert!(!out.exists());
}

#[test]
fn perturb_grids_and_units_column() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    ok(&["perturb", "--dchi", "1e-7", "--grid", "4,3", "--out", s(&out)]);
    let csv = read(&out.join("perturb_dchi.csv"));
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "dHx_chi_1e-4Oe").unwrap();
    let valid = header.iter().position(|h| *h == "valid").unwrap();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 12);
    assert!(rows
        .iter()
        .filter(|r| r[valid] == "1")
        .all(|r| r[col].parse::<f64>().unwrap() != 0.0));

    ok(&["perturb", "--beta", "3.3e-3", "--grid", "4,3", "--format", "json", "--out", s(&out)]);
    let json: serde_json::Value = serde_json::from_str(&read(&out.join("perturb_beta.json"))).unwrap();
    assert_eq!(json["nodes"].as_array().unwrap().len(), 12);
    assert_eq!(manifest(&out)["outputs"][0], "perturb_beta.json");
}

#[test]
fn sweep_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["sweep", "--out", s(&a)]);
    ok(&["sweep", "--out", s(&b)]);
    let ta = read(&a.join("sweep.csv"));
    assert_eq!(ta, read(&b.join("sweep.csv")));
    assert_eq!(ta.lines().count(), 41);
    assert!(ta.starts_with("kind,x,dz_or_beta,dH_dipole,dH_numeric,rel_err"));
    let strip = |mut m: serde_json::Value| {
        m.as_object_mut().unwrap().remove("wall_time_s");
        m.as_object_mut().unwrap().remove("out_dir");
        m
    };
    assert_eq!(strip(manifest(&a)), strip(manifest(&b)));
}

#[test]
fn synth_then_analyze_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let (y1, y2) = (tmp.path().join("y1"), tmp.path().join("y2"));
    ok(&["synth", "--seed", "11", "--out", s(&y1)]);
    ok(&["synth", "--seed", "11", "--out", s(&y2)]);
    assert_eq!(read(&y1.join("recording.csv")), read(&y2.join("recording.csv")));
    assert_eq!(manifest(&y1)["seed"], 11);

    let (a1, a2) = (tmp.path().join("a1"), tmp.path().join("a2"));
    let rec = y1.join("recording.csv");
    ok(&["analyze", "--input", s(&rec), "--out", s(&a1)]);
    ok(&["analyze", "--input", s(&rec), "--out", s(&a2)]);
    let report = read(&a1.join("report.json"));
    assert_eq!(report, read(&a2.join("report.json")));
    let r: serde_json::Value = serde_json::from_str(&report).unwrap();
    for key in [
        "bias",
        "sd",
        "loa_lower",
        "loa_upper",
        "pct_within_loa",
        "max_deviation_pct",
        "n_points",
        "n_pulses",
        "r_trace",
        "r_template",
    ] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert!(r["r_template"].as_f64().unwrap() >= 0.95);
    let templates = read(&a1.join("templates.csv"));
    assert_eq!(templates.lines().count(), 3 * 240 + 1);
    assert!(read(&a1.join("second_derivative.csv")).starts_with("segment,t_s,magnetic,vibration"));
}

#[test]
fn analyze_error_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let flat = tmp.path().join("flat.csv");
    let mut text = String::from("t,magnetic,vibration\n");
    for i in 0..(240 * 31) {
        text.push_str(&format!("{},1.0,2.0\n", i as f64 / 240.0));
    }
    std::fs::write(&flat, text).unwrap();
    let out = tmp.path().join("o");
    let r = mdvs(&["analyze", "--input", s(&flat), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(!out.join("manifest.json").exists());

    let one = tmp.path().join("one.csv");
    std::fs::write(&one, "t,magnetic\n0,1\n0.1,2\n").unwrap();
    let r = mdvs(&["analyze", "--input", s(&one), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("vibration"));
}
