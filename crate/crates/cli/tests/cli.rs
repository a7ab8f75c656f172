use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fig1() -> PathBuf {
    root().join("configs/paper_fig1.json")
}

fn spdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spdc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, cmd: &str, config: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    spdc(&args)
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap()
}

/// Copy of the shipped config whose materials path points at `materials`.
fn config_with_materials(dir: &Path, materials: &Path) -> PathBuf {
    let mut cfg = json(fig1());
    cfg["materials_file"] = Value::String(materials.to_str().unwrap().into());
    let path = dir.join("scenario.json");
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = spdc(&["optimize", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = spdc(&["optimize"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_prints_usage_and_exits_2() {
    let out = spdc(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_config_field_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = json(fig1());
    cfg["phase_match"]["pump_wavelength"] = Value::from(403.0);
    cfg["materials_file"] =
        Value::String(root().join("data/materials.json").to_str().unwrap().into());
    let path = dir.path().join("typo.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = run_in(dir.path(), "pm", &path, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pump_wavelength"));
}

#[test]
fn angle_past_degeneracy_has_no_phase_match() {
    let dir = tempfile::tempdir().unwrap();
    let tuned = run_in(dir.path(), "pm", &fig1(), &[]);
    assert_eq!(tuned.status.code(), Some(0));
    let theta = json(dir.path().join("pm.json"))["result"]["theta_deg"]
        .as_f64()
        .unwrap();
    let beyond = format!("{}", theta + 2.0);
    let out = run_in(dir.path(), "pm", &fig1(), &["--theta-deg", &beyond]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NoPhaseMatch"));
}

#[test]
fn out_dir_is_created_and_reports_carry_version_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let nested = dir.path().join("a/b/c");
    let out = run_in(&nested, "optimize", &fig1(), &["--seed", "77"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc = json(nested.join("optimize.json"));
    assert_eq!(doc["seed"], 77);
    assert_eq!(doc["materials_version"], "materials-2026.1");
    assert_eq!(doc["command"], "optimize");
}

#[test]
fn every_subcommand_runs_on_the_shipped_config() {
    let dir = tempfile::tempdir().unwrap();
    let expected: [(&str, &[&str]); 9] = [
        ("index", &["index.json", "index.csv"]),
        ("pm", &["pm.json"]),
        (
            "spectrum",
            &["spectrum.json", "spectrum_signal.csv", "spectrum_idler.csv"],
        ),
        ("phasemap", &["phasemap.json", "phasemap_compensated.csv"]),
        ("optimize", &["optimize.json"]),
        ("visibility", &["visibility.json"]),
        ("simulate", &["simulate.json", "rates.csv"]),
        ("analyze", &["analyze.json", "analyze.csv"]),
        ("scan-length", &["scan_length.json", "scan_length.csv"]),
    ];
    for (cmd, files) in expected {
        let out = run_in(dir.path(), cmd, &fig1(), &[]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{cmd}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        for f in files {
            let p = dir.path().join(f);
            assert!(p.exists(), "{cmd} did not write {f}");
            if f.ends_with(".json") {
                let doc = json(p);
                assert!(doc["seed"].is_u64() && doc["materials_version"].is_string());
            }
        }
    }
    let csv = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert!(csv.starts_with("power_mw,s1,s2,c_raw,c_corrected\n"));
    let csv = fs::read_to_string(dir.path().join("scan_length.csv")).unwrap();
    assert!(csv.starts_with("L_mm,fwhm_nm\n"));
    let csv = fs::read_to_string(dir.path().join("phasemap_compensated.csv")).unwrap();
    assert!(csv.starts_with("lambda_p_nm,lambda_nm,phi_rad\n"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for cmd in ["simulate", "analyze", "phasemap", "spectrum"] {
        assert_eq!(run_in(a.path(), cmd, &fig1(), &[]).status.code(), Some(0));
        assert_eq!(run_in(b.path(), cmd, &fig1(), &[]).status.code(), Some(0));
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 10);
    for name in names {
        let x = fs::read(a.path().join(&name)).unwrap();
        let y = fs::read(b.path().join(&name)).unwrap();
        assert!(x == y, "{name:?} differs between runs");
    }
}

#[test]
fn seed_changes_simulated_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_in(a.path(), "simulate", &fig1(), &["--seed", "1"]);
    run_in(b.path(), "simulate", &fig1(), &["--seed", "2"]);
    assert_ne!(
        fs::read(a.path().join("rates.csv")).unwrap(),
        fs::read(b.path().join("rates.csv")).unwrap()
    );
}

#[test]
fn perturbed_sellmeier_data_moves_the_compensators_out_of_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let clean = run_in(dir.path(), "optimize", &fig1(), &[]);
    assert_eq!(clean.status.code(), Some(0));
    let base = json(dir.path().join("optimize.json"))["result"].clone();

    let mut materials = json(root().join("data/materials.json"));
    let yvo = materials["materials"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .find(|m| m["name"] == "YVO4")
        .unwrap();
    let b = yvo["e"]["B"].as_f64().unwrap();
    yvo["e"]["B"] = Value::from(b * 1.05);
    let mpath = dir.path().join("materials.json");
    fs::write(&mpath, materials.to_string()).unwrap();
    let cfg = config_with_materials(dir.path(), &mpath);

    let out = run_in(dir.path(), "optimize", &cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let moved = json(dir.path().join("optimize.json"))["result"].clone();
    let shift = |k: &str| (moved[k].as_f64().unwrap() - base[k].as_f64().unwrap()).abs();
    assert!(
        shift("d_p_mm") > 0.3 || shift("d_c_mm") > 0.3,
        "{base} vs {moved}"
    );

    let repro = run_in(dir.path(), "repro", &cfg, &[]);
    assert_ne!(repro.status.code(), Some(0));
    assert!(dir.path().join("repro_report.json").exists());
    let table = fs::read_to_string(dir.path().join("repro_report.txt")).unwrap();
    assert!(table.contains("FAIL criterion 1"));
}

#[test]
fn invalid_materials_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mpath = dir.path().join("materials.json");
    fs::write(&mpath, r#"{"version":"x","materials":[{"name":"bad"}]}"#).unwrap();
    let cfg = config_with_materials(dir.path(), &mpath);
    assert_eq!(run_in(dir.path(), "pm", &cfg, &[]).status.code(), Some(2));
}

#[test]
fn repro_reports_every_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spdc"))
        .args([
            "repro",
            "--config",
            fig1().to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    let table = fs::read_to_string(dir.path().join("repro_report.txt")).unwrap();
    for id in ["1", "2", "3a", "3b", "4", "5", "6", "7", "8", "9"] {
        assert!(table.contains(&format!("criterion {id}:")), "missing {id}");
    }
    let all_pass = !table.contains("FAIL");
    assert_eq!(out.status.code() == Some(0), all_pass);
}
