//! Acceptance suite. Each criterion runs end to end against the shipped
//! `configs/paper_fig1.json` and prints one PASS/FAIL line. The process
//! exits nonzero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use spdc_core::expsim::{
    accidental_correction, coupling_efficiency_estimate, CountRecord, MeasurementSetting,
};

fn fig1() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_fig1.json")
}

/// Runs a subcommand into a fresh directory and returns the exit code,
/// stderr and the parsed `result` of `report` (if written).
fn run(cmd: &str, report: &str, extra: &[&str]) -> (i32, String, Option<Value>) {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spdc"))
        .args([
            cmd,
            "--config",
            fig1().to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .args(extra)
        .output()
        .unwrap();
    let doc = fs::read_to_string(dir.path().join(report))
        .ok()
        .map(|t| serde_json::from_str::<Value>(&t).unwrap()["result"].clone());
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
        doc,
    )
}

fn f(v: &Value, path: &[&str]) -> f64 {
    path.iter()
        .fold(v, |v, k| &v[*k])
        .as_f64()
        .unwrap_or(f64::NAN)
}

type Verdict = (bool, String);

fn criterion_1_compensator_thicknesses() -> Verdict {
    let (code, err, doc) = run("optimize", "optimize.json", &[]);
    assert_eq!(code, 0, "{err}");
    let r = doc.unwrap();
    let (dp, dc) = (f(&r, &["d_p_mm"]), f(&r, &["d_c_mm"]));
    let pass = (dp - 8.20).abs() <= 0.3 && (dc - 9.03).abs() <= 0.3;
    (
        pass,
        format!("pump path {dp:.3} mm (8.20 ± 0.3), pair path {dc:.3} mm (9.03 ± 0.3)"),
    )
}

fn criterion_2_phase_matching_at_29_degrees() -> Verdict {
    let (code, err, doc) = run("pm", "pm.json", &["--theta-deg", "29.0"]);
    let detail = match (code, doc) {
        (0, Some(r)) => {
            let (l1, l2) = (f(&r, &["signal_nm"]), f(&r, &["idler_nm"]));
            let (e, dk) = (
                f(&r, &["energy_mismatch_per_nm"]),
                f(&r, &["residual_per_mm"]),
            );
            let pass = (758.0..=772.0).contains(&l1)
                && (843.0..=857.0).contains(&l2)
                && e.abs() <= 1e-12
                && dk.abs() < 1e-9;
            (
                pass,
                format!("λ1 {l1:.3} nm, λ2 {l2:.3} nm, energy {e:.1e} /nm, Δk {dk:.1e} /mm"),
            )
        }
        _ => (false, format!("exit {code}: {}", err.trim())),
    };
    detail
}

fn criterion_3_spectral_widths_broadband_pump() -> Verdict {
    let (code, err, doc) = run("spectrum", "spectrum.json", &[]);
    assert_eq!(code, 0, "{err}");
    let r = doc.unwrap();
    let (s, i) = (
        f(&r, &["broadband", "signal_fwhm_nm"]),
        f(&r, &["broadband", "idler_fwhm_nm"]),
    );
    let pass = (s - 11.9).abs() <= 1.5 && (i - 12.9).abs() <= 1.5;
    (
        pass,
        format!("signal {s:.2} nm (11.9 ± 1.5), idler {i:.2} nm (12.9 ± 1.5)"),
    )
}

fn criterion_3_spectral_widths_monochromatic_pump() -> Verdict {
    let (code, err, doc) = run("spectrum", "spectrum.json", &[]);
    assert_eq!(code, 0, "{err}");
    let r = doc.unwrap();
    let s = f(&r, &["monochromatic", "signal_fwhm_nm"]);
    let i = f(&r, &["monochromatic", "idler_fwhm_nm"]);
    let pass = (s - 6.4).abs() <= 1.0 && (i - 6.4).abs() <= 1.0;
    (
        pass,
        format!("signal {s:.2} nm, idler {i:.2} nm (6.4 ± 1.0)"),
    )
}

fn criterion_4_bandwidth_scaling() -> Verdict {
    let (code, err, doc) = run("scan-length", "scan_length.json", &[]);
    assert_eq!(code, 0, "{err}");
    let r = doc.unwrap();
    let lengths: Vec<f64> = r["broadband"]["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["length_mm"].as_f64().unwrap())
        .collect();
    assert_eq!(lengths, [3.94, 7.88, 15.76]);
    let k = f(&r, &["broadband", "signal_exponent"]);
    (
        (k + 0.73).abs() <= 0.12,
        format!("exponent {k:.3} (-0.73 ± 0.12)"),
    )
}

fn criterion_5_phase_map_flatness() -> Verdict {
    let (code, err, doc) = run("phasemap", "phasemap.json", &[]);
    assert_eq!(code, 0, "{err}");
    let r = doc.unwrap();
    let ratio = f(&r, &["flattening_ratio"]);
    let g: Vec<f64> = r["compensated_center_gradient"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let pass = ratio >= 100.0 && g.iter().all(|v| v.abs() <= 1e-6);
    (
        pass,
        format!(
            "ratio {ratio:.0} (≥ 100), gradients [{:.2e}, {:.2e}] rad/nm (≤ 1e-6)",
            g[0], g[1]
        ),
    )
}

fn criterion_6_visibility_prediction() -> Verdict {
    let (code, err, doc) = run("visibility", "visibility.json", &[]);
    assert_eq!(code, 0, "{err}");
    let r = doc.unwrap();
    let (c, u) = (f(&r, &["compensated"]), f(&r, &["uncompensated"]));
    (
        c >= 0.99 && u <= 0.3,
        format!("compensated {c:.6} (≥ 0.99), uncompensated {u:.2e} (≤ 0.3)"),
    )
}

fn criterion_7_counting_statistics() -> Verdict {
    let (code, err, doc) = run("analyze", "analyze.json", &[]);
    assert_eq!(code, 0, "{err}");
    let r = doc.unwrap();
    let target = f(&r, &["state_visibility"]);
    assert_eq!(target, 0.987);
    assert_eq!(f(&r, &["tau_ns"]), 5.8);
    let ensembles = r["ensembles"].as_array().unwrap();
    let mut pass = !ensembles.is_empty();
    let mut parts = Vec::new();
    for e in ensembles {
        let (mean, se) = (f(e, &["hv", "mean"]), f(e, &["hv", "combined_std_err"]));
        let pairs = f(e, &["mean_pairs_hh"]);
        pass &= f(e, &["runs"]) >= 200.0 && pairs >= 1e5 && (mean - target).abs() <= 3.0 * se;
        parts.push(format!(
            "{} mW: {mean:.5} ± {se:.5}, {pairs:.0} pairs",
            f(e, &["power_mw"])
        ));
    }
    let top = ensembles
        .iter()
        .max_by(|a, b| f(a, &["power_mw"]).total_cmp(&f(b, &["power_mw"])))
        .unwrap();
    let (raw, corrected) = (f(top, &["hv", "mean_raw"]), f(top, &["hv", "mean"]));
    pass &= raw < corrected;
    parts.push(format!("top power raw {raw:.5} < corrected {corrected:.5}"));
    (pass, parts.join("; "))
}

fn criterion_8_coupling_efficiency() -> Verdict {
    let eta = coupling_efficiency_estimate(0.38, 0.51, &[0.12, 0.03, 0.04]).unwrap();
    (
        (0.88..=0.92).contains(&eta),
        format!("η {eta:.4} (0.88–0.92)"),
    )
}

fn criterion_9_accidental_arithmetic() -> Verdict {
    let record = CountRecord {
        s1: 1_000_000,
        s2: 1_000_000,
        coincidences: 20_000,
        duration_s: 1.0,
        setting: MeasurementSetting::new(None, 1.0).unwrap(),
        seed: 0,
    };
    let c = accidental_correction(&record, 5.8).unwrap();
    let subtracted = c.raw_rate - c.rate;
    (
        (subtracted - 5800.0).abs() <= 1e-9,
        format!("subtracted {subtracted} /s (5800)"),
    )
}

type Check = (&'static str, fn() -> Verdict);

const CRITERIA: [Check; 10] = [
    ("1", criterion_1_compensator_thicknesses),
    ("2", criterion_2_phase_matching_at_29_degrees),
    (
        "3 (0.5 nm pump)",
        criterion_3_spectral_widths_broadband_pump,
    ),
    (
        "3 (monochromatic)",
        criterion_3_spectral_widths_monochromatic_pump,
    ),
    ("4", criterion_4_bandwidth_scaling),
    ("5", criterion_5_phase_map_flatness),
    ("6", criterion_6_visibility_prediction),
    ("7", criterion_7_counting_statistics),
    ("8", criterion_8_coupling_efficiency),
    ("9", criterion_9_accidental_arithmetic),
];

fn main() {
    let mut failed = 0;
    for (id, check) in CRITERIA {
        let (pass, detail) = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        println!(
            "{} criterion {id}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        failed += usize::from(!pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        CRITERIA.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
