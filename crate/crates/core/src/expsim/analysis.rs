use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::{derive_seed, simulate_run, CountRecord, MeasurementSetting, SourceParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectedRate {
    pub raw_rate: f64,
    pub accidental_rate: f64,
    /// raw − accidental, clamped at zero.
    pub rate: f64,
    /// Set when the subtraction went negative and was clamped.
    pub clamped: bool,
}

/// C/T − (S1/T)(S2/T)·τ.
pub fn accidental_correction(record: &CountRecord, tau_ns: f64) -> Result<CorrectedRate> {
    let t = record.duration_s;
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!(
            "duration must be > 0, got {t}"
        )));
    }
    let raw_rate = record.coincidences as f64 / t;
    let accidental_rate = (record.s1 as f64 / t) * (record.s2 as f64 / t) * tau_ns * 1e-9;
    let diff = raw_rate - accidental_rate;
    Ok(CorrectedRate {
        raw_rate,
        accidental_rate,
        rate: diff.max(0.0),
        clamped: diff < 0.0,
    })
}

/// Poisson variance of the corrected rate, including the singles.
fn corrected_variance(record: &CountRecord, tau_s: f64) -> f64 {
    let t = record.duration_s;
    let (s1, s2) = (record.s1 as f64, record.s2 as f64);
    record.coincidences as f64 / (t * t) + (tau_s / (t * t)).powi(2) * (s1 * s2 * s2 + s2 * s1 * s1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilityEstimate {
    /// From accidental-corrected rates.
    pub value: f64,
    pub std_err: f64,
    /// From raw coincidence rates.
    pub raw_value: f64,
    pub raw_std_err: f64,
    pub clamped: bool,
}

fn ratio_and_error(a: f64, b: f64, var_a: f64, var_b: f64) -> Result<(f64, f64)> {
    let sum = a + b;
    if !(sum > 0.0) {
        return Err(Error::ZeroCounts);
    }
    let v = (a - b) / sum;
    let da = 2.0 * b / (sum * sum);
    let db = 2.0 * a / (sum * sum);
    Ok((v, (da * da * var_a + db * db * var_b).sqrt()))
}

/// (C_max − C_min)/(C_max + C_min) from a pair of analyzer settings.
pub fn visibility_from_scan(
    max: &CountRecord,
    min: &CountRecord,
    tau_ns: f64,
) -> Result<VisibilityEstimate> {
    let tau_s = tau_ns * 1e-9;
    let cmax = accidental_correction(max, tau_ns)?;
    let cmin = accidental_correction(min, tau_ns)?;
    let (value, std_err) = ratio_and_error(
        cmax.rate,
        cmin.rate,
        corrected_variance(max, tau_s),
        corrected_variance(min, tau_s),
    )?;
    let raw_var = |r: &CountRecord| r.coincidences as f64 / (r.duration_s * r.duration_s);
    let (raw_value, raw_std_err) =
        ratio_and_error(cmax.raw_rate, cmin.raw_rate, raw_var(max), raw_var(min))?;
    Ok(VisibilityEstimate {
        value,
        std_err,
        raw_value,
        raw_std_err,
        clamped: cmax.clamped || cmin.clamped,
    })
}

/// Fidelity with |φ⁺⟩, taking the circular-basis visibility equal to V_45.
pub fn fidelity_estimate(v_hv: f64, v_45: f64) -> f64 {
    (1.0 + v_hv + 2.0 * v_45) / 4.0
}

/// Coupling efficiency implied by a coincidence-to-singles ratio once the
/// detector efficiency and the known losses are divided out.
pub fn coupling_efficiency_estimate(
    c_over_s: f64,
    detector_eff: f64,
    losses: &[f64],
) -> Result<f64> {
    if !(0.0..=1.0).contains(&c_over_s) || !(0.0..=1.0).contains(&detector_eff) {
        return Err(Error::InvalidInput(format!(
            "C/S and detector efficiency must lie in [0, 1], got {c_over_s}, {detector_eff}"
        )));
    }
    if let Some(l) = losses.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::InvalidInput(format!(
            "loss must lie in [0, 1], got {l}"
        )));
    }
    let denominator = detector_eff * losses.iter().map(|l| 1.0 - l).product::<f64>();
    if denominator == 0.0 {
        return Err(Error::InvalidInput("efficiency chain is zero".into()));
    }
    Ok(c_over_s / denominator)
}

/// One row of a power scan; all rates in 1/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerRow {
    pub power_mw: f64,
    pub s1: f64,
    pub s2: f64,
    pub c_raw: f64,
    pub c_corrected: f64,
    pub clamped: bool,
    pub seed: u64,
}

impl PowerRow {
    pub fn csv(rows: &[PowerRow]) -> String {
        let mut out = String::from("power_mw,s1,s2,c_raw,c_corrected\n");
        for r in rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.power_mw, r.s1, r.s2, r.c_raw, r.c_corrected
            )
            .unwrap();
        }
        out
    }
}

/// Simulates one run per pump power. Run `i` uses `derive_seed(seed, i)`.
pub fn rates_vs_power(
    params: &SourceParams,
    powers_mw: &[f64],
    setting: &MeasurementSetting,
    seed: u64,
) -> Result<Vec<PowerRow>> {
    if let Some(p) = powers_mw.iter().find(|p| !(**p > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "pump power must be > 0, got {p}"
        )));
    }
    powers_mw
        .par_iter()
        .enumerate()
        .map(|(i, &power_mw)| {
            let run_seed = derive_seed(seed, i as u64);
            let record = simulate_run(&params.with_power(power_mw), setting, run_seed)?;
            let c = accidental_correction(&record, params.tau_ns)?;
            let t = record.duration_s;
            Ok(PowerRow {
                power_mw,
                s1: record.s1 as f64 / t,
                s2: record.s2 as f64 / t,
                c_raw: c.raw_rate,
                c_corrected: c.rate,
                clamped: c.clamped,
                seed: run_seed,
            })
        })
        .collect()
}
