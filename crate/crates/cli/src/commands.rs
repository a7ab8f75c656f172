//! Subcommand implementations. Each `compute_*` returns a serializable
//! report; `run_*` writes it with its CSV artifacts.

use serde::Serialize;
use spdc_core::compensation::{
    optimize_compensators, phase_map, predict_visibility, CenteredGrid, CompensatorSolution,
    PhaseMap, SpectralWindow,
};
use spdc_core::expsim::visibility_from_scan;
use spdc_core::expsim::{
    coupling_efficiency_estimate, derive_seed, expected_rates, fidelity_estimate, rates_vs_power,
    simulate_run, MeasurementSetting, PowerRow, VisibilityEstimate,
};
use spdc_core::numeric::linear_fit;
use spdc_core::optics::{
    group_index, lateral_displacement, refractive_index, walkoff_angle, Polarization,
};
use spdc_core::phasematch::{
    arm_spectra, bandwidth_scan, solve_signal_idler, ArmSpectra, BandwidthScan,
};

use crate::config::Scenario;
use crate::output::Artifacts;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct IndexRow {
    pub wavelength_nm: f64,
    pub n_o: f64,
    pub n_e: f64,
    pub n_theta: f64,
    pub group_index_o: f64,
    pub group_index_theta: f64,
    pub walkoff_rad: f64,
    pub walkoff_displacement_mm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexReport {
    pub material: String,
    pub source: String,
    pub theta_deg: f64,
    pub length_mm: f64,
    pub rows: Vec<IndexRow>,
}

pub fn compute_index(s: &Scenario, extra_nm: &[f64]) -> Result<IndexReport, CliError> {
    let cfg = &s.phase_match;
    let m = &cfg.material;
    let mut wavelengths = vec![cfg.pump_nm];
    if let Ok(pair) = solve_signal_idler(cfg) {
        wavelengths.extend([pair.signal_nm, pair.idler_nm]);
    }
    wavelengths.extend_from_slice(extra_nm);
    let at_theta = Polarization::ExtraordinaryAtAngle(cfg.theta_deg);
    let rows = wavelengths
        .iter()
        .map(|&wl| {
            let walkoff_rad = walkoff_angle(m, cfg.theta_deg, wl)?;
            Ok(IndexRow {
                wavelength_nm: wl,
                n_o: m.n_o(wl)?,
                n_e: m.n_e(wl)?,
                n_theta: refractive_index(m, at_theta, wl)?,
                group_index_o: group_index(m, Polarization::Ordinary, wl)?,
                group_index_theta: group_index(m, at_theta, wl)?,
                walkoff_rad,
                walkoff_displacement_mm: lateral_displacement(walkoff_rad, cfg.length_mm),
            })
        })
        .collect::<Result<Vec<_>, spdc_core::Error>>()?;
    Ok(IndexReport {
        material: m.name.clone(),
        source: m.source.clone(),
        theta_deg: cfg.theta_deg,
        length_mm: cfg.length_mm,
        rows,
    })
}

pub fn run_index(s: &Scenario, out: &mut Artifacts, extra_nm: &[f64]) -> Result<(), CliError> {
    let report = compute_index(s, extra_nm)?;
    let mut csv = String::from(
        "wavelength_nm,n_o,n_e,n_theta,group_index_o,group_index_theta,walkoff_rad,walkoff_displacement_mm\n",
    );
    for r in &report.rows {
        csv += &format!(
            "{},{},{},{},{},{},{},{}\n",
            r.wavelength_nm,
            r.n_o,
            r.n_e,
            r.n_theta,
            r.group_index_o,
            r.group_index_theta,
            r.walkoff_rad,
            r.walkoff_displacement_mm
        );
    }
    out.write("index.csv", &csv)?;
    out.write_report("index.json", "index", s, &report)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct PmReport {
    pub material: String,
    pub theta_deg: f64,
    pub angle_tuned: bool,
    pub pump_nm: f64,
    pub signal_nm: f64,
    pub idler_nm: f64,
    pub residual_per_mm: f64,
    /// 1/λp − 1/λ1 − 1/λ2, 1/nm.
    pub energy_mismatch_per_nm: f64,
    pub degenerate: bool,
    pub pump_walkoff_rad: f64,
    pub pump_walkoff_displacement_mm: f64,
}

pub fn compute_pm(s: &Scenario) -> Result<PmReport, CliError> {
    let cfg = &s.phase_match;
    let pair = solve_signal_idler(cfg)?;
    let rho = walkoff_angle(&cfg.material, cfg.theta_deg, cfg.pump_nm)?;
    Ok(PmReport {
        material: cfg.material.name.clone(),
        theta_deg: cfg.theta_deg,
        angle_tuned: s.angle_tuned,
        pump_nm: cfg.pump_nm,
        signal_nm: pair.signal_nm,
        idler_nm: pair.idler_nm,
        residual_per_mm: pair.residual_per_mm,
        energy_mismatch_per_nm: 1.0 / cfg.pump_nm - 1.0 / pair.signal_nm - 1.0 / pair.idler_nm,
        degenerate: pair.degenerate,
        pump_walkoff_rad: rho,
        pump_walkoff_displacement_mm: lateral_displacement(rho, cfg.length_mm),
    })
}

pub fn run_pm(s: &Scenario, out: &mut Artifacts) -> Result<(), CliError> {
    let report = compute_pm(s)?;
    out.write_report("pm.json", "pm", s, &report)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Widths {
    pub pump_fwhm_nm: f64,
    pub signal_fwhm_nm: f64,
    pub idler_fwhm_nm: f64,
    pub signal_center_nm: f64,
    pub idler_center_nm: f64,
}

impl Widths {
    fn of(pump_fwhm_nm: f64, a: &ArmSpectra) -> Self {
        Self {
            pump_fwhm_nm,
            signal_fwhm_nm: a.signal.fwhm_nm,
            idler_fwhm_nm: a.idler.fwhm_nm,
            signal_center_nm: a.signal.center_nm,
            idler_center_nm: a.idler.center_nm,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub length_mm: f64,
    pub broadband: Widths,
    pub monochromatic: Widths,
}

pub struct SpectrumRun {
    pub report: SpectrumReport,
    pub broadband: ArmSpectra,
    pub monochromatic: ArmSpectra,
}

pub fn compute_spectrum(s: &Scenario) -> Result<SpectrumRun, CliError> {
    let cfg = &s.phase_match;
    let sp = &s.raw.spectrum;
    let broadband = arm_spectra(cfg, sp.half_width_nm, sp.step_nm)?;
    let monochromatic = arm_spectra(&cfg.with_pump_fwhm(0.0), sp.half_width_nm, sp.step_nm)?;
    Ok(SpectrumRun {
        report: SpectrumReport {
            length_mm: cfg.length_mm,
            broadband: Widths::of(cfg.pump_fwhm_nm, &broadband),
            monochromatic: Widths::of(0.0, &monochromatic),
        },
        broadband,
        monochromatic,
    })
}

pub fn run_spectrum(s: &Scenario, out: &mut Artifacts) -> Result<(), CliError> {
    let run = compute_spectrum(s)?;
    out.write("spectrum_signal.csv", &run.broadband.signal.to_csv())?;
    out.write("spectrum_idler.csv", &run.broadband.idler.to_csv())?;
    out.write("spectrum_signal_cw.csv", &run.monochromatic.signal.to_csv())?;
    out.write("spectrum_idler_cw.csv", &run.monochromatic.idler.to_csv())?;
    out.write_report("spectrum.json", "spectrum", s, &run.report)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub broadband: BandwidthScan,
    pub monochromatic: BandwidthScan,
}

pub fn compute_scan(s: &Scenario) -> Result<ScanReport, CliError> {
    let lengths = &s.raw.spectrum.scan_lengths_mm;
    let cfg = &s.phase_match;
    Ok(ScanReport {
        broadband: bandwidth_scan(cfg, lengths)?,
        monochromatic: bandwidth_scan(&cfg.with_pump_fwhm(0.0), lengths)?,
    })
}

pub fn run_scan(s: &Scenario, out: &mut Artifacts) -> Result<(), CliError> {
    let report = compute_scan(s)?;
    out.write("scan_length.csv", &report.broadband.to_csv())?;
    out.write("scan_length_cw.csv", &report.monochromatic.to_csv())?;
    out.write_report("scan_length.json", "scan-length", s, &report)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeReport {
    pub crystal_length_mm: f64,
    pub theta_deg: f64,
    pub compensator_material: String,
    /// Pump-path compensator thickness.
    pub d_p_mm: f64,
    /// Pair-path compensator thickness.
    pub d_c_mm: f64,
    pub solution: CompensatorSolution,
}

pub fn compute_optimize(s: &Scenario) -> Result<OptimizeReport, CliError> {
    let solution = optimize_compensators(&s.stack)?;
    Ok(OptimizeReport {
        crystal_length_mm: s.phase_match.length_mm,
        theta_deg: s.phase_match.theta_deg,
        compensator_material: s.raw.stack.compensator_material.clone(),
        d_p_mm: solution.d_p_mm,
        d_c_mm: solution.d_c_mm,
        solution,
    })
}

pub fn run_optimize(s: &Scenario, out: &mut Artifacts) -> Result<(), CliError> {
    let report = compute_optimize(s)?;
    out.write_report("optimize.json", "optimize", s, &report)?;
    Ok(())
}

/// Window spanning ±1 pump FWHM and ±0.52 signal FWHM around the operating
/// point, with the signal width from the pump-averaged spectrum.
pub fn design_window(s: &Scenario) -> Result<SpectralWindow, CliError> {
    let sp = &s.raw.spectrum;
    let spectra = arm_spectra(&s.phase_match, sp.half_width_nm, sp.step_nm)?;
    let pair = solve_signal_idler(&s.phase_match)?;
    Ok(SpectralWindow::design(
        &s.phase_match,
        pair.signal_nm,
        spectra.signal.fwhm_nm,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseMapReport {
    pub window: SpectralWindow,
    pub d_p_mm: f64,
    pub d_c_mm: f64,
    pub uncompensated_peak_to_peak_rad: f64,
    pub compensated_peak_to_peak_rad: f64,
    /// Uncompensated over compensated peak-to-peak.
    pub flattening_ratio: f64,
    pub uncompensated_center_gradient: [f64; 2],
    pub compensated_center_gradient: [f64; 2],
}

pub struct PhaseMapRun {
    pub report: PhaseMapReport,
    pub uncompensated: PhaseMap,
    pub compensated: PhaseMap,
}

pub fn compute_phasemap(s: &Scenario) -> Result<PhaseMapRun, CliError> {
    let window = design_window(s)?;
    let sol = optimize_compensators(&s.stack)?;
    let compensated_stack = sol.apply(&s.stack)?;
    let pm = &s.raw.phasemap;
    let pump_grid = CenteredGrid::new(
        window.pump_center_nm,
        window.pump_half_width_nm,
        pm.pump_points,
    )?;
    let signal_grid = CenteredGrid::new(
        window.signal_center_nm,
        window.signal_half_width_nm,
        pm.signal_points,
    )?;
    let uncompensated = phase_map(&s.stack, pump_grid, signal_grid, window)?;
    let compensated = phase_map(&compensated_stack, pump_grid, signal_grid, window)?;
    Ok(PhaseMapRun {
        report: PhaseMapReport {
            window,
            d_p_mm: sol.d_p_mm,
            d_c_mm: sol.d_c_mm,
            uncompensated_peak_to_peak_rad: uncompensated.peak_to_peak_rad,
            compensated_peak_to_peak_rad: compensated.peak_to_peak_rad,
            flattening_ratio: uncompensated.peak_to_peak_rad / compensated.peak_to_peak_rad,
            uncompensated_center_gradient: uncompensated.center_gradient,
            compensated_center_gradient: compensated.center_gradient,
        },
        uncompensated,
        compensated,
    })
}

pub fn run_phasemap(s: &Scenario, out: &mut Artifacts) -> Result<(), CliError> {
    let run = compute_phasemap(s)?;
    out.write("phasemap_uncompensated.csv", &run.uncompensated.to_csv())?;
    out.write("phasemap_compensated.csv", &run.compensated.to_csv())?;
    out.write_report("phasemap.json", "phasemap", s, &run.report)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct VisibilityReport {
    pub window: SpectralWindow,
    pub nodes: usize,
    pub d_p_mm: f64,
    pub d_c_mm: f64,
    pub uncompensated: f64,
    pub compensated: f64,
}

pub fn compute_visibility(s: &Scenario) -> Result<VisibilityReport, CliError> {
    let window = design_window(s)?;
    let sol = optimize_compensators(&s.stack)?;
    let nodes = s.raw.phasemap.visibility_nodes;
    Ok(VisibilityReport {
        window,
        nodes,
        d_p_mm: sol.d_p_mm,
        d_c_mm: sol.d_c_mm,
        uncompensated: predict_visibility(&s.stack, &window, nodes)?,
        compensated: predict_visibility(&sol.apply(&s.stack)?, &window, nodes)?,
    })
}

pub fn run_visibility(s: &Scenario, out: &mut Artifacts) -> Result<(), CliError> {
    let report = compute_visibility(s)?;
    out.write_report("visibility.json", "visibility", s, &report)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub duration_s: f64,
    pub rows: Vec<PowerRow>,
    /// Expected true coincidence rate per mW without analyzers.
    pub true_rate_per_mw: f64,
    /// Least-squares line through the corrected coincidence rates.
    pub corrected_slope_per_mw: f64,
    pub corrected_intercept: f64,
    pub raw_slope_per_mw: f64,
    pub coincidence_to_singles: Vec<f64>,
}

pub fn compute_simulate(s: &Scenario) -> Result<SimulateReport, CliError> {
    let sim = &s.raw.simulation;
    let params = &s.raw.source;
    let setting = MeasurementSetting::new(None, sim.duration_s)?;
    let rows = rates_vs_power(params, &sim.powers_mw, &setting, s.seed)?;
    let x: Vec<f64> = rows.iter().map(|r| r.power_mw).collect();
    let corrected = linear_fit(&x, &rows.iter().map(|r| r.c_corrected).collect::<Vec<_>>())?;
    let raw = linear_fit(&x, &rows.iter().map(|r| r.c_raw).collect::<Vec<_>>())?;
    let per_mw = expected_rates(&params.with_power(1.0), &setting)?.true_coincidences;
    Ok(SimulateReport {
        duration_s: sim.duration_s,
        coincidence_to_singles: rows
            .iter()
            .map(|r| r.c_corrected / r.s1.max(r.s2))
            .collect(),
        rows,
        true_rate_per_mw: per_mw,
        corrected_slope_per_mw: corrected.slope,
        corrected_intercept: corrected.intercept,
        raw_slope_per_mw: raw.slope,
    })
}

pub fn run_simulate(s: &Scenario, out: &mut Artifacts) -> Result<(), CliError> {
    let report = compute_simulate(s)?;
    out.write("rates.csv", &PowerRow::csv(&report.rows))?;
    out.write_report("simulate.json", "simulate", s, &report)?;
    Ok(())
}

/// Ensemble statistics of one visibility estimator.
#[derive(Debug, Clone, Serialize)]
pub struct BasisSummary {
    pub mean: f64,
    /// Standard error of the mean from the per-run propagated errors.
    pub combined_std_err: f64,
    pub sample_std: f64,
    pub mean_raw: f64,
    pub raw_combined_std_err: f64,
    pub clamped_runs: usize,
}

impl BasisSummary {
    fn of(estimates: &[VisibilityEstimate]) -> Self {
        let n = estimates.len() as f64;
        let mean = estimates.iter().map(|e| e.value).sum::<f64>() / n;
        let var = if estimates.len() > 1 {
            estimates
                .iter()
                .map(|e| (e.value - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        let combined = |f: fn(&VisibilityEstimate) -> f64| {
            estimates.iter().map(|e| f(e).powi(2)).sum::<f64>().sqrt() / n
        };
        Self {
            mean,
            combined_std_err: combined(|e| e.std_err),
            sample_std: var.sqrt(),
            mean_raw: estimates.iter().map(|e| e.raw_value).sum::<f64>() / n,
            raw_combined_std_err: combined(|e| e.raw_std_err),
            clamped_runs: estimates.iter().filter(|e| e.clamped).count(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub power_mw: f64,
    pub runs: usize,
    pub duration_s: f64,
    /// Mean coincidences per run at the H/H setting.
    pub mean_pairs_hh: f64,
    pub hv: BasisSummary,
    pub diagonal: BasisSummary,
    pub fidelity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub state_visibility: f64,
    pub noise_model: spdc_core::expsim::NoiseModel,
    pub tau_ns: f64,
    pub ensembles: Vec<EnsembleSummary>,
    /// Accidental-corrected coincidences over singles, analyzers removed.
    pub coincidence_to_singles: f64,
    pub coupling_efficiency: f64,
}

/// H/V basis from (0°, 0°) vs (0°, 90°); diagonal basis from (45°, 45°) vs
/// (45°, −45°). Run `k` at power index `p` uses seeds
/// `derive_seed(derive_seed(seed, p), 4k + j)`.
pub fn compute_analyze(s: &Scenario) -> Result<AnalyzeReport, CliError> {
    let sim = &s.raw.simulation;
    let params = &s.raw.source;
    if sim.ensemble_runs == 0 {
        return Err(CliError::Config(
            "simulation.ensemble_runs must be > 0".into(),
        ));
    }
    let t = sim.visibility_duration_s;
    let settings = [
        MeasurementSetting::analyzers(0.0, 0.0, t)?,
        MeasurementSetting::analyzers(0.0, 90.0, t)?,
        MeasurementSetting::analyzers(45.0, 45.0, t)?,
        MeasurementSetting::analyzers(45.0, -45.0, t)?,
    ];
    let mut ensembles = Vec::new();
    for (p, &power) in sim.analysis_powers_mw.iter().enumerate() {
        let p_seed = derive_seed(s.seed, p as u64);
        let at = params.with_power(power);
        let (mut hv, mut diag, mut pairs) = (Vec::new(), Vec::new(), 0.0);
        for k in 0..sim.ensemble_runs as u64 {
            let rec =
                |j: u64| simulate_run(&at, &settings[j as usize], derive_seed(p_seed, 4 * k + j));
            let (hh, hvr, pp, pm) = (rec(0)?, rec(1)?, rec(2)?, rec(3)?);
            pairs += hh.coincidences as f64;
            hv.push(visibility_from_scan(&hh, &hvr, params.tau_ns)?);
            diag.push(visibility_from_scan(&pp, &pm, params.tau_ns)?);
        }
        let hv = BasisSummary::of(&hv);
        let diagonal = BasisSummary::of(&diag);
        ensembles.push(EnsembleSummary {
            power_mw: power,
            runs: sim.ensemble_runs,
            duration_s: t,
            mean_pairs_hh: pairs / sim.ensemble_runs as f64,
            fidelity: fidelity_estimate(hv.mean, diagonal.mean),
            hv,
            diagonal,
        });
    }

    let open = MeasurementSetting::new(None, sim.duration_s)?;
    let rec = simulate_run(params, &open, derive_seed(s.seed, u64::MAX))?;
    let corrected = spdc_core::expsim::accidental_correction(&rec, params.tau_ns)?;
    let singles = rec.s1.max(rec.s2) as f64 / rec.duration_s;
    let coincidence_to_singles = if singles > 0.0 {
        corrected.rate / singles
    } else {
        0.0
    };
    let detector = params.efficiency.detector[0].min(params.efficiency.detector[1]);
    let coupling_efficiency =
        coupling_efficiency_estimate(coincidence_to_singles, detector, &params.efficiency.losses)?;
    Ok(AnalyzeReport {
        state_visibility: params.state_visibility,
        noise_model: params.noise_model,
        tau_ns: params.tau_ns,
        ensembles,
        coincidence_to_singles,
        coupling_efficiency,
    })
}

pub fn run_analyze(s: &Scenario, out: &mut Artifacts) -> Result<(), CliError> {
    let report = compute_analyze(s)?;
    let mut csv = String::from("power_mw,v_hv,v_hv_se,v_hv_raw,v_45,v_45_se,v_45_raw,fidelity\n");
    for e in &report.ensembles {
        csv += &format!(
            "{},{},{},{},{},{},{},{}\n",
            e.power_mw,
            e.hv.mean,
            e.hv.combined_std_err,
            e.hv.mean_raw,
            e.diagonal.mean,
            e.diagonal.combined_std_err,
            e.diagonal.mean_raw,
            e.fidelity
        );
    }
    out.write("analyze.csv", &csv)?;
    out.write_report("analyze.json", "analyze", s, &report)?;
    Ok(())
}
