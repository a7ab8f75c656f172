//! Down-conversion spectra from the plane-wave sinc² kernel, averaged over a
//! Gaussian pump spectrum.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::{conjugate_wavelength, delta_k, solve_signal_idler, PhaseMatchConfig};
use crate::numeric::{linear_fit, simpson_weights};
use crate::{Error, Result};

/// Pump quadrature spans ±2.5 FWHM around the pump centre.
pub const PUMP_QUADRATURE_SPAN_FWHM: f64 = 2.5;
/// Simpson intervals of the pump quadrature (nodes = intervals + 1).
pub const PUMP_QUADRATURE_INTERVALS: usize = 64;
pub const DEFAULT_SPECTRUM_STEP_NM: f64 = 0.05;
pub const MIN_POINTS_ABOVE_HALF_MAX: usize = 10;

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_4;

/// Pump wavelengths and normalized weights of the Gaussian pump spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpQuadrature {
    pub nodes_nm: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PumpQuadrature {
    pub fn for_config(config: &PhaseMatchConfig) -> Result<Self> {
        Self::gaussian(config.pump_nm, config.pump_fwhm_nm)
    }

    /// Gaussian of the given FWHM, or a single node for a monochromatic pump.
    pub fn gaussian(center_nm: f64, fwhm_nm: f64) -> Result<Self> {
        if fwhm_nm == 0.0 {
            return Ok(Self {
                nodes_nm: vec![center_nm],
                weights: vec![1.0],
            });
        }
        let half_span = PUMP_QUADRATURE_SPAN_FWHM * fwhm_nm;
        let n = PUMP_QUADRATURE_INTERVALS;
        let step = 2.0 * half_span / n as f64;
        let simpson = simpson_weights(n + 1, step)?;
        let sigma = fwhm_nm / FWHM_PER_SIGMA;
        let nodes_nm: Vec<f64> = (0..=n)
            .map(|i| center_nm + (i as f64 - (n / 2) as f64) * step)
            .collect();
        let mut weights: Vec<f64> = nodes_nm
            .iter()
            .zip(&simpson)
            .map(|(x, w)| w * (-0.5 * ((x - center_nm) / sigma).powi(2)).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { nodes_nm, weights })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Signal,
    Idler,
}

/// Uniform wavelength grid `start, start + step, ..., <= stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavelengthGrid {
    pub start_nm: f64,
    pub stop_nm: f64,
    pub step_nm: f64,
}

impl WavelengthGrid {
    pub fn centered(center_nm: f64, half_width_nm: f64, step_nm: f64) -> Self {
        let k = (half_width_nm / step_nm).floor();
        Self {
            start_nm: center_nm - k * step_nm,
            stop_nm: center_nm + k * step_nm,
            step_nm,
        }
    }

    pub fn nodes(&self) -> Result<Vec<f64>> {
        if !(self.step_nm > 0.0) || !(self.stop_nm > self.start_nm) {
            return Err(Error::InvalidInput(format!("bad wavelength grid {self:?}")));
        }
        let count = ((self.stop_nm - self.start_nm) / self.step_nm + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|i| self.start_nm + i as f64 * self.step_nm)
            .collect())
    }
}

/// Peak-normalized spectral density of one arm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub arm: Arm,
    pub wavelengths_nm: Vec<f64>,
    pub density: Vec<f64>,
    pub fwhm_nm: f64,
    /// Midpoint of the half-maximum crossings.
    pub center_nm: f64,
}

impl Spectrum {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda_nm,density\n");
        for (l, s) in self.wavelengths_nm.iter().zip(&self.density) {
            writeln!(out, "{l},{s}").unwrap();
        }
        out
    }
}

fn sinc_squared(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 3.0
    } else {
        let s = x.sin() / x;
        s * s
    }
}

/// Pump-averaged sinc²(Δk·L/2) at one wavelength of the given arm.
pub fn kernel(
    config: &PhaseMatchConfig,
    pump: &PumpQuadrature,
    arm: Arm,
    wavelength_nm: f64,
) -> Result<f64> {
    let half_length = 0.5 * config.length_mm;
    let mut acc = 0.0;
    for (&lp, &w) in pump.nodes_nm.iter().zip(&pump.weights) {
        let signal = match arm {
            Arm::Signal => wavelength_nm,
            Arm::Idler => conjugate_wavelength(lp, wavelength_nm),
        };
        acc += w * sinc_squared(delta_k(config, lp, signal)? * half_length);
    }
    Ok(acc)
}

/// Spectral density of one arm on the given grid, peak-normalized, with
/// FWHM from linear interpolation at half maximum.
pub fn spectral_density(
    config: &PhaseMatchConfig,
    arm: Arm,
    grid: WavelengthGrid,
) -> Result<Spectrum> {
    let pump = PumpQuadrature::for_config(config)?;
    let wavelengths_nm = grid.nodes()?;
    let raw = wavelengths_nm
        .par_iter()
        .map(|&l| kernel(config, &pump, arm, l))
        .collect::<Result<Vec<_>>>()?;
    let peak = raw.iter().cloned().fold(0.0_f64, f64::max);
    if !(peak > 0.0) {
        return Err(Error::ZeroWeight);
    }
    let density: Vec<f64> = raw.iter().map(|v| v / peak).collect();
    let (fwhm_nm, center_nm) = half_max_width(&wavelengths_nm, &density)?;
    Ok(Spectrum {
        arm,
        wavelengths_nm,
        density,
        fwhm_nm,
        center_nm,
    })
}

/// Full width at half maximum around the global peak of a normalized curve.
fn half_max_width(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let peak = y
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > y[best] { i } else { best });
    let mut left = peak;
    while left > 0 && y[left] >= 0.5 {
        left -= 1;
    }
    let mut right = peak;
    while right < y.len() - 1 && y[right] >= 0.5 {
        right += 1;
    }
    if y[left] >= 0.5 || y[right] >= 0.5 {
        return Err(Error::UnboundedPeak);
    }
    let points = right - left - 1;
    if points < MIN_POINTS_ABOVE_HALF_MAX {
        return Err(Error::Resolution {
            points,
            required: MIN_POINTS_ABOVE_HALF_MAX,
        });
    }
    let cross = |i: usize, j: usize| x[i] + (0.5 - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
    let lo = cross(left, left + 1);
    let hi = cross(right - 1, right);
    Ok((hi - lo, 0.5 * (hi + lo)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSpectra {
    pub signal: Spectrum,
    pub idler: Spectrum,
}

/// Both arm spectra on grids centred on the phase-matched pair. The grid
/// half-width starts at `half_width_nm` and doubles until the half-maximum
/// crossings fall inside it.
pub fn arm_spectra(
    config: &PhaseMatchConfig,
    half_width_nm: f64,
    step_nm: f64,
) -> Result<ArmSpectra> {
    let pair = solve_signal_idler(config)?;
    let one = |arm: Arm, center: f64| -> Result<Spectrum> {
        let mut half = half_width_nm;
        loop {
            match spectral_density(config, arm, WavelengthGrid::centered(center, half, step_nm)) {
                Err(Error::UnboundedPeak) if half < 400.0 => half *= 2.0,
                other => return other,
            }
        }
    };
    Ok(ArmSpectra {
        signal: one(Arm::Signal, pair.signal_nm)?,
        idler: one(Arm::Idler, pair.idler_nm)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub length_mm: f64,
    pub signal_fwhm_nm: f64,
    pub idler_fwhm_nm: f64,
}

/// Power-law fit FWHM ∝ L^exponent over a set of crystal lengths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthScan {
    pub points: Vec<ScanPoint>,
    pub signal_exponent: f64,
    pub idler_exponent: f64,
    /// RMS residual of the signal fit in log space.
    pub signal_residual: f64,
    pub idler_residual: f64,
}

impl BandwidthScan {
    /// Signal-arm widths as `L_mm,fwhm_nm`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("L_mm,fwhm_nm\n");
        for p in &self.points {
            writeln!(out, "{},{}", p.length_mm, p.signal_fwhm_nm).unwrap();
        }
        out
    }
}

pub fn bandwidth_scan(config: &PhaseMatchConfig, lengths_mm: &[f64]) -> Result<BandwidthScan> {
    if lengths_mm.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "bandwidth scan needs at least 3 lengths, got {}",
            lengths_mm.len()
        )));
    }
    let logs: Vec<f64> = lengths_mm.iter().map(|l| l.ln()).collect();
    // Zero-variance abscissa is rejected before any spectra are computed.
    linear_fit(&logs, &vec![0.0; logs.len()])?;

    let points = lengths_mm
        .iter()
        .map(|&length_mm| {
            let spectra = arm_spectra(
                &config.with_length(length_mm),
                40.0,
                DEFAULT_SPECTRUM_STEP_NM,
            )?;
            Ok(ScanPoint {
                length_mm,
                signal_fwhm_nm: spectra.signal.fwhm_nm,
                idler_fwhm_nm: spectra.idler.fwhm_nm,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let ys: Vec<f64> = points.iter().map(|p| p.signal_fwhm_nm.ln()).collect();
    let yi: Vec<f64> = points.iter().map(|p| p.idler_fwhm_nm.ln()).collect();
    let fs = linear_fit(&logs, &ys)?;
    let fi = linear_fit(&logs, &yi)?;
    Ok(BandwidthScan {
        points,
        signal_exponent: fs.slope,
        idler_exponent: fi.slope,
        signal_residual: fs.rms_residual,
        idler_residual: fi.rms_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::MaterialLibrary;
    use crate::phasematch::solve_angle;

    fn config(fwhm: f64) -> PhaseMatchConfig {
        let m = MaterialLibrary::builtin().get("BBO").unwrap().clone();
        let theta = solve_angle(&m, 403.0, 765.0).unwrap();
        PhaseMatchConfig::new(m, theta, 15.76, 403.0, fwhm).unwrap()
    }

    #[test]
    fn pump_weights_are_normalized_and_symmetric() {
        let q = PumpQuadrature::gaussian(403.0, 0.5).unwrap();
        assert_eq!(q.nodes_nm.len(), PUMP_QUADRATURE_INTERVALS + 1);
        assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let n = q.weights.len();
        for i in 0..n / 2 {
            assert!((q.weights[i] - q.weights[n - 1 - i]).abs() < 1e-16);
        }
        assert_eq!(q.nodes_nm[n / 2], 403.0);
    }

    #[test]
    fn kernel_is_symmetric_between_conjugate_arms() {
        let cfg = config(0.0);
        let pump = PumpQuadrature::for_config(&cfg).unwrap();
        let l1 = 770.0;
        let l2 = conjugate_wavelength(403.0, l1);
        let a = kernel(&cfg, &pump, Arm::Signal, l1).unwrap();
        let b = kernel(&cfg, &pump, Arm::Idler, l2).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn spectrum_is_normalized_and_has_positive_width() {
        let s = arm_spectra(&config(0.0), 30.0, 0.05).unwrap();
        for spec in [&s.signal, &s.idler] {
            assert!(spec.density.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(spec.fwhm_nm > 0.0);
        }
        assert!((s.signal.center_nm - 765.0).abs() < 0.5);
    }

    // Widths from an independent dense-grid (0.005 nm) NumPy evaluation of
    // the same kernel; agreement is limited by that grid.
    #[test]
    fn widths_match_dense_grid_oracle() {
        let cw = arm_spectra(&config(0.0), 30.0, 0.05).unwrap();
        assert!(
            (cw.signal.fwhm_nm - 5.94).abs() < 0.02,
            "{}",
            cw.signal.fwhm_nm
        );
        assert!(
            (cw.idler.fwhm_nm - 7.36).abs() < 0.02,
            "{}",
            cw.idler.fwhm_nm
        );
        let bb = arm_spectra(&config(0.5), 30.0, 0.05).unwrap();
        assert!(
            (bb.signal.fwhm_nm - 21.645).abs() < 0.02,
            "{}",
            bb.signal.fwhm_nm
        );
        assert!(
            (bb.idler.fwhm_nm - 24.24).abs() < 0.02,
            "{}",
            bb.idler.fwhm_nm
        );
    }

    #[test]
    fn longer_crystal_narrows_and_pump_bandwidth_broadens() {
        let narrow = arm_spectra(&config(0.0), 30.0, 0.05).unwrap();
        let long = arm_spectra(&config(0.0).with_length(31.52), 30.0, 0.05).unwrap();
        let broad = arm_spectra(&config(0.5), 30.0, 0.05).unwrap();
        assert!(long.signal.fwhm_nm < narrow.signal.fwhm_nm);
        assert!(broad.signal.fwhm_nm >= narrow.signal.fwhm_nm);
        assert!(broad.idler.fwhm_nm >= narrow.idler.fwhm_nm);
    }

    #[test]
    fn coarse_grid_is_a_resolution_error() {
        let cfg = config(0.0);
        let grid = WavelengthGrid::centered(765.0, 40.0, 2.0);
        assert!(matches!(
            spectral_density(&cfg, Arm::Signal, grid),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn scan_rejects_repeated_lengths_and_short_lists() {
        let cfg = config(0.0);
        assert_eq!(
            bandwidth_scan(&cfg, &[5.0, 5.0, 5.0]),
            Err(Error::DegenerateFit)
        );
        assert!(matches!(
            bandwidth_scan(&cfg, &[1.0, 2.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn csv_has_header() {
        let s = arm_spectra(&config(0.0), 30.0, 0.05).unwrap();
        let csv = s.signal.to_csv();
        assert!(csv.starts_with("lambda_nm,density\n"));
        assert_eq!(csv.lines().count(), s.signal.wavelengths_nm.len() + 1);
    }
}
