//! Collinear type-I phase matching (extraordinary pump, ordinary pair in a
//! negative uniaxial crystal) and the down-conversion spectra it implies.

mod spectrum;

pub use spectrum::{
    arm_spectra, bandwidth_scan, spectral_density, Arm, ArmSpectra, BandwidthScan, PumpQuadrature,
    ScanPoint, Spectrum, WavelengthGrid, MIN_POINTS_ABOVE_HALF_MAX, PUMP_QUADRATURE_INTERVALS,
    PUMP_QUADRATURE_SPAN_FWHM,
};

use std::f64::consts::TAU;

use serde::Serialize;

use crate::numeric::{refine_root, scan_brackets};
use crate::optics::{refractive_index, Material, Polarization};
use crate::{Error, Result};

/// nm per mm.
pub(crate) const NM_PER_MM: f64 = 1e6;

/// Step of the uniform bracket scan over the signal wavelength.
pub const BRACKET_STEP_NM: f64 = 0.5;

/// Convergence tolerance on the signal wavelength.
pub const ROOT_TOL_NM: f64 = 1e-9;

/// Crystal, cut and pump description for one down-conversion crystal.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMatchConfig {
    pub material: Material,
    /// Internal angle between pump wave vector and optic axis, degrees.
    pub theta_deg: f64,
    pub length_mm: f64,
    pub pump_nm: f64,
    /// Pump FWHM; 0 means monochromatic.
    pub pump_fwhm_nm: f64,
}

impl PhaseMatchConfig {
    pub fn new(
        material: Material,
        theta_deg: f64,
        length_mm: f64,
        pump_nm: f64,
        pump_fwhm_nm: f64,
    ) -> Result<Self> {
        let cfg = Self {
            material,
            theta_deg,
            length_mm,
            pump_nm,
            pump_fwhm_nm,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_mm > 0.0) {
            return Err(Error::InvalidInput(format!(
                "crystal length must be positive, got {} mm",
                self.length_mm
            )));
        }
        if !(self.pump_fwhm_nm >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "pump bandwidth must be >= 0, got {} nm",
                self.pump_fwhm_nm
            )));
        }
        if !(self.pump_nm > 0.0) {
            return Err(Error::InvalidInput(
                "pump wavelength must be positive".into(),
            ));
        }
        Polarization::ExtraordinaryAtAngle(self.theta_deg).validate()?;
        Ok(())
    }

    pub fn with_theta(&self, theta_deg: f64) -> Self {
        Self {
            theta_deg,
            ..self.clone()
        }
    }

    pub fn with_length(&self, length_mm: f64) -> Self {
        Self {
            length_mm,
            ..self.clone()
        }
    }

    pub fn with_pump_fwhm(&self, pump_fwhm_nm: f64) -> Self {
        Self {
            pump_fwhm_nm,
            ..self.clone()
        }
    }
}

/// Energy-conserving partner wavelength: 1/λ2 = 1/λp − 1/λ1.
pub fn conjugate_wavelength(pump_nm: f64, signal_nm: f64) -> f64 {
    (pump_nm.recip() - signal_nm.recip()).recip()
}

/// Collinear phase mismatch in rad/mm,
/// Δk = 2π·[n(θ, λp)/λp − n_o(λ1)/λ1 − n_o(λ2)/λ2].
pub fn delta_k(config: &PhaseMatchConfig, pump_nm: f64, signal_nm: f64) -> Result<f64> {
    delta_k_at(&config.material, config.theta_deg, pump_nm, signal_nm)
}

fn delta_k_at(material: &Material, theta_deg: f64, pump_nm: f64, signal_nm: f64) -> Result<f64> {
    if !(signal_nm > pump_nm) {
        return Err(Error::InvalidInput(format!(
            "signal {signal_nm} nm must be longer than pump {pump_nm} nm"
        )));
    }
    let idler_nm = conjugate_wavelength(pump_nm, signal_nm);
    let np = refractive_index(
        material,
        Polarization::ExtraordinaryAtAngle(theta_deg),
        pump_nm,
    )?;
    let n1 = material.n_o(signal_nm)?;
    let n2 = material.n_o(idler_nm)?;
    Ok(TAU * (np / pump_nm - n1 / signal_nm - n2 / idler_nm) * NM_PER_MM)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairSolution {
    /// Shorter wavelength of the pair.
    pub signal_nm: f64,
    /// Longer wavelength of the pair.
    pub idler_nm: f64,
    /// Δk at the solution, rad/mm.
    pub residual_per_mm: f64,
    pub degenerate: bool,
}

/// Smallest signal wavelength whose idler stays inside the ordinary-index
/// validity range.
fn signal_scan_floor(material: &Material, pump_nm: f64) -> f64 {
    let [lo, hi] = material.ordinary.range_nm;
    let from_idler = conjugate_wavelength(pump_nm, hi);
    // Nudge inward so the conjugate lands strictly inside the range.
    (from_idler * (1.0 + 1e-12))
        .max(lo)
        .max(pump_nm * (1.0 + 1e-9))
}

/// Solves Δk(λ1) = 0 on (λp, 2λp]: uniform bracket scan, then bisection and
/// secant refinement. Returns the non-degenerate root nearest degeneracy.
pub fn solve_signal_idler(config: &PhaseMatchConfig) -> Result<PairSolution> {
    config.validate()?;
    let pump = config.pump_nm;
    let degenerate_nm = 2.0 * pump;
    let floor = signal_scan_floor(&config.material, pump);
    if floor >= degenerate_nm {
        return Err(Error::InvalidInput(format!(
            "material range of {} cannot hold a pair for pump {pump} nm",
            config.material.name
        )));
    }
    let f = |l1: f64| delta_k(config, pump, l1);

    let at_degeneracy = f(degenerate_nm)?;
    let brackets = scan_brackets(f, floor, degenerate_nm, BRACKET_STEP_NM)?;
    let bracket = brackets
        .iter()
        .rev()
        .find(|(_, b)| *b <= degenerate_nm)
        .copied();

    let no_match = || Error::NoPhaseMatch {
        material: config.material.name.clone(),
        theta_deg: config.theta_deg,
        pump_nm: pump,
    };

    let signal_nm = match bracket {
        Some((a, b)) => refine_root(f, a, b, ROOT_TOL_NM)?,
        None if at_degeneracy.abs() < 1e-9 => degenerate_nm,
        None => return Err(no_match()),
    };
    let residual_per_mm = f(signal_nm)?;
    let degenerate = (degenerate_nm - signal_nm).abs() < 1e-6;
    Ok(PairSolution {
        signal_nm,
        idler_nm: conjugate_wavelength(pump, signal_nm),
        residual_per_mm,
        degenerate,
    })
}

/// Internal angle (degrees) at which the collinear signal lands on
/// `signal_target_nm`.
pub fn solve_angle(material: &Material, pump_nm: f64, signal_target_nm: f64) -> Result<f64> {
    if !(signal_target_nm > pump_nm && signal_target_nm <= 2.0 * pump_nm) {
        return Err(Error::InvalidInput(format!(
            "signal target {signal_target_nm} nm outside ({pump_nm}, {}] nm",
            2.0 * pump_nm
        )));
    }
    let f = |theta: f64| delta_k_at(material, theta, pump_nm, signal_target_nm);
    let brackets = scan_brackets(f, 1e-6, 90.0 - 1e-6, 0.5)?;
    let (a, b) = brackets
        .first()
        .copied()
        .ok_or_else(|| Error::NoPhaseMatch {
            material: material.name.clone(),
            theta_deg: f64::NAN,
            pump_nm,
        })?;
    refine_root(f, a, b, 1e-11)
}
