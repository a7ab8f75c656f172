use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::{phase_gradient, relative_phase, OpticalStack, GRADIENT_STEP_NM};
use crate::phasematch::PhaseMatchConfig;
use crate::{Error, Result};

/// Odd number of equally spaced nodes centred on `center_nm`. The middle
/// node equals the centre exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CenteredGrid {
    pub center_nm: f64,
    pub half_width_nm: f64,
    pub count: usize,
}

impl CenteredGrid {
    pub fn new(center_nm: f64, half_width_nm: f64, count: usize) -> Result<Self> {
        if count.is_multiple_of(2) || !(half_width_nm >= 0.0) || (count > 1 && half_width_nm == 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "centered grid needs an odd count and positive half-width, got {count} / {half_width_nm}"
            )));
        }
        Ok(Self {
            center_nm,
            half_width_nm,
            count,
        })
    }

    pub fn step_nm(&self) -> f64 {
        if self.count == 1 {
            0.0
        } else {
            self.half_width_nm / (self.count / 2) as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        let mid = (self.count / 2) as f64;
        let step = self.step_nm();
        (0..self.count)
            .map(|i| self.center_nm + (i as f64 - mid) * step)
            .collect()
    }

    fn covers(&self, center: f64, half: f64) -> bool {
        let tol = 1e-9 * self.center_nm.abs().max(1.0);
        center - half >= self.center_nm - self.half_width_nm - tol
            && center + half <= self.center_nm + self.half_width_nm + tol
    }
}

/// Rectangle in (λp, λ) over which flatness and visibility are judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralWindow {
    pub pump_center_nm: f64,
    pub pump_half_width_nm: f64,
    pub signal_center_nm: f64,
    pub signal_half_width_nm: f64,
}

impl SpectralWindow {
    /// Pump centre ± 1 pump FWHM, signal centre ± 0.52 signal FWHM.
    pub fn design(config: &PhaseMatchConfig, signal_center_nm: f64, signal_fwhm_nm: f64) -> Self {
        Self {
            pump_center_nm: config.pump_nm,
            pump_half_width_nm: config.pump_fwhm_nm,
            signal_center_nm,
            signal_half_width_nm: 0.52 * signal_fwhm_nm,
        }
    }

    fn contains(&self, pump_nm: f64, signal_nm: f64) -> bool {
        let tol = 1e-9;
        (pump_nm - self.pump_center_nm).abs() <= self.pump_half_width_nm + tol
            && (signal_nm - self.signal_center_nm).abs() <= self.signal_half_width_nm + tol
    }
}

/// Sampled φ(λp, λ) with the centre value subtracted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseMap {
    pub pump_nm: Vec<f64>,
    pub signal_nm: Vec<f64>,
    /// Row-major: `phi[i * signal_nm.len() + j]` is at (pump_nm[i], signal_nm[j]).
    pub phi: Vec<f64>,
    /// Suppressed global offset (φ at the grid centre before subtraction).
    pub offset_rad: f64,
    pub window: SpectralWindow,
    pub peak_to_peak_rad: f64,
    /// [∂φ/∂λp, ∂φ/∂λ] at the grid centre, rad/nm.
    pub center_gradient: [f64; 2],
}

impl PhaseMap {
    pub fn at(&self, pump_index: usize, signal_index: usize) -> f64 {
        self.phi[pump_index * self.signal_nm.len() + signal_index]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda_p_nm,lambda_nm,phi_rad\n");
        for (i, lp) in self.pump_nm.iter().enumerate() {
            for (j, l) in self.signal_nm.iter().enumerate() {
                writeln!(out, "{lp},{l},{}", self.at(i, j)).unwrap();
            }
        }
        out
    }
}

pub fn phase_map(
    stack: &OpticalStack,
    pump_grid: CenteredGrid,
    signal_grid: CenteredGrid,
    window: SpectralWindow,
) -> Result<PhaseMap> {
    if !pump_grid.covers(window.pump_center_nm, window.pump_half_width_nm)
        || !signal_grid.covers(window.signal_center_nm, window.signal_half_width_nm)
    {
        return Err(Error::InvalidInput(
            "spectral window extends beyond the map grids".into(),
        ));
    }
    let pump_nm = pump_grid.nodes();
    let signal_nm = signal_grid.nodes();
    let ns = signal_nm.len();

    let offset_rad = relative_phase(stack, pump_grid.center_nm, signal_grid.center_nm)?;
    let phi = (0..pump_nm.len() * ns)
        .into_par_iter()
        .map(|k| relative_phase(stack, pump_nm[k / ns], signal_nm[k % ns]).map(|v| v - offset_rad))
        .collect::<Result<Vec<_>>>()?;

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, v) in phi.iter().enumerate() {
        if window.contains(pump_nm[k / ns], signal_nm[k % ns]) {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if !lo.is_finite() {
        return Err(Error::InvalidInput(
            "no grid node inside the spectral window".into(),
        ));
    }
    let center_gradient = phase_gradient(
        stack,
        pump_grid.center_nm,
        signal_grid.center_nm,
        GRADIENT_STEP_NM,
    )?;
    Ok(PhaseMap {
        pump_nm,
        signal_nm,
        phi,
        offset_rad,
        window,
        peak_to_peak_rad: hi - lo,
        center_gradient,
    })
}
