use rayon::prelude::*;

use super::{relative_phase, OpticalStack, SpectralWindow};
use crate::numeric::simpson_weights;
use crate::phasematch::{delta_k, PhaseMatchConfig};
use crate::{Error, Result};

/// Simpson nodes per axis for visibility quadrature.
pub const DEFAULT_VISIBILITY_NODES: usize = 201;

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_4;

/// Joint spectral weight g(λp)·sinc²(ΔkL/2) on a window, already multiplied
/// by the 2-D Simpson weights.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectrum {
    pub pump_nm: Vec<f64>,
    pub signal_nm: Vec<f64>,
    /// Row-major, pump-major.
    pub weights: Vec<f64>,
}

fn axis(center: f64, half: f64, nodes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if half == 0.0 {
        return Ok((vec![center], vec![1.0]));
    }
    let step = 2.0 * half / (nodes - 1) as f64;
    let w = simpson_weights(nodes, step)?;
    let mid = (nodes / 2) as f64;
    Ok((
        (0..nodes)
            .map(|i| center + (i as f64 - mid) * step)
            .collect(),
        w,
    ))
}

impl JointSpectrum {
    pub fn new(config: &PhaseMatchConfig, window: &SpectralWindow, nodes: usize) -> Result<Self> {
        let (pump_nm, wp) = axis(window.pump_center_nm, window.pump_half_width_nm, nodes)?;
        let (signal_nm, ws) = axis(window.signal_center_nm, window.signal_half_width_nm, nodes)?;
        if window.signal_half_width_nm == 0.0 {
            return Err(Error::InvalidInput("signal window has zero width".into()));
        }
        let sigma = config.pump_fwhm_nm / FWHM_PER_SIGMA;
        let half_len = 0.5 * config.length_mm;
        let ns = signal_nm.len();
        let weights = (0..pump_nm.len() * ns)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / ns, k % ns);
                let lp = pump_nm[i];
                let g = if sigma > 0.0 {
                    (-0.5 * ((lp - config.pump_nm) / sigma).powi(2)).exp()
                } else {
                    1.0
                };
                let x = delta_k(config, lp, signal_nm[j])? * half_len;
                let sinc2 = if x == 0.0 { 1.0 } else { (x.sin() / x).powi(2) };
                Ok(wp[i] * ws[j] * g * sinc2)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            pump_nm,
            signal_nm,
            weights,
        })
    }
}

/// |Σ w·e^{iφ}| / Σ w for non-negative weights.
pub fn coherent_average(weights: &[f64], phases: &[f64]) -> Result<f64> {
    if weights.len() != phases.len() {
        return Err(Error::InvalidInput(
            "weights and phases differ in length".into(),
        ));
    }
    if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidInput(
            "spectral weight must be non-negative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeight);
    }
    let (mut re, mut im) = (0.0, 0.0);
    for (w, p) in weights.iter().zip(phases) {
        let (s, c) = p.sin_cos();
        re += w * c;
        im += w * s;
    }
    Ok((re.hypot(im) / total).min(1.0))
}

/// Spectrally averaged two-process coherence V = |∬S·e^{iφ}| / ∬S.
pub fn predict_visibility(
    stack: &OpticalStack,
    window: &SpectralWindow,
    nodes: usize,
) -> Result<f64> {
    let joint = JointSpectrum::new(&stack.config, window, nodes)?;
    let ns = joint.signal_nm.len();
    let phases = (0..joint.weights.len())
        .into_par_iter()
        .map(|k| relative_phase(stack, joint.pump_nm[k / ns], joint.signal_nm[k % ns]))
        .collect::<Result<Vec<_>>>()?;
    coherent_average(&joint.weights, &phases)
}
