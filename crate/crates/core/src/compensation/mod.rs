//! Relative phase between the two emission processes of the two-crystal
//! source, and its flattening with birefringent compensators.
//!
//! The phase is that of the |VV⟩ process (pair born in the second crystal)
//! relative to the |HH⟩ process (pair born in the first crystal):
//!
//! ```text
//! φ = 2π { Σ_pump s·Δn(λp)·d/λp
//!        + L·[n_o(λp)/λp − n(θ,λ1)/λ1 − n(θ,λ2)/λ2]
//!        + Σ_pair s·[Δn(λ1)/λ1 + Δn(λ2)/λ2]·d }
//! ```
//!
//! The |VV⟩ pump travels the first crystal as an ordinary wave, while the
//! |HH⟩ pair crosses the second crystal as extraordinary waves at the cut
//! angle. Phase accumulated between creation point and exit is identical for
//! both processes at phase matching and drops out. Compensators are cut at
//! 90°, so Δn = n_e − n_o applies directly and there is no walk-off.

mod optimize;
mod phasemap;
mod visibility;

pub use optimize::{
    optimize_compensators, phase_gradient, CompensatorSolution, GRADIENT_CHECK_STEP_NM,
    GRADIENT_STEP_NM,
};
pub use phasemap::{phase_map, CenteredGrid, PhaseMap, SpectralWindow};
pub use visibility::{
    coherent_average, predict_visibility, JointSpectrum, DEFAULT_VISIBILITY_NODES,
};

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::optics::{refractive_index, Material, Polarization};
use crate::phasematch::{conjugate_wavelength, PhaseMatchConfig, NM_PER_MM};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    PumpPath,
    PairPath,
    DownconversionCrystal1,
    DownconversionCrystal2,
}

/// Plane containing the optic axis of an element, relative to the lab H/V
/// polarization basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisOrientation {
    #[serde(alias = "horizontalplane")]
    Horizontal,
    #[serde(alias = "verticalplane")]
    Vertical,
}

impl AxisOrientation {
    pub fn flipped(self) -> Self {
        match self {
            Self::Horizontal => Self::Vertical,
            Self::Vertical => Self::Horizontal,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackElement {
    pub material: Material,
    pub thickness_mm: f64,
    pub segment: Segment,
    pub axis: AxisOrientation,
}

impl StackElement {
    /// Sign with which the element's birefringence enters φ.
    ///
    /// On the pump path the |VV⟩ process uses H pump light, so an axis in
    /// the horizontal plane retards it: +1. On the pair path the |VV⟩
    /// photons are V polarized and the horizontal axis retards the |HH⟩
    /// photons instead: −1.
    pub fn orientation_sign(&self) -> f64 {
        orientation_sign(self.segment, self.axis)
    }
}

pub fn orientation_sign(segment: Segment, axis: AxisOrientation) -> f64 {
    match (segment, axis) {
        (Segment::PumpPath, AxisOrientation::Horizontal)
        | (Segment::PairPath, AxisOrientation::Vertical) => 1.0,
        (Segment::PumpPath, AxisOrientation::Vertical)
        | (Segment::PairPath, AxisOrientation::Horizontal) => -1.0,
        // Crystal elements enter through the dedicated BBO term.
        _ => 0.0,
    }
}

pub fn axis_for_sign(segment: Segment, sign: f64) -> AxisOrientation {
    if orientation_sign(segment, AxisOrientation::Horizontal) == sign.signum() {
        AxisOrientation::Horizontal
    } else {
        AxisOrientation::Vertical
    }
}

/// Ordered birefringent elements of the source plus the phase-matching
/// configuration of the down-conversion crystals.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalStack {
    pub config: PhaseMatchConfig,
    pub elements: Vec<StackElement>,
    /// Index of the pump-path compensator whose thickness d_p is solved for.
    pub pump_compensator: Option<usize>,
    /// Index of the pair-path compensator whose thickness d_c is solved for.
    pub pair_compensator: Option<usize>,
    /// Orientations that are fixed by the user rather than chosen by the
    /// optimizer.
    pub fixed_axes: [Option<AxisOrientation>; 2],
}

impl OpticalStack {
    /// Two crystals plus zero-thickness pump and pair compensators of the
    /// given material, both designated as unknowns.
    pub fn two_crystal(config: PhaseMatchConfig, compensator: Material) -> Self {
        let crystal = |segment, axis| StackElement {
            material: config.material.clone(),
            thickness_mm: config.length_mm,
            segment,
            axis,
        };
        let comp = |segment| StackElement {
            material: compensator.clone(),
            thickness_mm: 0.0,
            segment,
            axis: axis_for_sign(segment, 1.0),
        };
        let elements = vec![
            comp(Segment::PumpPath),
            crystal(Segment::DownconversionCrystal1, AxisOrientation::Vertical),
            crystal(Segment::DownconversionCrystal2, AxisOrientation::Horizontal),
            comp(Segment::PairPath),
        ];
        Self {
            config,
            elements,
            pump_compensator: Some(0),
            pair_compensator: Some(3),
            fixed_axes: [None, None],
        }
    }

    /// Copy with the two designated compensators set to the given thickness
    /// and orientation.
    pub fn with_compensators(
        &self,
        pump: (f64, AxisOrientation),
        pair: (f64, AxisOrientation),
    ) -> Result<Self> {
        let mut out = self.clone();
        for (slot, (d, axis)) in [(self.pump_compensator, pump), (self.pair_compensator, pair)] {
            let idx = slot
                .ok_or_else(|| Error::InvalidStack("stack has no designated compensator".into()))?;
            out.elements[idx].thickness_mm = d;
            out.elements[idx].axis = axis;
        }
        Ok(out)
    }

    pub fn push(&mut self, element: StackElement) {
        self.elements.push(element);
    }

    /// Checks the crystal pair and element thicknesses; returns the crystal
    /// length.
    pub fn validate(&self) -> Result<f64> {
        let find = |seg| {
            let hits: Vec<&StackElement> =
                self.elements.iter().filter(|e| e.segment == seg).collect();
            match hits.as_slice() {
                [one] => Ok(*one),
                _ => Err(Error::InvalidStack(format!(
                    "expected exactly one {seg:?} element, found {}",
                    hits.len()
                ))),
            }
        };
        let c1 = find(Segment::DownconversionCrystal1)?;
        let c2 = find(Segment::DownconversionCrystal2)?;
        if c1.thickness_mm != c2.thickness_mm || c1.material.name != c2.material.name {
            return Err(Error::InvalidStack(
                "down-conversion crystals differ in material or thickness".into(),
            ));
        }
        if let Some(e) = self.elements.iter().find(|e| !(e.thickness_mm >= 0.0)) {
            return Err(Error::InvalidStack(format!(
                "negative thickness {} mm on {:?}",
                e.thickness_mm, e.segment
            )));
        }
        for slot in [self.pump_compensator, self.pair_compensator]
            .into_iter()
            .flatten()
        {
            if slot >= self.elements.len() {
                return Err(Error::InvalidStack(
                    "compensator index out of bounds".into(),
                ));
            }
        }
        Ok(c1.thickness_mm)
    }

    pub fn crystal_length_mm(&self) -> Result<f64> {
        self.validate()
    }
}

/// Relative phase φ(λp, λ1) in radians. See the module docs for the model.
pub fn relative_phase(stack: &OpticalStack, pump_nm: f64, signal_nm: f64) -> Result<f64> {
    let length = stack.validate()?;
    if !(signal_nm > pump_nm) {
        return Err(Error::InvalidInput(format!(
            "signal {signal_nm} nm must be longer than pump {pump_nm} nm"
        )));
    }
    let idler_nm = conjugate_wavelength(pump_nm, signal_nm);
    let crystal = &stack.config.material;
    let at_cut = Polarization::ExtraordinaryAtAngle(stack.config.theta_deg);

    let mut optical = 0.0; // optical path difference over wavelength, mm/nm
    if length > 0.0 {
        let pump_o = crystal.n_o(pump_nm)? / pump_nm;
        let pair_e = refractive_index(crystal, at_cut, signal_nm)? / signal_nm
            + refractive_index(crystal, at_cut, idler_nm)? / idler_nm;
        optical += length * (pump_o - pair_e);
    }
    for el in &stack.elements {
        if el.thickness_mm == 0.0 {
            continue;
        }
        let s = el.orientation_sign();
        match el.segment {
            Segment::PumpPath => {
                optical += s * el.thickness_mm * el.material.birefringence(pump_nm)? / pump_nm;
            }
            Segment::PairPath => {
                let m = &el.material;
                let per =
                    m.birefringence(signal_nm)? / signal_nm + m.birefringence(idler_nm)? / idler_nm;
                optical += s * el.thickness_mm * per;
            }
            _ => {}
        }
    }
    Ok(TAU * NM_PER_MM * optical)
}
