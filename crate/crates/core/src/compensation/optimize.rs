use serde::Serialize;

use super::{axis_for_sign, relative_phase, AxisOrientation, OpticalStack, Segment};
use crate::numeric::solve_2x2;
use crate::phasematch::solve_signal_idler;
use crate::{Error, Result};

/// Central-difference step for the flattening gradients.
pub const GRADIENT_STEP_NM: f64 = 0.05;
/// Independent step used to re-check the optimized gradients.
pub const GRADIENT_CHECK_STEP_NM: f64 = 0.025;

/// Thicknesses, orientations and residual slopes of the optimum
/// compensators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompensatorSolution {
    pub d_p_mm: f64,
    pub d_c_mm: f64,
    pub s_p: f64,
    pub s_c: f64,
    pub pump_axis: AxisOrientation,
    pub pair_axis: AxisOrientation,
    /// Phase gradients [∂φ/∂λp, ∂φ/∂λ] (rad/nm) of the compensated stack at
    /// the design step.
    pub residual_grad: [f64; 2],
    /// The same gradients at [`GRADIENT_CHECK_STEP_NM`].
    pub residual_grad_check: [f64; 2],
    /// Gradients of the stack before compensation.
    pub uncompensated_grad: [f64; 2],
    pub center_pump_nm: f64,
    pub center_signal_nm: f64,
    pub determinant: f64,
}

/// [∂φ/∂λp, ∂φ/∂λ1] at a point from the five-point central stencil
/// (truncation O(h⁴)), so the result barely depends on the step.
pub fn phase_gradient(
    stack: &OpticalStack,
    pump_nm: f64,
    signal_nm: f64,
    step_nm: f64,
) -> Result<[f64; 2]> {
    let central = |f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
        let h = step_nm;
        Ok((8.0 * (f(h)? - f(-h)?) - (f(2.0 * h)? - f(-2.0 * h)?)) / (12.0 * h))
    };
    let d_pump = central(&|dx| relative_phase(stack, pump_nm + dx, signal_nm))?;
    let d_signal = central(&|dx| relative_phase(stack, pump_nm, signal_nm + dx))?;
    Ok([d_pump, d_signal])
}

/// Zeroes both phase gradients at the spectral centre (pump centre and
/// phase-matched signal). Because φ is affine in the two thicknesses the
/// conditions form a 2×2 linear system; signs of its solution select the
/// compensator orientations.
pub fn optimize_compensators(stack: &OpticalStack) -> Result<CompensatorSolution> {
    stack.validate()?;
    let (pump_idx, pair_idx) = match (stack.pump_compensator, stack.pair_compensator) {
        (Some(p), Some(c)) => (p, c),
        _ => {
            return Err(Error::InvalidStack(
                "optimization needs designated pump and pair compensators".into(),
            ))
        }
    };
    let pair = solve_signal_idler(&stack.config)?;
    let (lp, l1) = (stack.config.pump_nm, pair.signal_nm);

    let unit = |dp: f64, dc: f64| {
        stack.with_compensators(
            (dp, axis_for_sign(Segment::PumpPath, 1.0)),
            (dc, axis_for_sign(Segment::PairPath, 1.0)),
        )
    };
    let g0 = phase_gradient(&unit(0.0, 0.0)?, lp, l1, GRADIENT_STEP_NM)?;
    let gp = phase_gradient(&unit(1.0, 0.0)?, lp, l1, GRADIENT_STEP_NM)?;
    let gc = phase_gradient(&unit(0.0, 1.0)?, lp, l1, GRADIENT_STEP_NM)?;
    let m = [
        [gp[0] - g0[0], gc[0] - g0[0]],
        [gp[1] - g0[1], gc[1] - g0[1]],
    ];
    let (solution, determinant) = solve_2x2(m, [-g0[0], -g0[1]]);
    let [x_p, x_c] = solution.ok_or(Error::SingularSystem { det: determinant })?;

    let sign = |x: f64| if x < 0.0 { -1.0 } else { 1.0 };
    let (s_p, s_c) = (sign(x_p), sign(x_c));
    let pump_axis = axis_for_sign(Segment::PumpPath, s_p);
    let pair_axis = axis_for_sign(Segment::PairPath, s_c);
    if let Some(fixed) = stack.fixed_axes[0] {
        if fixed != pump_axis && x_p != 0.0 {
            return Err(Error::NegativeThickness { which: "pump" });
        }
    }
    if let Some(fixed) = stack.fixed_axes[1] {
        if fixed != pair_axis && x_c != 0.0 {
            return Err(Error::NegativeThickness { which: "pair" });
        }
    }

    let compensated = stack.with_compensators((x_p.abs(), pump_axis), (x_c.abs(), pair_axis))?;
    debug_assert_eq!(compensated.elements[pump_idx].thickness_mm, x_p.abs());
    debug_assert_eq!(compensated.elements[pair_idx].thickness_mm, x_c.abs());
    let residual_grad = phase_gradient(&compensated, lp, l1, GRADIENT_STEP_NM)?;
    let residual_grad_check = phase_gradient(&compensated, lp, l1, GRADIENT_CHECK_STEP_NM)?;
    let uncompensated_grad = phase_gradient(stack, lp, l1, GRADIENT_STEP_NM)?;

    Ok(CompensatorSolution {
        d_p_mm: x_p.abs(),
        d_c_mm: x_c.abs(),
        s_p,
        s_c,
        pump_axis,
        pair_axis,
        residual_grad,
        residual_grad_check,
        uncompensated_grad,
        center_pump_nm: lp,
        center_signal_nm: l1,
        determinant,
    })
}

impl CompensatorSolution {
    /// The stack with these compensators installed.
    pub fn apply(&self, stack: &OpticalStack) -> Result<OpticalStack> {
        stack.with_compensators((self.d_p_mm, self.pump_axis), (self.d_c_mm, self.pair_axis))
    }
}
