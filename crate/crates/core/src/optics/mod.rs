//! Dispersion of uniaxial crystals.
//!
//! Principal indices come from [`SellmeierForm`] data (micrometre
//! convention internally, nanometres at the API). The extraordinary index at
//! an internal angle θ between wave vector and optic axis follows
//! `1/n(θ)² = cos²θ/n_o² + sin²θ/n_e²`.

mod material;
mod sellmeier;

pub use material::{Material, MaterialLibrary, UniaxialSign, VALIDATION_SAMPLES};
pub use sellmeier::{Pole, PowerTerm, SellmeierForm};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default central-difference step for wavelength derivatives.
pub const DERIVATIVE_STEP_NM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Polarization {
    Ordinary,
    /// Extraordinary wave whose wave vector makes the given angle (degrees)
    /// with the optic axis.
    ExtraordinaryAtAngle(f64),
}

impl Polarization {
    pub fn validate(self) -> Result<Self> {
        if let Polarization::ExtraordinaryAtAngle(theta) = self {
            if !(0.0..=90.0).contains(&theta) {
                return Err(Error::InvalidInput(format!(
                    "propagation angle {theta} deg outside [0, 90]"
                )));
            }
        }
        Ok(self)
    }
}

/// Refractive index seen by a wave of the given polarization.
pub fn refractive_index(material: &Material, pol: Polarization, wavelength_nm: f64) -> Result<f64> {
    match pol.validate()? {
        Polarization::Ordinary => material.n_o(wavelength_nm),
        Polarization::ExtraordinaryAtAngle(theta) => {
            let no = material.n_o(wavelength_nm)?;
            let ne = material.n_e(wavelength_nm)?;
            Ok(angle_index(no, ne, theta.to_radians()))
        }
    }
}

fn angle_index(no: f64, ne: f64, theta: f64) -> f64 {
    // Endpoints are returned exactly so n(0) = n_o and n(90°) = n_e bitwise.
    if theta == 0.0 {
        return no;
    }
    if theta == std::f64::consts::FRAC_PI_2 {
        return ne;
    }
    let (s, c) = theta.sin_cos();
    (c * c / (no * no) + s * s / (ne * ne)).sqrt().recip()
}

/// dn/dλ (nm⁻¹) by central difference with [`DERIVATIVE_STEP_NM`].
pub fn index_derivative(material: &Material, pol: Polarization, wavelength_nm: f64) -> Result<f64> {
    index_derivative_with_step(material, pol, wavelength_nm, DERIVATIVE_STEP_NM)
}

pub fn index_derivative_with_step(
    material: &Material,
    pol: Polarization,
    wavelength_nm: f64,
    step_nm: f64,
) -> Result<f64> {
    let up = refractive_index(material, pol, wavelength_nm + step_nm)?;
    let down = refractive_index(material, pol, wavelength_nm - step_nm)?;
    Ok((up - down) / (2.0 * step_nm))
}

/// dn/dλ (nm⁻¹) from the differentiated Sellmeier form.
pub fn index_derivative_analytic(
    material: &Material,
    pol: Polarization,
    wavelength_nm: f64,
) -> Result<f64> {
    match pol.validate()? {
        Polarization::Ordinary => {
            material.n_o(wavelength_nm)?;
            Ok(material.ordinary.index_slope_nm(wavelength_nm))
        }
        Polarization::ExtraordinaryAtAngle(theta) => {
            let no = material.n_o(wavelength_nm)?;
            let ne = material.n_e(wavelength_nm)?;
            let dno = material.ordinary.index_slope_nm(wavelength_nm);
            let dne = material.extraordinary.index_slope_nm(wavelength_nm);
            let (s, c) = theta.to_radians().sin_cos();
            let n = angle_index(no, ne, theta.to_radians());
            Ok(n.powi(3) * (c * c * dno / no.powi(3) + s * s * dne / ne.powi(3)))
        }
    }
}

/// Group index n − λ·dn/dλ.
pub fn group_index(material: &Material, pol: Polarization, wavelength_nm: f64) -> Result<f64> {
    let n = refractive_index(material, pol, wavelength_nm)?;
    let slope = index_derivative(material, pol, wavelength_nm)?;
    Ok(n - wavelength_nm * slope)
}

/// Walk-off angle (radians) of an extraordinary wave at internal angle
/// `theta_deg`: ρ = arctan[(n_o/n_e)² tanθ] − θ. Positive for negative
/// uniaxial crystals (Poynting vector tilted away from the optic axis),
/// negative for positive uniaxial ones.
pub fn walkoff_angle(material: &Material, theta_deg: f64, wavelength_nm: f64) -> Result<f64> {
    Polarization::ExtraordinaryAtAngle(theta_deg).validate()?;
    let no = material.n_o(wavelength_nm)?;
    let ne = material.n_e(wavelength_nm)?;
    if theta_deg == 0.0 || theta_deg == 90.0 {
        return Ok(0.0);
    }
    let theta = theta_deg.to_radians();
    Ok(((no / ne).powi(2) * theta.tan()).atan() - theta)
}

/// Transverse offset (mm) accumulated over `length_mm` at walk-off `rho`.
pub fn lateral_displacement(rho: f64, length_mm: f64) -> f64 {
    length_mm * rho.tan()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bbo() -> Material {
        MaterialLibrary::builtin().get("BBO").unwrap().clone()
    }

    fn yvo4() -> Material {
        MaterialLibrary::builtin().get("YVO4").unwrap().clone()
    }

    // Direct evaluation of the shipped Kato (1986) coefficients, kept apart
    // from the SellmeierForm code path.
    fn kato_no(nm: f64) -> f64 {
        let l2 = (nm / 1000.0).powi(2);
        (2.7359 + 0.01878 / (l2 - 0.01822) - 0.01354 * l2).sqrt()
    }

    #[test]
    fn angle_endpoints_reduce_to_principal_indices() {
        let m = bbo();
        let n0 = refractive_index(&m, Polarization::ExtraordinaryAtAngle(0.0), 800.0).unwrap();
        let n90 = refractive_index(&m, Polarization::ExtraordinaryAtAngle(90.0), 800.0).unwrap();
        assert_eq!(n0, m.n_o(800.0).unwrap());
        assert_eq!(n90, m.n_e(800.0).unwrap());
    }

    #[test]
    fn bbo_ordinary_at_pump_golden() {
        let n = refractive_index(&bbo(), Polarization::Ordinary, 403.0).unwrap();
        assert!((1.68..=1.70).contains(&n));
        // 40-digit evaluation of the coefficient set.
        assert!((n - 1.692_319_916_948_409).abs() < 1e-13, "{n}");
        assert!((n - kato_no(403.0)).abs() < 1e-14);
    }

    #[test]
    fn derivative_sign_and_agreement() {
        let m = bbo();
        let fd = index_derivative(&m, Polarization::Ordinary, 800.0).unwrap();
        let an = index_derivative_analytic(&m, Polarization::Ordinary, 800.0).unwrap();
        assert!(fd < 0.0);
        assert!(((fd - an) / an).abs() < 1e-6, "{fd} {an}");
        assert!((an - -2.992_546_145_965_776e-5).abs() < 1e-15);
        let half = index_derivative_with_step(&m, Polarization::Ordinary, 800.0, 0.05).unwrap();
        assert!((half - fd).abs() < 1e-9);
    }

    #[test]
    fn extraordinary_derivative_agrees_with_analytic() {
        let m = bbo();
        for theta in [10.0, 29.0, 63.0] {
            let pol = Polarization::ExtraordinaryAtAngle(theta);
            let fd = index_derivative(&m, pol, 650.0).unwrap();
            let an = index_derivative_analytic(&m, pol, 650.0).unwrap();
            assert!(((fd - an) / an).abs() < 1e-6);
        }
    }

    #[test]
    fn group_index_properties() {
        let m = bbo();
        let n = m.n_o(800.0).unwrap();
        let ng800 = group_index(&m, Polarization::Ordinary, 800.0).unwrap();
        let ng403 = group_index(&m, Polarization::Ordinary, 403.0).unwrap();
        assert!(ng800 >= n);
        assert!(ng403 > ng800);
        // Goldens at the mandated 0.1 nm central-difference step.
        assert!((ng403 - 1.780_307_336_092_508).abs() < 1e-10, "{ng403}");
        assert!((ng800 - 1.684_493_894_679_919).abs() < 1e-10, "{ng800}");
        let ng_yvo = group_index(&yvo4(), Polarization::Ordinary, 403.0).unwrap();
        assert!((ng_yvo - 2.502_085_517_973_604).abs() < 1e-10, "{ng_yvo}");
        // Exact derivative differs from the stencil by its truncation error only.
        let exact = n403_exact(&m);
        assert!((exact - 1.780_307_321_506_488).abs() < 1e-12, "{exact}");
        assert!((ng403 - exact).abs() < 1e-7);
    }

    fn n403_exact(m: &Material) -> f64 {
        let pol = Polarization::Ordinary;
        refractive_index(m, pol, 403.0).unwrap()
            - 403.0 * index_derivative_analytic(m, pol, 403.0).unwrap()
    }

    #[test]
    fn walkoff_vanishes_on_axes_and_matches_golden() {
        let m = bbo();
        assert_eq!(walkoff_angle(&m, 0.0, 800.0).unwrap(), 0.0);
        assert_eq!(walkoff_angle(&m, 90.0, 800.0).unwrap(), 0.0);
        let rho = walkoff_angle(&m, 29.0, 800.0).unwrap();
        assert!((rho - 0.063_739_454_068_094).abs() < 1e-12);
        let d = lateral_displacement(rho, 15.76);
        assert!((d - 1.005_896_389_669_36).abs() < 1e-10, "{d}");
        let yvo = walkoff_angle(&yvo4(), 45.0, 800.0).unwrap();
        assert!(yvo < 0.0);
    }

    #[test]
    fn angle_outside_quadrant_is_rejected() {
        let err = refractive_index(&bbo(), Polarization::ExtraordinaryAtAngle(95.0), 800.0);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn derivative_near_range_edge_is_range_error() {
        let m = yvo4();
        assert!(matches!(
            index_derivative(&m, Polarization::Ordinary, 400.05),
            Err(Error::OutOfRange { .. })
        ));
    }
}
