use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sellmeier::SellmeierForm;
use crate::{Error, Result};

/// Number of wavelengths at which the uniaxial sign and n² > 1 are checked
/// when a material is loaded.
pub const VALIDATION_SAMPLES: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UniaxialSign {
    /// n_e < n_o (BBO).
    Negative,
    /// n_e > n_o (YVO₄).
    Positive,
}

/// Uniaxial crystal with Sellmeier data for both principal indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub name: String,
    pub sign: UniaxialSign,
    pub source: String,
    #[serde(rename = "o")]
    pub ordinary: SellmeierForm,
    #[serde(rename = "e")]
    pub extraordinary: SellmeierForm,
}

impl Material {
    /// Wavelength interval on which both principal indices are valid.
    pub fn valid_range_nm(&self) -> [f64; 2] {
        let o = self.ordinary.range_nm;
        let e = self.extraordinary.range_nm;
        [o[0].max(e[0]), o[1].min(e[1])]
    }

    pub(crate) fn check_range(&self, form: &SellmeierForm, wavelength_nm: f64) -> Result<()> {
        if form.contains(wavelength_nm) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                material: self.name.clone(),
                wavelength_nm,
                min_nm: form.range_nm[0],
                max_nm: form.range_nm[1],
            })
        }
    }

    pub fn n_o(&self, wavelength_nm: f64) -> Result<f64> {
        self.check_range(&self.ordinary, wavelength_nm)?;
        Ok(self.ordinary.index_nm(wavelength_nm))
    }

    pub fn n_e(&self, wavelength_nm: f64) -> Result<f64> {
        self.check_range(&self.extraordinary, wavelength_nm)?;
        Ok(self.extraordinary.index_nm(wavelength_nm))
    }

    /// Principal birefringence n_e − n_o.
    pub fn birefringence(&self, wavelength_nm: f64) -> Result<f64> {
        Ok(self.n_e(wavelength_nm)? - self.n_o(wavelength_nm)?)
    }

    /// Checks n² > 1 and the uniaxial sign at evenly spaced wavelengths
    /// across the valid range.
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.valid_range_nm();
        if !(lo < hi) {
            return Err(Error::InvalidMaterial(format!(
                "{}: empty validity range",
                self.name
            )));
        }
        let last = (VALIDATION_SAMPLES - 1) as f64;
        for i in 0..VALIDATION_SAMPLES {
            let nm = lo + (hi - lo) * i as f64 / last;
            let um = nm * 1e-3;
            let no2 = self.ordinary.n_squared_um(um);
            let ne2 = self.extraordinary.n_squared_um(um);
            if !(no2 > 1.0 && ne2 > 1.0) {
                return Err(Error::InvalidMaterial(format!(
                    "{}: n^2 <= 1 at {nm} nm",
                    self.name
                )));
            }
            let ok = match self.sign {
                UniaxialSign::Negative => ne2 < no2,
                UniaxialSign::Positive => ne2 > no2,
            };
            if !ok {
                return Err(Error::InvalidMaterial(format!(
                    "{}: principal indices contradict {:?} sign at {nm} nm",
                    self.name, self.sign
                )));
            }
        }
        Ok(())
    }
}

/// Versioned collection of materials, loaded from the JSON data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialLibrary {
    pub version: String,
    pub materials: Vec<Material>,
}

impl MaterialLibrary {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let lib: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidMaterial(format!("materials file: {e}")))?;
        for m in &lib.materials {
            m.validate()?;
        }
        Ok(lib)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidMaterial(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// The data file shipped with the repository.
    pub fn builtin() -> Self {
        Self::from_json_str(include_str!("../../../../data/materials.json"))
            .expect("shipped materials file is valid")
    }

    pub fn get(&self, name: &str) -> Result<&Material> {
        self.materials
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::UnknownMaterial(name.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_library_loads_and_validates() {
        let lib = MaterialLibrary::builtin();
        assert_eq!(lib.get("BBO").unwrap().sign, UniaxialSign::Negative);
        assert_eq!(lib.get("YVO4").unwrap().sign, UniaxialSign::Positive);
        assert!(matches!(lib.get("KTP"), Err(Error::UnknownMaterial(_))));
    }

    #[test]
    fn wrong_sign_is_rejected() {
        let mut bbo = MaterialLibrary::builtin().get("BBO").unwrap().clone();
        bbo.sign = UniaxialSign::Positive;
        assert!(matches!(bbo.validate(), Err(Error::InvalidMaterial(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"version":"x","materials":[],"extra":1}"#;
        assert!(MaterialLibrary::from_json_str(text).is_err());
    }

    #[test]
    fn out_of_range_names_the_material() {
        let lib = MaterialLibrary::builtin();
        let err = lib.get("YVO4").unwrap().n_o(350.0).unwrap_err();
        assert!(err.to_string().contains("YVO4"), "{err}");
    }
}
