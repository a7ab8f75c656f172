use serde::{Deserialize, Serialize};

/// Additional resonance term `B / (λ² − C)` (λ in µm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pole {
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

/// Additional polynomial term `coef · λ^exp` (λ in µm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTerm {
    pub coef: f64,
    pub exp: i32,
}

/// One principal index as `n²(λ) = A + B/(λ² − C) − D·λ² + Σ poles + Σ powers`
/// with λ in micrometres. The valid range is stored in nanometres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierForm {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub poles: Vec<Pole>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub powers: Vec<PowerTerm>,
    pub range_nm: [f64; 2],
}

impl SellmeierForm {
    pub fn new(a: f64, b: f64, c: f64, d: f64, range_nm: [f64; 2]) -> Self {
        Self {
            a,
            b,
            c,
            d,
            poles: Vec::new(),
            powers: Vec::new(),
            range_nm,
        }
    }

    pub fn contains(&self, wavelength_nm: f64) -> bool {
        wavelength_nm >= self.range_nm[0] && wavelength_nm <= self.range_nm[1]
    }

    /// n² at a wavelength in micrometres. No range check.
    pub fn n_squared_um(&self, um: f64) -> f64 {
        let l2 = um * um;
        let mut n2 = self.a + self.b / (l2 - self.c) - self.d * l2;
        for p in &self.poles {
            n2 += p.b / (l2 - p.c);
        }
        for t in &self.powers {
            n2 += t.coef * um.powi(t.exp);
        }
        n2
    }

    /// d(n²)/dλ in µm⁻¹. No range check.
    pub fn dn_squared_dum(&self, um: f64) -> f64 {
        let l2 = um * um;
        let mut d = -2.0 * um * self.b / (l2 - self.c).powi(2) - 2.0 * self.d * um;
        for p in &self.poles {
            d -= 2.0 * um * p.b / (l2 - p.c).powi(2);
        }
        for t in &self.powers {
            d += t.coef * f64::from(t.exp) * um.powi(t.exp - 1);
        }
        d
    }

    pub fn index_nm(&self, wavelength_nm: f64) -> f64 {
        self.n_squared_um(wavelength_nm * 1e-3).sqrt()
    }

    /// Analytic dn/dλ in nm⁻¹.
    pub fn index_slope_nm(&self, wavelength_nm: f64) -> f64 {
        let um = wavelength_nm * 1e-3;
        let n = self.n_squared_um(um).sqrt();
        self.dn_squared_dum(um) / (2.0 * n) * 1e-3
    }
}
