//! Monte Carlo model of the polarization-correlation experiment and the
//! estimators applied to its counts.
//!
//! Pairs are generated at `pair_rate_per_mw × pump_power_mw`. Each arm
//! detects its photon with the efficiency of its chain (fiber coupling,
//! WDM routing, losses, detector). Inserting polarizers halves the singles
//! and weights coincidences by the two-photon projection probability.
//! Accidentals arrive at S1·S2·τ.

mod analysis;

pub use analysis::{
    accidental_correction, coupling_efficiency_estimate, fidelity_estimate, rates_vs_power,
    visibility_from_scan, CorrectedRate, PowerRow, VisibilityEstimate,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    /// V_state scales only the HH/VV coherence.
    #[default]
    Dephasing,
    /// V_state·|φ⟩⟨φ| + (1 − V_state)·𝟙/4.
    Werner,
}

/// Probability that a pair passes polarizers at `alpha_deg` and `beta_deg`.
pub fn coincidence_probability(
    alpha_deg: f64,
    beta_deg: f64,
    phase_rad: f64,
    state_visibility: f64,
    model: NoiseModel,
) -> f64 {
    let (sa, ca) = sin_cos_deg(alpha_deg);
    let (sb, cb) = sin_cos_deg(beta_deg);
    let pure = |v: f64| {
        0.5 * (ca * ca * cb * cb
            + sa * sa * sb * sb
            + 2.0 * v * phase_rad.cos() * ca * sa * cb * sb)
    };
    match model {
        NoiseModel::Dephasing => pure(state_visibility),
        NoiseModel::Werner => state_visibility * pure(1.0) + 0.25 * (1.0 - state_visibility),
    }
}

/// Exact on multiples of 90° so crossed polarizers extinguish completely.
fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let r = deg.rem_euclid(360.0);
    match r {
        0.0 => (0.0, 1.0),
        90.0 => (1.0, 0.0),
        180.0 => (0.0, -1.0),
        270.0 => (-1.0, 0.0),
        _ => r.to_radians().sin_cos(),
    }
}

/// Per-arm detection chain. Losses are fractional, applied to both arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyChain {
    pub coupling: f64,
    pub detector: [f64; 2],
    #[serde(default)]
    pub losses: Vec<f64>,
}

impl EfficiencyChain {
    pub fn transmission(&self) -> f64 {
        self.losses.iter().map(|l| 1.0 - l).product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    pub pair_rate_per_mw: f64,
    pub pump_power_mw: f64,
    #[serde(default)]
    pub phase_rad: f64,
    pub state_visibility: f64,
    #[serde(default)]
    pub noise_model: NoiseModel,
    pub wdm_routing: f64,
    pub efficiency: EfficiencyChain,
    pub tau_ns: f64,
    #[serde(default)]
    pub background_fraction: f64,
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{name} must lie in [0, 1], got {v}"
        )))
    }
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        check_probability("state_visibility", self.state_visibility)?;
        check_probability("wdm_routing", self.wdm_routing)?;
        check_probability("coupling", self.efficiency.coupling)?;
        for d in self.efficiency.detector {
            check_probability("detector efficiency", d)?;
        }
        for l in &self.efficiency.losses {
            check_probability("loss", *l)?;
        }
        check_probability("background_fraction", self.background_fraction)?;
        if !(self.tau_ns >= 0.0 && self.tau_ns.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "tau_ns must be >= 0, got {}",
                self.tau_ns
            )));
        }
        if !(self.pair_rate_per_mw >= 0.0 && self.pump_power_mw >= 0.0)
            || !(self.pair_rate_per_mw * self.pump_power_mw).is_finite()
        {
            return Err(Error::InvalidInput(
                "pair rate and pump power must be >= 0".into(),
            ));
        }
        if !self.phase_rad.is_finite() {
            return Err(Error::InvalidInput("phase must be finite".into()));
        }
        Ok(())
    }

    pub fn arm_efficiency(&self, arm: usize) -> f64 {
        self.efficiency.coupling
            * self.wdm_routing
            * self.efficiency.transmission()
            * self.efficiency.detector[arm]
    }

    pub fn with_power(&self, pump_power_mw: f64) -> Self {
        Self {
            pump_power_mw,
            ..self.clone()
        }
    }

    pub fn tau_s(&self) -> f64 {
        self.tau_ns * 1e-9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizerPair {
    pub alpha_deg: f64,
    pub beta_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    /// `None` measures without analyzers.
    pub polarizers: Option<PolarizerPair>,
    pub duration_s: f64,
}

impl MeasurementSetting {
    pub fn new(polarizers: Option<PolarizerPair>, duration_s: f64) -> Result<Self> {
        if !(duration_s > 0.0 && duration_s.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "duration must be > 0, got {duration_s}"
            )));
        }
        Ok(Self {
            polarizers,
            duration_s,
        })
    }

    pub fn analyzers(alpha_deg: f64, beta_deg: f64, duration_s: f64) -> Result<Self> {
        Self::new(
            Some(PolarizerPair {
                alpha_deg,
                beta_deg,
            }),
            duration_s,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub s1: u64,
    pub s2: u64,
    pub coincidences: u64,
    pub duration_s: f64,
    pub setting: MeasurementSetting,
    pub seed: u64,
}

/// Expected rates (1/s) of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedRates {
    pub singles: [f64; 2],
    pub true_coincidences: f64,
    pub accidentals: f64,
}

pub fn expected_rates(
    params: &SourceParams,
    setting: &MeasurementSetting,
) -> Result<ExpectedRates> {
    params.validate()?;
    let pairs = params.pair_rate_per_mw * params.pump_power_mw;
    let (marginal, joint) = match setting.polarizers {
        None => (1.0, 1.0),
        Some(p) => (
            0.5,
            coincidence_probability(
                p.alpha_deg,
                p.beta_deg,
                params.phase_rad,
                params.state_visibility,
                params.noise_model,
            ),
        ),
    };
    let eta = [params.arm_efficiency(0), params.arm_efficiency(1)];
    let singles = eta.map(|e| pairs * e * marginal * (1.0 + params.background_fraction));
    let true_coincidences = pairs * eta[0] * eta[1] * joint;
    let accidentals = singles[0] * singles[1] * params.tau_s();
    if singles
        .iter()
        .any(|s| true_coincidences + accidentals > *s * (1.0 + 1e-12))
    {
        return Err(Error::InvalidInput(
            "coincidence rate exceeds a singles rate; reduce power or gate width".into(),
        ));
    }
    Ok(ExpectedRates {
        singles,
        true_coincidences,
        accidentals,
    })
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist =
        Poisson::new(mean).map_err(|e| Error::InvalidInput(format!("Poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// One counting run. True coincidences and accidentals are drawn first; each
/// arm's remaining singles are drawn on top, so C ≤ min(S1, S2).
pub fn simulate_run(
    params: &SourceParams,
    setting: &MeasurementSetting,
    seed: u64,
) -> Result<CountRecord> {
    let setting = MeasurementSetting::new(setting.polarizers, setting.duration_s)?;
    let rates = expected_rates(params, &setting)?;
    let t = setting.duration_s;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c_true = poisson(&mut rng, rates.true_coincidences * t)?;
    let acc = poisson(&mut rng, rates.accidentals * t)?;
    let coincidences = c_true + acc;
    let mut rest = [0u64; 2];
    for (arm, r) in rest.iter_mut().enumerate() {
        let mean = (rates.singles[arm] - rates.true_coincidences - rates.accidentals).max(0.0) * t;
        *r = poisson(&mut rng, mean)?;
    }
    Ok(CountRecord {
        s1: coincidences + rest[0],
        s2: coincidences + rest[1],
        coincidences,
        duration_s: t,
        setting,
        seed,
    })
}

/// SplitMix64 step, used to derive independent run seeds from one base seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
