//! Scenario configuration: one JSON file describing the source, resolved
//! against a materials file into ready-to-run core types.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use spdc_core::compensation::{AxisOrientation, OpticalStack, Segment, StackElement};
use spdc_core::expsim::SourceParams;
use spdc_core::optics::MaterialLibrary;
use spdc_core::phasematch::{solve_angle, PhaseMatchConfig};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    /// Relative paths are resolved against the config file's directory.
    pub materials_file: PathBuf,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub phase_match: PhaseMatchSection,
    pub stack: StackSection,
    pub source: SourceParams,
    #[serde(default)]
    pub metadata: Metadata,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub phasemap: PhaseMapSection,
    #[serde(default)]
    pub simulation: SimulationSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseMatchSection {
    pub material: String,
    pub pump_nm: f64,
    pub pump_fwhm_nm: f64,
    pub cut_angle_deg: f64,
    pub length_mm: f64,
    /// When set, the crystals are angle-tuned so the signal lands here.
    #[serde(default)]
    pub signal_target_nm: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackSection {
    pub compensator_material: String,
    #[serde(default)]
    pub pump_compensator_axis: Option<AxisOrientation>,
    #[serde(default)]
    pub pair_compensator_axis: Option<AxisOrientation>,
    #[serde(default)]
    pub extra_elements: Vec<ElementSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub material: String,
    pub thickness_mm: f64,
    pub segment: Segment,
    pub axis: AxisOrientation,
}

/// Recorded with the outputs; not used in any computation.
#[derive(Debug, Clone, Default, Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    #[serde(default)]
    pub pump_focus_um: Option<f64>,
    #[serde(default)]
    pub diode_power_mw: Option<f64>,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub half_width_nm: f64,
    pub step_nm: f64,
    pub scan_lengths_mm: Vec<f64>,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            half_width_nm: 40.0,
            step_nm: 0.05,
            scan_lengths_mm: vec![3.94, 7.88, 15.76],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseMapSection {
    pub pump_points: usize,
    pub signal_points: usize,
    pub visibility_nodes: usize,
}

impl Default for PhaseMapSection {
    fn default() -> Self {
        Self {
            pump_points: 101,
            signal_points: 101,
            visibility_nodes: spdc_core::compensation::DEFAULT_VISIBILITY_NODES,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub powers_mw: Vec<f64>,
    pub duration_s: f64,
    /// Pump powers at which the polarization-correlation ensemble runs.
    pub analysis_powers_mw: Vec<f64>,
    pub visibility_duration_s: f64,
    pub ensemble_runs: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            powers_mw: vec![1.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            duration_s: 1.0,
            analysis_powers_mw: vec![1.0, 30.0],
            visibility_duration_s: 60.0,
            ensemble_runs: 200,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Fixes the internal angle and disables angle tuning.
    pub theta_deg: Option<f64>,
}

/// A configuration with materials loaded and the operating point fixed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub raw: ScenarioConfig,
    pub library: MaterialLibrary,
    pub phase_match: PhaseMatchConfig,
    pub stack: OpticalStack,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// True when the angle came from `signal_target_nm`.
    pub angle_tuned: bool,
}

fn config_error(path: &Path, what: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {what}", path.display()))
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| config_error(path, e))?;
    let cfg: ScenarioConfig = serde_json::from_str(&text).map_err(|e| config_error(path, e))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(config_error(
            path,
            format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            ),
        ));
    }
    Ok(cfg)
}

impl Scenario {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let raw = load_config(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let materials_path = base.join(&raw.materials_file);
        let library = MaterialLibrary::from_path(&materials_path)
            .map_err(|e| config_error(&materials_path, e))?;
        let lookup = |name: &str| {
            library
                .get(name)
                .cloned()
                .map_err(|e| config_error(path, e))
        };
        let pm = &raw.phase_match;
        let crystal = lookup(&pm.material)?;
        let compensator = lookup(&raw.stack.compensator_material)?;

        let (theta, angle_tuned) = match (overrides.theta_deg, pm.signal_target_nm) {
            (Some(theta), _) => (theta, false),
            (None, Some(target)) => (solve_angle(&crystal, pm.pump_nm, target)?, true),
            (None, None) => (pm.cut_angle_deg, false),
        };
        let phase_match =
            PhaseMatchConfig::new(crystal, theta, pm.length_mm, pm.pump_nm, pm.pump_fwhm_nm)
                .map_err(|e| config_error(path, e))?;

        let mut stack = OpticalStack::two_crystal(phase_match.clone(), compensator);
        stack.fixed_axes = [
            raw.stack.pump_compensator_axis,
            raw.stack.pair_compensator_axis,
        ];
        for e in &raw.stack.extra_elements {
            if !matches!(e.segment, Segment::PumpPath | Segment::PairPath) {
                return Err(config_error(
                    path,
                    "extra elements must sit on the pump or pair path",
                ));
            }
            if !(e.thickness_mm >= 0.0) {
                return Err(config_error(path, "element thickness must be >= 0"));
            }
            stack.push(StackElement {
                material: lookup(&e.material)?,
                thickness_mm: e.thickness_mm,
                segment: e.segment,
                axis: e.axis,
            });
        }
        raw.source.validate().map_err(|e| config_error(path, e))?;

        let out_dir = match &overrides.out {
            Some(out) => out.clone(),
            None => base.join(&raw.output_dir),
        };
        Ok(Self {
            seed: overrides.seed.unwrap_or(raw.seed),
            raw,
            library,
            phase_match,
            stack,
            out_dir,
            angle_tuned,
        })
    }

    pub fn materials_version(&self) -> &str {
        &self.library.version
    }
}
