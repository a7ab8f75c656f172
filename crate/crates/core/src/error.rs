use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("wavelength {wavelength_nm} nm outside the valid range [{min_nm}, {max_nm}] nm of {material}")]
    OutOfRange {
        material: String,
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },

    #[error("NoPhaseMatch: no collinear phase matching for {material} at theta = {theta_deg} deg, pump {pump_nm} nm")]
    NoPhaseMatch {
        material: String,
        theta_deg: f64,
        pump_nm: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid material data: {0}")]
    InvalidMaterial(String),

    #[error("unknown material `{0}`")]
    UnknownMaterial(String),

    #[error("grid resolves only {points} points above half maximum (need at least {required})")]
    Resolution { points: usize, required: usize },

    #[error("spectrum does not fall below half maximum inside the grid")]
    UnboundedPeak,

    #[error("degenerate regression: abscissa has zero variance")]
    DegenerateFit,

    #[error("compensator thickness directions are linearly dependent (det = {det:e})")]
    SingularSystem { det: f64 },

    #[error("no orientation assignment yields non-negative thickness for the {which} compensator")]
    NegativeThickness { which: &'static str },

    #[error("invalid optical stack: {0}")]
    InvalidStack(String),

    #[error("total spectral weight is zero")]
    ZeroWeight,

    #[error("visibility undefined: C_max + C_min = 0")]
    ZeroCounts,

    #[error("root refinement failed to converge")]
    NoConvergence,
}
