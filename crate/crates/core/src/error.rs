use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |a_ij - conj(a_ji)| = {deviation:e}")]
    NonHermitianInput { deviation: f64 },

    #[error("eigensolver did not converge after {iterations} QL sweeps on eigenvalue {index}")]
    ConvergenceFailure { index: usize, iterations: usize },

    #[error("dimension {dim} exceeds the dense cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid model parameters: {0}")]
    InvalidSpec(String),

    #[error("invalid clock grid: {0}")]
    InvalidGrid(String),

    #[error(
        "clock aliasing: spectrum [{spectrum_min}, {spectrum_max}] needs clock energies up to \
         {required:.6} (margin 1.25) but the window only reaches {available:.6}"
    )]
    AliasingError {
        spectrum_min: f64,
        spectrum_max: f64,
        required: f64,
        available: f64,
    },

    #[error("invalid regularization: {0}")]
    InvalidRegularization(String),

    #[error(
        "alpha quadrature under-resolved: node spacing {spacing:e} > pi / max|spec(C)| = {limit:e}"
    )]
    QuadratureUnderresolved { spacing: f64, limit: f64 },

    #[error("energy grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("energy {energy} is not a clock-energy lattice point (spacing {spacing})")]
    EnergyOffClockLattice { energy: f64, spacing: f64 },

    #[error("empty {0} grid")]
    EmptyGrid(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("initial point violates the constraint: |H + pi_t| = {violation:e}")]
    ConstraintViolated { violation: f64 },

    #[error("constraint drift {drift:e} exceeds 1e-4; reduce the step")]
    StepSizeTooLarge { drift: f64 },

    #[error("physical time is not monotone along the trajectory")]
    NonMonotoneTime,

    #[error("shooting did not converge after {iterations} iterations (residual {residual:e})")]
    ShootingDiverged { iterations: usize, residual: f64 },

    #[error("energy {energy} is below the potential {potential} at the start point")]
    EnergyBelowBarrier { energy: f64, potential: f64 },
}

impl Error {
    /// Name of the module that raises this error; used in CLI error records.
    pub fn module(&self) -> &'static str {
        match self {
            Error::NonHermitianInput { .. }
            | Error::ConvergenceFailure { .. }
            | Error::DimensionOverflow { .. } => "linear-core",
            Error::DimensionMismatch { .. } | Error::InvalidArgument(_) => "core",
            Error::InvalidSpec(_) => "model-catalog",
            Error::InvalidGrid(_) => "clock-sector",
            Error::AliasingError { .. }
            | Error::InvalidRegularization(_)
            | Error::QuadratureUnderresolved { .. } => "constraint-projector",
            Error::GridTooCoarse(_) | Error::EnergyOffClockLattice { .. } | Error::EmptyGrid(_) => {
                "ensembles"
            }
            Error::ConstraintViolated { .. }
            | Error::StepSizeTooLarge { .. }
            | Error::NonMonotoneTime
            | Error::ShootingDiverged { .. }
            | Error::EnergyBelowBarrier { .. } => "classical-dynamics",
        }
    }

    /// Short machine-readable kind, e.g. `"AliasingError"`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonHermitianInput { .. } => "NonHermitianInput",
            Error::ConvergenceFailure { .. } => "ConvergenceFailure",
            Error::DimensionOverflow { .. } => "DimensionOverflow",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::AliasingError { .. } => "AliasingError",
            Error::InvalidRegularization(_) => "InvalidRegularization",
            Error::QuadratureUnderresolved { .. } => "QuadratureUnderresolved",
            Error::GridTooCoarse(_) => "GridTooCoarse",
            Error::EnergyOffClockLattice { .. } => "EnergyOffClockLattice",
            Error::EmptyGrid(_) => "EmptyGrid",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::ConstraintViolated { .. } => "ConstraintViolated",
            Error::StepSizeTooLarge { .. } => "StepSizeTooLarge",
            Error::NonMonotoneTime => "NonMonotoneTime",
            Error::ShootingDiverged { .. } => "ShootingDiverged",
            Error::EnergyBelowBarrier { .. } => "EnergyBelowBarrier",
        }
    }
}
