use thiserror::Error;

/// Errors produced by the numerical routines.
///
/// Variants split into two families: invalid input (parameters, windows,
/// thresholds) and numerical failure (convergence, overflow, basis size).
/// [`Error::is_numerical`] tells them apart; the command-line front end maps
/// the two families to distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("energy {energy} does not exceed the potential minimum {v_min}: empty well")]
    EmptyWell { energy: f64, v_min: f64 },

    #[error("energy {energy} is not above the threshold E_{p} = {threshold}")]
    BelowThreshold { p: u32, energy: f64, threshold: f64 },

    #[error("window ({a}, {b}) touches the Landau level {level}")]
    WindowTouchesLevel { a: f64, b: f64, level: f64 },

    #[error("no sign change of lambda - E found for xi in [-2^30, 2^30] (m = {m}, p = {p}, E = {energy})")]
    SearchFailure { m: u32, p: u32, energy: f64 },

    #[error("{what} did not converge (index {index})")]
    Convergence { what: &'static str, index: usize },

    #[error("fiber (n = {n}, m = {m}, xi = {xi}): {source}")]
    Fiber {
        n: u32,
        m: u32,
        xi: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("eigenvector has non-positive value {value} at node {node} inside the fit window")]
    SignPattern { node: usize, value: f64 },

    #[error("Fredholm solvability violated: projection on Psi_{p} is {projection}")]
    Fredholm { p: usize, projection: f64 },

    #[error("Hermite basis of size {basis} too small: spill mass {spill:e} at order {order}")]
    InsufficientBasis { basis: usize, order: usize, spill: f64 },

    #[error("trajectory reached r = {r} < {floor} at t = {t}")]
    AxisApproach { r: f64, floor: f64, t: f64 },

    #[error("field evaluated on the axis r = 0")]
    AxisSingularity,

    #[error("radial motion has {found} minima in the window, need at least {needed}")]
    InsufficientOscillation { found: usize, needed: usize },

    #[error("weighted norm overflows (log of squared norm = {log_norm_sq})")]
    Overflow { log_norm_sq: f64 },

    #[error("no band data for (m = {m}, p = {p}) at xi = {xi}")]
    MissingBandData { m: u32, p: u32, xi: f64 },

    #[error("j = {j} outside 1..={multiplicity} for m = {m}")]
    MultiplicityRange { m: u32, j: u32, multiplicity: u64 },

    #[error("empty preimage of the window for (m = {m}, p = {p})")]
    EmptyPreimage { m: u32, p: u32 },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of a numerical procedure, false for rejected input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Convergence { .. }
            | Error::SearchFailure { .. }
            | Error::InsufficientBasis { .. }
            | Error::Overflow { .. }
            | Error::AxisApproach { .. }
            | Error::InsufficientOscillation { .. }
            | Error::SignPattern { .. } => true,
            Error::Fiber { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn in_fiber(self, n: u32, m: u32, xi: f64) -> Error {
        match self {
            e @ Error::Fiber { .. } => e,
            e => Error::Fiber { n, m, xi, source: Box::new(e) },
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
