//! Crate-wide error type.

use thiserror::Error;

/// Integer 2-D lattice point / lag vector, in units of the base spacing d.
pub type LatticePoint = (i64, i64);

#[derive(Debug, Error)]
pub enum Error {
    /// A pair that must be coprime is not.
    #[error("gcd({m},{n})={g}, not coprime")]
    NotCoprime { m: u32, n: u32, g: u32 },

    /// Per-axis coprimality violation for the two-rectangle geometry.
    #[error("gcd({a},{b})={g} on {axis}-axis")]
    NotCoprimeAxis { a: u32, b: u32, g: u32, axis: char },

    /// Generic validation failure; `what` names the offending field.
    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },

    /// A lag was requested that the coarray does not contain.
    #[error("lag ({},{}) outside coarray", lag.0, lag.1)]
    LagOutsideCoarray { lag: LatticePoint },

    /// A hole inside the requested augmentation region.
    #[error("missing lag ({},{}) inside requested region", lag.0, lag.1)]
    MissingLag { lag: LatticePoint },

    /// Source count exceeds the virtual-aperture degrees of freedom.
    #[error("{requested} sources exceed the coarray bound of {dof}")]
    DofExceeded { requested: usize, dof: usize },

    /// The spectrum produced fewer local maxima than sources requested.
    #[error("found {found} spectrum peaks, expected {expected}")]
    TooFewPeaks { found: usize, expected: usize },

    /// Input matrix violated a Hermitian-symmetry tolerance.
    #[error("non-Hermitian input: max asymmetry {max_asym:.3e}")]
    NonHermitian { max_asym: f64 },

    /// A Monte-Carlo trial supplied the wrong number of estimates.
    #[error("trial {trial} supplied {got} estimates, expected {expected}")]
    EstimateCountMismatch {
        trial: usize,
        got: usize,
        expected: usize,
    },

    /// The constraint set admits no weight vector.
    #[error("infeasible constraint set; most violated: {constraint} ({detail})")]
    Infeasible { constraint: String, detail: String },

    /// Iteration cap reached before the conic solve converged.
    #[error("solver hit the iteration cap; relative duality gap {gap_rel:.3e}")]
    SolverStall { gap_rel: f64 },

    /// Any other numerical failure inside the conic solver.
    #[error("solver numerical failure: {0}")]
    SolverNumerical(String),
}

impl Error {
    /// True for errors caused by bad inputs rather than numerical failure.
    /// The CLI maps validation errors to exit code 1, numerical ones to 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NotCoprime { .. }
                | Error::NotCoprimeAxis { .. }
                | Error::Invalid { .. }
                | Error::LagOutsideCoarray { .. }
                | Error::MissingLag { .. }
                | Error::DofExceeded { .. }
                | Error::EstimateCountMismatch { .. }
        )
    }

    /// Short machine-readable code for structured error records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotCoprime { .. } | Error::NotCoprimeAxis { .. } => "not_coprime",
            Error::Invalid { .. } => "invalid",
            Error::LagOutsideCoarray { .. } => "lag_outside_coarray",
            Error::MissingLag { .. } => "missing_lag",
            Error::DofExceeded { .. } => "dof_exceeded",
            Error::TooFewPeaks { .. } => "too_few_peaks",
            Error::NonHermitian { .. } => "non_hermitian",
            Error::EstimateCountMismatch { .. } => "estimate_count_mismatch",
            Error::Infeasible { .. } => "infeasible",
            Error::SolverStall { .. } => "solver_stall",
            Error::SolverNumerical(_) => "solver_numerical",
        }
    }

    /// Field name most relevant to the failure, when one exists.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            Error::NotCoprime { .. } => Some("m,n"),
            Error::NotCoprimeAxis { axis: 'x', .. } => Some("n1,n2"),
            Error::NotCoprimeAxis { .. } => Some("m1,m2"),
            Error::Invalid { what, .. } => Some(what),
            Error::DofExceeded { .. } => Some("sources"),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
