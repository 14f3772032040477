//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    /// Invalid physical or numerical parameter.
    #[error("invalid parameter `{field}`: {detail}")]
    Parameter { field: String, detail: String },

    /// An integrand returned a non-finite value.
    #[error("non-finite integrand value {value} at abscissa {abscissa}")]
    Evaluation { abscissa: f64, value: f64 },

    /// The integrand of a quadrature failed at one node.
    #[error("evaluation failed at node angle {angle}: {detail}")]
    QuadratureNode { angle: f64, detail: String },

    /// A series and its fallback both failed to converge.
    #[error("{context}: no convergence after {terms} terms (partial value {partial})")]
    Convergence {
        context: String,
        partial: f64,
        terms: usize,
    },

    /// The moment-matching fit has no admissible real solution.
    #[error("fit infeasible at {stage}: discriminant {discriminant}")]
    FitInfeasible { stage: &'static str, discriminant: f64 },

    /// The moment sequence makes the fit equations singular.
    #[error("degenerate moment sequence: {detail}")]
    DegenerateMoments { detail: String },

    /// The fitted parameters do not reproduce the input moments.
    #[error("fit residual {residual:e} exceeds {limit:e}")]
    FitResidual { residual: f64, limit: f64 },

    /// A residue coefficient hit a pole that survived perturbation.
    #[error("residue coefficient pole at index {index}")]
    Coefficient { index: usize },

    /// Coefficient recurrence divisor vanished.
    #[error("degenerate series: leading coefficient is zero")]
    DegenerateSeries,

    /// a5 and a6 coincide, so the asymptotic order is ambiguous.
    #[error("asymptotic order undefined: a5 = {a5}, a6 = {a6} (branch {branch})")]
    Tie { a5: f64, a6: f64, branch: usize },

    /// Unknown modulation name.
    #[error("unknown modulation `{0}`")]
    UnknownModulation(String),

    /// Exponential enumeration refused.
    #[error("{0} branches exceed the i.n.i.d enumeration limit of 20")]
    TooManyBranches(usize),

    #[error("{0}")]
    Input(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }

    pub(crate) fn parameter(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Parameter {
            field: field.into(),
            detail: detail.into(),
        }
    }
}

impl Error {
    /// Process exit status: 1 input, 2 infeasible, 3 convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain { .. }
            | Error::Parameter { .. }
            | Error::UnknownModulation(_)
            | Error::TooManyBranches(_)
            | Error::Input(_)
            | Error::Io(_) => 1,
            Error::FitInfeasible { .. }
            | Error::DegenerateMoments { .. }
            | Error::FitResidual { .. }
            | Error::Coefficient { .. }
            | Error::DegenerateSeries
            | Error::Tie { .. } => 2,
            Error::Evaluation { .. } | Error::QuadratureNode { .. } | Error::Convergence { .. } => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
