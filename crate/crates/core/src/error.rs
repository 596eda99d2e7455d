use thiserror::Error;

/// Why a problem (or a query) has no feasible point.
#[derive(Debug, Clone, PartialEq)]
pub enum Infeasibility {
    /// The group average of constraint `constraint` is a multiple of the
    /// identity whose value differs from the requested target.
    Symmetry {
        constraint: usize,
        /// Norm of the non-scalar part of the twirled observable.
        twirled_norm: f64,
        /// Value every invariant state assigns to the observable.
        invariant_value: f64,
        target: f64,
    },
    /// Target lies outside the spectrum range of the observable.
    Range {
        constraint: usize,
        lower: f64,
        upper: f64,
        target: f64,
    },
    /// A linearly dependent constraint disagrees with the ones it depends on.
    Inconsistent { constraint: usize, residual: f64 },
    /// Phase-one simplex could not drive the artificial variables to zero.
    Linear { infeasibility: f64, multipliers: Vec<f64> },
    /// Dual multipliers diverged while the gradient stayed bounded away from zero.
    DualUnbounded { gradient_norm: f64 },
    /// Constraint residual never dropped below the floor.
    ResidualFloor { residual: f64 },
    /// Requested coherent amplitude does not fit the Fock truncation.
    TruncationGuard { alpha_sq: f64, limit: f64 },
    /// Requested CHSH target exceeds the algebraic maximum.
    ChshRange { target: f64 },
}

impl std::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Infeasibility::Symmetry {
                constraint,
                twirled_norm,
                invariant_value,
                target,
            } => write!(
                f,
                "constraint {constraint} is fixed to {invariant_value} on invariant states (twirled residual norm {twirled_norm:e}) but target is {target}"
            ),
            Infeasibility::Range {
                constraint,
                lower,
                upper,
                target,
            } => write!(
                f,
                "constraint {constraint}: target {target} outside observable range [{lower}, {upper}]"
            ),
            Infeasibility::Inconsistent {
                constraint,
                residual,
            } => write!(
                f,
                "constraint {constraint} is a combination of earlier ones with mismatched target (residual {residual:e})"
            ),
            Infeasibility::Linear { infeasibility, .. } => {
                write!(f, "linear system infeasible (phase-one optimum {infeasibility:e})")
            }
            Infeasibility::DualUnbounded { gradient_norm } => {
                write!(f, "dual unbounded (gradient norm {gradient_norm:e})")
            }
            Infeasibility::ResidualFloor { residual } => {
                write!(f, "constraint residual stalled at {residual:e}")
            }
            Infeasibility::TruncationGuard { alpha_sq, limit } => {
                write!(f, "|alpha|^2 = {alpha_sq} exceeds truncation limit {limit}")
            }
            Infeasibility::ChshRange { target } => {
                write!(f, "CHSH target {target} outside [-4, 4]")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {0:e})")]
    NonHermitian(f64),

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("function undefined at eigenvalue {0}")]
    DomainError(f64),

    #[error("simplex exceeded {0} pivots")]
    IterationLimit(usize),

    #[error("no quadrature rule of order {0}")]
    UnsupportedOrder(usize),

    #[error("space mismatch: expected {expected}, got {got}")]
    SpaceMismatch { expected: String, got: String },

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("events are not pairwise orthogonal (overlap {0:e})")]
    NotOrthogonal(f64),

    #[error("basis is not orthonormal (Gram residual {0:e})")]
    NotOrthonormal(f64),

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("group closure exceeded cap of {0} elements")]
    ClosureCapExceeded(usize),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("infeasible: {0}")]
    Infeasible(Infeasibility),

    #[error("iteration limit reached after {0} iterations")]
    MaxIter(usize),

    #[error("bad dimension: {0}")]
    BadDimension(String),

    #[error("truncation too small: |alpha|^2 = {alpha_sq} > {limit}")]
    TruncationTooSmall { alpha_sq: f64, limit: f64 },

    #[error("bad spin quantum number: {0}")]
    BadSpin(String),

    #[error("quadrature order {order} too coarse for spin dimension {dim}")]
    QuadratureTooCoarse { order: usize, dim: usize },

    #[error("bad observable: {0}")]
    BadObservable(String),

    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;
