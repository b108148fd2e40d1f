use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes of the constructions. Checkers never return these for a
/// failed identity; they report residuals instead.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: |M - M*|_F = {norm:.3e}")]
    NotHermitian { norm: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:.3e}")]
    NotPsd { min_eig: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("module is not full: inner products span rank {rank} of {required}")]
    NotFull { rank: usize, required: usize },

    #[error("inconsistent defining system: residual {residual:.3e}")]
    Inconsistent { residual: f64 },

    #[error("map is not completely positive: Choi min eigenvalue {min_eig:.3e}")]
    NotCp { min_eig: f64 },

    #[error("W is not a coisometry: |WW* - I| = {residual:.3e}")]
    NotCoisometry { residual: f64 },

    #[error("intertwining relation {relation} fails at group element {element}: residual {residual:.3e}")]
    NotIntertwining {
        relation: &'static str,
        element: usize,
        residual: f64,
    },

    #[error("map is not covariant: residual {residual:.3e}")]
    NotCovariant { residual: f64 },

    #[error("not a covariant representation: residual {residual:.3e}")]
    NotCovariantRep { residual: f64 },

    #[error("range of the dilation is not invariant under u': leak {residual:.3e}")]
    InvarianceLeak { residual: f64 },

    #[error("raw map does not descend to the quotient ({stage}): residual {residual:.3e}")]
    QuotientLeak { stage: &'static str, residual: f64 },

    #[error("alternative dilation is not minimal: {0}")]
    NotMinimal(String),

    #[error("recovered intertwiner is not unitary: {which} residual {residual:.3e}")]
    NotUnitary { which: &'static str, residual: f64 },

    #[error("averaged intertwiner is degenerate: min eigenvalue of YY* is {min_eig:.3e}")]
    DegenerateAverage { min_eig: f64 },

    #[error("not a group action: {0}")]
    NotAction(String),

    #[error("representations are defined over different groups")]
    GroupMismatch,

    #[error("invalid group table: {0}")]
    InvalidGroup(String),

    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("parameter out of bounds: {0}")]
    Bounds(String),
}
