use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("degree {degree} exceeds the computed cap {cap}")]
    DegreeAboveCap { degree: u32, cap: u32 },

    #[error("vector has length {found}, expected {expected}")]
    MixedBases { expected: usize, found: usize },

    #[error("index {index} out of range for a space of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("exponent {exponent} leaves the stored window [{lo}, {hi}]")]
    ExponentOverflow { exponent: i64, lo: i64, hi: i64 },

    #[error("arity {arity} exceeds the arity cap {cap}")]
    ArityAboveCap { arity: usize, cap: usize },

    #[error("operation is not fixed by the transposition (1 2)")]
    NotCommutative,

    #[error("module is not connected: it has {dim} basis elements in degree 0")]
    NotConnected { dim: usize },

    #[error("module is not reduced: Sq_0 kills a nonzero element in degree {degree} (cf. the counterexample M = Sigma F(0))")]
    NotReduced { degree: u32 },

    #[error("operation is not central: {0}")]
    NotCentral(String),

    #[error("operad morphism violates the relation {0}")]
    RelationViolated(String),

    #[error("grade (degree {degree}, weight {weight}) was not built in this algebra")]
    GradeNotBuilt { degree: u32, weight: String },

    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error("unknown {kind} `{name}`; expected one of: {expected}")]
    UnknownName {
        kind: &'static str,
        name: String,
        expected: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
