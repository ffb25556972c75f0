use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension cap exceeded: 2^{qubits} > {cap}")]
    DimensionCap { qubits: u32, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid generator basis: {0}")]
    InvalidBasis(String),

    #[error("structure constant ({k},{l},{m}) has imaginary part {imag:e}")]
    NonRealStructureConstant {
        k: usize,
        l: usize,
        m: usize,
        imag: f64,
    },

    #[error("not a quantum state: most negative eigenvalue {min_eigenvalue:e}")]
    NonPositive { min_eigenvalue: f64 },

    #[error("density matrix trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("matrix is not hermitian (deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("state is not pure: copurity {copurity:e}")]
    NotPure { copurity: f64 },

    #[error("wave function norm deviates from 1 by {deviation:e}")]
    NormDeviation { deviation: f64 },

    #[error("probability w_{index} = {value:e} is negative: not a quantum state")]
    NegativeProbability { index: usize, value: f64 },

    #[error("operators do not commute (|[A,B]|_max = {norm:e}); classical product is not a quantum observable here")]
    NonCommuting { norm: f64 },

    #[error("operator is not two-level (|A^2 - 1|_max = {deviation:e})")]
    NotTwoLevel { deviation: f64 },

    #[error("maximally destructive reduction requires a traceless operator (tr A = {trace})")]
    NotTraceless { trace: f64 },

    #[error("branch with probability {probability:e} is unreachable")]
    BranchUnreachable { probability: f64 },

    #[error("operators {first} and {second} are not independent: tr(A-B)^2 = {distance:e} < {epsilon:e}")]
    DependentOperators {
        first: usize,
        second: usize,
        distance: f64,
        epsilon: f64,
    },

    #[error("classical state space of {states} states exceeds cap {cap}")]
    StateSpaceCap { states: u128, cap: usize },

    #[error("joint table does not reproduce the quantum marginals (deviation {deviation:e})")]
    MarginalMismatch { deviation: f64 },

    #[error("observable is not two-level: value {value} is not +-1")]
    NotTwoValued { value: f64 },

    #[error("bit chain members {first} and {second} do not commute")]
    ChainNotCommuting { first: usize, second: usize },

    #[error("bit chain member {index} is not a two-level involution")]
    ChainNotInvolutory { index: usize },

    #[error("bit chain product T{first} T{second} is not a member up to sign")]
    ChainClosure { first: usize, second: usize },

    #[error("bit chain has {members} members, at most {max} allowed")]
    ChainTooLarge { members: usize, max: usize },

    #[error("unknown chain name {0:?}")]
    UnknownChain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for errors caused by a resource cap rather than invalid numerics.
    pub fn is_cap(&self) -> bool {
        matches!(
            self,
            Error::DimensionCap { .. } | Error::StateSpaceCap { .. }
        )
    }
}
