use thiserror::Error;

pub type Result<T> = std::result::Result<T, QcbError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QcbError {
    #[error("matrix is not Hermitian: max |H - H^dagger| = {deviation:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("matrix is not unitary: max |U^dagger U - I| = {deviation:.3e} exceeds tolerance {tol:.3e}")]
    NotUnitary { deviation: f64, tol: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("expectation value has imaginary part {imag:.3e} above tolerance")]
    NonRealExpectation { imag: f64 },

    #[error(
        "state is not block diagonal for the partition: off-block entry {max_entry:.3e} exceeds tolerance {tol:.3e}"
    )]
    NotBlockDiagonal { max_entry: f64, tol: f64 },

    #[error("invalid subspace partition: {0}")]
    InvalidPartition(String),

    #[error("drift Hamiltonian is not diagonal in the supplied basis (off-diagonal entry {max_entry:.3e}); transform to an eigenbasis of h0 first")]
    BasisNotAdapted { max_entry: f64 },

    #[error("non-finite control amplitude at step {step}, control {control}")]
    NonFiniteAmplitude { step: usize, control: usize },

    #[error("invalid pulse schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("kinematical bounds collapse (lower = upper = {value}); yield is trivially 1")]
    BoundsCollapsed { value: f64 },

    #[error("at least one generator is required")]
    NoGenerators,

    #[error("matrix must be non-empty and square: {0}")]
    InvalidShape(String),
}
