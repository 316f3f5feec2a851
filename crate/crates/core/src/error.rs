use thiserror::Error;

/// Errors raised by the qbnet engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has no entries")]
    Empty,
    #[error("operator is not Hermitian: defect {defect:e} exceeds tol_herm {tol:e}")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("trace is not one: |Tr - 1| = {defect:e} exceeds tol_trace {tol:e}")]
    TraceNotOne { defect: f64, tol: f64 },
    #[error("operator is not positive: min eigenvalue {min_eigenvalue:e} below -tol_psd (tol_psd = {tol:e})")]
    NotPositive { min_eigenvalue: f64, tol: f64 },
    #[error("operator is not unitary: defect {defect:e} exceeds tol_unitary {tol:e}")]
    NotUnitary { defect: f64, tol: f64 },
    #[error("vector is not normalized: norm {norm} deviates from 1 by more than {tol:e}")]
    NotNormalized { norm: f64, tol: f64 },
    #[error("basis is not orthonormal: defect {defect:e} exceeds tol_orth {tol:e}")]
    NotOrthonormal { defect: f64, tol: f64 },
    #[error("{what}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionOverflow { dim: u128, cap: usize },
    #[error("subsystem dims {dims:?} do not factor operator dimension {dim} (keep = {keep})")]
    BadFactorization {
        dims: Vec<usize>,
        dim: usize,
        keep: usize,
    },
    #[error("eigendecomposition failed: {0}")]
    DecompositionFailed(String),
    #[error("{what} index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("enumerating {paths} paths exceeds cap {cap}")]
    EnumerationTooLarge { paths: u128, cap: usize },
    #[error("marginal requires at least one kept time")]
    EmptyKeepSet,
    #[error("expected {expected} time points, found {found}")]
    WrongTimeCount { expected: usize, found: usize },
    #[error("energy list has length {found}, expected {expected}")]
    BadEnergyLength { expected: usize, found: usize },
    #[error("input state is not thermal at the given beta: defect {defect:e} exceeds {tol:e}")]
    NotThermalInput { defect: f64, tol: f64 },
    #[error("model state is not positive: {0}")]
    StateNotPositive(String),
    #[error("closed form is undefined: denominator {0:e} below 1e-14")]
    DegenerateDenominator(f64),
    #[error("scenario has no time points")]
    NoTimePoints,
    #[error("first time point unitary is not the identity (defect {defect:e}); allow it explicitly")]
    InitialUnitaryNotIdentity { defect: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
