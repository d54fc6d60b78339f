use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no operands")]
    NoOperands,

    #[error("operator is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("subsystem index {index} out of range for {count} subsystems")]
    SubsystemOutOfRange { index: usize, count: usize },

    #[error("composite dimension {dim} exceeds the limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("non-positive gap: {0}")]
    NonPositiveGap(f64),

    #[error("degenerate machine: omega1 == omega2 == {0}")]
    DegenerateMachine(f64),

    #[error("no thermalisation: rate1 + rate2 == 0")]
    NoThermalisation,

    #[error("virtual qubit populations undefined for the given bath temperatures")]
    UndefinedVirtualQubit,

    #[error("invalid machine: {0}")]
    InvalidMachine(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("underdetermined steady state: {0}")]
    UnderdeterminedSteadyState(String),

    #[error("energy conservation violated: {0}")]
    EnergyConservation(String),

    #[error("bosonic occupation undefined for temperature {0}")]
    BosonicOccupationUndefined(f64),

    #[error("wrong rate semantics: {0}")]
    WrongSemantics(String),

    #[error("stiff system; tighten rates or use steady_state_nullspace (step {step:e} at t = {time})")]
    StiffSystem { step: f64, time: f64 },

    #[error("non-unique steady state: second singular value {second:e} below {threshold:e}")]
    NonUniqueSteadyState { second: f64, threshold: f64 },

    #[error("invalid fit problem: {0}")]
    InvalidFit(String),

    #[error("invalid laser configuration: {0}")]
    InvalidLaser(String),

    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
