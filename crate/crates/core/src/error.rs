use thiserror::Error;

use crate::circuit::GateId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("no prime pair found below 2^62")]
    SearchExhausted,
    #[error("modulus exceeds 2^62")]
    ModulusTooLarge,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("q = {q} does not divide p - 1 = {}", p - 1)]
    NotDivisor { p: u64, q: u64 },
    #[error("{a} does not have multiplicative order {q}")]
    BadSubgroupElement { a: u64, q: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("variable count mismatch: {left} vs {right}")]
    VarCountMismatch { left: usize, right: usize },
    #[error("expected {expected} coordinates, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpPolyError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    /// Some exponent denominator is the zero polynomial, so the domain is empty.
    #[error("term {term} has a zero exponent denominator; domain is empty")]
    EmptyDomain { term: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("gate graph has a cycle through gate {0}")]
    CyclicGraph(GateId),
    #[error("gate {id} ({kind}) has fan-in {got}, expected {expected}")]
    FanInViolation {
        id: GateId,
        kind: &'static str,
        got: usize,
        expected: &'static str,
    },
    #[error("nested exponentiation along path {}", fmt_path(.path))]
    NestedExponentiation { path: Vec<GateId> },
    #[error("gate {from} references missing gate {to}")]
    DanglingReference { from: GateId, to: GateId },
    #[error("output gate {0} does not exist")]
    MissingOutput(GateId),
    #[error("duplicate gate id {0}")]
    DuplicateId(GateId),
    #[error("input gate {id} reads variable {var} but the circuit has {num_inputs} inputs")]
    InputOutOfRange {
        id: GateId,
        var: usize,
        num_inputs: usize,
    },
}

fn fmt_path(path: &[GateId]) -> String {
    path.iter()
        .map(|g| g.to_string())
        .collect::<Vec<_>>()
        .join(" -> ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("fraction conversion exceeded {cap} terms at gate {gate}")]
    TermBlowup { gate: GateId, cap: usize },
    #[error("expected {expected} inputs, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),
    #[error("circuit file: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PitError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("invalid test plan: {0}")]
    InvalidPlan(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("instance space of {0} exceeds the exhaustive limit")]
    SpaceTooLarge(u128),
    #[error("invalid sparse polynomial: {0}")]
    InvalidPolynomial(String),
}
