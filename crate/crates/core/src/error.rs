use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("length of symbol {symbol} is not positive")]
    NonPositiveLength { symbol: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {0} is outside the domain")]
    OutOfDomain(f64),
    #[error("permutation is reducible")]
    Reducible,
    #[error("Rauzy induction undefined at step {step}: the last intervals tie")]
    RauzyUndefined { step: usize },
    #[error("iteration budget of {budget} exceeded")]
    BudgetExceeded { budget: u64 },
    #[error("interval [{start}, {end}) is outside the curve domain")]
    IntervalOutOfRange { start: f64, end: f64 },
    #[error("curve is not unit speed (segment {segment}, defect {defect:e})")]
    NonUnitSpeed { segment: usize, defect: f64 },
    #[error("curve domains differ: {0} vs {1}")]
    DomainMismatch(f64, f64),
    #[error("level mismatch: {0}")]
    LevelMismatch(String),
    #[error("atoms {0} and {1} overlap")]
    AtomsOverlap(usize, usize),
    #[error("atom {0} misses its curve piece")]
    AtomMissesCurve(usize),
    #[error("point ({0}, {1}) lies in no atom")]
    UnclassifiablePoint(f64, f64),
    #[error("singular value gap {gap:.3} below threshold {threshold}")]
    InsufficientGap { gap: f64, threshold: f64 },
    #[error("no admissible sample after {attempts} attempts")]
    ExhaustedResamples { attempts: usize },
    #[error("degenerate segment between cuts {0} and {1}")]
    DegenerateSegment(f64, f64),
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
