use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus must be at least 2, got {0}")]
    ModulusTooSmall(BigUint),

    #[error("Jacobi symbol needs an odd positive modulus, got {0}")]
    EvenJacobiModulus(BigUint),

    #[error("expected an odd integer >= 3, got {0}")]
    NotOddInteger(BigUint),

    #[error("Miller-Rabin base {base} out of range for n = {n} (need 2 <= base < n)")]
    BaseOutOfRange { base: u64, n: BigUint },

    #[error("no discriminant with (D/n) = -1 for |D| <= {limit}, n = {n}")]
    DiscriminantSearchExhausted { n: BigUint, limit: i64 },

    #[error("no Korselt class for k = {k}, M = {m}: gcd(k, M) > 1")]
    NoKorseltSolution { k: u64, m: u64 },

    #[error("invalid construction parameters: {0}")]
    InvalidParams(String),

    #[error("input {0} is prime; only composites can be measured")]
    PrimeInput(BigUint),

    #[error("record is not a valid composite: {0}")]
    NotComposite(String),

    #[error("statistics need a non-empty sample")]
    EmptySample,

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("residue {0} is outside [0, 35)")]
    ResidueOutOfRange(u64),

    #[error("record {index} has no Lucas measurement")]
    MissingMeasurement { index: usize },

    #[error("dataset record {index}: field `{field}`: {reason}")]
    Field {
        index: usize,
        field: String,
        reason: String,
    },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error(
        "STRONG LUCAS PSEUDOPRIME FOUND among Miller-Rabin resistant composites: n = {n}; witness written to {witness}"
    )]
    LucasPseudoprime { n: BigUint, witness: String },

    #[error("worker pool: {0}")]
    Pool(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
