use thiserror::Error;

/// Errors surfaced by the pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("regime violation: need k < q = p^n (k={k}, q={q})")]
    RegimeViolation { k: u32, q: u32 },
    #[error("zero element has no discrete logarithm")]
    ZeroElement,
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("gcd(0, 0) is undefined")]
    BothZero,
    #[error("supplied prime powers do not multiply to the group order")]
    BadFactorization,
    #[error("setup search exhausted after {tried} candidates{}", closest_miss.as_ref().map(|m| format!(" (closest miss: {m})")).unwrap_or_default())]
    SearchExhausted {
        tried: u64,
        closest_miss: Option<String>,
    },
    #[error("relation generation on a setup with a linear cofactor")]
    LinearTrapPresent,
    #[error("only {got} relations collected, need at least {need}")]
    InsufficientRelations { got: usize, need: usize },
    #[error("theorem-4 certificate mismatch: {0}")]
    CertificateMismatch(String),
    #[error("smith shape does not conform; factor-base solve requires it")]
    ShapeNotConforming,
    #[error("component generator does not evaluate into the quadratic subfield")]
    GeneratorNotInSubfield,
    #[error("quotient not cyclic after adding the correction relations")]
    NotCyclicAfterCorrection,
    #[error("degree out of range: {0}")]
    DegreeOutOfRange(usize),
    #[error("trap randomization exhausted after trying exponents up to {0}")]
    RandomizationExhausted(u64),
    #[error("descent stuck on {0}: target vector not in the trap-avoiding lattice")]
    DescentStuck(String),
    #[error("final exponentiation check failed")]
    VerificationFailed,
    #[error("target not found in the group generated by the base")]
    NotFound,
    #[error("enumeration scale too large ({0} ring elements)")]
    ScaleTooLarge(u64),
    #[error("no setup with a linear cofactor found at this q")]
    NoLinearTrapFound,
    #[error("polynomial parse error: {0}")]
    Parse(String),
    #[error("stale artifact: {0}")]
    StaleArtifact(String),
}

pub type Result<T> = std::result::Result<T, Error>;
