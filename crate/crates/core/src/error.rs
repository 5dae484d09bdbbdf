use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("extension degree {degree} out of range 1..={max}")]
    DegreeOutOfRange { degree: u32, max: u32 },

    #[error("field size {size} exceeds cap {max}")]
    SizeCapExceeded { size: u64, max: u64 },

    #[error("characteristic mismatch: {0} vs {1}")]
    CharMismatch(u64, u64),

    #[error("F_{sub} is not a subfield of F_{sup}")]
    NotSubfield { sub: u64, sup: u64 },

    #[error("element does not lie in the requested subfield")]
    NotInSubfield,

    #[error("inversion of zero")]
    ZeroInverse,

    #[error("singular curve: 4a^3 + 27b^2 = 0")]
    SingularCurve,

    #[error("short Weierstrass form needs characteristic >= 5, got {0}")]
    BadCharacteristic(u64),

    #[error("group or presentation size {size} exceeds cap {max}")]
    GroupTooLarge { size: u128, max: u128 },

    #[error("incompatible points: {0}")]
    IncompatiblePoints(String),

    #[error("symbol degree {degree} exceeds presentation bound {bound}")]
    DegreeExceedsBound { degree: u32, bound: u32 },

    #[error("algebraic law violation (upstream bug): {0}")]
    LawViolation(String),

    #[error("reduction strategy not applicable: {0}")]
    StrategyInapplicable(String),

    #[error("divisor must be effective with nonempty support")]
    EmptySupport,

    #[error("{0}")]
    NotRegular(String),

    #[error("zero rational function")]
    ZeroFunction,

    #[error("no free rational point for Moebius normalization of the modulus")]
    NoFreeRationalPoint,

    #[error("curve has no rational point outside the modulus support")]
    NoRationalPoint,

    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    pub fn parse(pos: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            pos,
            msg: msg.into(),
        }
    }
}
