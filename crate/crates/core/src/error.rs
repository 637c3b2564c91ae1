use std::io;

use crate::frame::Role;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bit length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("expected {expected} bits, got {actual}")]
    BadLength { expected: usize, actual: usize },
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("message of {bits} bits exceeds the {max}-bit plaintext space")]
    MessageTooLong { bits: usize, max: usize },
    #[error("ciphertext does not decode to a valid message")]
    DecodeFailure,
    #[error("entropy parameter k={k} exceeds the {available} free ciphertext bits")]
    BadK { k: usize, available: usize },
    #[error("malformed key: {0}")]
    BadKey(String),
    #[error("group element out of range")]
    BadElement,

    #[error("unsupported extractor output width v={0}")]
    BadV(usize),
    #[error("keystream of {0} bits exceeds the 2^20 bit limit")]
    TooLong(usize),

    #[error("declared min-entropy {declared} is below the required {required}")]
    EntropyTooLow { declared: f64, required: f64 },
    #[error("transcript holds {available} seed rounds, need {required}")]
    NotEnoughFrames { available: usize, required: usize },
    #[error("rejection sampler exhausted its budget after {attempts} attempts")]
    BudgetExhausted { attempts: u64 },
    #[error("{role:?} round {round}: rejection sampler exhausted after {attempts} attempts")]
    BudgetExhaustedAt {
        role: Role,
        round: u32,
        attempts: u64,
    },
    #[error("protocol desync: {0}")]
    ProtocolDesync(String),
    #[error("engine not ready: {0}")]
    NotReady(&'static str),

    #[error("need at least {required} samples, got {actual}")]
    TooFewSamples { required: usize, actual: usize },
    #[error("distribution domains differ")]
    DomainMismatch,
    #[error("transcript shapes differ: {0}")]
    ShapeMismatch(String),

    #[error("bad frame magic {0:#06x}")]
    BadMagic(u16),
    #[error("unsupported frame version {0}")]
    BadVersion(u8),
    #[error("frame truncated")]
    Truncated,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<io::Error> for Error {
    fn from(source: io::Error) -> Self {
        Error::Io {
            context: "i/o".into(),
            source,
        }
    }
}
