use thiserror::Error;

/// Errors raised by the link simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid scrambler seed {0}: must be in 1..=127")]
    InvalidSeed(u8),
    #[error("length {len} is not a multiple of {period}")]
    BadLength { len: usize, period: usize },
    #[error("expected block of {expected} bits, got {got}")]
    BlockLength { expected: usize, got: usize },
    #[error("unsupported bits per subcarrier: {0}")]
    BitsPerSubcarrier(usize),
    #[error("empty payload")]
    EmptyPayload,
    #[error("msdu length must be at least 1")]
    ZeroMsduLength,
    #[error("mpdu of {0} bytes exceeds the 4095-byte PSDU limit")]
    OversizeMpdu(usize),
    #[error("fcs check failed")]
    Fcs,
    #[error("missing fragments {0:?}")]
    MissingFragments(Vec<usize>),
    #[error("invalid mcs index {0}")]
    InvalidMcs(u8),
    #[error("psdu length {0} outside 1..=4095")]
    PsduLength(usize),
    #[error("unsupported sample rate {0} Hz")]
    SampleRate(f64),
    #[error("mixed sample rates in burst")]
    MixedSampleRates,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("empty file")]
    EmptyFile,
    #[error("invalid config: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invalid i/q capture: {0}")]
    IqFormat(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
