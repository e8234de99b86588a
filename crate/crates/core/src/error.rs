use thiserror::Error;

/// Errors raised by the link primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what}: expected length {expected}, got {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("unsupported QAM order {0} (expected 4, 16 or 64)")]
    QamOrder(usize),
    #[error("{what} must be a power of two, got {value}")]
    NotPowerOfTwo { what: &'static str, value: usize },
    #[error("code channel index {index} out of range for {nc} subcarriers")]
    CodeIndex { index: usize, nc: usize },
    #[error("code channel index {0} selected twice")]
    DuplicateCode(usize),
    #[error("{channels} code channels requested but only {nc} subcarriers")]
    TooManyChannels { channels: usize, nc: usize },
    #[error("{0} code channels: spread symbols can vanish unless the count is odd")]
    EvenChannels(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("{0}")]
    Domain(&'static str),
    #[error("exhaustive search over {combinations} vectors exceeds budget of {budget}")]
    Budget { combinations: u128, budget: u128 },
    #[error("zero transmit reference at subcarrier {subcarrier}, symbol {symbol}")]
    ZeroReference { subcarrier: usize, symbol: usize },
    #[error("deep fade at subcarrier {subcarrier}, symbol {symbol}")]
    DeepFade { subcarrier: usize, symbol: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
