use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sequence is not strictly increasing and positive at index {index}: {detail}")]
    NotIncreasing { index: usize, detail: String },

    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("{bits} bits is not enough: need at least {required} (max value has {value_bits} bits plus 64 guard bits)")]
    InsufficientBits {
        bits: u32,
        required: u32,
        value_bits: u64,
    },

    #[error("{what} of size {requested} exceeds the limit of {limit}")]
    TooLarge {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("level {level}: only {found} difference values reach multiplicity {threshold}, need {needed}")]
    InsufficientMultiplicity {
        level: usize,
        found: usize,
        needed: usize,
        threshold: String,
    },

    #[error("strict growth needs M = {required} at level {level}, above the budget of {budget}; use relaxed mode")]
    GrowthBudget {
        level: usize,
        required: String,
        budget: u64,
    },

    #[error("element {value} is outside the progression {base} + r*{step}, 0 <= r < {len}")]
    OutsideProgression {
        value: String,
        base: String,
        step: String,
        len: u64,
    },

    #[error("malformed point file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            detail: detail.into(),
        }
    }
}
