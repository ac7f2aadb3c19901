use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("{what} at {position:?} lies outside the room interior")]
    OutsideRoom {
        what: &'static str,
        position: [f64; 3],
    },

    /// Sabine inversion asks for more than total absorption.
    #[error("T60 of {t60} s is unattainable for this room (required absorption {absorption:.4} > 1)")]
    InfeasibleRoom { t60: f64, absorption: f64 },

    /// No non-negative tail scale reaches the requested DRR.
    #[error("DRR target {requested:.6} is infeasible; attainable maximum is {attainable:.6}")]
    InfeasibleDrr { requested: f64, attainable: f64 },

    #[error("no energy outside the direct-path window (anechoic input)")]
    AnechoicInput,

    #[error("signal carries no energy")]
    ZeroEnergy,

    #[error("energy decay curve only reaches {attained_db:.1} dB, need {required_db:.1} dB")]
    InsufficientDecayRange { attained_db: f64, required_db: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("sample rate mismatch: expected {expected} Hz, got {actual} Hz")]
    SampleRateMismatch { expected: u32, actual: u32 },

    #[error("signal too short: need {needed} samples, have {available}")]
    TooShort { needed: usize, available: usize },

    #[error("sampler gave up after {attempts} attempts: {reason}")]
    SamplerExhausted { attempts: usize, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
