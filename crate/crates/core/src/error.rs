use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("bandwidth {h} outside (0, {h0}]")]
    BandwidthOutOfRange { h: f64, h0: f64 },
    #[error("no observation within h0 of the estimation point")]
    GridEmpty,
    #[error("no observation within bandwidth {0}")]
    EmptyWindow(f64),
    #[error("sample carries no regression function")]
    NoTruth,
    #[error("parameter lambda = {lambda} outside the admissible range {range}")]
    LambdaOutOfRange { lambda: f64, range: String },
    #[error("too few samples: n = {n} below the well-posedness threshold {threshold}")]
    TooFewSamples { n: f64, threshold: f64 },
    #[error("chain exceeded magnitude guard {guard} at step {step}")]
    ExplosiveChain { step: usize, guard: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
