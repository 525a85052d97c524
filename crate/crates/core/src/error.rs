use std::fmt;

/// Pipeline stage, attached to errors raised inside [`crate::pipeline::run_window`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    PhaseDifference,
    StabilityGate,
    Hampel,
    AmplitudeCalibration,
    PhaseCalibration,
    DelayTransform,
    DelayFilter,
    Selection,
    Wavelet,
    BandPass,
    Detection,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::PhaseDifference => "phase-difference",
            Stage::StabilityGate => "stability-gate",
            Stage::Hampel => "hampel",
            Stage::AmplitudeCalibration => "amplitude-calibration",
            Stage::PhaseCalibration => "phase-calibration",
            Stage::DelayTransform => "delay-transform",
            Stage::DelayFilter => "delay-filter",
            Stage::Selection => "selection",
            Stage::Wavelet => "wavelet",
            Stage::BandPass => "band-pass",
            Stage::Detection => "detection",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("no dominant path: CIR slice (t={t}, tx={tx}, rx={rx}) is all zero")]
    NoDominantPath { t: usize, tx: usize, rx: usize },

    #[error("degenerate phase fit: all subcarrier amplitudes are zero")]
    DegenerateFit,

    #[error("MAD selection needs at least 3 series, got {0}")]
    TooFewSeries(usize),

    #[error("series too short for db4 level {level}: need {needed} samples, got {len}")]
    SeriesTooShort { level: u32, needed: usize, len: usize },

    #[error("no spectrum bins between {low} Hz and {high} Hz")]
    EmptyBand { low: f64, high: f64 },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown system {name:?}; valid systems: {valid}")]
    UnknownSystem { name: String, valid: String },

    #[error("bad magic: expected \"CSIR\", found {found:?}")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported recording format version {0}")]
    UnsupportedVersion(u8),

    #[error("unsupported recording layout: {0}")]
    UnsupportedLayout(String),

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: u64, actual: u64 },

    #[error("payload size mismatch: expected {expected} bytes, found {actual}")]
    TrailingBytes { expected: u64, actual: u64 },

    #[error("non-finite sample at flat index {index}")]
    NonFinite { index: usize },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("ground truth gap: no truth row within {tolerance_s} s of t = {at_s} s (gap from {from_s} s to {to_s} s)")]
    TruthGap {
        at_s: f64,
        from_s: f64,
        to_s: f64,
        tolerance_s: f64,
    },

    #[error("ground truth parse error at line {line}: {message}")]
    Truth { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn at(self, stage: Stage) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Stable short identifier for the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::NoDominantPath { .. } => "no-dominant-path",
            Error::DegenerateFit => "degenerate-fit",
            Error::TooFewSeries(_) => "too-few-series",
            Error::SeriesTooShort { .. } => "series-too-short",
            Error::EmptyBand { .. } => "empty-band",
            Error::Estimation(_) => "estimation",
            Error::Stage { source, .. } => source.code(),
            Error::UnknownSystem { .. } => "unknown-system",
            Error::BadMagic { .. } => "bad-magic",
            Error::UnsupportedVersion(_) => "unsupported-version",
            Error::UnsupportedLayout(_) => "unsupported-layout",
            Error::TruncatedPayload { .. } => "truncated-payload",
            Error::TrailingBytes { .. } => "trailing-bytes",
            Error::NonFinite { .. } => "non-finite",
            Error::Config { .. } => "config",
            Error::TruthGap { .. } => "truth-gap",
            Error::Truth { .. } => "truth",
            Error::Io(_) => "io",
        }
    }

    /// True for failures of the estimator itself, as opposed to bad input or I/O.
    pub fn is_estimation_failure(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_estimation_failure(),
            Error::Estimation(_)
            | Error::EmptyBand { .. }
            | Error::NoDominantPath { .. }
            | Error::DegenerateFit => true,
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
