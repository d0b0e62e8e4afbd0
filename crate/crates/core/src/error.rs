use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit code for input/validation failures.
pub const EXIT_INPUT: i32 = 2;
/// Process exit code for numerical failures (singular systems, divergence).
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("timestamps not strictly increasing at row {index}")]
    NonIncreasingTimestamps { index: usize },
    #[error("non-uniform sampling at interval {index}: {interval_ms} ms vs expected {expected_ms} ms")]
    NonUniformSampling {
        index: usize,
        interval_ms: f64,
        expected_ms: f64,
    },
    #[error("window [{start}, {end}] out of bounds for series of length {len}")]
    OutOfBounds { start: usize, end: usize, len: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("synthetic saccade does not fit in the requested duration")]
    SpecDoesNotFit,
    #[error("invalid cutoff {cutoff_hz} Hz (must lie in (0, {nyquist_hz}) Hz)")]
    InvalidCutoff { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("invalid filter order {0}")]
    InvalidOrder(usize),
    #[error("frequency {freq_hz} Hz outside [0, {nyquist_hz}] Hz")]
    OutOfBand { freq_hz: f64, nyquist_hz: f64 },
    #[error("series too short: length {len}, need more than {required}")]
    SeriesTooShort { len: usize, required: usize },
    #[error("series contains a masked sample at index {index}")]
    ContainsGaps { index: usize },
    #[error("invalid Savitzky-Golay window {0} (must be odd and >= 3)")]
    InvalidWindow(usize),
    #[error("invalid polynomial/derivative order: {0}")]
    InvalidPolyOrder(String),
    #[error("padded snippet [{start}, {end}] leaves the recording of length {len}")]
    SnippetOutOfBounds { start: i64, end: i64, len: usize },
    #[error("degenerate event: onset {onset} and offset {offset}")]
    DegenerateEvent { onset: usize, offset: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("dependent variable has zero variance")]
    ConstantDependent,
    #[error("rank-deficient design matrix")]
    RankDeficient,
    #[error("fit requires strictly positive amplitudes and velocities")]
    NonPositiveData,
    #[error("no convergence after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NoConvergence { iterations: usize, gradient_norm: f64 },
    #[error("paired differences are constant and nonzero; t is undefined")]
    ZeroVariance,
    #[error("amplitude grid is empty")]
    EmptyGrid,
    #[error("fits belong to different model families")]
    MixedModels,
    #[error("{0} samples per period is below the Nyquist limit of 2")]
    SubNyquist(f64),
    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("malformed row {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("file has no data rows")]
    EmptyFile,
    #[error("offset before onset at row {line}")]
    OffsetBeforeOnset { line: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ConstantDependent
                | Error::RankDeficient
                | Error::NoConvergence { .. }
                | Error::ZeroVariance
        )
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            EXIT_NUMERICAL
        } else {
            EXIT_INPUT
        }
    }

    /// Stable machine-readable identifier, printed by the CLI and exposed over FFI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyInput(_) => "empty_input",
            Error::NonIncreasingTimestamps { .. } => "non_increasing_timestamps",
            Error::NonUniformSampling { .. } => "non_uniform_sampling",
            Error::OutOfBounds { .. } => "out_of_bounds",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SpecDoesNotFit => "spec_does_not_fit",
            Error::InvalidCutoff { .. } => "invalid_cutoff",
            Error::InvalidOrder(_) => "invalid_order",
            Error::OutOfBand { .. } => "out_of_band",
            Error::SeriesTooShort { .. } => "series_too_short",
            Error::ContainsGaps { .. } => "contains_gaps",
            Error::InvalidWindow(_) => "invalid_window",
            Error::InvalidPolyOrder(_) => "invalid_poly_order",
            Error::SnippetOutOfBounds { .. } => "snippet_out_of_bounds",
            Error::DegenerateEvent { .. } => "degenerate_event",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::ConstantDependent => "constant_dependent",
            Error::RankDeficient => "rank_deficient",
            Error::NonPositiveData => "non_positive_data",
            Error::NoConvergence { .. } => "no_convergence",
            Error::ZeroVariance => "zero_variance",
            Error::EmptyGrid => "empty_grid",
            Error::MixedModels => "mixed_models",
            Error::SubNyquist(_) => "sub_nyquist",
            Error::NonPositiveFrequency(_) => "non_positive_frequency",
            Error::MalformedHeader(_) => "malformed_header",
            Error::MalformedRow { .. } => "malformed_row",
            Error::EmptyFile => "empty_file",
            Error::OffsetBeforeOnset { .. } => "offset_before_onset",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
