use thiserror::Error;

/// Every failure the library can report.
///
/// Variant names double as the stable error identifiers printed by the CLI,
/// see [`Error::name`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("not a RIFF/WAVE file")]
    NotWav,
    #[error("unsupported WAV encoding: format tag {format}, {bits} bits per sample")]
    UnsupportedEncoding { format: u16, bits: u16 },
    #[error("audio contains no samples")]
    EmptyAudio,
    #[error("invalid audio clip: {0}")]
    InvalidClip(String),
    #[error("I/O failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error("PNG failure: {0}")]
    Png(String),

    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("header value out of range: {0}")]
    HeaderOutOfRange(String),
    #[error("{len} samples do not fit a {side}x{side} raster (capacity {capacity})")]
    CapacityExceeded {
        len: usize,
        side: usize,
        capacity: usize,
    },
    #[error("header length {len} exceeds raster capacity {capacity}")]
    LengthExceedsCapacity { len: usize, capacity: usize },

    #[error("frame length {0} is not a power of two")]
    BadLength(usize),
    #[error("signal of {len} samples is shorter than one {frame_size}-sample frame")]
    TooShort { len: usize, frame_size: usize },
    #[error("spectrogram does not match analysis configuration")]
    ConfigMismatch,
    #[error("median kernel must be odd and at least 3, got {0}")]
    BadKernel(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("rolloff fraction must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("contrast band {band} has no frequency bins at sample rate {sample_rate} Hz")]
    BandEmpty { band: usize, sample_rate: u32 },

    #[error("patch side must be even, got {0}")]
    BadZ(usize),
    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("training data needs at least two classes with two samples each")]
    DegenerateDataset,
    #[error("label {0:?} is not known to the model")]
    UnknownLabel(String),
    #[error("invalid model file: {0}")]
    BadModel(String),
    #[error("invalid manifest: {0}")]
    BadManifest(String),
}

impl Error {
    /// Stable identifier of the variant, e.g. `"CapacityExceeded"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotWav => "NotWav",
            Error::UnsupportedEncoding { .. } => "UnsupportedEncoding",
            Error::EmptyAudio => "EmptyAudio",
            Error::InvalidClip(_) => "InvalidClip",
            Error::IoFailure(_) => "IoFailure",
            Error::Png(_) => "PngFailure",
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::HeaderOutOfRange(_) => "HeaderOutOfRange",
            Error::CapacityExceeded { .. } => "CapacityExceeded",
            Error::LengthExceedsCapacity { .. } => "LengthExceedsCapacity",
            Error::BadLength(_) => "BadLength",
            Error::TooShort { .. } => "TooShort",
            Error::ConfigMismatch => "ConfigMismatch",
            Error::BadKernel(_) => "BadKernel",
            Error::EmptyInput => "EmptyInput",
            Error::BadAlpha(_) => "BadAlpha",
            Error::BandEmpty { .. } => "BandEmpty",
            Error::BadZ(_) => "BadZ",
            Error::BadParameter(_) => "BadParameter",
            Error::DegenerateDataset => "DegenerateDataset",
            Error::UnknownLabel(_) => "UnknownLabel",
            Error::BadModel(_) => "BadModel",
            Error::BadManifest(_) => "BadManifest",
        }
    }
}

impl From<png::DecodingError> for Error {
    fn from(e: png::DecodingError) -> Self {
        match e {
            png::DecodingError::IoError(io) => Error::IoFailure(io),
            other => Error::Png(other.to_string()),
        }
    }
}

impl From<png::EncodingError> for Error {
    fn from(e: png::EncodingError) -> Self {
        match e {
            png::EncodingError::IoError(io) => Error::IoFailure(io),
            other => Error::Png(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
