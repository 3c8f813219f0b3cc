use thiserror::Error;

/// Errors produced by the codec, its file formats and the metrics layer.
///
/// Parse failures always carry the byte offset at which the problem was
/// detected.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bad magic at byte {offset}: expected {expected:?}")]
    BadMagic {
        offset: usize,
        expected: &'static str,
    },
    #[error("unsupported version {version} at byte {offset}")]
    UnsupportedVersion { offset: usize, version: u8 },
    #[error("truncated input at byte {offset}: {needed} more byte(s) required")]
    Truncated { offset: usize, needed: usize },
    #[error("non-finite value at byte {offset}")]
    NonFinite { offset: usize },
    #[error("unknown inner codec id {id} at byte {offset}")]
    UnknownCodec { offset: usize, id: u8 },
    #[error("invalid header field at byte {offset}: {reason}")]
    InvalidHeader { offset: usize, reason: String },
    #[error("bitmask/layout inconsistency at byte {offset}: {reason}")]
    MaskLayoutMismatch { offset: usize, reason: String },
    #[error("sample out of 10-bit range at byte {offset}")]
    SampleOutOfRange { offset: usize },
    #[error("inner codec payload at byte {offset}: {reason}")]
    Payload { offset: usize, reason: String },
    #[error("{count} trailing byte(s) after end of stream at byte {offset}")]
    TrailingBytes { offset: usize, count: usize },

    #[error("frame count must be ≥ 1")]
    EmptySequence,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("rates must be strictly positive and strictly increasing")]
    NonMonotoneRates,
    #[error("curves have no overlapping accuracy interval")]
    NoAccuracyOverlap,
    #[error("curve text line {line}: {reason}")]
    CurveSyntax { line: usize, reason: String },
}

impl Error {
    /// Short machine-readable identifier, used by the command-line tool.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::BadMagic { .. } => "bad_magic",
            Error::UnsupportedVersion { .. } => "unsupported_version",
            Error::Truncated { .. } => "truncated",
            Error::NonFinite { .. } => "non_finite",
            Error::UnknownCodec { .. } => "unknown_codec",
            Error::InvalidHeader { .. } => "invalid_header",
            Error::MaskLayoutMismatch { .. } => "mask_layout_mismatch",
            Error::SampleOutOfRange { .. } => "sample_out_of_range",
            Error::Payload { .. } => "payload",
            Error::TrailingBytes { .. } => "trailing_bytes",
            Error::EmptySequence => "empty_sequence",
            Error::Shape(_) => "shape",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Empty(_) => "empty",
            Error::NonMonotoneRates => "non_monotone_rates",
            Error::NoAccuracyOverlap => "no_accuracy_overlap",
            Error::CurveSyntax { .. } => "curve_syntax",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
