use std::fmt;

use thiserror::Error;

/// Why a protocol run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortKind {
    /// A MAC or checksum did not vanish.
    TagMismatch,
    /// A party opened a commitment to something other than what it committed.
    Equivocation,
}

impl fmt::Display for AbortKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortKind::TagMismatch => f.write_str("tag mismatch"),
            AbortKind::Equivocation => f.write_str("equivocation"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("width mismatch: {0} vs {1}")]
    WidthMismatch(u32, u32),
    #[error("illegal width pairing: {0} x {1}")]
    IllegalWidthPairing(u32, u32),
    #[error("cannot lift width {from} to narrower width {to}")]
    Narrowing { from: u32, to: u32 },
    #[error("cannot reduce width {from} to wider width {to}")]
    Widening { from: u32, to: u32 },
    #[error("{0} is outside the encodable fixed-point range")]
    FixedOverflow(String),
    #[error("invalid ring parameters: {0}")]
    InvalidParams(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("need at least 2 parties, got {0}")]
    TooFewParties(usize),
    #[error("missing share from party {0}")]
    MissingParty(usize),
    #[error("missing dealer material: {0}")]
    MissingMaterial(String),
    #[error("protocol abort at `{step}`: {kind}{}", culprit_suffix(*.culprit))]
    Abort {
        kind: AbortKind,
        step: String,
        culprit: Option<usize>,
    },
    #[error("round desync: {0}")]
    Desync(String),
    #[error("ordering violation: {0}")]
    Ordering(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("invalid layer: {0}")]
    InvalidLayer(String),
    #[error("adversary: {0}")]
    Adversary(String),
    #[error("format: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(String),
}

fn culprit_suffix(c: Option<usize>) -> String {
    match c {
        Some(p) => format!(" (party {p})"),
        None => String::new(),
    }
}

impl Error {
    pub fn is_abort(&self) -> bool {
        matches!(self, Error::Abort { .. })
    }

    pub(crate) fn tag_mismatch(step: &str) -> Self {
        Error::Abort {
            kind: AbortKind::TagMismatch,
            step: step.to_string(),
            culprit: None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
