use thiserror::Error;

/// Library-wide error type.
///
/// The split mirrors how callers have to react: `Input` means the request
/// itself is malformed, `Size` means a hard resource cap would be exceeded,
/// `Analysis` means a numeric routine could not produce a usable answer, and
/// `Bracket` means a root search was asked to bisect an interval whose
/// endpoints do not straddle the feature being located.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("size limit exceeded: {0}")]
    Size(String),
    #[error("analysis failed: {0}")]
    Analysis(String),
    #[error("bracket does not straddle a sign change: {0}")]
    Bracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub(crate) fn size_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Size(msg.into()))
}
