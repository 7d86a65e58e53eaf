use crate::corpus::Level;
use crate::error::{Error, Result};

/// Maps an ecosystem-specific level tag onto the three in-scope levels.
///
/// Matching is case-insensitive. `exception` is Python's
/// `logger.exception`, which logs at error severity. Trace, debug, fatal
/// and critical tags are out of scope and come back as
/// [`Error::UnsupportedLevel`].
pub fn unify_level(raw: &str) -> Result<Level> {
    let tag = raw.trim().to_ascii_lowercase();
    match tag.as_str() {
        "info" | "information" => Ok(Level::Info),
        "warn" | "warning" => Ok(Level::Warning),
        "error" | "err" | "severe" | "exception" => Ok(Level::Error),
        _ => Err(Error::UnsupportedLevel(raw.to_string())),
    }
}
