//! Log instruction extraction from source trees and the JSONL dataset format.
//!
//! Extraction is regex-driven: a grammar locates the head of a logging call
//! (`logger.info(`), a small scanner reads the balanced argument list, and the
//! first argument is collapsed into static text with `{}` at every variable
//! position.

mod dataset;
mod extract;
mod grammar;
mod literal;

pub use dataset::{read_dataset, write_dataset, Dataset};
pub use extract::{extract_file, extract_tree, ExtractedCall, Extraction, SkipReport, SkippedFile};
pub use grammar::{ConcatenationRule, ExtractionGrammar, GrammarFile, StringLiteralRules};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Placeholder substituted for every variable part of a log message.
pub const PLACEHOLDER: &str = "{}";

/// Log level after unification. Ordering follows increasing severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Info,
    Warning,
    Error,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Info, Level::Warning, Level::Error];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Info => "info",
            Level::Warning => "warning",
            Level::Error => "error",
        }
    }

    pub fn parse(s: &str) -> Option<Level> {
        match s {
            "info" => Some(Level::Info),
            "warning" => Some(Level::Warning),
            "error" => Some(Level::Error),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One extracted log instruction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogInstruction {
    pub system: String,
    pub file_path: String,
    pub line: usize,
    pub raw: String,
    pub static_text: String,
    pub level: Level,
    pub variable_count: usize,
}

impl LogInstruction {
    /// Stable identifier `system:file_path:line`.
    pub fn id(&self) -> String {
        format!("{}:{}:{}", self.system, self.file_path, self.line)
    }

    /// True when the static text carries no literal characters at all,
    /// i.e. the instruction only logs variables. Such instructions are kept
    /// and reported as low quality downstream.
    pub fn is_variable_only(&self) -> bool {
        self.static_text.replace(PLACEHOLDER, "").trim().is_empty()
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.raw.is_empty() {
            return Err("empty `raw`".into());
        }
        if self.line == 0 {
            return Err("`line` must be positive".into());
        }
        let placeholders = self.static_text.matches(PLACEHOLDER).count();
        if placeholders != self.variable_count {
            return Err(format!(
                "`variable_count` is {} but static text has {} placeholders",
                self.variable_count, placeholders
            ));
        }
        Ok(())
    }
}
