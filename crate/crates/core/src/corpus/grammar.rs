use crate::error::{Error, Result};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::path::Path;

const JAVA: &str = include_str!("../../data/grammars/java.json");
const PYTHON: &str = include_str!("../../data/grammars/python.json");

/// On-disk grammar description.
///
/// Each entry of `call_patterns` is a regular expression with exactly one
/// named group `level` (the raw level tag) and one named group `args` that
/// matches the opening parenthesis of the argument list. The argument list
/// itself is read by a string-aware bracket scanner, so calls spanning
/// several lines are handled.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrammarFile {
    pub language: String,
    pub extensions: Vec<String>,
    pub call_patterns: Vec<String>,
    #[serde(default)]
    pub string_literals: StringLiteralRules,
    #[serde(default)]
    pub concatenation: ConcatenationRule,
    /// Line comment marker; matches on commented-out lines are ignored.
    #[serde(default)]
    pub line_comment: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StringLiteralRules {
    /// Quote delimiters, longest first (`"""` must precede `"`).
    pub quotes: Vec<String>,
    pub escape: char,
    /// Characters allowed as literal prefixes (`f"..."`, `r'...'`).
    #[serde(default)]
    pub prefixes: String,
    /// Prefixes marking interpolated literals; `{expr}` becomes a variable.
    #[serde(default)]
    pub format_prefixes: String,
    /// Prefixes disabling escape processing.
    #[serde(default)]
    pub raw_prefixes: String,
    /// Adjacent literals concatenate implicitly (`"a" "b"`).
    #[serde(default)]
    pub adjacent_concatenation: bool,
}

impl Default for StringLiteralRules {
    fn default() -> Self {
        StringLiteralRules {
            quotes: vec!["\"".into()],
            escape: '\\',
            prefixes: String::new(),
            format_prefixes: String::new(),
            raw_prefixes: String::new(),
            adjacent_concatenation: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcatenationRule {
    /// Binary operator joining literal fragments and variables.
    pub operator: String,
    /// `"fmt %s" % args` collapses to the format literal.
    #[serde(default)]
    pub percent_format: bool,
    /// Method names that format their receiver or first argument
    /// (`"a {}".format(x)`, `String.format("a %s", x)`).
    #[serde(default)]
    pub format_methods: Vec<String>,
}

impl Default for ConcatenationRule {
    fn default() -> Self {
        ConcatenationRule {
            operator: "+".into(),
            percent_format: false,
            format_methods: Vec::new(),
        }
    }
}

/// A validated, compiled grammar.
#[derive(Debug, Clone)]
pub struct ExtractionGrammar {
    pub language: String,
    pub extensions: Vec<String>,
    pub(crate) patterns: Vec<Regex>,
    pub string_literals: StringLiteralRules,
    pub concatenation: ConcatenationRule,
    pub line_comment: Option<String>,
}

impl ExtractionGrammar {
    pub fn compile(file: GrammarFile) -> Result<Self> {
        let bad = |reason: String| Error::Grammar {
            language: file.language.clone(),
            reason,
        };
        if file.language.trim().is_empty() {
            return Err(bad("empty language tag".into()));
        }
        if file.extensions.is_empty() {
            return Err(bad("no file extensions".into()));
        }
        if file.call_patterns.is_empty() {
            return Err(bad("no call patterns".into()));
        }
        if file.string_literals.quotes.is_empty() || file.string_literals.quotes.iter().any(|q| q.is_empty()) {
            return Err(bad("string literal quotes must be non-empty".into()));
        }
        let mut patterns = Vec::with_capacity(file.call_patterns.len());
        for (i, src) in file.call_patterns.iter().enumerate() {
            let re = Regex::new(src).map_err(|e| bad(format!("pattern {i}: {e}")))?;
            for group in ["level", "args"] {
                let n = re.capture_names().flatten().filter(|n| *n == group).count();
                if n != 1 {
                    return Err(bad(format!(
                        "pattern {i} must name exactly one `{group}` group, found {n}"
                    )));
                }
            }
            patterns.push(re);
        }
        let mut quotes = file.string_literals.quotes.clone();
        quotes.sort_by_key(|q| std::cmp::Reverse(q.len()));
        Ok(ExtractionGrammar {
            language: file.language,
            extensions: file.extensions.iter().map(|e| e.trim_start_matches('.').to_string()).collect(),
            patterns,
            string_literals: StringLiteralRules {
                quotes,
                ..file.string_literals
            },
            concatenation: file.concatenation,
            line_comment: file.line_comment,
        })
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let file: GrammarFile = serde_json::from_str(src).map_err(|e| Error::Grammar {
            language: "<unparsed>".into(),
            reason: e.to_string(),
        })?;
        Self::compile(file)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&src)
    }

    /// Log4j / SLF4J style `logger.<level>(...)`.
    pub fn java() -> Self {
        Self::from_json(JAVA).expect("bundled java grammar is valid")
    }

    /// `logging.<level>(...)` and `logger.<level>(...)`.
    pub fn python() -> Self {
        Self::from_json(PYTHON).expect("bundled python grammar is valid")
    }

    /// Looks up a bundled grammar by language tag.
    pub fn bundled(language: &str) -> Option<Self> {
        match language.to_ascii_lowercase().as_str() {
            "java" => Some(Self::java()),
            "python" | "py" => Some(Self::python()),
            _ => None,
        }
    }

    pub fn matches_extension(&self, path: &Path) -> bool {
        path.extension()
            .and_then(|e| e.to_str())
            .is_some_and(|ext| self.extensions.iter().any(|x| x == ext))
    }
}
