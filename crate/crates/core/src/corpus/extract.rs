use super::dataset::Dataset;
use super::grammar::ExtractionGrammar;
use super::literal;
use super::{LogInstruction, PLACEHOLDER};
use crate::error::{Error, Result};
use crate::preprocess::unify_level;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use walkdir::WalkDir;

/// A logging call as matched in source, before level unification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedCall {
    pub line: usize,
    /// The call, joined onto a single line with comments removed.
    pub raw: String,
    pub level_tag: String,
    pub static_text: String,
    pub variable_count: usize,
}

impl ExtractedCall {
    /// Unifies the level tag; unsupported tags come back as the error.
    pub fn into_instruction(self, system: &str, file_path: &str) -> Result<LogInstruction> {
        let level = unify_level(&self.level_tag)?;
        Ok(LogInstruction {
            system: system.to_string(),
            file_path: file_path.to_string(),
            line: self.line,
            raw: self.raw,
            static_text: self.static_text,
            level,
            variable_count: self.variable_count,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SkipReport {
    pub files: Vec<SkippedFile>,
    /// Calls whose level tag does not unify to info/warning/error, by tag.
    pub unsupported_levels: BTreeMap<String, usize>,
    /// Call heads whose argument list never closes.
    pub unbalanced_calls: usize,
}

impl SkipReport {
    pub fn skipped_calls(&self) -> usize {
        self.unsupported_levels.values().sum::<usize>() + self.unbalanced_calls
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub dataset: Dataset,
    pub skips: SkipReport,
}

fn whitespace_collapsed(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Joins a (possibly multi-line) call onto one line, dropping line comments
/// and explicit line continuations.
fn join_lines(text: &str, grammar: &ExtractionGrammar) -> String {
    let mut out = String::with_capacity(text.len());
    for (i, line) in text.split('\n').enumerate() {
        let code = &line[..literal::code_end(line, grammar)];
        let code = if i == 0 { code.trim_end() } else { code.trim() };
        let code = code.strip_suffix('\\').map(str::trim_end).unwrap_or(code);
        if code.is_empty() {
            continue;
        }
        if !out.is_empty() && !out.ends_with(['(', '[', '{']) && !code.starts_with([')', ']', '}', ',']) {
            out.push(' ');
        }
        out.push_str(code);
    }
    out
}

fn commented_out(source: &str, at: usize, grammar: &ExtractionGrammar) -> bool {
    let line_start = source[..at].rfind('\n').map_or(0, |i| i + 1);
    let prefix = &source[line_start..at];
    match &grammar.line_comment {
        Some(marker) => literal::code_end(prefix, grammar) < prefix.len() || prefix.trim_start().starts_with(marker.as_str()),
        None => false,
    }
}

struct Scan {
    calls: Vec<ExtractedCall>,
    unbalanced: usize,
}

fn scan_source(source: &str, grammar: &ExtractionGrammar) -> Scan {
    let mut heads: Vec<(usize, String, usize)> = grammar
        .patterns
        .iter()
        .flat_map(|re| {
            re.captures_iter(source).map(|c| {
                let whole = c.get(0).unwrap();
                let args = c.name("args").unwrap();
                // `args` marks the opening parenthesis.
                let open = args.end() - 1;
                (whole.start(), c["level"].to_string(), open)
            })
        })
        .collect();
    heads.sort();
    heads.dedup_by_key(|h| h.0);

    let mut calls = Vec::new();
    let mut unbalanced = 0;
    let mut consumed = 0;
    for (start, level_tag, open) in heads {
        if start < consumed || !source[open..].starts_with('(') || commented_out(source, start, grammar) {
            continue;
        }
        let Some(close) = literal::find_close(source, open, grammar) else {
            unbalanced += 1;
            continue;
        };
        consumed = close + 1;
        let args = &source[open + 1..close];
        let first = literal::split_args(args, grammar)[0].trim();
        let static_text = whitespace_collapsed(&literal::static_text(first, grammar));
        let variable_count = static_text.matches(PLACEHOLDER).count();
        calls.push(ExtractedCall {
            line: source[..start].matches('\n').count() + 1,
            raw: join_lines(&source[start..=close], grammar),
            level_tag,
            static_text,
            variable_count,
        });
    }
    Scan { calls, unbalanced }
}

/// Extracts every logging call matched by `grammar`, in source order.
///
/// Levels are left as written; see [`ExtractedCall::into_instruction`].
pub fn extract_file(source: &str, grammar: &ExtractionGrammar) -> Vec<ExtractedCall> {
    scan_source(source, grammar).calls
}

struct FileResult {
    instructions: Vec<LogInstruction>,
    skipped: Option<SkippedFile>,
    unsupported: Vec<String>,
    unbalanced: usize,
}

fn process_file(path: &Path, rel: &str, grammar: &ExtractionGrammar, system: &str) -> FileResult {
    let mut result = FileResult {
        instructions: Vec::new(),
        skipped: None,
        unsupported: Vec::new(),
        unbalanced: 0,
    };
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) => {
            result.skipped = Some(SkippedFile {
                path: rel.to_string(),
                reason: e.to_string(),
            });
            return result;
        }
    };
    let source = match String::from_utf8(bytes) {
        Ok(s) => s,
        Err(_) => {
            result.skipped = Some(SkippedFile {
                path: rel.to_string(),
                reason: "not valid UTF-8".into(),
            });
            return result;
        }
    };
    let scan = scan_source(&source, grammar);
    result.unbalanced = scan.unbalanced;
    for call in scan.calls {
        let tag = call.level_tag.to_ascii_lowercase();
        match call.into_instruction(system, rel) {
            Ok(instr) => result.instructions.push(instr),
            Err(_) => result.unsupported.push(tag),
        }
    }
    result
}

/// Extracts all log instructions below `root` from files whose extension
/// matches one of `grammars`. Per-file failures are collected in the skip
/// report; only an unreadable root is fatal.
pub fn extract_tree(root: &Path, grammars: &[ExtractionGrammar], system: &str) -> Result<Extraction> {
    let meta = std::fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        if let Some(g) = grammars.iter().find(|g| g.matches_extension(entry.path())) {
            let rel = entry
                .path()
                .strip_prefix(root)
                .unwrap_or(entry.path())
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            files.push((entry.path().to_path_buf(), rel, g));
        }
    }

    let results: Vec<FileResult> = files
        .par_iter()
        .map(|(path, rel, g)| process_file(path, rel, g, system))
        .collect();

    let mut samples = Vec::new();
    let mut skips = SkipReport::default();
    for r in results {
        samples.extend(r.instructions);
        skips.files.extend(r.skipped);
        skips.unbalanced_calls += r.unbalanced;
        for tag in r.unsupported {
            *skips.unsupported_levels.entry(tag).or_default() += 1;
        }
    }
    Ok(Extraction {
        dataset: Dataset::new(samples),
        skips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Level;

    #[test]
    fn java_concatenated_variable() {
        let src = "class A {\n  void f() {\n    LOG.info(\"Cannot access storage directory \" + rootPath);\n  }\n}\n";
        let calls = extract_file(src, &ExtractionGrammar::java());
        assert_eq!(calls.len(), 1);
        let c = &calls[0];
        assert_eq!(c.line, 3);
        assert_eq!(c.level_tag, "info");
        assert_eq!(c.static_text, "Cannot access storage directory {}");
        assert_eq!(c.variable_count, 1);
        assert_eq!(c.raw, "LOG.info(\"Cannot access storage directory \" + rootPath)");
    }

    #[test]
    fn python_percent_style() {
        let src = "import logging\n\nlogging.warning(\"disk %s nearly full\", disk)\n";
        let calls = extract_file(src, &ExtractionGrammar::python());
        assert_eq!(calls.len(), 1);
        assert_eq!(calls[0].level_tag, "warning");
        assert_eq!(calls[0].static_text, "disk {} nearly full");
        assert_eq!(calls[0].variable_count, 1);
    }

    #[test]
    fn no_calls_no_output() {
        assert!(extract_file("def f():\n    return 1\n", &ExtractionGrammar::python()).is_empty());
    }

    #[test]
    fn multi_line_call_is_joined() {
        let src = "logger.error(\n    \"failed to open %s: %s\",  # path, reason\n    path,\n    err,\n)\n";
        let calls = extract_file(src, &ExtractionGrammar::python());
        assert_eq!(calls.len(), 1);
        assert_eq!(calls[0].line, 1);
        assert_eq!(calls[0].static_text, "failed to open {}: {}");
        assert_eq!(calls[0].raw, "logger.error(\"failed to open %s: %s\", path, err,)");
        let again = extract_file(&calls[0].raw, &ExtractionGrammar::python());
        assert_eq!(again[0].static_text, calls[0].static_text);
    }

    #[test]
    fn commented_calls_ignored() {
        let src = "# logger.info(\"old\")\nx = 1  # logger.info(\"also old\")\nlogger.info(\"live\")\n";
        let calls = extract_file(src, &ExtractionGrammar::python());
        assert_eq!(calls.len(), 1);
        assert_eq!(calls[0].static_text, "live");
    }

    #[test]
    fn variable_only_message_kept() {
        let calls = extract_file("log.error(e.getMessage());", &ExtractionGrammar::java());
        assert_eq!(calls[0].static_text, "{}");
        let instr = calls[0].clone().into_instruction("s", "f").unwrap();
        assert!(instr.is_variable_only());
        assert_eq!(instr.level, Level::Error);
    }

    #[test]
    fn unsupported_levels_rejected_on_unification() {
        let calls = extract_file("LOG.debug(\"x\");", &ExtractionGrammar::java());
        assert!(calls[0].clone().into_instruction("s", "f").is_err());
    }

    #[test]
    fn unbalanced_call_counted() {
        let scan = scan_source("logger.info(\"never closed\"\n", &ExtractionGrammar::python());
        assert!(scan.calls.is_empty());
        assert_eq!(scan.unbalanced, 1);
    }

    #[test]
    fn missing_root_is_fatal() {
        let err = extract_tree(Path::new("/definitely/not/here"), &[ExtractionGrammar::java()], "s").unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here"));
    }
}
