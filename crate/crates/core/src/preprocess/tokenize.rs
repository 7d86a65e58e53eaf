use crate::corpus::PLACEHOLDER;
use crate::error::{Error, Result};
use std::collections::HashSet;
use std::path::Path;

/// Token standing for a variable part of the message.
pub const VAR_TOKEN: &str = "<var>";

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// A stopword set loaded from a one-word-per-line file.
#[derive(Debug, Clone, Default)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    /// The bundled English list (326 words, frozen snapshot).
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Self {
        Stopwords(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect(),
        )
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)
            .map(|t| Self::parse(&t))
            .map_err(|e| Error::io(path, e))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Splits camelCase boundaries: `maxPoolSize` → `max`, `Pool`, `Size`;
/// `HTTPServer` → `HTTP`, `Server`.
pub(crate) fn split_camel(word: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = word.char_indices().collect();
    let mut parts = Vec::new();
    let mut start = 0;
    for i in 1..chars.len() {
        let (pos, c) = chars[i];
        let prev = chars[i - 1].1;
        let next_lower = chars.get(i + 1).is_some_and(|(_, n)| n.is_lowercase());
        let boundary = c.is_uppercase()
            && (prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower));
        if boundary {
            parts.push(&word[start..pos]);
            start = pos;
        }
    }
    parts.push(&word[start..]);
    parts
}

/// Tokenizes static text for the level models.
///
/// The steps run in a fixed order: placeholders become [`VAR_TOKEN`], the
/// text is split on whitespace, then on camelCase and snake_case
/// boundaries, every character outside `[A-Za-z0-9]` acts as a separator
/// and is dropped, tokens are lowercased, stopwords and empty tokens are
/// removed.
pub fn tokenize(static_text: &str, stopwords: &Stopwords) -> Vec<String> {
    let marked = static_text.replace(PLACEHOLDER, &format!(" {VAR_TOKEN} "));
    let mut tokens = Vec::new();
    for word in marked.split_whitespace() {
        if word == VAR_TOKEN {
            tokens.push(VAR_TOKEN.to_string());
            continue;
        }
        for snake in word.split('_') {
            for piece in split_camel(snake) {
                for frag in piece.split(|c: char| !c.is_ascii_alphanumeric()) {
                    if frag.is_empty() {
                        continue;
                    }
                    let lower = frag.to_ascii_lowercase();
                    if !stopwords.contains(&lower) {
                        tokens.push(lower);
                    }
                }
            }
        }
    }
    tokens
}
