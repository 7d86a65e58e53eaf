//! String-literal aware scanning of call argument lists and collapsing of
//! message expressions into static text.

use super::grammar::ExtractionGrammar;
use super::PLACEHOLDER;
use regex::{Captures, Regex};
use std::sync::OnceLock;

fn percent_spec() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"%(?:\([^)]*\))?[#0+\-]*(?:\d+|\*)?(?:\.(?:\d+|\*))?[hlL]?[diouxXeEfFgGcrsab%]")
            .unwrap()
    })
}

fn brace_spec() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{[^{}]*\}").unwrap())
}

/// Rewrites printf-style and brace-style format specifiers to `{}`.
pub(crate) fn normalize_specifiers(text: &str, braces: bool) -> String {
    let text = percent_spec().replace_all(text, |c: &Captures| {
        if &c[0] == "%%" {
            "%".to_string()
        } else {
            PLACEHOLDER.to_string()
        }
    });
    if braces {
        brace_spec().replace_all(&text, PLACEHOLDER).into_owned()
    } else {
        text.into_owned()
    }
}

/// A quoted literal found at some offset.
struct LiteralSpan {
    /// Byte offset one past the closing quote.
    end: usize,
    text: String,
}

struct Scanner<'a> {
    src: &'a str,
    grammar: &'a ExtractionGrammar,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str, grammar: &'a ExtractionGrammar) -> Self {
        Scanner { src, grammar }
    }

    fn rest(&self, at: usize) -> &'a str {
        &self.src[at..]
    }

    /// If a string literal (with optional prefix) starts at `at`, returns the
    /// prefix length and the matched quote.
    fn literal_start(&self, at: usize) -> Option<(usize, &'a str)> {
        let rules = &self.grammar.string_literals;
        let rest = self.rest(at);
        let prefix_len = rest
            .chars()
            .take_while(|c| rules.prefixes.contains(*c))
            .take(2)
            .map(char::len_utf8)
            .sum::<usize>();
        let after = &rest[prefix_len..];
        rules
            .quotes
            .iter()
            .find(|q| after.starts_with(q.as_str()))
            .map(|q| (prefix_len, q.as_str()))
    }

    /// Reads the literal starting at `at` (prefix included).
    fn read_literal(&self, at: usize, prefix_len: usize, quote: &str) -> LiteralSpan {
        let rules = &self.grammar.string_literals;
        let prefix = &self.src[at..at + prefix_len];
        let raw = prefix.chars().any(|c| rules.raw_prefixes.contains(c));
        let format = prefix.chars().any(|c| rules.format_prefixes.contains(c));
        let body_start = at + prefix_len + quote.len();
        let mut i = body_start;
        let bytes = self.src.as_bytes();
        let mut body_end = self.src.len();
        let mut end = self.src.len();
        while i < self.src.len() {
            let c = self.src[i..].chars().next().unwrap();
            if c == rules.escape {
                i += c.len_utf8();
                if i < self.src.len() {
                    i += self.src[i..].chars().next().unwrap().len_utf8();
                }
                continue;
            }
            if self.src[i..].starts_with(quote) {
                body_end = i;
                end = i + quote.len();
                break;
            }
            // Single-line quotes end at a newline even when unterminated.
            if quote.len() == 1 && bytes[i] == b'\n' {
                body_end = i;
                end = i;
                break;
            }
            i += c.len_utf8();
        }
        let body = &self.src[body_start..body_end];
        let decoded = if raw { body.to_string() } else { decode_escapes(body, rules.escape) };
        let text = if format {
            normalize_specifiers(&interpolate(&decoded), false)
        } else {
            normalize_specifiers(&decoded, true)
        };
        LiteralSpan { end, text }
    }

    fn comment_at(&self, at: usize) -> bool {
        match &self.grammar.line_comment {
            Some(m) => self.rest(at).starts_with(m.as_str()),
            None => false,
        }
    }

    fn skip_comment(&self, at: usize) -> usize {
        match self.rest(at).find('\n') {
            Some(n) => at + n,
            None => self.src.len(),
        }
    }

    fn ident_char_before(&self, at: usize) -> bool {
        self.src[..at]
            .chars()
            .next_back()
            .is_some_and(|c| c.is_alphanumeric() || c == '_')
    }

    /// Given the offset of an opening bracket, returns the offset of its
    /// matching closing bracket, skipping literals and comments.
    pub(crate) fn find_close(&self, open: usize) -> Option<usize> {
        let mut depth = 0usize;
        let mut i = open;
        while i < self.src.len() {
            if !self.ident_char_before(i) {
                if let Some((plen, q)) = self.literal_start(i) {
                    i = self.read_literal(i, plen, q).end.max(i + 1);
                    continue;
                }
            }
            if self.comment_at(i) {
                i = self.skip_comment(i);
                continue;
            }
            let c = self.src[i..].chars().next().unwrap();
            match c {
                '(' | '[' | '{' => depth += 1,
                ')' | ']' | '}' => {
                    depth = depth.checked_sub(1)?;
                    if depth == 0 {
                        return Some(i);
                    }
                }
                _ => {}
            }
            i += c.len_utf8();
        }
        None
    }

    /// Splits at top-level occurrences of `sep`.
    fn split_top_level(&self, sep: char) -> Vec<&'a str> {
        let mut parts = Vec::new();
        let mut depth = 0usize;
        let mut start = 0;
        let mut i = 0;
        while i < self.src.len() {
            if !self.ident_char_before(i) {
                if let Some((plen, q)) = self.literal_start(i) {
                    i = self.read_literal(i, plen, q).end.max(i + 1);
                    continue;
                }
            }
            if self.comment_at(i) {
                i = self.skip_comment(i);
                continue;
            }
            let c = self.src[i..].chars().next().unwrap();
            match c {
                '(' | '[' | '{' => depth += 1,
                ')' | ']' | '}' => depth = depth.saturating_sub(1),
                c if c == sep && depth == 0 => {
                    parts.push(&self.src[start..i]);
                    start = i + c.len_utf8();
                }
                _ => {}
            }
            i += c.len_utf8();
        }
        parts.push(&self.src[start..]);
        parts
    }

    fn lex(&self) -> Vec<Tok<'a>> {
        let mut toks = Vec::new();
        let mut i = 0;
        while i < self.src.len() {
            let c = self.src[i..].chars().next().unwrap();
            if c.is_whitespace() || (c == '\\' && self.rest(i + 1).starts_with('\n')) {
                i += c.len_utf8();
                continue;
            }
            if self.comment_at(i) {
                i = self.skip_comment(i);
                continue;
            }
            if let Some((plen, q)) = self.literal_start(i) {
                let lit = self.read_literal(i, plen, q);
                toks.push(Tok::Lit(lit.text));
                i = lit.end.max(i + 1);
                continue;
            }
            if c.is_alphanumeric() || c == '_' {
                let len: usize = self.rest(i)
                    .chars()
                    .take_while(|c| c.is_alphanumeric() || *c == '_')
                    .map(char::len_utf8)
                    .sum();
                toks.push(Tok::Ident(&self.src[i..i + len]));
                i += len;
                continue;
            }
            if matches!(c, '(' | '[' | '{') {
                match self.find_close(i) {
                    Some(close) => {
                        toks.push(Tok::Group(c, &self.src[i + 1..close]));
                        i = close + 1;
                    }
                    None => {
                        toks.push(Tok::Group(c, &self.src[i + 1..]));
                        i = self.src.len();
                    }
                }
                continue;
            }
            let op = &self.grammar.concatenation.operator;
            if !op.is_empty() && self.rest(i).starts_with(op.as_str()) {
                toks.push(Tok::Concat);
                i += op.len();
                continue;
            }
            toks.push(match c {
                '%' => Tok::Percent,
                '.' => Tok::Dot,
                _ => Tok::Other,
            });
            i += c.len_utf8();
        }
        toks
    }
}

#[derive(Debug)]
enum Tok<'a> {
    Lit(String),
    Ident(&'a str),
    Group(char, &'a str),
    Concat,
    Percent,
    Dot,
    Other,
}

fn decode_escapes(body: &str, escape: char) -> String {
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars().peekable();
    while let Some(c) = chars.next() {
        if c != escape {
            out.push(if c == '\n' || c == '\r' || c == '\t' { ' ' } else { c });
            continue;
        }
        match chars.next() {
            Some('n') | Some('t') | Some('r') => out.push(' '),
            Some('\n') => {}
            Some('u') => {
                let hex: String = chars.by_ref().take(4).collect();
                match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                    Some(ch) => out.push(ch),
                    None => out.push_str(&hex),
                }
            }
            Some(other) => out.push(other),
            None => {}
        }
    }
    out
}

/// Replaces each `{expr}` of an interpolated literal by the placeholder.
fn interpolate(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '{' if chars.peek() == Some(&'{') => {
                chars.next();
                out.push('{');
            }
            '}' if chars.peek() == Some(&'}') => {
                chars.next();
                out.push('}');
            }
            '{' => {
                let mut depth = 1;
                for n in chars.by_ref() {
                    match n {
                        '{' => depth += 1,
                        '}' => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        _ => {}
                    }
                }
                out.push_str(PLACEHOLDER);
            }
            _ => out.push(c),
        }
    }
    out
}

/// Offset where a line comment starts in `line` (outside literals), or the
/// line length when there is none.
pub(crate) fn code_end(line: &str, grammar: &ExtractionGrammar) -> usize {
    let s = Scanner::new(line, grammar);
    let mut i = 0;
    while i < line.len() {
        if !s.ident_char_before(i) {
            if let Some((plen, q)) = s.literal_start(i) {
                i = s.read_literal(i, plen, q).end.max(i + 1);
                continue;
            }
        }
        if s.comment_at(i) {
            return i;
        }
        i += line[i..].chars().next().unwrap().len_utf8();
    }
    line.len()
}

/// Finds the matching close bracket for the opening bracket at `open`.
pub(crate) fn find_close(src: &str, open: usize, grammar: &ExtractionGrammar) -> Option<usize> {
    Scanner::new(src, grammar).find_close(open)
}

/// Splits an argument list at top-level commas.
pub(crate) fn split_args<'a>(args: &'a str, grammar: &'a ExtractionGrammar) -> Vec<&'a str> {
    Scanner::new(args, grammar).split_top_level(',')
}

/// Collapses a message expression into static text: literal fragments are
/// kept, every variable operand becomes `{}`.
pub(crate) fn static_text(expr: &str, grammar: &ExtractionGrammar) -> String {
    let toks = Scanner::new(expr, grammar).lex();
    let mut out = String::new();
    for term in toks.split(|t| matches!(t, Tok::Concat)) {
        out.push_str(&term_text(term, grammar));
    }
    out
}

fn term_text(term: &[Tok<'_>], grammar: &ExtractionGrammar) -> String {
    let concat = &grammar.concatenation;
    match term {
        [] => String::new(),
        [Tok::Group('(', inner)] => {
            let text = static_text(inner, grammar);
            // `(a + b)` with no literal part is one variable.
            if text.replace(PLACEHOLDER, "").is_empty() {
                PLACEHOLDER.to_string()
            } else {
                text
            }
        }
        [Tok::Lit(_), ..] => {
            let mut text = String::new();
            let mut rest = term;
            while let [Tok::Lit(s), tail @ ..] = rest {
                text.push_str(s);
                rest = tail;
                if !grammar.string_literals.adjacent_concatenation {
                    break;
                }
            }
            match rest {
                [] => text,
                [Tok::Percent, ..] if concat.percent_format => text,
                [Tok::Dot, Tok::Ident(m), Tok::Group('(', _), ..]
                    if concat.format_methods.iter().any(|f| f == m) =>
                {
                    text
                }
                _ => PLACEHOLDER.to_string(),
            }
        }
        // `String.format("...", args)` and friends.
        [.., Tok::Dot, Tok::Ident(m), Tok::Group('(', inner)]
            if concat.format_methods.iter().any(|f| f == m) =>
        {
            let first = split_args(inner, grammar)[0];
            let first_toks = Scanner::new(first, grammar).lex();
            if matches!(first_toks.first(), Some(Tok::Lit(_))) {
                static_text(first, grammar)
            } else {
                PLACEHOLDER.to_string()
            }
        }
        _ => PLACEHOLDER.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn py() -> ExtractionGrammar {
        ExtractionGrammar::python()
    }

    fn java() -> ExtractionGrammar {
        ExtractionGrammar::java()
    }

    #[test]
    fn specifiers_normalize() {
        assert_eq!(normalize_specifiers("a %s b %d c %.2f", true), "a {} b {} c {}");
        assert_eq!(normalize_specifiers("%(name)s done, 100%%", true), "{} done, 100%");
        assert_eq!(normalize_specifiers("x {} y {0} z {name:>4}", true), "x {} y {} z {}");
        assert_eq!(normalize_specifiers("100% done", true), "100% done");
    }

    #[test]
    fn java_concatenation() {
        let g = java();
        assert_eq!(
            static_text(r#""Cannot access storage directory " + rootPath"#, &g),
            "Cannot access storage directory {}"
        );
        assert_eq!(static_text(r#""a " + x + " b""#, &g), "a {} b");
        assert_eq!(static_text(r#""a " + (x + 1) + " b""#, &g), "a {} b");
        assert_eq!(static_text("msg", &g), "{}");
        assert_eq!(static_text(r#"String.format("took %d ms", t)"#, &g), "took {} ms");
        assert_eq!(static_text(r#""say \"hi\"""#, &g), r#"say "hi""#);
    }

    #[test]
    fn python_forms() {
        let g = py();
        assert_eq!(static_text(r#""disk %s nearly full""#, &g), "disk {} nearly full");
        assert_eq!(static_text(r#""a %s b" % (x,)"#, &g), "a {} b");
        assert_eq!(static_text(r#"f"loaded {n} rows from {path!r}""#, &g), "loaded {} rows from {}");
        assert_eq!(static_text(r#""x {} y {}".format(a, b)"#, &g), "x {} y {}");
        assert_eq!(static_text("\"part one \"\n    'part two'", &g), "part one part two");
        assert_eq!(static_text(r#"r"C:\path""#, &g), r"C:\path");
        assert_eq!(static_text(r#"str(e)"#, &g), "{}");
        assert_eq!(static_text(r#"f"{{literal}} {x}""#, &g), "{literal} {}");
    }

    #[test]
    fn args_split_respects_nesting_and_strings() {
        let g = py();
        let parts = split_args(r#""a, b", f(x, y), [1, 2]"#, &g);
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[0].trim(), r#""a, b""#);
    }

    #[test]
    fn close_paren_skips_literals_and_comments() {
        let g = py();
        let src = "(\")\", # )\n x)";
        assert_eq!(find_close(src, 0, &g), Some(src.len() - 1));
        assert_eq!(find_close("(unbalanced", 0, &g), None);
    }
}
