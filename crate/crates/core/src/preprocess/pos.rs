use crate::corpus::{LogInstruction, PLACEHOLDER};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::sync::{Arc, OnceLock};

/// Coarse part-of-speech categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tag {
    Noun,
    Verb,
    Adj,
    Adv,
    Adp,
    Part,
    Pron,
    Det,
    Aux,
    Num,
    Punct,
    Sym,
    X,
    Placeholder,
    Cconj,
    Sconj,
}

impl Tag {
    pub const ALL: [Tag; 16] = [
        Tag::Noun,
        Tag::Verb,
        Tag::Adj,
        Tag::Adv,
        Tag::Adp,
        Tag::Part,
        Tag::Pron,
        Tag::Det,
        Tag::Aux,
        Tag::Num,
        Tag::Punct,
        Tag::Sym,
        Tag::X,
        Tag::Placeholder,
        Tag::Cconj,
        Tag::Sconj,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Noun => "NOUN",
            Tag::Verb => "VERB",
            Tag::Adj => "ADJ",
            Tag::Adv => "ADV",
            Tag::Adp => "ADP",
            Tag::Part => "PART",
            Tag::Pron => "PRON",
            Tag::Det => "DET",
            Tag::Aux => "AUX",
            Tag::Num => "NUM",
            Tag::Punct => "PUNCT",
            Tag::Sym => "SYM",
            Tag::X => "X",
            Tag::Placeholder => "PLACEHOLDER",
            Tag::Cconj => "CCONJ",
            Tag::Sconj => "SCONJ",
        }
    }

    pub fn parse(s: &str) -> Option<Tag> {
        Tag::ALL.into_iter().find(|t| t.as_str() == s)
    }

    /// True for tags that stand for a word rather than punctuation, symbols
    /// or a variable slot.
    pub fn is_word(self) -> bool {
        !matches!(self, Tag::Punct | Tag::Sym | Tag::Placeholder)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The part-of-speech sequence of one static text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinguisticStructure {
    pub tags: Vec<Tag>,
}

impl LinguisticStructure {
    /// Space-joined tag names, used as the group key.
    pub fn key(&self) -> String {
        self.tags.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(" ")
    }

    /// Model input for the structure channel: one lowercase token per tag.
    pub fn tokens(&self) -> Vec<String> {
        self.tags.iter().map(|t| t.as_str().to_ascii_lowercase()).collect()
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

const CONTRACTIONS: [&str; 6] = ["s", "re", "ll", "ve", "d", "m"];

/// Length of a contraction suffix (`'s`, `'re`, ...) starting at `rest`.
fn contraction_at(rest: &str) -> Option<usize> {
    let tail = rest.strip_prefix('\'')?;
    CONTRACTIONS.iter().find_map(|c| {
        let after = tail.get(c.len()..)?;
        (tail[..c.len()].eq_ignore_ascii_case(c) && !after.starts_with(is_word_char)).then_some(c.len() + 1)
    })
}

fn push_word<'a>(out: &mut Vec<&'a str>, word: &'a str) {
    let lower = word.to_ascii_lowercase();
    if lower == "cannot" {
        out.push(&word[..3]);
        out.push(&word[3..]);
    } else if lower.len() > 3 && lower.ends_with("n't") {
        let cut = word.len() - 3;
        out.push(&word[..cut]);
        out.push(&word[cut..]);
    } else if let Some(pos) = word.rfind('\'').filter(|&p| contraction_at(&word[p..]).is_some() && p > 0) {
        out.push(&word[..pos]);
        out.push(&word[pos..]);
    } else {
        out.push(word);
    }
}

/// Splits static text into the words that get tagged, before any stopword
/// removal. `{}` is one word, word characters joined by inner `.`, `-` or
/// `'` stay together (`org.apache.Foo`, `multi-page`), clitics are split off
/// (`can't` → `ca`, `n't`), and a run of one punctuation character is one
/// word.
pub fn pos_words(static_text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut i = 0;
    let s = static_text;
    while i < s.len() {
        let rest = &s[i..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
        } else if rest.starts_with(PLACEHOLDER) {
            out.push(PLACEHOLDER);
            i += PLACEHOLDER.len();
        } else if is_word_char(c) {
            let mut end = i;
            let mut chars = s[i..].char_indices().peekable();
            while let Some((off, ch)) = chars.next() {
                if is_word_char(ch) {
                    end = i + off + ch.len_utf8();
                } else if matches!(ch, '.' | '-' | '\'') && chars.peek().is_some_and(|&(_, n)| is_word_char(n)) {
                    continue;
                } else {
                    break;
                }
            }
            push_word(&mut out, &s[i..end]);
            i = end;
        } else if let Some(n) = contraction_at(rest) {
            out.push(&rest[..n]);
            i += n;
        } else {
            let run = rest.chars().take_while(|&x| x == c).count() * c.len_utf8();
            out.push(&rest[..run]);
            i += run;
        }
    }
    out
}

#[derive(Debug)]
struct MorphRule {
    only_if: Option<String>,
    cmd: String,
    x: String,
    tag: String,
}

#[derive(Debug)]
struct ContextRule {
    from: String,
    to: String,
    cmd: String,
    x: String,
    y: String,
}

/// Transformation-based tagger: lexicon lookup, affix rules for unknown
/// words, then contextual rewrite rules. Produces Penn Treebank tags.
#[derive(Debug)]
struct Brill {
    lexicon: HashMap<String, String>,
    morphology: Vec<MorphRule>,
    context: Vec<ContextRule>,
    overrides: HashMap<String, Tag>,
}

fn data_lines(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines()
        .filter(|l| !l.starts_with(";;;") && !l.starts_with('#'))
        .map(|l| l.split_whitespace().collect::<Vec<_>>())
        .filter(|f| !f.is_empty())
}

const MORPH_COMMANDS: [&str; 10] = [
    "word", "char", "haspref", "hassuf", "addpref", "addsuf", "deletepref", "deletesuf", "goodleft", "goodright",
];

impl Brill {
    fn parse(lexicon: &str, morphology: &str, context: &str, overrides: &str) -> Result<Self> {
        let bad = |what: &str, line: &[&str]| Error::invalid(format!("malformed {what} rule: {}", line.join(" ")));
        let lexicon = data_lines(lexicon)
            .filter(|f| f.len() >= 2)
            .map(|f| (f[0].to_string(), f[1].to_string()))
            .collect();
        let mut morph = Vec::new();
        for f in data_lines(morphology) {
            let rule = if f.len() >= 4 && MORPH_COMMANDS.contains(&f[1]) {
                MorphRule { only_if: None, cmd: f[1].into(), x: f[0].into(), tag: f[f.len() - 2].into() }
            } else if f.len() >= 5 && f[2].strip_prefix('f').is_some_and(|c| MORPH_COMMANDS.contains(&c)) {
                MorphRule {
                    only_if: Some(f[0].into()),
                    cmd: f[2][1..].into(),
                    x: f[1].into(),
                    tag: f[f.len() - 2].into(),
                }
            } else {
                return Err(bad("morphology", &f));
            };
            morph.push(rule);
        }
        let mut ctx = Vec::new();
        for f in data_lines(context) {
            if f.len() < 4 {
                return Err(bad("context", &f));
            }
            ctx.push(ContextRule {
                from: f[0].into(),
                to: f[1].into(),
                cmd: f[2].to_ascii_lowercase(),
                x: f[3].into(),
                y: f.get(4).copied().unwrap_or("").into(),
            });
        }
        let mut over = HashMap::new();
        for f in data_lines(overrides) {
            let tag = f.get(1).and_then(|t| Tag::parse(t)).ok_or_else(|| bad("override", &f))?;
            over.insert(f[0].to_string(), tag);
        }
        Ok(Brill { lexicon, morphology: morph, context: ctx, overrides: over })
    }

    /// Capitalized words take the lowercase entry when there is one: log
    /// messages are sentence-cased, so capitals rarely mark proper nouns.
    fn lookup(&self, word: &str) -> Option<&str> {
        let lower = word.to_lowercase();
        let cased = word.chars().next().is_some_and(char::is_uppercase)
            && word.chars().skip(1).all(|c| !c.is_uppercase() || word.chars().all(|d| !d.is_lowercase()));
        let first = if cased { self.lexicon.get(&lower) } else { None };
        first
            .or_else(|| self.lexicon.get(word))
            .or_else(|| self.lexicon.get(&lower))
            .map(String::as_str)
    }

    fn known(&self, word: &str) -> bool {
        self.lexicon.contains_key(word)
    }

    fn morph(&self, words: &[&str], i: usize, mut tag: String) -> String {
        let w = words[i];
        let prev = if i > 0 { Some(words[i - 1]) } else { None };
        let next = words.get(i + 1).copied();
        for r in &self.morphology {
            if r.only_if.as_ref().is_some_and(|t| *t != tag) {
                continue;
            }
            let x = r.x.as_str();
            let hit = match r.cmd.as_str() {
                "word" => w == x,
                "char" => w.contains(x),
                "haspref" => w.starts_with(x),
                "hassuf" => w.ends_with(x),
                "addpref" => self.known(&format!("{x}{w}")),
                "addsuf" => self.known(&format!("{w}{x}")),
                "deletepref" => w.strip_prefix(x).is_some_and(|s| self.known(s)),
                "deletesuf" => w.strip_suffix(x).is_some_and(|s| self.known(s)),
                "goodleft" => next == Some(x),
                "goodright" => prev == Some(x),
                _ => false,
            };
            if hit {
                tag = r.tag.clone();
            }
        }
        tag
    }

    fn initial(&self, words: &[&str]) -> Vec<String> {
        (0..words.len())
            .map(|i| {
                let w = words[i];
                if w == PLACEHOLDER {
                    return "NN".to_string();
                }
                if let Some(t) = self.lookup(w) {
                    return t.to_string();
                }
                if w.chars().next().is_some_and(char::is_uppercase) {
                    "NNP".to_string()
                } else if w.chars().all(|c| c.is_ascii_digit() || ",.:/%$-".contains(c)) {
                    "CD".to_string()
                } else {
                    self.morph(words, i, "NN".to_string())
                }
            })
            .collect()
    }

    fn contextual(&self, words: &[&str], tags: &mut [String]) {
        const PAD: &str = "STAART";
        let n = words.len();
        let word = |j: isize| -> &str {
            if j < 0 || j as usize >= n {
                PAD
            } else {
                words[j as usize]
            }
        };
        for i in 0..n {
            let original = tags[i].clone();
            let ii = i as isize;
            for r in &self.context {
                if r.from != original && r.from != "*" {
                    continue;
                }
                let tag = |j: isize| -> &str {
                    if j < 0 || j as usize >= n {
                        PAD
                    } else {
                        tags[j as usize].as_str()
                    }
                };
                let (x, y) = (r.x.as_str(), r.y.as_str());
                let hit = match r.cmd.as_str() {
                    "prevtag" => x == tag(ii - 1),
                    "nexttag" => x == tag(ii + 1),
                    "prev2tag" => x == tag(ii - 2),
                    "next2tag" => x == tag(ii + 2),
                    "prev1or2tag" => x == tag(ii - 1) || x == tag(ii - 2),
                    "next1or2tag" => x == tag(ii + 1) || x == tag(ii + 2),
                    "prev1or2or3tag" => (1..=3).any(|d| x == tag(ii - d)),
                    "next1or2or3tag" => (1..=3).any(|d| x == tag(ii + d)),
                    "surroundtag" => x == tag(ii - 1) && y == tag(ii + 1),
                    "curwd" => x == word(ii),
                    "prevwd" => x == word(ii - 1),
                    "nextwd" => x == word(ii + 1),
                    "prev1or2wd" => x == word(ii - 1) || x == word(ii - 2),
                    "next1or2wd" => x == word(ii + 1) || x == word(ii + 2),
                    "prev1or2or3wd" => (1..=3).any(|d| x == word(ii - d)),
                    "next1or2or3wd" => (1..=3).any(|d| x == word(ii + d)),
                    "prevwdtag" => x == word(ii - 1) && y == tag(ii - 1),
                    "nextwdtag" => x == word(ii + 1) && y == tag(ii + 1),
                    "wdprevtag" => x == tag(ii - 1) && y == word(ii),
                    "wdnexttag" => x == word(ii) && y == tag(ii + 1),
                    "wdand2aft" => x == word(ii) && y == word(ii + 2),
                    "wdand2tagbfr" => x == tag(ii - 2) && y == word(ii),
                    "wdand2tagaft" => x == word(ii) && y == tag(ii + 2),
                    "lbigram" => x == word(ii - 1) && y == word(ii),
                    "rbigram" => x == word(ii) && y == word(ii + 1),
                    "prevbigram" => x == tag(ii - 2) && y == tag(ii - 1),
                    "nextbigram" => x == tag(ii + 1) && y == tag(ii + 2),
                    _ => false,
                };
                if hit {
                    tags[i] = r.to.clone();
                }
            }
        }
    }

    fn penn(&self, words: &[&str]) -> Vec<String> {
        let mut tags = self.initial(words);
        self.contextual(words, &mut tags);
        tags
    }

    fn tag(&self, words: &[&str]) -> Vec<Tag> {
        let penn = self.penn(words);
        (0..words.len()).map(|i| self.coarse(words, &penn, i)).collect()
    }

    /// Maps the Penn tag at `i` to the coarse tagset, using neighbouring
    /// tags where the mapping depends on syntax.
    fn coarse(&self, words: &[&str], penn: &[String], i: usize) -> Tag {
        let w = words[i];
        if w == PLACEHOLDER {
            return Tag::Placeholder;
        }
        if !w.chars().any(is_word_char) {
            return punctuation(w);
        }
        let lower = w.to_lowercase();
        if let Some(&t) = self.overrides.get(lower.as_str()) {
            return t;
        }
        let p = penn[i].as_str();
        let is_verb = |t: &str| t.starts_with("VB") || t == "MD";
        let prev_verb = i > 0 && penn[i - 1].starts_with("VB");
        let verb_ahead = || {
            penn[i + 1..]
                .iter()
                .zip(&words[i + 1..])
                .take(3)
                .take_while(|(t, _)| is_verb(t) || t.starts_with("RB") || *t == "PRP")
                .any(|(t, _)| t.starts_with("VB"))
        };
        match p {
            "MD" => Tag::Aux,
            _ if BE_FORMS.contains(&lower.as_str()) && is_verb(p) => Tag::Aux,
            _ if HAVE_DO_FORMS.contains(&lower.as_str()) && is_verb(p) => {
                let negated = words.get(i + 1).is_some_and(|n| n.eq_ignore_ascii_case("not") || *n == "n't");
                if negated || verb_ahead() {
                    Tag::Aux
                } else {
                    Tag::Verb
                }
            }
            "TO" => {
                if penn.get(i + 1).is_some_and(|t| t == "VB" || t == "VBP") {
                    Tag::Part
                } else {
                    Tag::Adp
                }
            }
            _ if lower == "not" || lower == "n't" => Tag::Part,
            _ if PARTICLES.contains(&lower.as_str()) && prev_verb && matches!(p, "RB" | "IN" | "RP" | "JJ") => Tag::Part,
            "RP" | "POS" => Tag::Part,
            "IN" if SUBORDINATORS.contains(&lower.as_str()) => Tag::Sconj,
            "IN" => Tag::Adp,
            "CC" => Tag::Cconj,
            "DT" | "PDT" | "WDT" => Tag::Det,
            "PRP" | "PRP$" | "WP" | "WP$" | "EX" => Tag::Pron,
            "CD" => Tag::Num,
            "JJ" | "JJR" | "JJS" => Tag::Adj,
            "RB" | "RBR" | "RBS" | "WRB" => Tag::Adv,
            "NN" | "NNS" | "NNP" | "NNPS" => Tag::Noun,
            _ if p.starts_with("VB") => Tag::Verb,
            "SYM" | "$" | "#" => Tag::Sym,
            _ => Tag::X,
        }
    }
}

const BE_FORMS: [&str; 9] = ["be", "is", "are", "was", "were", "been", "being", "am", "'s"];
const HAVE_DO_FORMS: [&str; 8] = ["have", "has", "had", "having", "do", "does", "did", "'ve"];
const PARTICLES: [&str; 4] = ["up", "down", "out", "off"];
const SUBORDINATORS: [&str; 8] = ["if", "because", "while", "although", "though", "whether", "unless", "that"];

fn punctuation(w: &str) -> Tag {
    if w == "&" {
        Tag::Cconj
    } else if w.chars().all(|c| "=+<>~^|$#@%/\\".contains(c)) {
        Tag::Sym
    } else {
        Tag::Punct
    }
}

const LEXICON: &str = include_str!("../../data/pos/lexicon.txt");
const MORPHOLOGY: &str = include_str!("../../data/pos/morphology.txt");
const CONTEXT: &str = include_str!("../../data/pos/context.txt");
const OVERRIDES: &str = include_str!("../../data/pos/overrides.txt");

fn bundled_brill() -> Arc<Brill> {
    static BRILL: OnceLock<Arc<Brill>> = OnceLock::new();
    BRILL
        .get_or_init(|| Arc::new(Brill::parse(LEXICON, MORPHOLOGY, CONTEXT, OVERRIDES).expect("bundled tagger data parses")))
        .clone()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TagRecord {
    system: String,
    file_path: String,
    line: usize,
    tags: Vec<Tag>,
}

#[derive(Debug, Clone)]
enum Mode {
    Builtin(Arc<Brill>),
    External(Arc<HashMap<String, Vec<Tag>>>),
}

/// Part-of-speech tagger, either the bundled rule-based one or a binding to
/// pre-computed tags.
#[derive(Debug, Clone)]
pub struct PosTagger {
    mode: Mode,
}

impl PosTagger {
    /// The bundled tagger. Its data is parsed once per process.
    pub fn builtin() -> Self {
        PosTagger { mode: Mode::Builtin(bundled_brill()) }
    }

    /// Reads pre-computed tags, one JSON object per line with fields
    /// `system, file_path, line, tags`.
    pub fn external(reader: impl BufRead) -> Result<Self> {
        let mut map = HashMap::new();
        let mut index = 0;
        for line in reader.lines() {
            let line = line.map_err(|e| Error::Schema { index, reason: e.to_string() })?;
            if line.trim().is_empty() {
                continue;
            }
            let r: TagRecord = serde_json::from_str(&line).map_err(|e| Error::Schema { index, reason: e.to_string() })?;
            map.insert(format!("{}:{}:{}", r.system, r.file_path, r.line), r.tags);
            index += 1;
        }
        Ok(PosTagger { mode: Mode::External(Arc::new(map)) })
    }

    pub fn external_from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::external(std::io::BufReader::new(file))
    }

    pub fn is_builtin(&self) -> bool {
        matches!(self.mode, Mode::Builtin(_))
    }

    /// Tags free text. Only the builtin tagger can do this.
    pub fn tag_text(&self, static_text: &str) -> Result<LinguisticStructure> {
        match &self.mode {
            Mode::Builtin(b) => Ok(LinguisticStructure { tags: b.tag(&pos_words(static_text)) }),
            Mode::External(_) => Err(Error::MissingTags(format!("free text {static_text:?}"))),
        }
    }

    /// Penn Treebank tags from the builtin tagger, before coarse mapping.
    pub fn penn_tags(&self, static_text: &str) -> Option<Vec<String>> {
        match &self.mode {
            Mode::Builtin(b) => Some(b.penn(&pos_words(static_text))),
            Mode::External(_) => None,
        }
    }
}

/// Tags the static text of `instruction`.
pub fn pos_tag(instruction: &LogInstruction, tagger: &PosTagger) -> Result<LinguisticStructure> {
    match &tagger.mode {
        Mode::Builtin(_) => tagger.tag_text(&instruction.static_text),
        Mode::External(map) => {
            let id = instruction.id();
            map.get(&id)
                .map(|tags| LinguisticStructure { tags: tags.clone() })
                .ok_or(Error::MissingTags(id))
        }
    }
}
