//! Extracts a source tree and prints the dataset as JSONL.
//!
//! ```text
//! cargo run --example extract -- <root> <system> [language...]
//! ```

use qulog::corpus::{extract_tree, ExtractionGrammar};
use std::path::Path;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [root, system, langs @ ..] = args.as_slice() else {
        return Err("usage: extract <root> <system> [language...]".into());
    };
    let langs: Vec<&str> = if langs.is_empty() { vec!["java", "python"] } else { langs.iter().map(String::as_str).collect() };
    let grammars: Vec<_> = langs.iter().filter_map(|l| ExtractionGrammar::bundled(l)).collect();
    let out = extract_tree(Path::new(root), &grammars, system)?;
    print!("{}", out.dataset.to_jsonl());
    eprintln!("{} instructions, skipped: {:?}", out.dataset.len(), out.skips.unsupported_levels);
    Ok(())
}
