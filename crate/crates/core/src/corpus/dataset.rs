use super::LogInstruction;
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// An ordered collection of log instructions.
///
/// Samples are kept sorted by `(system, file_path, line)`; the sort is
/// stable, so several calls on one line keep their source order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    samples: Vec<LogInstruction>,
    provenance: BTreeMap<String, usize>,
}

impl Dataset {
    pub fn new(mut samples: Vec<LogInstruction>) -> Self {
        samples.sort_by(|a, b| {
            (&a.system, &a.file_path, a.line).cmp(&(&b.system, &b.file_path, b.line))
        });
        let mut provenance = BTreeMap::new();
        for s in &samples {
            *provenance.entry(s.system.clone()).or_insert(0) += 1;
        }
        Dataset { samples, provenance }
    }

    pub fn samples(&self) -> &[LogInstruction] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<LogInstruction> {
        self.samples
    }

    /// Sample count per system.
    pub fn provenance(&self) -> &BTreeMap<String, usize> {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn systems(&self) -> impl Iterator<Item = &str> {
        self.provenance.keys().map(String::as_str)
    }

    /// Merges several datasets into one.
    pub fn concat(parts: impl IntoIterator<Item = Dataset>) -> Self {
        Dataset::new(parts.into_iter().flat_map(|d| d.samples).collect())
    }

    pub fn filter(&self, mut keep: impl FnMut(&LogInstruction) -> bool) -> Self {
        Dataset::new(self.samples.iter().filter(|s| keep(s)).cloned().collect())
    }

    /// Serializes to JSONL, one record per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(&serde_json::to_string(s).expect("instruction serializes"));
            out.push('\n');
        }
        out
    }

    /// Parses JSONL. Blank lines are ignored; record indices in errors are
    /// zero-based over non-blank lines.
    pub fn from_jsonl(reader: impl BufRead) -> Result<Self> {
        let mut samples = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Schema {
                index: samples.len(),
                reason: format!("line {}: {e}", lineno + 1),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let index = samples.len();
            let record: LogInstruction =
                serde_json::from_str(&line).map_err(|e| Error::Schema { index, reason: e.to_string() })?;
            record.validate().map_err(|reason| Error::Schema { index, reason })?;
            samples.push(record);
        }
        Ok(Dataset::new(samples))
    }
}

pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(dataset.to_jsonl().as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Dataset::from_jsonl(BufReader::new(file))
}
