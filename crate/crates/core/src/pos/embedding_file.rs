//! Text format for k-gram embedding tables.
//!
//! ```text
//! LESAPOS1 <k> <dim> <count>
//! <UNK> 0.01 -0.2 ...
//! <BOS>|DET|NOUN 0.3 0.1 ...
//! ```
//!
//! One line per vocabulary index, in index order, tags joined by `|`. Values use
//! Rust's shortest round-trip float formatting, so a read-back is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::pos::{NgramVocab, UNK};

pub const POS_EMBEDDING_MAGIC: &str = "LESAPOS1";
pub const DEP_EMBEDDING_MAGIC: &str = "LESADEP1";

/// A k-gram vocabulary with one embedding row per index.
#[derive(Clone, Debug, PartialEq)]
pub struct NgramEmbedding {
    pub vocab: NgramVocab,
    pub table: Tensor,
}

impl NgramEmbedding {
    pub fn new(vocab: NgramVocab, table: Tensor) -> Result<Self> {
        if table.shape().len() != 2 || table.rows() != vocab.len() {
            return Err(Error::Shape(format!(
                "embedding table {:?} does not match vocabulary of {}",
                table.shape(),
                vocab.len()
            )));
        }
        Ok(NgramEmbedding { vocab, table })
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    pub fn to_text(&self, magic: &str) -> Result<String> {
        let mut out = format!("{magic} {} {} {}\n", self.vocab.k(), self.dim(), self.vocab.len());
        for (i, entry) in self.vocab.entries().iter().enumerate() {
            if let Some(bad) = entry.iter().find(|t| t.is_empty() || t.contains('|') || t.contains(char::is_whitespace)) {
                return Err(Error::Format(format!("tag {bad:?} cannot be written to an embedding file")));
            }
            out.push_str(&entry.join("|"));
            for v in self.table.row(i) {
                write!(out, " {v}").expect("write to String");
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_text(text: &str, magic: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty embedding file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != magic {
            return Err(Error::Format(format!("expected header \"{magic} k dim count\", got {header:?}")));
        }
        let num = |s: &str| -> Result<usize> { s.parse().map_err(|_| Error::Format(format!("bad header number {s:?}"))) };
        let (k, dim, count) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
        let mut entries = Vec::with_capacity(count);
        let mut data = Vec::with_capacity(count * dim);
        for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            entries.push(key.split('|').map(str::to_string).collect::<Vec<_>>());
            let before = data.len();
            for p in parts {
                data.push(p.parse::<f64>().map_err(|_| Error::Format(format!("line {}: bad value {p:?}", i + 2)))?);
            }
            if data.len() - before != dim {
                return Err(Error::Format(format!("line {}: expected {dim} values", i + 2)));
            }
        }
        if entries.len() != count {
            return Err(Error::Format(format!("header says {count} rows, found {}", entries.len())));
        }
        if entries.first().map(|e| e.join("|")) != Some(UNK.to_string()) {
            return Err(Error::Format(format!("first row must be {UNK}")));
        }
        let vocab = NgramVocab::from_entries(k, entries)?;
        let table = Tensor::from_vec(&[count, dim], data)?;
        NgramEmbedding::new(vocab, table)
    }

    pub fn save(&self, path: impl AsRef<Path>, magic: &str) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text(magic)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, magic: &str) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, magic)
    }
}
