//! Sentence-embedding branch: precomputed vectors keyed by record id, a hashing
//! fallback, and the two-layer projection head.
//!
//! Embedding files are binary, little-endian:
//!
//! ```text
//! "LESAEMB1" | count: u32 | dim: u32 | count x ( id_len: u16 | id: utf-8 | dim x f32 )
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::corpus::Record;
use crate::error::{Error, Result};
use crate::nn::ops::{relu, relu_backward};
use crate::nn::{Dense, ParamStore, Rng};

pub const EMBEDDING_MAGIC: &[u8; 8] = b"LESAEMB1";
pub const SEMANTIC_DIM: usize = 768;

/// Fixed-width vectors keyed by record id, in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    ids: Vec<String>,
    vectors: Vec<Vec<f32>>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            ..Default::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f32>) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::Shape(format!("vector for {id} has dim {}, table dim {}", vector.len(), self.dim)));
        }
        if !vector.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value in vector for {id}")));
        }
        if id.len() > u16::MAX as usize {
            return Err(Error::InvalidArgument(format!("id of {} bytes is too long", id.len())));
        }
        match self.index.get(&id) {
            Some(&i) => self.vectors[i] = vector,
            None => {
                self.index.insert(id.clone(), self.ids.len());
                self.ids.push(id);
                self.vectors.push(vector);
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.index.get(id).map(|&i| self.vectors[i].as_slice())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::Format(format!("writing embeddings: {e}"));
        w.write_all(EMBEDDING_MAGIC).map_err(io)?;
        w.write_all(&(self.ids.len() as u32).to_le_bytes()).map_err(io)?;
        w.write_all(&(self.dim as u32).to_le_bytes()).map_err(io)?;
        for (id, v) in self.ids.iter().zip(&self.vectors) {
            w.write_all(&(id.len() as u16).to_le_bytes()).map_err(io)?;
            w.write_all(id.as_bytes()).map_err(io)?;
            for x in v {
                w.write_all(&x.to_le_bytes()).map_err(io)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic, "magic")?;
        if &magic != EMBEDDING_MAGIC {
            return Err(Error::Format("not an embedding file (bad magic)".into()));
        }
        let mut word = [0u8; 4];
        read_exact(&mut r, &mut word, "count")?;
        let count = u32::from_le_bytes(word) as usize;
        read_exact(&mut r, &mut word, "dim")?;
        let dim = u32::from_le_bytes(word) as usize;
        let mut table = EmbeddingTable::new(dim);
        let mut payload = vec![0u8; dim * 4];
        for i in 0..count {
            let mut len = [0u8; 2];
            read_exact(&mut r, &mut len, "id length")?;
            let mut id = vec![0u8; u16::from_le_bytes(len) as usize];
            read_exact(&mut r, &mut id, "id")?;
            let id = String::from_utf8(id).map_err(|_| Error::Format(format!("record {i}: id is not UTF-8")))?;
            read_exact(&mut r, &mut payload, "vector")?;
            let v = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
            if table.index.contains_key(&id) {
                return Err(Error::Format(format!("duplicate id {id}")));
            }
            table.insert(id, v)?;
        }
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Format(format!("embedding file truncated while reading {what}")))
}

/// Reads an embedding file and checks its width against `expected_dim`.
pub fn load_embeddings(path: impl AsRef<Path>, expected_dim: usize) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let table = EmbeddingTable::read_from(bytes.as_slice())?;
    if table.dim() != expected_dim {
        return Err(Error::ConfigMismatch(format!(
            "{} holds {}-dim vectors, expected {expected_dim}",
            path.display(),
            table.dim()
        )));
    }
    Ok(table)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic stand-in for a sentence encoder: lower-cased alphanumeric
/// words, padded word tri-grams, signed feature hashing into `dim` buckets,
/// L2-normalised. Text without words maps to the zero vector.
pub fn fallback_embed(text: &str, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    let words: Vec<String> = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    if words.is_empty() || dim == 0 {
        return v;
    }
    let padded: Vec<&str> = std::iter::once("<s>")
        .chain(words.iter().map(String::as_str))
        .chain(std::iter::once("</s>"))
        .collect();
    for w in padded.windows(3) {
        let h = fnv1a(w.join(" ").as_bytes());
        let bucket = (h % dim as u64) as usize;
        v[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Where semantic vectors come from at training and prediction time.
#[derive(Clone, Debug)]
pub struct SemanticSource {
    pub table: Option<EmbeddingTable>,
    /// Use [`fallback_embed`] for ids missing from `table`.
    pub fallback: bool,
    pub dim: usize,
}

impl SemanticSource {
    pub fn fallback(dim: usize) -> Self {
        SemanticSource {
            table: None,
            fallback: true,
            dim,
        }
    }

    pub fn from_table(table: EmbeddingTable, fallback: bool) -> Self {
        let dim = table.dim();
        SemanticSource {
            table: Some(table),
            fallback,
            dim,
        }
    }

    pub fn vector(&self, record: &Record) -> Result<Vec<f64>> {
        if let Some(v) = self.table.as_ref().and_then(|t| t.get(&record.id)) {
            return Ok(v.iter().map(|&x| x as f64).collect());
        }
        if self.fallback {
            Ok(fallback_embed(&record.text, self.dim))
        } else {
            Err(Error::MissingEmbedding(record.id.clone()))
        }
    }

    /// First record (in order) with no resolvable vector.
    pub fn first_missing<'a>(&self, records: impl IntoIterator<Item = &'a Record>) -> Option<&'a str> {
        if self.fallback {
            return None;
        }
        records
            .into_iter()
            .find(|r| self.table.as_ref().and_then(|t| t.get(&r.id)).is_none())
            .map(|r| r.id.as_str())
    }
}

/// Dense → ReLU → dense projection of a frozen sentence vector.
#[derive(Clone, Debug)]
pub struct SemanticHead {
    pub first: Dense,
    pub second: Dense,
}

#[derive(Clone, Debug)]
pub struct SemanticCache {
    input: Vec<f64>,
    pre: Vec<f64>,
    hidden: Vec<f64>,
}

impl SemanticHead {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize, out: usize, rng: &mut Rng) -> Result<Self> {
        Ok(SemanticHead {
            first: Dense::new(store, &format!("{name}.l1"), input, hidden, rng)?,
            second: Dense::new(store, &format!("{name}.l2"), hidden, out, rng)?,
        })
    }

    pub fn forward(&self, store: &ParamStore, vec: &[f64]) -> Result<(Vec<f64>, SemanticCache)> {
        if vec.len() != self.first.input_dim() {
            return Err(Error::Shape(format!(
                "semantic vector has dim {}, head expects {}",
                vec.len(),
                self.first.input_dim()
            )));
        }
        let pre = self.first.forward(store, vec);
        let hidden = relu(&pre);
        let out = self.second.forward(store, &hidden);
        Ok((
            out,
            SemanticCache {
                input: vec.to_vec(),
                pre,
                hidden,
            },
        ))
    }

    /// The input vector is frozen, so no gradient is returned for it.
    pub fn backward(&self, store: &mut ParamStore, cache: &SemanticCache, dout: &[f64]) {
        let dh = self.second.backward(store, &cache.hidden, dout);
        let dpre = relu_backward(&cache.pre, &dh);
        self.first.backward_params(store, &cache.input, &dpre);
    }
}
