use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig, Network, PillarTables, Vocabularies};
use crate::nn::checkpoint::{read_checkpoint, write_checkpoint};
use crate::nn::{ParamStore, Rng};
use crate::pos::{Ngram, NgramVocab};

const TRAILER_FORMAT: u32 = 1;

#[derive(Serialize, Deserialize)]
struct VocabEntries {
    k: usize,
    entries: Vec<Ngram>,
}

impl VocabEntries {
    fn of(v: &NgramVocab) -> Self {
        VocabEntries {
            k: v.k(),
            entries: v.entries().to_vec(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Trailer {
    format: u32,
    config: ModelConfig,
    pos_vocab: VocabEntries,
    dep_vocab: VocabEntries,
}

impl ModelConfig {
    /// Errors if `runtime` describes a different architecture. Dropout is ignored.
    pub fn check_compatible(&self, runtime: &ModelConfig) -> Result<()> {
        if self.k != runtime.k {
            return Err(Error::ConfigMismatch(format!(
                "checkpoint was trained with k={}, runtime config has k={}",
                self.k, runtime.k
            )));
        }
        let strip = |c: &ModelConfig| ModelConfig {
            dropout: 0.0,
            ..c.clone()
        };
        if strip(self) != strip(runtime) {
            return Err(Error::ConfigMismatch(format!(
                "checkpoint architecture differs from runtime config: {} vs {}",
                serde_json::to_string(self).unwrap_or_default(),
                serde_json::to_string(runtime).unwrap_or_default()
            )));
        }
        Ok(())
    }
}

impl Model {
    pub fn to_checkpoint_bytes(&self) -> Result<Vec<u8>> {
        let trailer = Trailer {
            format: TRAILER_FORMAT,
            config: self.config.clone(),
            pos_vocab: VocabEntries::of(&self.vocab.pos),
            dep_vocab: VocabEntries::of(&self.vocab.dep),
        };
        let json = serde_json::to_string(&trailer).map_err(|e| Error::Format(e.to_string()))?;
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &self.store, &json)?;
        Ok(buf)
    }

    /// Rebuilds a model from checkpoint bytes. With `runtime` set, the stored
    /// configuration must be compatible with it.
    pub fn from_checkpoint_bytes(bytes: &[u8], runtime: Option<&ModelConfig>) -> Result<Self> {
        let contents = read_checkpoint(bytes)?;
        let trailer: Trailer = serde_json::from_str(&contents.trailer)
            .map_err(|e| Error::Format(format!("checkpoint trailer: {e}")))?;
        if trailer.format != TRAILER_FORMAT {
            return Err(Error::Format(format!("unsupported checkpoint trailer format {}", trailer.format)));
        }
        if let Some(rt) = runtime {
            trailer.config.check_compatible(rt)?;
        }
        let vocab = Vocabularies {
            pos: NgramVocab::from_entries(trailer.pos_vocab.k, trailer.pos_vocab.entries)?,
            dep: NgramVocab::from_entries(trailer.dep_vocab.k, trailer.dep_vocab.entries)?,
        };
        let mut store = ParamStore::new();
        let network = Network::build(&mut store, &trailer.config, &vocab, PillarTables::default(), &mut Rng::new(0))?;
        store.load_named(contents.tensors)?;
        Ok(Model {
            config: trailer.config,
            vocab,
            network,
            store,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_checkpoint_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, runtime: Option<&ModelConfig>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint_bytes(&bytes, runtime)
    }
}
