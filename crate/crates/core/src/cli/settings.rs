use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cli::CliError;

/// Environment variable naming a config file when `--config` is absent.
pub const CONFIG_ENV: &str = "LESA_CONFIG";

pub(crate) const KNOWN_KEYS: &[&str] = &[
    "input",
    "output",
    "records",
    "gold",
    "pred",
    "embeddings",
    "checkpoint",
    "init",
    "report",
    "history",
    "dict",
    "doubt_words",
    "pos_out",
    "dep_out",
    "seed",
    "threads",
    "lr",
    "epochs",
    "batch_size",
    "aux_weight",
    "pretrain_epochs",
    "patience",
    "fallback_embeddings",
    "skipgram_init",
    "skipgram_epochs",
    "skipgram_window",
    "k",
    "combined_view",
    "positional",
    "dropout",
    "viewpoint",
];

/// Keys that describe model architecture.
pub(crate) const MODEL_KEYS: &[&str] = &["k", "combined_view", "positional"];

/// `key = value` settings from a config file, overridden by command-line flags.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("{origin}:{}: expected `key = value`", n + 1)))?;
            let key = k.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::usage(format!("{origin}:{}: unknown key {key:?}", n + 1)));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Settings { values })
    }

    /// Reads `path`, or the file named by `LESA_CONFIG`, or nothing.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let path = match path {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from),
        };
        match path {
            None => Ok(Settings::default()),
            Some(p) => {
                let text = fs::read_to_string(&p)
                    .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text, &p.display().to_string())
            }
        }
    }

    pub fn set(&mut self, key: &str, value: Option<impl Display>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    /// Sets a boolean key only when the flag was given.
    pub fn flag(&mut self, key: &str, on: bool) {
        if on {
            self.values.insert(key.to_string(), "true".into());
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::usage(format!("bad value {v:?} for {key}: {e}")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.values.get(key).map(PathBuf::from)
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf, CliError> {
        self.path(key)
            .ok_or_else(|| CliError::usage(format!("missing required path `{key}` (flag --{} or config key)", key.replace('_', "-"))))
    }
}
