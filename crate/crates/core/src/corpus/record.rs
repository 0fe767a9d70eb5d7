use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Dataset a record was drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    /// Twitter
    TWR,
    /// Online comments
    OC,
    /// Wikipedia talk pages
    WTP,
    /// Micro-texts
    MT,
    /// Persuasive essays
    PE,
    /// Various genres
    VG,
    /// Web discourse
    WD,
}

impl Source {
    pub const ALL: [Source; 7] = [
        Source::TWR,
        Source::OC,
        Source::WTP,
        Source::MT,
        Source::PE,
        Source::VG,
        Source::WD,
    ];

    pub fn viewpoint(self) -> Viewpoint {
        match self {
            Source::TWR => Viewpoint::Noisy,
            Source::OC | Source::WTP => Viewpoint::SemiNoisy,
            Source::MT | Source::PE | Source::VG | Source::WD => Viewpoint::NonNoisy,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Source::TWR => "TWR",
            Source::OC => "OC",
            Source::WTP => "WTP",
            Source::MT => "MT",
            Source::PE => "PE",
            Source::VG => "VG",
            Source::WD => "WD",
        }
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Source::ALL
            .into_iter()
            .find(|src| src.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown source {s:?}")))
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Noise level of a text source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Viewpoint {
    Noisy,
    SemiNoisy,
    NonNoisy,
}

impl Viewpoint {
    pub const ALL: [Viewpoint; 3] = [Viewpoint::Noisy, Viewpoint::SemiNoisy, Viewpoint::NonNoisy];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Viewpoint::Noisy => "noisy",
            Viewpoint::SemiNoisy => "semi_noisy",
            Viewpoint::NonNoisy => "non_noisy",
        }
    }
}

impl FromStr for Viewpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Viewpoint::ALL
            .into_iter()
            .find(|v| v.as_str() == s.replace('-', "_"))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown viewpoint {s:?}")))
    }
}

impl fmt::Display for Viewpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Annotation: `0` non-claim, `1` claim, `"x"` obscure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NonClaim,
    Claim,
    Obscure,
}

impl Label {
    /// Class index for binary training; `None` for obscure.
    pub fn class(self) -> Option<usize> {
        match self {
            Label::NonClaim => Some(0),
            Label::Claim => Some(1),
            Label::Obscure => None,
        }
    }

    pub fn from_class(class: usize) -> Label {
        if class == 1 {
            Label::Claim
        } else {
            Label::NonClaim
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Label::NonClaim => s.serialize_u8(0),
            Label::Claim => s.serialize_u8(1),
            Label::Obscure => s.serialize_str("x"),
        }
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(0) => Ok(Label::NonClaim),
            Raw::Num(1) => Ok(Label::Claim),
            Raw::Str(s) if s == "x" => Ok(Label::Obscure),
            Raw::Str(s) if s == "0" => Ok(Label::NonClaim),
            Raw::Str(s) if s == "1" => Ok(Label::Claim),
            _ => Err(serde::de::Error::custom("label must be 0, 1 or \"x\"")),
        }
    }
}

/// One annotated text with its POS and dependency analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
    pub upos: Vec<String>,
    pub deprel: Vec<String>,
    /// 1-based head index per token, 0 for the root.
    pub head: Vec<usize>,
    pub label: Label,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viewpoint: Option<Viewpoint>,
}

impl Record {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Viewpoint of the record, derived from its source when not set.
    pub fn viewpoint(&self) -> Viewpoint {
        self.viewpoint.unwrap_or_else(|| self.source.viewpoint())
    }

    /// Checks parallel-array lengths, head ranges and the source/viewpoint mapping.
    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Error::InvalidRecord {
            id: self.id.clone(),
            message,
        };
        let n = self.tokens.len();
        if n == 0 {
            return Err(bad("record has no tokens".into()));
        }
        for (name, len) in [
            ("upos", self.upos.len()),
            ("deprel", self.deprel.len()),
            ("head", self.head.len()),
        ] {
            if len != n {
                return Err(bad(format!("|tokens|={n} but |{name}|={len}")));
            }
        }
        if let Some(h) = self.head.iter().find(|&&h| h > n) {
            return Err(bad(format!("head index {h} outside [0, {n}]")));
        }
        if let Some(v) = self.viewpoint {
            if v != self.source.viewpoint() {
                return Err(bad(format!(
                    "source {} belongs to viewpoint {}, not {v}",
                    self.source,
                    self.source.viewpoint()
                )));
            }
        }
        Ok(())
    }
}

/// Reads a JSON Lines record file. Blank lines are skipped.
pub fn parse_records(path: impl AsRef<Path>) -> Result<Vec<Record>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let mut rec: Record = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        rec.validate().map_err(|e| parse_err(e.to_string()))?;
        rec.viewpoint = Some(rec.viewpoint());
        records.push(rec);
    }
    Ok(records)
}

pub fn write_records(path: impl AsRef<Path>, records: &[Record]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
