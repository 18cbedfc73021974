//! Input documents: one JSON object per file, tagged by `kind`.
//!
//! `kind` may be omitted when the keys make it unambiguous. `version`
//! defaults to 1, the only recognized version.

use std::fmt;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ers::{Ers, ErsDefinition, ErsError};
use crate::ifs::{IfsDocument, IfsError, PcfIfs};
use crate::selfsimilar::{AutomatonDefinition, AutomatonError, WreathAutomaton};
use crate::vers::{Vers, VersDefinition, VersError};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DocumentKind {
    Vers,
    Automaton,
    Ifs,
    Ers,
}

impl DocumentKind {
    pub fn name(self) -> &'static str {
        match self {
            DocumentKind::Vers => "vers",
            DocumentKind::Automaton => "automaton",
            DocumentKind::Ifs => "ifs",
            DocumentKind::Ers => "ers",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [DocumentKind::Vers, DocumentKind::Automaton, DocumentKind::Ifs, DocumentKind::Ers]
            .into_iter()
            .find(|k| k.name() == s)
    }

    fn infer(obj: &Map<String, Value>) -> Option<Self> {
        let has = |k: &str| obj.contains_key(k);
        if has("sigma") {
            Some(DocumentKind::Vers)
        } else if has("transitions") {
            Some(DocumentKind::Automaton)
        } else if has("maps") {
            Some(DocumentKind::Ifs)
        } else if has("replacements") && has("base") {
            Some(DocumentKind::Ers)
        } else {
            None
        }
    }
}

impl fmt::Display for DocumentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum DocError {
    #[error("parse error at byte {offset} (line {line}, column {column}): {message}")]
    Parse { offset: usize, line: usize, column: usize, message: String },
    #[error("schema error at {pointer:?}: {message}")]
    Schema { pointer: String, message: String },
    #[error("unsupported schema version {0}")]
    Version(u64),
    #[error(transparent)]
    Vers(#[from] VersError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Ifs(#[from] IfsError),
    #[error(transparent)]
    Ers(#[from] ErsError),
}

/// A validated document.
#[derive(Debug, Clone)]
pub enum SpecBody {
    Vers(Vers),
    Automaton(WreathAutomaton),
    Ifs(PcfIfs),
    Ers(Ers),
}

#[derive(Debug, Clone)]
pub struct SpecDocument {
    pub version: u64,
    /// Hex SHA-256 of the input bytes.
    pub digest: String,
    pub body: SpecBody,
}

impl SpecDocument {
    pub fn kind(&self) -> DocumentKind {
        match self.body {
            SpecBody::Vers(_) => DocumentKind::Vers,
            SpecBody::Automaton(_) => DocumentKind::Automaton,
            SpecBody::Ifs(_) => DocumentKind::Ifs,
            SpecBody::Ers(_) => DocumentKind::Ers,
        }
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = bytes.split(|&b| b == b'\n').take(line - 1).map(|l| l.len() + 1).sum();
    (start + column.saturating_sub(1)).min(bytes.len())
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> DocError {
    DocError::Schema { pointer: pointer.into(), message: message.into() }
}

fn typed<T: DeserializeOwned>(value: Value) -> Result<T, DocError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let mut pointer = String::new();
        for seg in e.path().iter() {
            use serde_path_to_error::Segment;
            match seg {
                Segment::Seq { index } => pointer.push_str(&format!("/{index}")),
                Segment::Map { key } => pointer.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
                Segment::Enum { .. } | Segment::Unknown => {}
            }
        }
        schema(pointer, e.into_inner().to_string())
    })
}

/// Parses and validates a document.
pub fn parse_spec(bytes: &[u8]) -> Result<SpecDocument, DocError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| DocError::Parse {
        offset: if e.is_eof() { bytes.len() } else { byte_offset(bytes, e.line(), e.column()) },
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let Value::Object(mut obj) = value else { return Err(schema("", "document must be a JSON object")) };
    let version = match obj.remove("version") {
        None => SCHEMA_VERSION,
        Some(v) => v.as_u64().ok_or_else(|| schema("/version", "version must be a non-negative integer"))?,
    };
    if version != SCHEMA_VERSION {
        return Err(DocError::Version(version));
    }
    let kind = match obj.remove("kind") {
        Some(Value::String(s)) => DocumentKind::from_name(&s).ok_or_else(|| schema("/kind", format!("unknown kind {s:?}")))?,
        Some(_) => return Err(schema("/kind", "kind must be a string")),
        None => DocumentKind::infer(&obj).ok_or_else(|| schema("/kind", "kind is missing and cannot be inferred"))?,
    };
    let value = Value::Object(obj);
    let body = match kind {
        DocumentKind::Vers => {
            let def: VersDefinition = typed(value)?;
            if let Some(c) = def.colors.iter().find(|c| !def.kappa.contains_key(*c)) {
                return Err(schema("/kappa", format!("missing entry for color {c:?}")));
            }
            SpecBody::Vers(Vers::new(def)?)
        }
        DocumentKind::Automaton => {
            let def: AutomatonDefinition = typed(value)?;
            SpecBody::Automaton(WreathAutomaton::completed(&def)?)
        }
        DocumentKind::Ifs => {
            let doc: IfsDocument = typed(value)?;
            SpecBody::Ifs(PcfIfs::from_document(&doc)?)
        }
        DocumentKind::Ers => {
            let def: ErsDefinition = typed(value)?;
            SpecBody::Ers(Ers::new(def)?)
        }
    };
    Ok(SpecDocument { version, digest: digest(bytes), body })
}
