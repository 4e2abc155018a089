//! Hyperstructure document, version 1.
//!
//! ```json
//! {"version":1, "objects":["a","b"],
//!  "levels":[{"index":0,"bonds":[{"id":"m","support":["a","b"],"state":"linked","identity":false}]}],
//!  "omega":[{"level":0,"support":["a","b"],"states":["linked"]}]}
//! ```
//!
//! Bonds may carry `"ordered": true`, in which case the support keeps its
//! sequence order through canonicalization (arrows, two-part deductions).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::StateToken;
use crate::collection::{Collection, Id};

pub const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported document version {0} (expected {DOCUMENT_VERSION})")]
    UnsupportedVersion(u32),
}

impl DocumentError {
    pub fn from_json(err: serde_json::Error) -> Self {
        DocumentError::Parse { line: err.line(), column: err.column(), message: err.to_string() }
    }
}

/// Parses any versioned JSON document, mapping serde errors to positions.
pub(crate) fn parse_versioned<T>(text: &str, version: impl Fn(&T) -> u32) -> Result<T, DocumentError>
where
    T: for<'de> Deserialize<'de>,
{
    let doc: T = serde_json::from_str(text).map_err(DocumentError::from_json)?;
    match version(&doc) {
        DOCUMENT_VERSION => Ok(doc),
        other => Err(DocumentError::UnsupportedVersion(other)),
    }
}

/// Serializes through `serde_json::Value`, whose maps are key-sorted.
pub(crate) fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("documents serialize to JSON");
    serde_json::to_string(&value).expect("JSON values serialize")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub version: u32,
    pub objects: Vec<Id>,
    #[serde(default)]
    pub levels: Vec<LevelDoc>,
    #[serde(default)]
    pub omega: Vec<OmegaDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelDoc {
    pub index: usize,
    pub bonds: Vec<BondDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BondDoc {
    pub id: Id,
    pub support: Collection,
    pub state: StateToken,
    #[serde(default)]
    pub identity: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ordered: bool,
}

impl BondDoc {
    pub fn new(id: Id, support: Collection, state: StateToken) -> Self {
        BondDoc { id, support, state, identity: false, ordered: false }
    }

    /// Support as it is stored: normalized unless the bond is ordered.
    pub fn canonical_support(&self) -> Collection {
        if self.ordered {
            self.support.clone()
        } else {
            self.support.normalize()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaDoc {
    pub level: usize,
    pub support: Collection,
    pub states: Vec<StateToken>,
}

impl Document {
    pub fn new(objects: Vec<Id>) -> Self {
        Document { version: DOCUMENT_VERSION, objects, levels: Vec::new(), omega: Vec::new() }
    }

    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        parse_versioned(text, |d: &Document| d.version)
    }

    /// All bond registrations as `(level, bond)` in document order.
    pub fn registrations(&self) -> impl Iterator<Item = (usize, &BondDoc)> {
        self.levels.iter().flat_map(|l| l.bonds.iter().map(move |b| (l.index, b)))
    }

    pub fn push_bond(&mut self, level: usize, bond: BondDoc) {
        match self.levels.iter_mut().find(|l| l.index == level) {
            Some(l) => l.bonds.push(bond),
            None => self.levels.push(LevelDoc { index: level, bonds: vec![bond] }),
        }
    }

    /// Canonical form: sorted objects, levels and bonds, normalized
    /// unordered supports, merged and sorted omega entries, no empty levels.
    pub fn canonicalize(&self) -> Document {
        let mut objects = self.objects.clone();
        objects.sort();
        objects.dedup();

        let mut by_level: std::collections::BTreeMap<usize, Vec<BondDoc>> = Default::default();
        for (level, bond) in self.registrations() {
            let mut bond = bond.clone();
            bond.support = bond.canonical_support();
            by_level.entry(level).or_default().push(bond);
        }
        let levels = by_level
            .into_iter()
            .filter(|(_, bonds)| !bonds.is_empty())
            .map(|(index, mut bonds)| {
                bonds.sort_by(|a, b| {
                    (&a.id, &a.support, &a.state, a.identity, a.ordered)
                        .cmp(&(&b.id, &b.support, &b.state, b.identity, b.ordered))
                });
                bonds.dedup();
                LevelDoc { index, bonds }
            })
            .collect();

        let mut merged: std::collections::BTreeMap<(usize, Collection), std::collections::BTreeSet<StateToken>> =
            Default::default();
        for entry in &self.omega {
            merged.entry((entry.level, entry.support.normalize())).or_default().extend(entry.states.iter().cloned());
        }
        let omega = merged
            .into_iter()
            .map(|((level, support), states)| OmegaDoc { level, support, states: states.into_iter().collect() })
            .collect();

        Document { version: self.version, objects, levels, omega }
    }

    pub fn to_canonical_json(&self) -> String {
        to_canonical_json(&self.canonicalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_reports_position() {
        let err = Document::parse("{\"version\":1,\n\"objects\":[\"a\",]}").unwrap_err();
        match err {
            DocumentError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn version_is_checked() {
        let err = Document::parse(r#"{"version":2,"objects":[]}"#).unwrap_err();
        assert!(matches!(err, DocumentError::UnsupportedVersion(2)));
    }

    #[test]
    fn unsorted_supports_normalize_once() {
        let text = r#"{"version":1,"objects":["b","a"],
            "levels":[{"index":0,"bonds":[{"id":"m","support":["b","a","b"],"state":"s"}]}]}"#;
        let first = Document::parse(text).unwrap().to_canonical_json();
        assert!(first.contains(r#""support":["a","b"]"#));
        let second = Document::parse(&first).unwrap().to_canonical_json();
        assert_eq!(first, second);
    }

    #[test]
    fn ordered_supports_survive_canonicalization() {
        let text = r#"{"version":1,"objects":["a","b"],
            "levels":[{"index":0,"bonds":[{"id":"f","support":["b","a"],"state":"s","ordered":true}]}]}"#;
        let canon = Document::parse(text).unwrap().to_canonical_json();
        assert!(canon.contains(r#""support":["b","a"]"#));
    }
}
