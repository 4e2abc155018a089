//! Transfer of structure along relations, bridge equivalence of sites,
//! fusion products, threshold-gated propagation and bond-based deduction.

mod deduction;
mod equivalence;
mod fusion;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use deduction::{deduce, find_proof, DeductionMode, DeductionQuery};
pub use equivalence::{bridge_equivalent, BridgeVerdict};
pub use fusion::{fuse, propagate, Activation, CrossBond, FusionOutcome, FusionSpec, Propagation, Thresholds};

use crate::collection::{Collection, Id};
use crate::combiner::CombinerError;
use crate::composition::CompositionError;
use crate::kernel::{
    parse_versioned, to_canonical_json, Document, DocumentError, Hyperstructure, KernelError, LevelDoc,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BridgeError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error(transparent)]
    Combiner(#[from] CombinerError),
    #[error("the target universe is empty")]
    EmptyUniverse,
    #[error("unknown object {0}")]
    UnknownObject(Id),
    #[error("unknown bond {0}")]
    UnknownBond(Id),
    #[error("search budget of {budget} exhausted")]
    BudgetExceeded { budget: u64 },
    #[error("malformed cross bond {id}: {reason}")]
    MalformedCrossBond { id: Id, reason: String },
    #[error("{id} has non-numeric state {token}")]
    NonNumericState { id: Id, token: String },
    #[error("combiner {0} is not numeric")]
    NonNumericCombiner(String),
    #[error("no threshold for level {0}")]
    MissingThreshold(usize),
    #[error("malformed query: {0}")]
    MalformedQuery(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDocument {
    pub version: u32,
    #[serde(rename = "Z")]
    pub z: Vec<Id>,
    pub pairs: Vec<(Id, Id)>,
}

impl RelationDocument {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        parse_versioned(text, |d: &RelationDocument| d.version)
    }

    pub fn to_canonical_json(&self) -> String {
        to_canonical_json(self)
    }
}

/// Suffix appended to transferred bond ids.
pub const TRANSFER_SUFFIX: &str = "@Z";

/// Rebuilds `h` over the universe `Z`: each object leaf `x` becomes the
/// collection of all `z` related to it (a bare leaf when there is one).
/// Bonds with a leaf of empty preimage are dropped, and so is everything
/// built on a dropped bond.
pub fn transfer(h: &Hyperstructure, relation: &RelationDocument) -> Result<Hyperstructure, BridgeError> {
    if relation.z.is_empty() {
        return Err(BridgeError::EmptyUniverse);
    }
    let universe: BTreeSet<&Id> = relation.z.iter().collect();
    let mut preimage: BTreeMap<&Id, BTreeSet<Id>> = BTreeMap::new();
    for (z, x) in &relation.pairs {
        if !universe.contains(z) {
            return Err(BridgeError::UnknownObject(z.clone()));
        }
        if !h.objects().contains(x) {
            return Err(BridgeError::UnknownObject(x.clone()));
        }
        preimage.entry(x).or_default().insert(z.clone());
    }

    let image_of_object = |x: &Id| -> Option<Collection> {
        let zs = preimage.get(x)?;
        match zs.len() {
            1 => zs.iter().next().cloned().map(Collection::Leaf),
            _ => Some(Collection::Inner(zs.iter().cloned().map(Collection::Leaf).collect())),
        }
    };
    let transferred = |c: &Collection, level: usize, kept: &BTreeSet<Id>| -> Option<Collection> {
        let mut ok = true;
        let out = c.substitute(&mut |leaf: &Id| {
            let image = if level == 0 {
                image_of_object(leaf)
            } else if kept.contains(leaf) {
                Some(Collection::Leaf(leaf.suffixed(TRANSFER_SUFFIX)))
            } else {
                None
            };
            image.unwrap_or_else(|| {
                ok = false;
                Collection::Leaf(leaf.clone())
            })
        });
        ok.then_some(out)
    };

    let mut doc = Document::new(relation.z.clone());
    doc.objects.sort();
    doc.objects.dedup();
    let mut kept: BTreeSet<Id> = BTreeSet::new();
    let mut source = h.to_document();
    source.levels.sort_by_key(|l| l.index);
    for level in &source.levels {
        let mut bonds = Vec::new();
        let mut next_kept = BTreeSet::new();
        for bond in &level.bonds {
            let Some(support) = transferred(&bond.support, level.index, &kept) else { continue };
            let mut out = bond.clone();
            out.id = bond.id.suffixed(TRANSFER_SUFFIX);
            out.identity = bond.identity && support.singleton_leaf().is_some();
            out.support = support;
            next_kept.insert(bond.id.clone());
            bonds.push(out);
        }
        kept.extend(next_kept);
        if !bonds.is_empty() {
            doc.levels.push(LevelDoc { index: level.index, bonds });
        }
    }
    for entry in &source.omega {
        if let Some(support) = transferred(&entry.support, entry.level, &kept) {
            let mut out = entry.clone();
            out.support = support;
            doc.omega.push(out);
        }
    }
    Ok(Hyperstructure::from_document_with_cap(&doc, h.depth_cap())?)
}
