//! Deduction read off bond supports: a bond `[given, goal]` deduces `goal`
//! from `given`, and a bond `[given, proof, goal]` does so through `proof`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::BridgeError;
use crate::collection::{Collection, Id};
use crate::kernel::{Bond, Hyperstructure};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeductionQuery {
    pub bond: Id,
    pub given: BTreeSet<Id>,
    pub goal: BTreeSet<Id>,
    #[serde(default)]
    pub max_proof_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeductionMode {
    /// The support is the two-part collection `[given, goal]`.
    #[default]
    TwoPart,
    /// The flattened support is `given ∪ goal`.
    Flat,
}

fn checked<'h>(h: &'h Hyperstructure, q: &DeductionQuery) -> Result<&'h Bond, BridgeError> {
    let bond = h.bond(&q.bond).ok_or_else(|| BridgeError::UnknownBond(q.bond.clone()))?;
    if q.given.is_empty() || q.goal.is_empty() {
        return Err(BridgeError::MalformedQuery("given and goal must be non-empty".into()));
    }
    if let Some(x) = q.given.iter().chain(&q.goal).find(|x| !h.in_universe(bond.level, x)) {
        return Err(BridgeError::MalformedQuery(format!("{x} is not bound at the level of {}", q.bond)));
    }
    Ok(bond)
}

fn family(ids: &BTreeSet<Id>) -> Collection {
    Collection::Inner(ids.iter().cloned().map(Collection::Leaf).collect())
}

/// Whether the support is the collection of `parts`, positionally for
/// ordered bonds and up to normalization otherwise.
fn support_is(bond: &Bond, parts: &[&BTreeSet<Id>]) -> bool {
    let target = Collection::Inner(parts.iter().map(|p| family(p)).collect());
    if bond.ordered {
        let children = bond.support.children();
        children.len() == parts.len() && children.iter().zip(target.children()).all(|(c, t)| c.normalize() == *t)
    } else {
        bond.support == target.normalize()
    }
}

pub fn deduce(h: &Hyperstructure, query: &DeductionQuery, mode: DeductionMode) -> Result<bool, BridgeError> {
    let bond = checked(h, query)?;
    Ok(match mode {
        DeductionMode::TwoPart => support_is(bond, &[&query.given, &query.goal]),
        DeductionMode::Flat => bond.members() == query.given.union(&query.goal).cloned().collect(),
    })
}

/// Smallest proof family (then lexicographically first) such that some bond
/// at the query bond's level has support `[given, proof, goal]`. The empty
/// family is returned when a two-part bond `[given, goal]` exists.
pub fn find_proof(h: &Hyperstructure, query: &DeductionQuery) -> Result<Option<BTreeSet<Id>>, BridgeError> {
    let level = checked(h, query)?.level;
    if h.bonds_at(level).any(|b| support_is(b, &[&query.given, &query.goal])) {
        return Ok(Some(BTreeSet::new()));
    }
    let mut best: Option<BTreeSet<Id>> = None;
    for bond in h.bonds_at(level).filter(|b| b.support.children().len() == 3) {
        let slots = if bond.ordered { &bond.support.children()[1..2] } else { bond.support.children() };
        for child in slots {
            let leaves: Option<BTreeSet<Id>> = child
                .children()
                .iter()
                .map(|c| match c {
                    Collection::Leaf(x) => Some(x.clone()),
                    Collection::Inner(_) => None,
                })
                .collect();
            let Some(proof) = leaves else { continue };
            if proof.is_empty()
                || proof.len() > query.max_proof_size
                || proof.iter().any(|x| query.given.contains(x) || query.goal.contains(x))
            {
                continue;
            }
            let better = best.as_ref().is_none_or(|b| (proof.len(), &proof) < (b.len(), b));
            if better && support_is(bond, &[&query.given, &proof, &query.goal]) {
                best = Some(proof);
            }
        }
    }
    Ok(best)
}
