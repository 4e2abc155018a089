//! Axiom validation over raw documents. Violations are data.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::document::Document;
use super::StateToken;
use crate::collection::{Collection, Id};

/// One axiom violation. Variant order is the report order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind")]
pub enum Finding {
    DuplicateObject { id: Id },
    DuplicateBondId { id: Id },
    DisjointnessViolation { bond: Id, level: usize },
    DepthCapExceeded { bond: Id, depth: usize, cap: usize },
    UnknownLeaf { bond: Id, level: usize, leaf: Id },
    IdentityShape { bond: Id },
    OmegaUnknownLeaf { level: usize, leaf: Id },
    StateNotInOmega { bond: Id, state: StateToken },
}

impl Finding {
    pub fn kind(&self) -> &'static str {
        match self {
            Finding::DuplicateObject { .. } => "DuplicateObject",
            Finding::DuplicateBondId { .. } => "DuplicateBondId",
            Finding::DisjointnessViolation { .. } => "DisjointnessViolation",
            Finding::DepthCapExceeded { .. } => "DepthCapExceeded",
            Finding::UnknownLeaf { .. } => "UnknownLeaf",
            Finding::IdentityShape { .. } => "IdentityShape",
            Finding::OmegaUnknownLeaf { .. } => "OmegaUnknownLeaf",
            Finding::StateNotInOmega { .. } => "StateNotInOmega",
        }
    }
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Finding::DuplicateObject { id } => write!(f, "object {id} declared twice"),
            Finding::DuplicateBondId { id } => write!(f, "bond id {id} is not unique"),
            Finding::DisjointnessViolation { bond, level } => {
                write!(f, "bond {bond} at level {level} is registered under distinct supports")
            }
            Finding::DepthCapExceeded { bond, depth, cap } => {
                write!(f, "support of {bond} has depth {depth} above cap {cap}")
            }
            Finding::UnknownLeaf { bond, level, leaf } => {
                write!(f, "support of {bond} (level {level}) references unknown {leaf}")
            }
            Finding::IdentityShape { bond } => write!(f, "identity bond {bond} does not bind a single element"),
            Finding::OmegaUnknownLeaf { level, leaf } => write!(f, "omega table {level} references unknown {leaf}"),
            Finding::StateNotInOmega { bond, state } => write!(f, "state {state} of {bond} is not in its omega entry"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Element universe for each X-index: `X_0` = objects, `X_{i+1}` = level-i bond ids.
pub(crate) fn universes(doc: &Document) -> Vec<BTreeSet<Id>> {
    let top = doc.registrations().map(|(l, _)| l + 1).max().unwrap_or(0);
    let mut out = vec![BTreeSet::new(); top + 1];
    out[0] = doc.objects.iter().cloned().collect();
    for (level, bond) in doc.registrations() {
        out[level + 1].insert(bond.id.clone());
    }
    out
}

pub fn validate_document(doc: &Document, depth_cap: usize) -> ValidationReport {
    let mut findings = BTreeSet::new();

    let mut seen = BTreeSet::new();
    for object in &doc.objects {
        if !seen.insert(object) {
            findings.insert(Finding::DuplicateObject { id: object.clone() });
        }
    }

    let mut registrations: BTreeMap<&Id, Vec<(usize, Collection)>> = BTreeMap::new();
    for (level, bond) in doc.registrations() {
        registrations.entry(&bond.id).or_default().push((level, bond.support.normalize()));
    }
    for (id, regs) in &registrations {
        let levels: BTreeSet<usize> = regs.iter().map(|(l, _)| *l).collect();
        let supports: BTreeSet<&Collection> = regs.iter().map(|(_, s)| s).collect();
        if seen.contains(id) || levels.len() > 1 {
            findings.insert(Finding::DuplicateBondId { id: (*id).clone() });
        } else if supports.len() > 1 {
            findings.insert(Finding::DisjointnessViolation { bond: (*id).clone(), level: regs[0].0 });
        } else if regs.len() > 1 {
            findings.insert(Finding::DuplicateBondId { id: (*id).clone() });
        }
    }

    let universes = universes(doc);
    let empty = BTreeSet::new();
    for (level, bond) in doc.registrations() {
        let depth = bond.support.depth();
        if depth > depth_cap {
            findings.insert(Finding::DepthCapExceeded { bond: bond.id.clone(), depth, cap: depth_cap });
        }
        let universe = universes.get(level).unwrap_or(&empty);
        for leaf in bond.support.flatten() {
            if !universe.contains(&leaf) {
                findings.insert(Finding::UnknownLeaf { bond: bond.id.clone(), level, leaf });
            }
        }
        if bond.identity && bond.support.singleton_leaf().is_none() {
            findings.insert(Finding::IdentityShape { bond: bond.id.clone() });
        }
    }

    let mut omega: BTreeMap<(usize, Collection), BTreeSet<&StateToken>> = BTreeMap::new();
    for entry in &doc.omega {
        let universe = universes.get(entry.level).unwrap_or(&empty);
        for leaf in entry.support.flatten() {
            if !universe.contains(&leaf) {
                findings.insert(Finding::OmegaUnknownLeaf { level: entry.level, leaf });
            }
        }
        omega.entry((entry.level, entry.support.normalize())).or_default().extend(entry.states.iter());
    }
    for (level, bond) in doc.registrations() {
        if let Some(states) = omega.get(&(level, bond.support.normalize())) {
            if !states.contains(&bond.state) {
                findings.insert(Finding::StateNotInOmega { bond: bond.id.clone(), state: bond.state.clone() });
            }
        }
    }

    ValidationReport { findings: findings.into_iter().collect() }
}
