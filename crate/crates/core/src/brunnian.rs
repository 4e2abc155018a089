//! Levelwise Brunnian structures: every group of elements is bound as a
//! whole, and removing any single member leaves the rest unbound.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collection::{Collection, Id};
use crate::kernel::{BondDoc, Document, Hyperstructure, KernelError, LevelDoc, StateToken};

/// Largest number of elements (objects plus bonds) `generate` will build.
pub const MAX_GENERATED_ELEMENTS: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrunnianSpec {
    pub branching: usize,
    pub order: usize,
    #[serde(default = "default_state")]
    pub state: StateToken,
}

fn default_state() -> StateToken {
    StateToken::from("bound")
}

impl BrunnianSpec {
    pub fn new(branching: usize, order: usize) -> Self {
        BrunnianSpec { branching, order, state: default_state() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BrunnianError {
    #[error("branching must be at least 2 and order at least 1 (got {branching}, {order})")]
    InvalidSpec { branching: usize, order: usize },
    #[error("{branching}^{order} rings exceed the size cap of {cap} elements")]
    SizeCapExceeded { branching: usize, order: usize, cap: u64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

fn element_count(m: u64, k: u32) -> Option<u64> {
    (0..=k).try_fold(0u64, |acc, i| acc.checked_add(m.checked_pow(i)?))
}

/// Uniform tree of groups: `m^k` objects `r0, r1, ..`, and at bond level `L`
/// the `m^(k-1-L)` bonds `b{L}_{j}`, bond `j` binding elements `m*j .. m*j+m-1`
/// of the level below.
pub fn generate(spec: &BrunnianSpec) -> Result<Hyperstructure, BrunnianError> {
    let (m, k) = (spec.branching, spec.order);
    if m < 2 || k < 1 {
        return Err(BrunnianError::InvalidSpec { branching: m, order: k });
    }
    let too_big = BrunnianError::SizeCapExceeded { branching: m, order: k, cap: MAX_GENERATED_ELEMENTS };
    let total = u32::try_from(k).ok().and_then(|k| element_count(m as u64, k));
    if total.is_none_or(|t| t > MAX_GENERATED_ELEMENTS) {
        return Err(too_big);
    }

    let mut below: Vec<Id> = (0..m.pow(k as u32)).map(|i| Id::new(format!("r{i}")).expect("non-empty")).collect();
    let mut doc = Document::new(below.clone());
    for level in 0..k {
        let bonds: Vec<BondDoc> = below
            .chunks(m)
            .enumerate()
            .map(|(j, group)| {
                BondDoc::new(
                    Id::new(format!("b{level}_{j}")).expect("non-empty"),
                    Collection::of_ids(group.iter().cloned()),
                    spec.state.clone(),
                )
            })
            .collect();
        below = bonds.iter().map(|b| b.id.clone()).collect();
        doc.levels.push(LevelDoc { index: level, bonds });
    }
    Ok(Hyperstructure::from_document(&doc)?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BrunnianMode {
    /// Only single-member deletions are checked.
    #[default]
    SingleDeletion,
    /// No proper subfamily with two or more members may be bound.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind")]
pub enum BrunnianFinding {
    /// A non-identity bond binding fewer than two members links nothing.
    Degenerate { bond: Id },
    /// `by` binds exactly the members of `bond` without `member`.
    SubfamilyBound { bond: Id, member: Id, by: Id },
    /// Strict mode: `by` binds a proper subfamily of `bond`.
    ProperSubfamilyBound { bond: Id, by: Id },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BrunnianReport {
    pub findings: Vec<BrunnianFinding>,
}

impl BrunnianReport {
    pub fn holds(&self) -> bool {
        self.findings.is_empty()
    }
}

pub fn check_brunnian(h: &Hyperstructure) -> BrunnianReport {
    check_brunnian_with(h, BrunnianMode::SingleDeletion)
}

/// Identity bonds are neither checked nor count as binding a subfamily.
pub fn check_brunnian_with(h: &Hyperstructure, mode: BrunnianMode) -> BrunnianReport {
    let mut findings = BTreeSet::new();
    for level in 0..h.order() {
        let bonds: Vec<(&Id, BTreeSet<Id>)> =
            h.bonds_at(level).filter(|b| !b.is_identity).map(|b| (&b.id, b.members())).collect();
        let mut by_members: BTreeMap<&BTreeSet<Id>, Vec<&Id>> = BTreeMap::new();
        for (id, members) in &bonds {
            by_members.entry(members).or_default().push(id);
        }
        for (id, members) in &bonds {
            if members.len() < 2 {
                findings.insert(BrunnianFinding::Degenerate { bond: (*id).clone() });
                continue;
            }
            for x in members {
                let mut rest = members.clone();
                rest.remove(x);
                for by in by_members.get(&rest).into_iter().flatten() {
                    findings.insert(BrunnianFinding::SubfamilyBound {
                        bond: (*id).clone(),
                        member: x.clone(),
                        by: (*by).clone(),
                    });
                }
            }
            if mode == BrunnianMode::Strict {
                for (other, sub) in &bonds {
                    if sub.len() >= 2 && sub.len() < members.len() && sub.is_subset(members) {
                        findings.insert(BrunnianFinding::ProperSubfamilyBound {
                            bond: (*id).clone(),
                            by: (*other).clone(),
                        });
                    }
                }
            }
        }
    }
    BrunnianReport { findings: findings.into_iter().collect() }
}
