//! Sieves on bonds, Grothendieck topologies on hyperstructures and
//! hyperstructure sites.
//!
//! A covering family on a bond `b` is a set of same-level bonds, optionally
//! witnessed by a bond one level up whose support holds the family and `b`.
//! Arrows are ordered-pair bonds `[s, t]` one level up (plus identity bonds),
//! read as `s -> t`. Sieves are kept closed under substitution along arrows:
//! a member `m` may be replaced by the source of any arrow into `m`.

mod check;
mod document;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

pub use check::{
    check_chain_covering, check_topology, BondAxioms, ChainCovering, ChainFailure, ChainVerdict, TopologyFinding,
    TopologyReport,
};
pub use document::{FamilyDoc, JEntryDoc, PullbackDoc, SieveDoc, TopologyDocument};

use crate::collection::Id;
use crate::kernel::{Bond, Hyperstructure, KernelError};

/// Largest witness support whose subsets are enumerated as families.
pub const MAX_WITNESS_SUPPORT: usize = 20;

pub type Family = BTreeSet<Id>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SiteError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("unknown bond {0}")]
    UnknownBond(Id),
    #[error("family member {member} is not at the level of target {target}")]
    MemberLevel { target: Id, member: Id },
    #[error("covering families must be non-empty (target {0})")]
    EmptyFamily(Id),
    #[error("witness {witness} does not bind the family and target {target}")]
    InvalidWitness { target: Id, witness: Id },
    #[error("bond {arrow} is not an arrow into {target}")]
    NotAnArrow { arrow: Id, target: Id },
    #[error("sieve index {0} is out of range")]
    SieveIndex(usize),
    #[error("pullback result {result} targets {found}, expected the arrow source {expected}")]
    PullbackTarget { result: usize, expected: Id, found: Id },
    #[error("witness {witness} binds {size} elements; at most {MAX_WITNESS_SUPPORT} are enumerated")]
    WitnessTooLarge { witness: Id, size: usize },
    #[error("malformed chain covering: {0}")]
    MalformedChain(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CoveringFamily {
    pub members: Family,
    pub witness: Option<Id>,
}

/// A set of covering families on one target. Equality ignores witnesses.
#[derive(Debug, Clone, Serialize)]
pub struct Sieve {
    target: Id,
    families: BTreeSet<Family>,
    #[serde(skip)]
    witnesses: BTreeMap<Family, Id>,
}

impl PartialEq for Sieve {
    fn eq(&self, other: &Self) -> bool {
        self.target == other.target && self.families == other.families
    }
}

impl Eq for Sieve {}

impl Sieve {
    pub fn empty(target: Id) -> Self {
        Sieve { target, families: BTreeSet::new(), witnesses: BTreeMap::new() }
    }

    pub fn target(&self) -> &Id {
        &self.target
    }

    pub fn families(&self) -> &BTreeSet<Family> {
        &self.families
    }

    pub fn witness(&self, family: &Family) -> Option<&Id> {
        self.witnesses.get(family)
    }

    pub fn covering_families(&self) -> impl Iterator<Item = CoveringFamily> + '_ {
        self.families.iter().map(|f| CoveringFamily { members: f.clone(), witness: self.witnesses.get(f).cloned() })
    }

    pub fn contains(&self, family: &Family) -> bool {
        self.families.contains(family)
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }

    pub fn len(&self) -> usize {
        self.families.len()
    }

    /// Union of all family members.
    pub fn members(&self) -> BTreeSet<Id> {
        self.families.iter().flatten().cloned().collect()
    }

    pub fn is_subsieve_of(&self, other: &Sieve) -> bool {
        self.target == other.target && self.families.is_subset(&other.families)
    }

    fn insert(&mut self, family: Family, witness: Option<Id>) -> bool {
        let fresh = self.families.insert(family.clone());
        if let Some(w) = witness {
            self.witnesses.entry(family).or_insert(w);
        }
        fresh
    }
}

/// Endpoints `(source, target)` of an arrow-shaped bond.
pub fn arrow_ends(bond: &Bond) -> Option<(Id, Id)> {
    if bond.is_identity {
        return bond.support.singleton_leaf().map(|x| (x.clone(), x.clone()));
    }
    if bond.ordered {
        return bond.support.as_pair().map(|(s, t)| (s.clone(), t.clone()));
    }
    None
}

/// Arrows between bonds of one level, indexed by target.
#[derive(Debug, Clone, Default)]
pub(crate) struct LevelArrows {
    into: BTreeMap<Id, Vec<(Id, Id)>>,
}

impl LevelArrows {
    pub(crate) fn of(h: &Hyperstructure, level: usize) -> Self {
        let mut into: BTreeMap<Id, Vec<(Id, Id)>> = BTreeMap::new();
        for bond in h.bonds_at(level + 1) {
            if let Some((source, target)) = arrow_ends(bond) {
                into.entry(target).or_default().push((bond.id.clone(), source));
            }
        }
        LevelArrows { into }
    }

    /// `(arrow, source)` pairs for arrows into `target`.
    pub(crate) fn arrows_into_target(&self, target: &Id) -> &[(Id, Id)] {
        self.into.get(target).map_or(&[], Vec::as_slice)
    }

    /// Non-identity sources of arrows into `target`.
    fn proper_sources<'a>(&'a self, target: &'a Id) -> impl Iterator<Item = &'a Id> + 'a {
        self.arrows_into_target(target).iter().map(|(_, s)| s).filter(move |s| *s != target)
    }

    /// Everything that reaches some element of `tops` along arrows, tops included.
    pub(crate) fn down_closure(&self, tops: impl IntoIterator<Item = Id>) -> BTreeSet<Id> {
        let mut seen: BTreeSet<Id> = BTreeSet::new();
        let mut queue: VecDeque<Id> = tops.into_iter().collect();
        while let Some(x) = queue.pop_front() {
            if !seen.insert(x.clone()) {
                continue;
            }
            for s in self.proper_sources(&x) {
                if !seen.contains(s) {
                    queue.push_back(s.clone());
                }
            }
        }
        seen
    }
}

/// A declared topology: the sieve universe plus which sieves are in `J`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Topology {
    sieves: Vec<Sieve>,
    in_j: Vec<bool>,
    pullbacks: BTreeMap<(Id, usize), usize>,
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a sieve to `J(target)`; returns its universe index.
    pub fn assign(&mut self, sieve: Sieve) -> usize {
        self.sieves.push(sieve);
        self.in_j.push(true);
        self.sieves.len() - 1
    }

    /// Adds a sieve to the universe without placing it in `J`.
    pub fn declare(&mut self, sieve: Sieve) -> usize {
        self.sieves.push(sieve);
        self.in_j.push(false);
        self.sieves.len() - 1
    }

    pub fn set_pullback(&mut self, arrow: Id, sieve_index: usize, result_index: usize) {
        self.pullbacks.insert((arrow, sieve_index), result_index);
    }

    pub fn sieves(&self) -> &[Sieve] {
        &self.sieves
    }

    pub fn sieve(&self, index: usize) -> Option<&Sieve> {
        self.sieves.get(index)
    }

    pub fn is_assigned(&self, index: usize) -> bool {
        self.in_j.get(index).copied().unwrap_or(false)
    }

    pub fn pullback_entry(&self, arrow: &Id, sieve_index: usize) -> Option<usize> {
        self.pullbacks.get(&(arrow.clone(), sieve_index)).copied()
    }

    /// `J(bond)` as `(universe index, sieve)`, first occurrence of equal sieves only.
    pub fn covering(&self, bond: &Id) -> Vec<(usize, &Sieve)> {
        let mut out: Vec<(usize, &Sieve)> = Vec::new();
        for (i, s) in self.sieves.iter().enumerate() {
            if self.in_j[i] && &s.target == bond && !out.iter().any(|(_, t)| *t == s) {
                out.push((i, s));
            }
        }
        out
    }

    pub fn covers(&self, bond: &Id, sieve: &Sieve) -> bool {
        self.covering(bond).iter().any(|(_, s)| *s == sieve)
    }

    /// Bonds with a non-empty `J`.
    pub fn keys(&self) -> BTreeSet<Id> {
        self.sieves.iter().zip(&self.in_j).filter(|(_, j)| **j).map(|(s, _)| s.target.clone()).collect()
    }

    fn replace(&mut self, index: usize, sieve: Sieve) {
        self.sieves[index] = sieve;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum SiteWarning {
    /// A declared sieve was not closed and has been replaced by its closure.
    AutoClosed { bond: Id, sieve_index: usize, added: usize },
}

/// A hyperstructure together with a topology on its bonds.
#[derive(Debug, Clone)]
pub struct Site {
    structure: Hyperstructure,
    topology: Topology,
    warnings: Vec<SiteWarning>,
}

impl Site {
    /// Checks that the topology refers to the structure and closes every sieve.
    pub fn new(structure: Hyperstructure, mut topology: Topology) -> Result<Self, SiteError> {
        let mut warnings = Vec::new();
        for index in 0..topology.sieves.len() {
            let declared = topology.sieves[index].clone();
            let closed = close_sieve(&structure, declared.target(), declared.covering_families())?;
            if closed != declared {
                warnings.push(SiteWarning::AutoClosed {
                    bond: declared.target.clone(),
                    sieve_index: index,
                    added: closed.len() - declared.len(),
                });
                topology.replace(index, closed);
            }
        }
        for ((arrow, from), to) in &topology.pullbacks {
            let source = topology.sieves.get(*from).ok_or(SiteError::SieveIndex(*from))?;
            let result = topology.sieves.get(*to).ok_or(SiteError::SieveIndex(*to))?;
            let bond = structure.bond(arrow).ok_or_else(|| SiteError::UnknownBond(arrow.clone()))?;
            match arrow_ends(bond) {
                Some((s, t)) if &t == source.target() => {
                    if &s != result.target() {
                        return Err(SiteError::PullbackTarget {
                            result: *to,
                            expected: s,
                            found: result.target().clone(),
                        });
                    }
                }
                _ => return Err(SiteError::NotAnArrow { arrow: arrow.clone(), target: source.target().clone() }),
            }
        }
        Ok(Site { structure, topology, warnings })
    }

    pub fn structure(&self) -> &Hyperstructure {
        &self.structure
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn warnings(&self) -> &[SiteWarning] {
        &self.warnings
    }

    /// `J(bond)`.
    pub fn covering(&self, bond: &Id) -> Vec<&Sieve> {
        self.topology.covering(bond).into_iter().map(|(_, s)| s).collect()
    }

    /// Declared sieves on `bond` plus its maximal sieve.
    pub fn sieve_universe(&self, bond: &Id) -> Result<Vec<(Option<usize>, Sieve)>, SiteError> {
        let mut out: Vec<(Option<usize>, Sieve)> = Vec::new();
        for (i, s) in self.topology.sieves.iter().enumerate() {
            if s.target() == bond && !out.iter().any(|(_, t)| t == s) {
                out.push((Some(i), s.clone()));
            }
        }
        let max = maximal_sieve(&self.structure, bond)?;
        if !out.iter().any(|(_, t)| *t == max) {
            out.push((None, max));
        }
        Ok(out)
    }
}

/// Arrow bonds `s -> bond` one level up, identities included.
pub fn arrows_into(h: &Hyperstructure, bond: &Id) -> Result<BTreeSet<Id>, SiteError> {
    let level = h.require_bond(bond)?.level;
    Ok(LevelArrows::of(h, level).arrows_into_target(bond).iter().map(|(a, _)| a.clone()).collect())
}

fn check_family(h: &Hyperstructure, target: &Bond, family: &CoveringFamily) -> Result<(), SiteError> {
    if family.members.is_empty() {
        return Err(SiteError::EmptyFamily(target.id.clone()));
    }
    for m in &family.members {
        let member = h.bond(m).ok_or_else(|| SiteError::UnknownBond(m.clone()))?;
        if member.level != target.level {
            return Err(SiteError::MemberLevel { target: target.id.clone(), member: m.clone() });
        }
    }
    if let Some(w) = &family.witness {
        let witness = h.bond(w).ok_or_else(|| SiteError::UnknownBond(w.clone()))?;
        let support = witness.members();
        let binds_all = family.members.iter().all(|m| support.contains(m)) && support.contains(&target.id);
        if witness.level != target.level + 1 || !binds_all {
            return Err(SiteError::InvalidWitness { target: target.id.clone(), witness: w.clone() });
        }
    }
    Ok(())
}

/// Least sieve on `target` containing `seed` and closed under substitution
/// of a member by the source of an arrow into it.
pub fn close_sieve(
    h: &Hyperstructure,
    target: &Id,
    seed: impl IntoIterator<Item = CoveringFamily>,
) -> Result<Sieve, SiteError> {
    let bond = h.bond(target).ok_or_else(|| SiteError::UnknownBond(target.clone()))?;
    let arrows = LevelArrows::of(h, bond.level);
    let mut sieve = Sieve::empty(target.clone());
    let mut queue = VecDeque::new();
    for family in seed {
        check_family(h, bond, &family)?;
        if sieve.insert(family.members.clone(), family.witness) {
            queue.push_back(family.members);
        }
    }
    close_in_place(&mut sieve, queue, &arrows);
    Ok(sieve)
}

fn close_in_place(sieve: &mut Sieve, mut queue: VecDeque<Family>, arrows: &LevelArrows) {
    while let Some(family) = queue.pop_front() {
        for m in &family {
            for s in arrows.proper_sources(m) {
                let mut refined = family.clone();
                refined.remove(m);
                refined.insert(s.clone());
                if sieve.insert(refined.clone(), None) {
                    queue.push_back(refined);
                }
            }
        }
    }
}

/// Every family witnessed by a bond one level up, closed.
pub fn maximal_sieve(h: &Hyperstructure, bond: &Id) -> Result<Sieve, SiteError> {
    let level = h.bond(bond).ok_or_else(|| SiteError::UnknownBond(bond.clone()))?.level;
    let arrows = LevelArrows::of(h, level);
    maximal_with(h, bond, &arrows)
}

pub(crate) fn maximal_with(h: &Hyperstructure, bond: &Id, arrows: &LevelArrows) -> Result<Sieve, SiteError> {
    let level = h.bond(bond).ok_or_else(|| SiteError::UnknownBond(bond.clone()))?.level;
    let mut sieve = Sieve::empty(bond.clone());
    let mut queue = VecDeque::new();
    for witness in h.bonds_at(level + 1).filter(|w| w.support.contains_leaf(bond)) {
        let support: Vec<Id> = witness.members().into_iter().collect();
        if support.len() > MAX_WITNESS_SUPPORT {
            return Err(SiteError::WitnessTooLarge { witness: witness.id.clone(), size: support.len() });
        }
        for mask in 1u32..(1u32 << support.len()) {
            let family: Family =
                support.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, x)| x.clone()).collect();
            if sieve.insert(family.clone(), Some(witness.id.clone())) {
                queue.push_back(family);
            }
        }
    }
    close_in_place(&mut sieve, queue, arrows);
    Ok(sieve)
}

/// `J(b) = {maximal_sieve(b)}` for every bond.
pub fn trivial_topology(h: &Hyperstructure) -> Result<Topology, SiteError> {
    let mut topology = Topology::new();
    for level in 0..h.order() {
        let arrows = LevelArrows::of(h, level);
        for bond in h.bonds_at(level) {
            topology.assign(maximal_with(h, &bond.id, &arrows)?);
        }
    }
    Ok(topology)
}

/// `arrow^*(sieve)`. An explicit table entry for `(arrow, sieve_index)` wins;
/// otherwise the pullback is derived:
///
/// * along an identity arrow the sieve is returned unchanged;
/// * if the arrow's source already lies under the sieve, the result is the
///   source's maximal sieve;
/// * otherwise it is the source's witnessed families lying under the sieve, closed.
pub fn pullback_sieve(site: &Site, arrow: &Id, sieve: &Sieve, sieve_index: Option<usize>) -> Result<Sieve, SiteError> {
    let h = site.structure();
    let bond = h.bond(arrow).ok_or_else(|| SiteError::UnknownBond(arrow.clone()))?;
    let (source, target) = match arrow_ends(bond) {
        Some((s, t)) if &t == sieve.target() => (s, t),
        _ => return Err(SiteError::NotAnArrow { arrow: arrow.clone(), target: sieve.target().clone() }),
    };
    if let Some(result) = sieve_index.and_then(|i| site.topology().pullback_entry(arrow, i)) {
        return site.topology().sieve(result).cloned().ok_or(SiteError::SieveIndex(result));
    }
    let level = h.require_bond(&target)?.level;
    let arrows = LevelArrows::of(h, level);
    let max = maximal_with(h, &source, &arrows)?;
    Ok(derived_pullback(&source, sieve, &arrows, &max))
}

/// `max` is the maximal sieve of `source`.
pub(crate) fn derived_pullback(source: &Id, sieve: &Sieve, arrows: &LevelArrows, max: &Sieve) -> Sieve {
    if source == sieve.target() {
        return sieve.clone();
    }
    let under = arrows.down_closure(sieve.members());
    if under.contains(source) {
        return max.clone();
    }
    let kept = max.covering_families().filter(|f| f.members.iter().all(|m| under.contains(m))).collect::<Vec<_>>();
    let mut pulled = Sieve::empty(source.clone());
    let mut queue = VecDeque::new();
    for f in kept {
        if pulled.insert(f.members.clone(), f.witness) {
            queue.push_back(f.members);
        }
    }
    close_in_place(&mut pulled, queue, arrows);
    pulled
}
