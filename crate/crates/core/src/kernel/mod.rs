//! The hyperstructure ladder: objects, bond levels, Ω tables, boundaries and
//! identity bonds.
//!
//! Level-0 bonds bind collections of objects (`X_0`); a level-`i` bond binds
//! collections of level-`(i-1)` bond ids. Elements are addressed by X-index:
//! objects live in `X_0`, a level-`i` bond lives in `X_{i+1}`.

mod document;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

pub(crate) use document::{parse_versioned, to_canonical_json};
pub use document::{BondDoc, Document, DocumentError, LevelDoc, OmegaDoc, DOCUMENT_VERSION};
pub use validate::{validate_document, Finding, ValidationReport};

use crate::collection::{Collection, Id, DEFAULT_DEPTH_CAP};

/// State token attached to a bond; numeric tokens feed the bridge module.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct StateToken(String);

impl StateToken {
    pub fn new(token: impl Into<String>) -> Option<Self> {
        let token = token.into();
        (!token.is_empty()).then_some(StateToken(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_number(&self) -> Option<f64> {
        self.0.trim().parse::<f64>().ok().filter(|v| v.is_finite())
    }

    /// Integral values print without a fractional part.
    pub fn from_number(value: f64) -> Self {
        if value.fract() == 0.0 && value.abs() < 1e15 {
            StateToken(format!("{}", value as i64))
        } else {
            StateToken(format!("{value}"))
        }
    }
}

impl fmt::Display for StateToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for StateToken {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        StateToken::new(raw).ok_or_else(|| serde::de::Error::custom("state tokens must be non-empty"))
    }
}

impl From<&str> for StateToken {
    /// Panics on the empty string.
    fn from(s: &str) -> Self {
        StateToken::new(s).expect("non-empty state token")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("invalid structure: {0}")]
    Invalid(Finding),
    #[error("unknown bond {0}")]
    UnknownBond(Id),
    #[error("unknown element {0}")]
    UnknownElement(Id),
    #[error("unknown leaf {leaf} at level {level}")]
    UnknownLeaf { level: usize, leaf: Id },
    #[error("level {level} out of range for order {order}")]
    LevelOutOfRange { level: usize, order: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bond {
    pub id: Id,
    pub level: usize,
    /// Stored support: normalized unless `ordered`.
    pub support: Collection,
    pub state: StateToken,
    pub is_identity: bool,
    pub ordered: bool,
}

impl Bond {
    pub fn members(&self) -> BTreeSet<Id> {
        self.support.flatten()
    }

    fn to_doc(&self) -> BondDoc {
        BondDoc {
            id: self.id.clone(),
            support: self.support.clone(),
            state: self.state.clone(),
            identity: self.is_identity,
            ordered: self.ordered,
        }
    }
}

/// Explicit Ω entries of one level, keyed by normalized support.
pub type OmegaTable = BTreeMap<Collection, BTreeSet<StateToken>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperstructure {
    objects: BTreeSet<Id>,
    levels: Vec<BTreeMap<Id, Bond>>,
    level_of: BTreeMap<Id, usize>,
    omega: BTreeMap<usize, OmegaTable>,
    depth_cap: usize,
}

impl Hyperstructure {
    pub fn from_document(doc: &Document) -> Result<Self, KernelError> {
        Self::from_document_with_cap(doc, DEFAULT_DEPTH_CAP)
    }

    /// Validates and builds. Fails on the first finding `validate_document` reports.
    pub fn from_document_with_cap(doc: &Document, depth_cap: usize) -> Result<Self, KernelError> {
        let report = validate_document(doc, depth_cap);
        if let Some(finding) = report.findings.into_iter().next() {
            return Err(KernelError::Invalid(finding));
        }
        let mut h = Hyperstructure {
            objects: doc.objects.iter().cloned().collect(),
            levels: Vec::new(),
            level_of: BTreeMap::new(),
            omega: BTreeMap::new(),
            depth_cap,
        };
        for (level, bond) in doc.registrations() {
            if h.level_of.contains_key(&bond.id) {
                continue;
            }
            h.insert(Bond {
                id: bond.id.clone(),
                level,
                support: bond.canonical_support(),
                state: bond.state.clone(),
                is_identity: bond.identity,
                ordered: bond.ordered,
            });
        }
        for entry in &doc.omega {
            h.omega
                .entry(entry.level)
                .or_default()
                .entry(entry.support.normalize())
                .or_default()
                .extend(entry.states.iter().cloned());
        }
        Ok(h)
    }

    pub fn parse(text: &str) -> Result<Self, BuildFromTextError> {
        let doc = Document::parse(text)?;
        Ok(Self::from_document(&doc)?)
    }

    fn insert(&mut self, bond: Bond) {
        while self.levels.len() <= bond.level {
            self.levels.push(BTreeMap::new());
        }
        self.level_of.insert(bond.id.clone(), bond.level);
        self.levels[bond.level].insert(bond.id.clone(), bond);
    }

    pub fn to_document(&self) -> Document {
        let mut doc = Document::new(self.objects.iter().cloned().collect());
        for (index, bonds) in self.levels.iter().enumerate() {
            if !bonds.is_empty() {
                doc.levels.push(LevelDoc { index, bonds: bonds.values().map(Bond::to_doc).collect() });
            }
        }
        for (level, table) in &self.omega {
            for (support, states) in table {
                doc.omega.push(OmegaDoc {
                    level: *level,
                    support: support.clone(),
                    states: states.iter().cloned().collect(),
                });
            }
        }
        doc
    }

    pub fn to_canonical_json(&self) -> String {
        self.to_document().to_canonical_json()
    }

    /// Always empty for a built structure.
    pub fn validate(&self) -> ValidationReport {
        validate_document(&self.to_document(), self.depth_cap)
    }

    pub fn depth_cap(&self) -> usize {
        self.depth_cap
    }

    pub fn objects(&self) -> &BTreeSet<Id> {
        &self.objects
    }

    /// Number of non-empty bond levels; bond levels are `0..order`.
    pub fn order(&self) -> usize {
        self.levels.iter().rposition(|l| !l.is_empty()).map_or(0, |i| i + 1)
    }

    pub fn bond(&self, id: &Id) -> Option<&Bond> {
        let level = *self.level_of.get(id)?;
        self.levels[level].get(id)
    }

    pub fn require_bond(&self, id: &Id) -> Result<&Bond, KernelError> {
        self.bond(id).ok_or_else(|| KernelError::UnknownBond(id.clone()))
    }

    pub fn contains(&self, id: &Id) -> bool {
        self.objects.contains(id) || self.level_of.contains_key(id)
    }

    pub fn bonds_at(&self, level: usize) -> impl Iterator<Item = &Bond> + '_ {
        self.levels.get(level).into_iter().flat_map(|l| l.values())
    }

    pub fn bond_count(&self, level: usize) -> usize {
        self.levels.get(level).map_or(0, BTreeMap::len)
    }

    /// Every bond, by level then id.
    pub fn bonds(&self) -> impl Iterator<Item = &Bond> + '_ {
        self.levels.iter().flat_map(|l| l.values())
    }

    pub fn total_bonds(&self) -> usize {
        self.level_of.len()
    }

    /// X-index of an element: 0 for objects, `level + 1` for bonds.
    pub fn x_index(&self, id: &Id) -> Option<usize> {
        if self.objects.contains(id) {
            Some(0)
        } else {
            self.level_of.get(id).map(|l| l + 1)
        }
    }

    /// `X_x`: objects for `x = 0`, level-`(x-1)` bond ids otherwise.
    pub fn universe(&self, x: usize) -> BTreeSet<Id> {
        if x == 0 {
            self.objects.clone()
        } else {
            self.bonds_at(x - 1).map(|b| b.id.clone()).collect()
        }
    }

    pub fn in_universe(&self, x: usize, id: &Id) -> bool {
        self.x_index(id) == Some(x)
    }

    /// `∂(b)`: the registered support, normalized.
    pub fn boundary(&self, id: &Id) -> Result<Collection, KernelError> {
        Ok(self.require_bond(id)?.support.normalize())
    }

    pub fn members(&self, id: &Id) -> Result<BTreeSet<Id>, KernelError> {
        Ok(self.require_bond(id)?.members())
    }

    /// Bonds whose support mentions `id`.
    pub fn parents(&self, id: &Id) -> Vec<&Bond> {
        match self.x_index(id) {
            Some(x) => self.bonds_at(x).filter(|b| b.support.contains_leaf(id)).collect(),
            None => Vec::new(),
        }
    }

    /// Existing identity bond on `element`, if any.
    pub fn identity_of(&self, element: &Id) -> Option<&Bond> {
        let x = self.x_index(element)?;
        self.bonds_at(x).find(|b| b.is_identity && b.support.singleton_leaf() == Some(element))
    }

    /// Adds (or finds) the identity bond `I(element)` for an element of `X_level`.
    /// The new bond sits at bond level `level`.
    pub fn add_identity(&self, element: &Id, level: usize) -> Result<(Hyperstructure, Id), KernelError> {
        if !self.in_universe(level, element) {
            return Err(KernelError::UnknownElement(element.clone()));
        }
        let order = self.order();
        if level >= order {
            return Err(KernelError::LevelOutOfRange { level, order });
        }
        if let Some(existing) = self.identity_of(element) {
            return Ok((self.clone(), existing.id.clone()));
        }
        let id = self.fresh_id(&format!("I({element})"));
        let mut next = self.clone();
        next.insert(Bond {
            id: id.clone(),
            level,
            support: Collection::Inner(vec![Collection::Leaf(element.clone())]),
            state: StateToken::from("identity"),
            is_identity: true,
            ordered: false,
        });
        Ok((next, id))
    }

    /// `base`, or `base'`, `base''`, ... whichever is unused.
    pub fn fresh_id(&self, base: &str) -> Id {
        let mut id = Id::new(base).expect("generated ids are non-empty");
        while self.contains(&id) {
            id = id.suffixed("'");
        }
        id
    }

    /// Registers one more bond after checking it against the current structure.
    pub fn with_bond(&self, level: usize, bond: BondDoc) -> Result<Hyperstructure, KernelError> {
        let mut doc = self.to_document();
        doc.push_bond(level, bond);
        Hyperstructure::from_document_with_cap(&doc, self.depth_cap)
    }

    /// Inserts a bond whose leaves are known to resolve; skips full revalidation.
    pub(crate) fn with_checked_bond(&self, bond: Bond) -> Result<Hyperstructure, KernelError> {
        if self.contains(&bond.id) {
            return Err(KernelError::Invalid(Finding::DuplicateBondId { id: bond.id }));
        }
        if let Some(leaf) = bond.support.flatten().into_iter().find(|l| !self.in_universe(bond.level, l)) {
            return Err(KernelError::Invalid(Finding::UnknownLeaf { bond: bond.id, level: bond.level, leaf }));
        }
        let depth = bond.support.depth();
        if depth > self.depth_cap {
            return Err(KernelError::Invalid(Finding::DepthCapExceeded { bond: bond.id, depth, cap: self.depth_cap }));
        }
        let mut next = self.clone();
        next.insert(bond);
        Ok(next)
    }

    pub fn explicit_omega(&self, level: usize) -> Option<&OmegaTable> {
        self.omega.get(&level)
    }

    /// `Ω_level(support)`: the explicit entry when present, else the states
    /// of bonds registered on that support. May be empty.
    pub fn omega_of(&self, level: usize, support: &Collection) -> Result<BTreeSet<StateToken>, KernelError> {
        if let Some(leaf) = support.flatten().into_iter().find(|l| !self.in_universe(level, l)) {
            return Err(KernelError::UnknownLeaf { level, leaf });
        }
        let key = support.normalize();
        if let Some(states) = self.omega.get(&level).and_then(|t| t.get(&key)) {
            return Ok(states.clone());
        }
        Ok(self.bonds_at(level).filter(|b| b.support.normalize() == key).map(|b| b.state.clone()).collect())
    }

    /// Adds `state` to an existing explicit entry for `support`.
    pub(crate) fn extend_omega(&mut self, level: usize, support: &Collection, state: &StateToken) {
        if let Some(states) = self.omega.get_mut(&level).and_then(|t| t.get_mut(&support.normalize())) {
            states.insert(state.clone());
        }
    }

    /// Renames every id (objects and bonds) and returns the resulting document.
    pub(crate) fn renamed_document<F>(&self, mut f: F) -> Document
    where
        F: FnMut(&Id) -> Id,
    {
        let mut doc = self.to_document();
        for o in &mut doc.objects {
            *o = f(o);
        }
        for level in &mut doc.levels {
            for bond in &mut level.bonds {
                bond.id = f(&bond.id);
                bond.support = bond.support.rename(&mut f);
            }
        }
        for entry in &mut doc.omega {
            entry.support = entry.support.rename(&mut f);
        }
        doc
    }
}

#[derive(Debug, Error)]
pub enum BuildFromTextError {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Convenience builder over [`Document`]. Ids and states given as `&str`
/// must be valid tokens; invalid ones panic.
#[derive(Debug, Clone)]
pub struct StructureBuilder {
    doc: Document,
    depth_cap: usize,
}

impl Default for StructureBuilder {
    fn default() -> Self {
        StructureBuilder { doc: Document::new(Vec::new()), depth_cap: DEFAULT_DEPTH_CAP }
    }
}

pub fn id(token: &str) -> Id {
    Id::new(token).expect("valid id token")
}

impl StructureBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn depth_cap(mut self, cap: usize) -> Self {
        self.depth_cap = cap;
        self
    }

    pub fn objects<'a>(mut self, ids: impl IntoIterator<Item = &'a str>) -> Self {
        self.doc.objects.extend(ids.into_iter().map(id));
        self
    }

    /// A bond over a flat family of ids.
    pub fn bond(self, level: usize, bond_id: &str, members: &[&str], state: &str) -> Self {
        let support = Collection::of_ids(members.iter().map(|m| id(m)));
        self.bond_with(level, bond_id, support, state)
    }

    pub fn bond_with(mut self, level: usize, bond_id: &str, support: Collection, state: &str) -> Self {
        self.doc.push_bond(level, BondDoc::new(id(bond_id), support, StateToken::from(state)));
        self
    }

    /// An ordered pair bond `[source, target]`: an arrow `source -> target`.
    pub fn arrow(mut self, level: usize, bond_id: &str, source: &str, target: &str) -> Self {
        let mut bond =
            BondDoc::new(id(bond_id), Collection::of_ids([id(source), id(target)]), StateToken::from("arrow"));
        bond.ordered = true;
        self.doc.push_bond(level, bond);
        self
    }

    pub fn ordered_bond(mut self, level: usize, bond_id: &str, support: Collection, state: &str) -> Self {
        let mut bond = BondDoc::new(id(bond_id), support, StateToken::from(state));
        bond.ordered = true;
        self.doc.push_bond(level, bond);
        self
    }

    pub fn identity(mut self, level: usize, bond_id: &str, element: &str) -> Self {
        let mut bond = BondDoc::new(id(bond_id), Collection::of_ids([id(element)]), StateToken::from("identity"));
        bond.identity = true;
        self.doc.push_bond(level, bond);
        self
    }

    pub fn omega(mut self, level: usize, support: Collection, states: &[&str]) -> Self {
        self.doc.omega.push(OmegaDoc { level, support, states: states.iter().map(|s| StateToken::from(*s)).collect() });
        self
    }

    pub fn document(&self) -> &Document {
        &self.doc
    }

    pub fn into_document(self) -> Document {
        self.doc
    }

    pub fn build(self) -> Result<Hyperstructure, KernelError> {
        Hyperstructure::from_document_with_cap(&self.doc, self.depth_cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(xs: &[&str]) -> BTreeSet<Id> {
        xs.iter().map(|x| id(x)).collect()
    }

    /// Nine objects, three level-0 groups, one level-1 bond over the groups.
    fn nine_rings() -> Hyperstructure {
        StructureBuilder::new()
            .objects(["r0", "r1", "r2", "r3", "r4", "r5", "r6", "r7", "r8"])
            .bond(0, "g0", &["r0", "r1", "r2"], "bound")
            .bond(0, "g1", &["r3", "r4", "r5"], "bound")
            .bond(0, "g2", &["r6", "r7", "r8"], "bound")
            .bond(1, "top", &["g0", "g1", "g2"], "bound")
            .build()
            .unwrap()
    }

    #[test]
    fn minimal_bond_has_order_one() {
        let h = StructureBuilder::new().objects(["a", "b"]).bond(0, "m", &["a", "b"], "linked").build().unwrap();
        assert_eq!(h.order(), 1);
        assert_eq!(h.universe(1), ids(&["m"]));
    }

    #[test]
    fn bond_under_two_supports_is_a_disjointness_violation() {
        let err = StructureBuilder::new()
            .objects(["a", "b"])
            .bond(0, "m", &["a", "b"], "s")
            .bond(0, "m", &["a"], "s")
            .build()
            .unwrap_err();
        assert_eq!(err, KernelError::Invalid(Finding::DisjointnessViolation { bond: id("m"), level: 0 }));
    }

    #[test]
    fn nine_ring_structure_has_order_two() {
        let h = nine_rings();
        assert_eq!(h.order(), 2);
        assert_eq!(h.bond_count(0), 3);
        assert_eq!(h.bond_count(1), 1);
        assert!(h.validate().is_empty());
    }

    #[test]
    fn boundary_reads_back_supports() {
        let h = StructureBuilder::new().objects(["a", "b"]).bond(0, "m", &["b", "a"], "s").build().unwrap();
        assert_eq!(h.boundary(&id("m")).unwrap(), Collection::of_ids(ids(&["a", "b"])));
        let (h, ia) = h.add_identity(&id("a"), 0).unwrap();
        assert_eq!(h.boundary(&ia).unwrap(), Collection::of_ids(ids(&["a"])));
        let top = nine_rings();
        assert_eq!(top.boundary(&id("top")).unwrap().flatten(), ids(&["g0", "g1", "g2"]));
        assert!(matches!(top.boundary(&id("nope")), Err(KernelError::UnknownBond(_))));
    }

    #[test]
    fn add_identity_is_idempotent_and_range_checked() {
        let h = nine_rings();
        let (h1, first) = h.add_identity(&id("r0"), 0).unwrap();
        let (h2, second) = h1.add_identity(&id("r0"), 0).unwrap();
        assert_eq!(first, second);
        assert_eq!(h1, h2);

        let (h3, ig) = h2.add_identity(&id("g0"), 1).unwrap();
        assert_eq!(h3.boundary(&ig).unwrap().singleton_leaf(), Some(&id("g0")));
        assert_eq!(h3.bond(&ig).unwrap().level, 1);

        let order = h.order();
        assert_eq!(h.add_identity(&id("top"), order), Err(KernelError::LevelOutOfRange { level: order, order }));
        assert_eq!(h.add_identity(&id("g0"), 0), Err(KernelError::UnknownElement(id("g0"))));
    }

    #[test]
    fn omega_lookup() {
        let h = StructureBuilder::new()
            .objects(["a", "b", "c"])
            .bond(0, "m", &["a", "b"], "linked")
            .bond(0, "w", &["b", "c"], "hot")
            .omega(0, Collection::of_ids([id("c"), id("b")]), &["hot", "cold"])
            .build()
            .unwrap();
        assert!(h.omega_of(0, &Collection::of_ids([id("a"), id("c")])).unwrap().is_empty());
        assert_eq!(
            h.omega_of(0, &Collection::of_ids([id("b"), id("a")])).unwrap(),
            [StateToken::from("linked")].into_iter().collect()
        );
        assert_eq!(
            h.omega_of(0, &Collection::of_ids([id("b"), id("c")])).unwrap(),
            [StateToken::from("cold"), StateToken::from("hot")].into_iter().collect()
        );
        assert!(matches!(h.omega_of(0, &Collection::of_ids([id("zz")])), Err(KernelError::UnknownLeaf { .. })));
    }

    #[test]
    fn explicit_omega_contradiction_is_rejected() {
        let err = StructureBuilder::new()
            .objects(["a", "b"])
            .bond(0, "m", &["a", "b"], "warm")
            .omega(0, Collection::of_ids([id("a"), id("b")]), &["hot", "cold"])
            .build()
            .unwrap_err();
        assert!(matches!(err, KernelError::Invalid(Finding::StateNotInOmega { .. })));
    }

    #[test]
    fn validate_reports_injected_defects() {
        let dangling = StructureBuilder::new().objects(["a"]).bond(0, "m", &["a", "ghost"], "s");
        let report = validate_document(dangling.document(), DEFAULT_DEPTH_CAP);
        assert_eq!(report.findings, vec![Finding::UnknownLeaf { bond: id("m"), level: 0, leaf: id("ghost") }]);

        let mut doc = StructureBuilder::new().objects(["a", "b"]).into_document();
        let mut bad = BondDoc::new(id("i"), Collection::of_ids([id("a"), id("b")]), StateToken::from("identity"));
        bad.identity = true;
        doc.push_bond(0, bad);
        let report = validate_document(&doc, DEFAULT_DEPTH_CAP);
        assert_eq!(report.findings, vec![Finding::IdentityShape { bond: id("i") }]);
    }

    #[test]
    fn raw_objects_two_levels_up_are_unknown() {
        let err = StructureBuilder::new()
            .objects(["a", "b"])
            .bond(0, "m", &["a", "b"], "s")
            .bond(1, "n", &["m", "a"], "s")
            .build()
            .unwrap_err();
        assert_eq!(err, KernelError::Invalid(Finding::UnknownLeaf { bond: id("n"), level: 1, leaf: id("a") }));
    }

    #[test]
    fn depth_cap_is_enforced() {
        let deep: Collection = serde_json::from_str(r#"[[["a"]]]"#).unwrap();
        let err = StructureBuilder::new().depth_cap(2).objects(["a"]).bond_with(0, "m", deep, "s").build().unwrap_err();
        assert!(matches!(err, KernelError::Invalid(Finding::DepthCapExceeded { depth: 3, cap: 2, .. })));
    }

    #[test]
    fn duplicate_ids_across_levels_or_objects() {
        let err = StructureBuilder::new().objects(["a"]).bond(0, "a", &["a"], "s").build().unwrap_err();
        assert_eq!(err, KernelError::Invalid(Finding::DuplicateBondId { id: id("a") }));
        let err = StructureBuilder::new()
            .objects(["a"])
            .bond(0, "m", &["a"], "s")
            .bond(0, "m", &["a"], "t")
            .build()
            .unwrap_err();
        assert_eq!(err, KernelError::Invalid(Finding::DuplicateBondId { id: id("m") }));
    }

    #[test]
    fn numeric_tokens_format_compactly() {
        assert_eq!(StateToken::from_number(6.0).as_str(), "6");
        assert_eq!(StateToken::from_number(2.5).as_str(), "2.5");
        assert_eq!(StateToken::from("  7 ").as_number(), Some(7.0));
        assert_eq!(StateToken::from("NaN").as_number(), None);
    }
}
