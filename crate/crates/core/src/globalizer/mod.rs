//! Presheaves of states on a site, globalizers and the one-level sheaf
//! condition.
//!
//! A globalizer has two parts. Connector tables `δ̂_L` send the values of a
//! bond's boundary members to a value of the bond; each top bond must end up
//! with exactly one value. When the presheaf carries restriction maps, every
//! covering sieve also needs a gluing table sending each matching family to
//! its unique amalgamation.

mod gluing;
mod oracle;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use oracle::{check_one_level, sheaf_condition_oracle, SheafFailure, SheafReport};

use crate::collection::Id;
use crate::combiner::StateCombiner;
use crate::kernel::{parse_versioned, to_canonical_json, DocumentError, Hyperstructure, StateToken, DOCUMENT_VERSION};
use crate::site::{arrow_ends, Site, SiteError};
use gluing::GluingProblem;

/// Largest number of boundary tuples or candidate families enumerated for one bond.
pub const ENUMERATION_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GlobalizerError {
    #[error(transparent)]
    Site(#[from] SiteError),
    #[error("universe mismatch: {0}")]
    UniverseMismatch(String),
    #[error("unknown bond {0}")]
    UnknownBond(Id),
    #[error("restriction given for {0}, which is not an arrow")]
    NotAnArrow(Id),
    #[error("restriction along {arrow} is not a total map into the source values (at {value})")]
    InvalidRestriction { arrow: Id, value: StateToken },
    #[error("missing restriction map{}", arrow.as_ref().map(|a| format!(" for {a}")).unwrap_or_default())]
    MissingRestriction { arrow: Option<Id> },
    #[error("not a one-level site: {0}")]
    NotOneLevelSite(String),
    #[error("search budget of {budget} exhausted")]
    BudgetExceeded { budget: u64 },
    #[error("no operation declared")]
    NoOperationDeclared,
    #[error("bonds {0} and {1} are at different levels")]
    LevelMismatch(Id, Id),
    #[error("enumeration for {0} exceeds the limit")]
    TooLarge(Id),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresheafKind {
    Internal,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresheafDocument {
    pub version: u32,
    pub kind: PresheafKind,
    pub universes: Vec<Vec<StateToken>>,
    pub values: Vec<ValueDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restrictions: Option<Vec<RestrictionDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation: Option<StateCombiner>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueDoc {
    pub bond: Id,
    pub set: Vec<StateToken>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionDoc {
    pub arrow: Id,
    pub map: BTreeMap<StateToken, StateToken>,
}

impl PresheafDocument {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        parse_versioned(text, |d: &PresheafDocument| d.version)
    }

    pub fn to_canonical_json(&self) -> String {
        to_canonical_json(self)
    }
}

/// A validated presheaf. Level-`L` values live in universe `order - 1 - L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Presheaf {
    kind: PresheafKind,
    universes: Vec<BTreeSet<StateToken>>,
    values: BTreeMap<Id, BTreeSet<StateToken>>,
    restrictions: Option<BTreeMap<Id, BTreeMap<StateToken, StateToken>>>,
    operation: Option<StateCombiner>,
}

impl Presheaf {
    pub fn new(h: &Hyperstructure, doc: &PresheafDocument) -> Result<Self, GlobalizerError> {
        let order = h.order();
        if doc.universes.len() != order {
            return Err(GlobalizerError::UniverseMismatch(format!(
                "{} universes declared for a structure of order {order}",
                doc.universes.len()
            )));
        }
        if doc.universes.iter().any(Vec::is_empty) {
            return Err(GlobalizerError::UniverseMismatch("universes must be non-empty".into()));
        }
        let universes: Vec<BTreeSet<StateToken>> = doc.universes.iter().map(|u| u.iter().cloned().collect()).collect();

        let mut values: BTreeMap<Id, BTreeSet<StateToken>> = BTreeMap::new();
        for entry in &doc.values {
            let bond = h.bond(&entry.bond).ok_or_else(|| GlobalizerError::UnknownBond(entry.bond.clone()))?;
            let universe = &universes[order - 1 - bond.level];
            if entry.set.is_empty() {
                return Err(GlobalizerError::UniverseMismatch(format!("empty value set for {}", entry.bond)));
            }
            if let Some(v) = entry.set.iter().find(|v| !universe.contains(*v)) {
                return Err(GlobalizerError::UniverseMismatch(format!(
                    "value {v} of {} is outside universe {}",
                    entry.bond,
                    order - 1 - bond.level
                )));
            }
            values.entry(entry.bond.clone()).or_default().extend(entry.set.iter().cloned());
        }

        let restrictions = match &doc.restrictions {
            None => None,
            Some(list) => {
                let mut maps: BTreeMap<Id, BTreeMap<StateToken, StateToken>> = BTreeMap::new();
                for r in list {
                    let bond = h.bond(&r.arrow).ok_or_else(|| GlobalizerError::UnknownBond(r.arrow.clone()))?;
                    if arrow_ends(bond).is_none() {
                        return Err(GlobalizerError::NotAnArrow(r.arrow.clone()));
                    }
                    maps.entry(r.arrow.clone()).or_default().extend(r.map.clone());
                }
                for bond in h.bonds() {
                    let Some((source, target)) = arrow_ends(bond) else { continue };
                    let (Some(from), Some(to)) = (values.get(&target), values.get(&source)) else { continue };
                    match maps.get(&bond.id) {
                        Some(map) => {
                            for v in from {
                                match map.get(v) {
                                    Some(w) if to.contains(w) => {}
                                    _ => {
                                        return Err(GlobalizerError::InvalidRestriction {
                                            arrow: bond.id.clone(),
                                            value: v.clone(),
                                        })
                                    }
                                }
                            }
                        }
                        None if bond.is_identity => {}
                        None => return Err(GlobalizerError::MissingRestriction { arrow: Some(bond.id.clone()) }),
                    }
                }
                Some(maps)
            }
        };
        Ok(Presheaf { kind: doc.kind, universes, values, restrictions, operation: doc.operation.clone() })
    }

    pub fn parse(h: &Hyperstructure, text: &str) -> Result<Self, PresheafLoadError> {
        Ok(Presheaf::new(h, &PresheafDocument::parse(text)?)?)
    }

    pub fn kind(&self) -> PresheafKind {
        self.kind
    }

    pub fn universe(&self, index: usize) -> Option<&BTreeSet<StateToken>> {
        self.universes.get(index)
    }

    pub fn values(&self, bond: &Id) -> Option<&BTreeSet<StateToken>> {
        self.values.get(bond)
    }

    pub fn valued_bonds(&self) -> impl Iterator<Item = &Id> {
        self.values.keys()
    }

    pub fn has_restrictions(&self) -> bool {
        self.restrictions.is_some()
    }

    pub fn operation(&self) -> Option<&StateCombiner> {
        self.operation.as_ref()
    }

    /// Restriction along `arrow`; identity arrows without a table act as the identity.
    pub fn restrict(&self, h: &Hyperstructure, arrow: &Id, value: &StateToken) -> Option<StateToken> {
        let maps = self.restrictions.as_ref()?;
        match maps.get(arrow) {
            Some(map) => map.get(value).cloned(),
            None if h.bond(arrow).is_some_and(|b| b.is_identity) => Some(value.clone()),
            None => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PresheafLoadError {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Globalizer(#[from] GlobalizerError),
}

/// One family of values indexed by bond.
pub type Assignment = BTreeMap<Id, StateToken>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GlobalizerCandidate {
    /// `δ̂_L`, keyed by the level of the receiving bond, then by input tuple.
    pub connectors: BTreeMap<usize, BTreeMap<Vec<StateToken>, StateToken>>,
    /// Gluing tables keyed by `(bond, sieve index)`.
    pub gluings: BTreeMap<(Id, usize), BTreeMap<Assignment, StateToken>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateDocument {
    pub version: u32,
    #[serde(default)]
    pub connectors: Vec<ConnectorDoc>,
    #[serde(default)]
    pub gluings: Vec<GluingDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectorDoc {
    pub level: usize,
    pub inputs: Vec<StateToken>,
    pub output: StateToken,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluingDoc {
    pub bond: Id,
    pub sieve_index: usize,
    pub family: Assignment,
    pub value: StateToken,
}

impl CandidateDocument {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        parse_versioned(text, |d: &CandidateDocument| d.version)
    }
}

impl GlobalizerCandidate {
    pub fn from_document(doc: &CandidateDocument) -> Self {
        let mut out = GlobalizerCandidate::default();
        for c in &doc.connectors {
            out.connectors.entry(c.level).or_default().insert(c.inputs.clone(), c.output.clone());
        }
        for g in &doc.gluings {
            out.gluings.entry((g.bond.clone(), g.sieve_index)).or_default().insert(g.family.clone(), g.value.clone());
        }
        out
    }

    pub fn to_document(&self) -> CandidateDocument {
        let connectors = self
            .connectors
            .iter()
            .flat_map(|(level, table)| {
                table.iter().map(|(inputs, output)| ConnectorDoc {
                    level: *level,
                    inputs: inputs.clone(),
                    output: output.clone(),
                })
            })
            .collect();
        let gluings = self
            .gluings
            .iter()
            .flat_map(|((bond, sieve_index), table)| {
                table.iter().map(|(family, value)| GluingDoc {
                    bond: bond.clone(),
                    sieve_index: *sieve_index,
                    family: family.clone(),
                    value: value.clone(),
                })
            })
            .collect();
        CandidateDocument { version: DOCUMENT_VERSION, connectors, gluings }
    }

    /// `δ̂_level(inputs)`.
    pub fn connector(&self, level: usize, inputs: &[StateToken]) -> Option<&StateToken> {
        self.connectors.get(&level)?.get(inputs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind")]
pub enum GlobalizerFinding {
    /// `δ̂` has no entry for a tuple occurring on `bond`.
    Totality { bond: Id, inputs: Vec<StateToken> },
    /// `δ̂` sends a tuple of `bond` outside its value set.
    Membership { bond: Id, value: StateToken },
    /// A top bond receives no value or several.
    Uniqueness { bond: Id, values: Vec<StateToken> },
    /// A matching family has no gluing entry.
    GluingTotality { bond: Id, sieve_index: usize, family: Assignment },
    /// The glued value does not restrict back to the family.
    GluingSection { bond: Id, sieve_index: usize, family: Assignment },
    /// A value of `bond` is not recovered from its own restriction.
    GluingRetraction { bond: Id, sieve_index: usize, value: StateToken },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GlobalizerReport {
    pub findings: Vec<GlobalizerFinding>,
    /// Values reached on each top connector bond.
    pub global_values: BTreeMap<Id, BTreeSet<StateToken>>,
}

impl GlobalizerReport {
    pub fn holds(&self) -> bool {
        self.findings.is_empty()
    }
}

/// A bond whose boundary members all carry values, together with the
/// positions its input tuples are built from.
struct Connector {
    id: Id,
    level: usize,
    ordered: bool,
    inputs: Vec<Id>,
}

fn connectors(h: &Hyperstructure, presheaf: &Presheaf) -> Vec<Connector> {
    let mut out = Vec::new();
    for level in 1..h.order() {
        for bond in h.bonds_at(level) {
            if presheaf.values(&bond.id).is_none() {
                continue;
            }
            let inputs: Vec<Id> = if bond.ordered {
                bond.support.leaves().into_iter().cloned().collect()
            } else {
                bond.members().into_iter().collect()
            };
            if inputs.iter().all(|m| presheaf.values(m).is_some()) {
                out.push(Connector { id: bond.id.clone(), level, ordered: bond.ordered, inputs });
            }
        }
    }
    out
}

/// Input tuples occurring on `c`: one value per input position, sorted unless ordered.
fn occurring_tuples(
    c: &Connector,
    reached: &BTreeMap<Id, BTreeSet<StateToken>>,
    presheaf: &Presheaf,
) -> Result<BTreeSet<Vec<StateToken>>, GlobalizerError> {
    let choices: Vec<Vec<&StateToken>> = c
        .inputs
        .iter()
        .map(|m| reached.get(m).or_else(|| presheaf.values(m)).map(|s| s.iter().collect()).unwrap_or_default())
        .collect();
    let total = choices.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.len()));
    if total.is_none_or(|t| t > ENUMERATION_LIMIT) {
        return Err(GlobalizerError::TooLarge(c.id.clone()));
    }
    let mut tuples = BTreeSet::new();
    let mut index = vec![0usize; choices.len()];
    if choices.iter().any(Vec::is_empty) {
        return Ok(tuples);
    }
    loop {
        let mut tuple: Vec<StateToken> = index.iter().zip(&choices).map(|(i, c)| c[*i].clone()).collect();
        if !c.ordered {
            tuple.sort();
        }
        tuples.insert(tuple);
        let mut k = 0;
        loop {
            if k == index.len() {
                return Ok(tuples);
            }
            index[k] += 1;
            if index[k] < choices[k].len() {
                break;
            }
            index[k] = 0;
            k += 1;
        }
    }
}

fn gluing_problems(site: &Site, presheaf: &Presheaf) -> Result<Vec<GluingProblem>, GlobalizerError> {
    if !presheaf.has_restrictions() {
        return Ok(Vec::new());
    }
    let h = site.structure();
    let mut out = Vec::new();
    for bond in h.bonds() {
        if presheaf.values(&bond.id).is_none() {
            continue;
        }
        for (index, sieve) in site.topology().covering(&bond.id) {
            out.push(GluingProblem::new(h, presheaf, &bond.id, index, sieve)?);
        }
    }
    Ok(out)
}

/// Checks a candidate against the presheaf. Findings name each failing bond.
pub fn check_globalizer(
    site: &Site,
    presheaf: &Presheaf,
    candidate: &GlobalizerCandidate,
) -> Result<GlobalizerReport, GlobalizerError> {
    let h = site.structure();
    let top = h.order().saturating_sub(1);
    let mut report = GlobalizerReport::default();
    let mut reached: BTreeMap<Id, BTreeSet<StateToken>> = BTreeMap::new();
    for c in connectors(h, presheaf) {
        let allowed = presheaf.values(&c.id).expect("connectors carry values");
        let mut values = BTreeSet::new();
        for tuple in occurring_tuples(&c, &reached, presheaf)? {
            match candidate.connector(c.level, &tuple) {
                Some(v) => {
                    if !allowed.contains(v) {
                        report.findings.push(GlobalizerFinding::Membership { bond: c.id.clone(), value: v.clone() });
                    }
                    values.insert(v.clone());
                }
                None => report.findings.push(GlobalizerFinding::Totality { bond: c.id.clone(), inputs: tuple }),
            }
        }
        if c.level == top {
            if values.len() != 1 {
                report.findings.push(GlobalizerFinding::Uniqueness {
                    bond: c.id.clone(),
                    values: values.iter().cloned().collect(),
                });
            }
            report.global_values.insert(c.id.clone(), values.clone());
        }
        reached.insert(c.id, values);
    }

    for problem in gluing_problems(site, presheaf)? {
        let table = candidate.gluings.get(&(problem.bond.clone(), problem.sieve_index));
        report.findings.extend(problem.check(table));
    }
    report.findings.sort();
    report.findings.dedup();
    Ok(report)
}

struct Search<'a> {
    presheaf: &'a Presheaf,
    connectors: Vec<Connector>,
    top: usize,
    budget: u64,
    spent: u64,
    table: BTreeMap<usize, BTreeMap<Vec<StateToken>, StateToken>>,
    reached: BTreeMap<Id, BTreeSet<StateToken>>,
}

impl Search<'_> {
    fn charge(&mut self) -> Result<(), GlobalizerError> {
        if self.spent >= self.budget {
            return Err(GlobalizerError::BudgetExceeded { budget: self.budget });
        }
        self.spent += 1;
        Ok(())
    }

    fn bonds(&mut self, i: usize) -> Result<bool, GlobalizerError> {
        if i == self.connectors.len() {
            return Ok(true);
        }
        let tuples: Vec<Vec<StateToken>> =
            occurring_tuples(&self.connectors[i], &self.reached, self.presheaf)?.into_iter().collect();
        let level = self.connectors[i].level;
        let missing: Vec<Vec<StateToken>> =
            tuples.iter().filter(|t| self.table.get(&level).is_none_or(|m| !m.contains_key(*t))).cloned().collect();
        self.keys(i, &tuples, &missing, 0)
    }

    fn keys(
        &mut self,
        i: usize,
        tuples: &[Vec<StateToken>],
        missing: &[Vec<StateToken>],
        k: usize,
    ) -> Result<bool, GlobalizerError> {
        let (id, level) = (self.connectors[i].id.clone(), self.connectors[i].level);
        let allowed = self.presheaf.values(&id).expect("connectors carry values").clone();
        let assigned = |s: &Self| -> BTreeSet<StateToken> {
            tuples.iter().filter_map(|t| s.table.get(&level).and_then(|m| m.get(t)).cloned()).collect()
        };
        if k == missing.len() {
            let values = assigned(self);
            if !values.is_subset(&allowed) || (level == self.top && values.len() != 1) {
                return Ok(false);
            }
            self.reached.insert(id.clone(), values);
            if self.bonds(i + 1)? {
                return Ok(true);
            }
            self.reached.remove(&id);
            return Ok(false);
        }
        let mut options: Vec<StateToken> = allowed.iter().cloned().collect();
        if level == self.top {
            if let Some(v) = assigned(self).into_iter().next() {
                options.retain(|o| *o == v);
            }
        }
        for v in options {
            self.charge()?;
            self.table.entry(level).or_default().insert(missing[k].clone(), v);
            if self.keys(i, tuples, missing, k + 1)? {
                return Ok(true);
            }
            self.table.get_mut(&level).expect("entry just inserted").remove(&missing[k]);
        }
        Ok(false)
    }
}

/// First candidate in canonical order passing [`check_globalizer`], or `None`
/// when none exists. `budget` bounds the number of table values tried.
pub fn find_globalizer(
    site: &Site,
    presheaf: &Presheaf,
    budget: u64,
) -> Result<Option<GlobalizerCandidate>, GlobalizerError> {
    let h = site.structure();
    let mut search = Search {
        presheaf,
        connectors: connectors(h, presheaf),
        top: h.order().saturating_sub(1),
        budget,
        spent: 0,
        table: BTreeMap::new(),
        reached: BTreeMap::new(),
    };
    if !search.bonds(0)? {
        return Ok(None);
    }
    let mut candidate = GlobalizerCandidate { connectors: search.table, gluings: BTreeMap::new() };
    for problem in gluing_problems(site, presheaf)? {
        let mut glue = BTreeMap::new();
        for family in problem.matching_families()? {
            let sections = problem.amalgamations(&family);
            let mut chosen = None;
            for y in &sections {
                if search.spent >= budget {
                    return Err(GlobalizerError::BudgetExceeded { budget });
                }
                search.spent += 1;
                // The value must be the only amalgamation, or γ∘res fails on another.
                if sections.iter().all(|other| other == y) {
                    chosen = Some(y.clone());
                    break;
                }
            }
            match chosen {
                Some(y) => {
                    glue.insert(family, y);
                }
                None => return Ok(None),
            }
        }
        candidate.gluings.insert((problem.bond.clone(), problem.sieve_index), glue);
    }
    Ok(Some(candidate))
}

/// Iterated boundaries of same-level bonds, down to objects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundaryDecomposition {
    pub stages: Vec<BTreeSet<Id>>,
}

impl BoundaryDecomposition {
    /// Number of boundary steps taken.
    pub fn depth(&self) -> usize {
        self.stages.len().saturating_sub(1)
    }
}

pub fn boundary_decomposition(h: &Hyperstructure, bonds: &[Id]) -> Result<BoundaryDecomposition, GlobalizerError> {
    let mut level = None;
    for b in bonds {
        let bond = h.bond(b).ok_or_else(|| GlobalizerError::UnknownBond(b.clone()))?;
        match level {
            None => level = Some((b, bond.level)),
            Some((first, l)) if l != bond.level => {
                return Err(GlobalizerError::LevelMismatch(first.clone(), b.clone()))
            }
            _ => {}
        }
    }
    let mut stages = vec![bonds.iter().cloned().collect::<BTreeSet<Id>>()];
    for _ in 0..=level.map_or(0, |(_, l)| l) {
        if bonds.is_empty() {
            break;
        }
        let current = stages.last().expect("at least one stage");
        let next: BTreeSet<Id> = current.iter().flat_map(|b| h.members(b).expect("bonds resolve")).collect();
        stages.push(next);
    }
    Ok(BoundaryDecomposition { stages })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TensorDeviation {
    pub level: usize,
    pub inputs: Vec<StateToken>,
    pub expected: Option<StateToken>,
    pub found: StateToken,
}

/// Whether every connector entry is the fold of its inputs under `operation`
/// (the presheaf's own operation when `None`).
pub fn tensor_connector_check(
    presheaf: &Presheaf,
    candidate: &GlobalizerCandidate,
    operation: Option<&StateCombiner>,
) -> Result<Vec<TensorDeviation>, GlobalizerError> {
    let op = operation.or(presheaf.operation()).ok_or(GlobalizerError::NoOperationDeclared)?;
    let mut out = Vec::new();
    for (level, table) in &candidate.connectors {
        for (inputs, found) in table {
            let expected = op.fold(inputs).ok();
            if expected.as_ref() != Some(found) {
                out.push(TensorDeviation { level: *level, inputs: inputs.clone(), expected, found: found.clone() });
            }
        }
    }
    Ok(out)
}
