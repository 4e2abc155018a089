//! Matching families and amalgamations over one covering sieve, with
//! restrictions composed along arrow paths.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{Assignment, GlobalizerError, GlobalizerFinding, Presheaf, ENUMERATION_LIMIT};
use crate::collection::Id;
use crate::kernel::{Hyperstructure, StateToken};
use crate::site::{LevelArrows, Sieve};

pub(super) struct GluingProblem {
    pub bond: Id,
    pub sieve_index: usize,
    /// Elements under the sieve that reach `bond`, with their value sets.
    domain: Vec<(Id, Vec<StateToken>)>,
    /// Next arrow on a shortest path towards `bond`: element -> (arrow, next element).
    step: BTreeMap<Id, (Id, Id)>,
    /// Arrows `source -> target` with both ends in the domain.
    local: Vec<(Id, Id, Id)>,
    identity: Option<Id>,
    values: Vec<StateToken>,
    /// Restriction tables by arrow, identities included.
    maps: BTreeMap<Id, Option<BTreeMap<StateToken, StateToken>>>,
}

impl GluingProblem {
    pub fn new(
        h: &Hyperstructure,
        presheaf: &Presheaf,
        bond: &Id,
        sieve_index: usize,
        sieve: &Sieve,
    ) -> Result<Self, GlobalizerError> {
        let level = h.require_bond(bond).map_err(crate::site::SiteError::from)?.level;
        let arrows = LevelArrows::of(h, level);
        let under = arrows.down_closure(sieve.members());

        // Breadth-first from the bond, walking arrows backwards.
        let mut step: BTreeMap<Id, (Id, Id)> = BTreeMap::new();
        let mut seen: BTreeSet<Id> = [bond.clone()].into_iter().collect();
        let mut queue: VecDeque<Id> = [bond.clone()].into_iter().collect();
        while let Some(x) = queue.pop_front() {
            for (arrow, source) in arrows.arrows_into_target(&x) {
                if seen.insert(source.clone()) {
                    step.insert(source.clone(), (arrow.clone(), x.clone()));
                    queue.push_back(source.clone());
                }
            }
        }

        let domain: Vec<(Id, Vec<StateToken>)> = seen
            .iter()
            .filter(|d| under.contains(*d))
            .filter_map(|d| presheaf.values(d).map(|v| (d.clone(), v.iter().cloned().collect())))
            .collect();
        let in_domain: BTreeSet<&Id> = domain.iter().map(|(d, _)| d).collect();

        let mut local = Vec::new();
        let mut maps = BTreeMap::new();
        let mut identity = None;
        for d in in_domain.iter().copied().chain([bond]) {
            for (arrow, source) in arrows.arrows_into_target(d) {
                if source == d && d == bond {
                    identity = Some(arrow.clone());
                }
                if in_domain.contains(source) && in_domain.contains(d) {
                    local.push((arrow.clone(), source.clone(), d.clone()));
                }
            }
        }
        local.sort();
        local.dedup();
        let used = local.iter().map(|(a, _, _)| a).chain(step.values().map(|(a, _)| a)).chain(identity.iter());
        for arrow in used {
            maps.insert(arrow.clone(), table_of(h, presheaf, arrow));
        }

        Ok(GluingProblem {
            bond: bond.clone(),
            sieve_index,
            domain,
            step,
            local,
            identity,
            values: presheaf.values(bond).map(|v| v.iter().cloned().collect()).unwrap_or_default(),
            maps,
        })
    }

    fn apply(&self, arrow: &Id, value: &StateToken) -> Option<StateToken> {
        match self.maps.get(arrow) {
            Some(Some(map)) => map.get(value).cloned(),
            Some(None) => Some(value.clone()),
            None => None,
        }
    }

    /// Restriction of a value of the bond to `element`.
    fn restrict_to(&self, element: &Id, value: &StateToken) -> Option<StateToken> {
        if element == &self.bond {
            return match &self.identity {
                Some(arrow) => self.apply(arrow, value),
                None => Some(value.clone()),
            };
        }
        let mut path = Vec::new();
        let mut at = element;
        while at != &self.bond {
            let (arrow, next) = self.step.get(at)?;
            path.push(arrow);
            at = next;
        }
        let mut v = value.clone();
        for arrow in path.into_iter().rev() {
            v = self.apply(arrow, &v)?;
        }
        Some(v)
    }

    fn restriction(&self, value: &StateToken) -> Option<Assignment> {
        self.domain.iter().map(|(d, _)| self.restrict_to(d, value).map(|v| (d.clone(), v))).collect()
    }

    fn is_matching(&self, family: &Assignment) -> bool {
        self.local.iter().all(|(arrow, source, target)| match (family.get(target), family.get(source)) {
            (Some(t), Some(s)) => self.apply(arrow, t).as_ref() == Some(s),
            _ => false,
        })
    }

    /// All matching families, in lexicographic order of the domain.
    pub fn matching_families(&self) -> Result<Vec<Assignment>, GlobalizerError> {
        let mut out = Vec::new();
        let mut current = Assignment::new();
        self.extend(0, &mut current, &mut out)?;
        Ok(out)
    }

    fn extend(&self, k: usize, current: &mut Assignment, out: &mut Vec<Assignment>) -> Result<(), GlobalizerError> {
        if k == self.domain.len() {
            if out.len() >= ENUMERATION_LIMIT {
                return Err(GlobalizerError::TooLarge(self.bond.clone()));
            }
            out.push(current.clone());
            return Ok(());
        }
        let (d, values) = &self.domain[k];
        for v in values {
            current.insert(d.clone(), v.clone());
            let consistent =
                self.local.iter().all(|(arrow, source, target)| match (current.get(target), current.get(source)) {
                    (Some(t), Some(s)) => self.apply(arrow, t).as_ref() == Some(s),
                    _ => true,
                });
            if consistent {
                self.extend(k + 1, current, out)?;
            }
        }
        current.remove(d);
        Ok(())
    }

    pub fn amalgamations(&self, family: &Assignment) -> Vec<StateToken> {
        self.values.iter().filter(|y| self.restriction(y).as_ref() == Some(family)).cloned().collect()
    }

    pub fn check(&self, table: Option<&BTreeMap<Assignment, StateToken>>) -> Vec<GlobalizerFinding> {
        let mut findings = Vec::new();
        let empty = BTreeMap::new();
        let table = table.unwrap_or(&empty);
        let families = match self.matching_families() {
            Ok(f) => f,
            Err(_) => return findings,
        };
        for family in families {
            match table.get(&family) {
                None => findings.push(GlobalizerFinding::GluingTotality {
                    bond: self.bond.clone(),
                    sieve_index: self.sieve_index,
                    family,
                }),
                Some(y) => {
                    if self.restriction(y).as_ref() != Some(&family) {
                        findings.push(GlobalizerFinding::GluingSection {
                            bond: self.bond.clone(),
                            sieve_index: self.sieve_index,
                            family,
                        });
                    }
                }
            }
        }
        for y in &self.values {
            if let Some(family) = self.restriction(y).filter(|f| self.is_matching(f)) {
                if table.get(&family) != Some(y) {
                    findings.push(GlobalizerFinding::GluingRetraction {
                        bond: self.bond.clone(),
                        sieve_index: self.sieve_index,
                        value: y.clone(),
                    });
                }
            }
        }
        findings
    }
}

/// `None` means the identity.
fn table_of(h: &Hyperstructure, presheaf: &Presheaf, arrow: &Id) -> Option<BTreeMap<StateToken, StateToken>> {
    let maps = presheaf.restrictions.as_ref()?;
    match maps.get(arrow) {
        Some(map) => Some(map.clone()),
        None if h.bond(arrow).is_some_and(|b| b.is_identity) => None,
        None => Some(BTreeMap::new()),
    }
}
