//! Direct finite sheaf condition on one-level sites: every matching family
//! over a covering sieve has exactly one amalgamation.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{Assignment, GlobalizerError, Presheaf, ENUMERATION_LIMIT};
use crate::collection::Id;
use crate::kernel::{Hyperstructure, StateToken};
use crate::site::{arrow_ends, Site};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SheafFailure {
    pub bond: Id,
    pub sieve_index: usize,
    pub family: Assignment,
    pub amalgamations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SheafReport {
    pub failures: Vec<SheafFailure>,
}

impl SheafReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Arrow ids keyed by `(source, target)`.
type ArrowTable = BTreeMap<(Id, Id), Id>;

/// Checks that level-1 bonds form a thin category on level-0 bonds: every
/// level-1 bond is an arrow, every level-0 bond has an identity, at most one
/// arrow joins any ordered pair and composites are present.
pub fn check_one_level(h: &Hyperstructure) -> Result<(), GlobalizerError> {
    one_level_arrows(h).map(|_| ())
}

fn one_level_arrows(h: &Hyperstructure) -> Result<ArrowTable, GlobalizerError> {
    let fail = |msg: String| Err(GlobalizerError::NotOneLevelSite(msg));
    if h.order() > 2 {
        return fail(format!("order {} exceeds 2", h.order()));
    }
    let mut table = ArrowTable::new();
    for bond in h.bonds_at(1) {
        let Some(ends) = arrow_ends(bond) else {
            return fail(format!("{} is not an arrow", bond.id));
        };
        if let Some(other) = table.insert(ends, bond.id.clone()) {
            return fail(format!("{} and {} join the same pair", other, bond.id));
        }
    }
    for bond in h.bonds_at(0) {
        if !table.contains_key(&(bond.id.clone(), bond.id.clone())) {
            return fail(format!("{} has no identity arrow", bond.id));
        }
    }
    for (x, y) in table.keys() {
        for (y2, z) in table.keys() {
            if y == y2 && !table.contains_key(&(x.clone(), z.clone())) {
                return fail(format!("composite {x} -> {z} is missing"));
            }
        }
    }
    Ok(table)
}

pub fn sheaf_condition_oracle(site: &Site, presheaf: &Presheaf) -> Result<SheafReport, GlobalizerError> {
    let h = site.structure();
    let arrows = one_level_arrows(h)?;
    let maps = presheaf.restrictions.as_ref().ok_or(GlobalizerError::MissingRestriction { arrow: None })?;
    let restrict = |source: &Id, target: &Id, v: &StateToken| -> Result<Option<StateToken>, GlobalizerError> {
        let arrow = &arrows[&(source.clone(), target.clone())];
        match maps.get(arrow) {
            Some(map) => Ok(map.get(v).cloned()),
            None if source == target => Ok(Some(v.clone())),
            None => Err(GlobalizerError::MissingRestriction { arrow: Some(arrow.clone()) }),
        }
    };
    let has_arrow = |s: &Id, t: &Id| arrows.contains_key(&(s.clone(), t.clone()));

    let mut report = SheafReport::default();
    for bond in h.bonds() {
        let c = &bond.id;
        let Some(global) = presheaf.values(c) else { continue };
        for (index, sieve) in site.topology().covering(c) {
            let members = sieve.members();
            let domain: Vec<(&Id, &BTreeSet<StateToken>)> = h
                .bonds_at(bond.level)
                .map(|b| &b.id)
                .filter(|d| members.iter().any(|m| *d == m || has_arrow(d, m)))
                .filter(|d| *d == c || has_arrow(d, c))
                .filter_map(|d| presheaf.values(d).map(|v| (d, v)))
                .collect();
            let size = domain.iter().try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len()));
            if size.is_none_or(|s| s > ENUMERATION_LIMIT) {
                return Err(GlobalizerError::TooLarge(c.clone()));
            }

            for family in product(&domain) {
                let mut matching = true;
                for (e, xe) in &family {
                    for (d, xd) in &family {
                        if has_arrow(e, d) && restrict(e, d, xd)?.as_ref() != Some(xe) {
                            matching = false;
                        }
                    }
                }
                if !matching {
                    continue;
                }
                let mut amalgamations = 0;
                for y in global {
                    let mut glues = true;
                    for (d, xd) in &family {
                        if restrict(d, c, y)?.as_ref() != Some(xd) {
                            glues = false;
                        }
                    }
                    amalgamations += usize::from(glues);
                }
                if amalgamations != 1 {
                    report.failures.push(SheafFailure { bond: c.clone(), sieve_index: index, family, amalgamations });
                }
            }
        }
    }
    Ok(report)
}

/// Every assignment of one value per domain element.
fn product(domain: &[(&Id, &BTreeSet<StateToken>)]) -> Vec<Assignment> {
    let mut out = vec![Assignment::new()];
    for (d, values) in domain {
        out = out
            .into_iter()
            .flat_map(|partial| {
                values.iter().map(move |v| {
                    let mut next = partial.clone();
                    next.insert((*d).clone(), v.clone());
                    next
                })
            })
            .collect();
    }
    out
}
