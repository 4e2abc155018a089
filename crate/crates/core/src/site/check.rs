//! Axiom checks for topologies and level-connecting chain coverings.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{derived_pullback, maximal_with, Family, LevelArrows, Sieve, Site, SiteError};
use crate::collection::Id;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BondAxioms {
    pub bond: Id,
    pub maximality: bool,
    pub stability: bool,
    pub transitivity: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind")]
pub enum TopologyFinding {
    Maximality {
        bond: Id,
    },
    /// The pullback of sieve `sieve_index` along `arrow` is not in `J(source)`.
    Stability {
        bond: Id,
        sieve_index: usize,
        arrow: Id,
        source: Id,
    },
    /// Sieve `candidate` passes the local test under `sieve_index` yet is not in `J(bond)`.
    /// `candidate` is `None` for the generated maximal sieve.
    Transitivity {
        bond: Id,
        sieve_index: usize,
        candidate: Option<usize>,
    },
    /// Sieve enumeration failed for `bond`.
    Unchecked {
        bond: Id,
        reason: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TopologyReport {
    pub bonds: Vec<BondAxioms>,
    pub findings: Vec<TopologyFinding>,
}

impl TopologyReport {
    pub fn holds(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn axioms(&self, bond: &Id) -> Option<&BondAxioms> {
        self.bonds.iter().find(|b| &b.bond == bond)
    }
}

struct Checker<'a> {
    site: &'a Site,
    arrows: BTreeMap<usize, LevelArrows>,
    maximal: BTreeMap<Id, Sieve>,
}

impl<'a> Checker<'a> {
    fn new(site: &'a Site) -> Result<Self, (Id, SiteError)> {
        let h = site.structure();
        let mut arrows = BTreeMap::new();
        let mut maximal = BTreeMap::new();
        for level in 0..h.order() {
            let level_arrows = LevelArrows::of(h, level);
            for bond in h.bonds_at(level) {
                let max = maximal_with(h, &bond.id, &level_arrows).map_err(|e| (bond.id.clone(), e))?;
                maximal.insert(bond.id.clone(), max);
            }
            arrows.insert(level, level_arrows);
        }
        Ok(Checker { site, arrows, maximal })
    }

    fn pullback(&self, arrow: &Id, source: &Id, sieve: &Sieve, index: Option<usize>) -> Sieve {
        let topology = self.site.topology();
        if let Some(result) = index.and_then(|i| topology.pullback_entry(arrow, i)) {
            return topology.sieves()[result].clone();
        }
        let level = self.site.structure().bond(sieve.target()).expect("checked sieve target").level;
        derived_pullback(source, sieve, &self.arrows[&level], &self.maximal[source])
    }
}

/// Checks maximality, stability and transitivity for every bond. Transitivity
/// ranges over the declared sieves on each bond plus its maximal sieve.
pub fn check_topology(site: &Site) -> TopologyReport {
    let h = site.structure();
    let topology = site.topology();
    let mut report = TopologyReport::default();
    let checker = match Checker::new(site) {
        Ok(c) => c,
        Err((bond, e)) => {
            report.findings.push(TopologyFinding::Unchecked { bond, reason: e.to_string() });
            return report;
        }
    };

    for level in 0..h.order() {
        let arrows = &checker.arrows[&level];
        for bond in h.bonds_at(level) {
            let b = &bond.id;
            let j_b = topology.covering(b);
            let max = &checker.maximal[b];
            let mut axioms = BondAxioms { bond: b.clone(), maximality: true, stability: true, transitivity: true };

            if !j_b.iter().any(|(_, s)| *s == max) {
                axioms.maximality = false;
                report.findings.push(TopologyFinding::Maximality { bond: b.clone() });
            }

            for (index, sieve) in &j_b {
                for (arrow, source) in arrows.arrows_into_target(b) {
                    let pulled = checker.pullback(arrow, source, sieve, Some(*index));
                    if !topology.covers(source, &pulled) {
                        axioms.stability = false;
                        report.findings.push(TopologyFinding::Stability {
                            bond: b.clone(),
                            sieve_index: *index,
                            arrow: arrow.clone(),
                            source: source.clone(),
                        });
                    }
                }
            }

            let mut candidates: Vec<(Option<usize>, &Sieve)> = Vec::new();
            for (i, s) in topology.sieves().iter().enumerate() {
                if s.target() == b && !candidates.iter().any(|(_, t)| *t == s) {
                    candidates.push((Some(i), s));
                }
            }
            if !candidates.iter().any(|(_, t)| *t == max) {
                candidates.push((None, max));
            }
            for (index, sieve) in &j_b {
                // Arrows into b whose source is a member of some family of S.
                let local: Vec<&(Id, Id)> = arrows
                    .arrows_into_target(b)
                    .iter()
                    .filter(|(_, source)| sieve.families().iter().any(|f| f.contains(source)))
                    .collect();
                for (candidate, r) in &candidates {
                    if topology.covers(b, r) {
                        continue;
                    }
                    let locally_covering = local.iter().all(|(arrow, source)| {
                        topology.covers(source, &checker.pullback(arrow, source, r, *candidate))
                    });
                    if locally_covering {
                        axioms.transitivity = false;
                        report.findings.push(TopologyFinding::Transitivity {
                            bond: b.clone(),
                            sieve_index: *index,
                            candidate: *candidate,
                        });
                    }
                }
            }
            report.bonds.push(axioms);
        }
    }
    report.findings.sort();
    report.findings.dedup();
    report
}

/// A chain `b_0, ..., b_n` with one covering family on each `b_i` and one
/// connector per `b_i` binding it together with its family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct ChainCovering {
    pub chain: Vec<Id>,
    pub families: Vec<Family>,
    pub connectors: Vec<Id>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum ChainFailure {
    NotInBoundary { lower: Id, upper: Id },
    FamilyNotCovering { bond: Id, step: usize },
    ConnectorSupport { connector: Id, step: usize },
    CrossMembership { member: Id, step: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ChainVerdict {
    pub failures: Vec<ChainFailure>,
}

impl ChainVerdict {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn check_chain_covering(site: &Site, covering: &ChainCovering) -> Result<ChainVerdict, SiteError> {
    let h = site.structure();
    let n = covering.chain.len();
    if n == 0 || covering.families.len() != n || covering.connectors.len() != n {
        return Err(SiteError::MalformedChain(format!(
            "{} chain bonds need as many families and connectors, got {} and {}",
            n,
            covering.families.len(),
            covering.connectors.len()
        )));
    }
    let ids = covering.chain.iter().chain(&covering.connectors).chain(covering.families.iter().flatten());
    for id in ids {
        h.bond(id).ok_or_else(|| SiteError::UnknownBond(id.clone()))?;
    }

    let mut failures = Vec::new();
    for (step, (bond, family)) in covering.chain.iter().zip(&covering.families).enumerate() {
        if !site.covering(bond).iter().any(|s| s.contains(family)) {
            failures.push(ChainFailure::FamilyNotCovering { bond: bond.clone(), step });
        }
        let connector = &covering.connectors[step];
        let support = h.members(connector)?;
        if !support.contains(bond) || !family.iter().all(|m| support.contains(m)) {
            failures.push(ChainFailure::ConnectorSupport { connector: connector.clone(), step });
        }
    }
    for step in 0..n - 1 {
        let (lower, upper) = (&covering.chain[step], &covering.chain[step + 1]);
        if !h.members(upper)?.contains(lower) {
            failures.push(ChainFailure::NotInBoundary { lower: lower.clone(), upper: upper.clone() });
        }
        for member in &covering.families[step] {
            let mut partners = covering.families[step + 1].iter();
            let paired = partners.any(|m| h.members(m).map(|s| s.contains(member)).unwrap_or(false));
            if !paired {
                failures.push(ChainFailure::CrossMembership { member: member.clone(), step });
            }
        }
    }
    Ok(ChainVerdict { failures })
}
