//! JSON form of a topology. Sieve indices count sieves in document order,
//! `J` entries first, then `candidates`.

use serde::{Deserialize, Serialize};

use super::{CoveringFamily, Sieve, SiteError, Topology};
use crate::collection::Id;
use crate::kernel::Hyperstructure;
use crate::kernel::{parse_versioned, to_canonical_json, DocumentError, DOCUMENT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyDocument {
    pub version: u32,
    #[serde(rename = "J")]
    pub j: Vec<JEntryDoc>,
    /// Sieves in the universe that are not assigned to `J`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<JEntryDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pullbacks: Vec<PullbackDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JEntryDoc {
    pub bond: Id,
    pub sieves: Vec<SieveDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SieveDoc {
    pub families: Vec<FamilyDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyDoc {
    pub members: Vec<Id>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Id>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullbackDoc {
    pub arrow: Id,
    pub sieve_index: usize,
    pub result_sieve_index: usize,
}

impl TopologyDocument {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        parse_versioned(text, |d: &TopologyDocument| d.version)
    }

    pub fn to_canonical_json(&self) -> String {
        to_canonical_json(self)
    }

    /// Builds the topology. Families are checked against the structure; sieves
    /// are not closed here (see [`super::Site::new`]).
    pub fn to_topology(&self, h: &Hyperstructure) -> Result<Topology, SiteError> {
        let mut topology = Topology::new();
        for (entries, assigned) in [(&self.j, true), (&self.candidates, false)] {
            for entry in entries {
                let target = h.bond(&entry.bond).ok_or_else(|| SiteError::UnknownBond(entry.bond.clone()))?;
                for sieve_doc in &entry.sieves {
                    let mut sieve = Sieve::empty(target.id.clone());
                    for family in &sieve_doc.families {
                        let family = CoveringFamily {
                            members: family.members.iter().cloned().collect(),
                            witness: family.witness.clone(),
                        };
                        super::check_family(h, target, &family)?;
                        sieve.insert(family.members, family.witness);
                    }
                    if assigned {
                        topology.assign(sieve);
                    } else {
                        topology.declare(sieve);
                    }
                }
            }
        }
        let count = topology.sieves().len();
        for p in &self.pullbacks {
            for index in [p.sieve_index, p.result_sieve_index] {
                if index >= count {
                    return Err(SiteError::SieveIndex(index));
                }
            }
            topology.set_pullback(p.arrow.clone(), p.sieve_index, p.result_sieve_index);
        }
        Ok(topology)
    }

    pub fn from_topology(topology: &Topology) -> Self {
        // Sieves are renumbered so assigned ones come first.
        let mut order: Vec<usize> = (0..topology.sieves().len()).filter(|i| topology.is_assigned(*i)).collect();
        order.extend((0..topology.sieves().len()).filter(|i| !topology.is_assigned(*i)));
        let mut renumber = vec![0; order.len()];
        for (new, old) in order.iter().enumerate() {
            renumber[*old] = new;
        }

        let mut j: Vec<JEntryDoc> = Vec::new();
        let mut candidates: Vec<JEntryDoc> = Vec::new();
        for old in &order {
            let sieve = &topology.sieves()[*old];
            let doc = SieveDoc {
                families: sieve
                    .covering_families()
                    .map(|f| FamilyDoc { members: f.members.into_iter().collect(), witness: f.witness })
                    .collect(),
            };
            let list = if topology.is_assigned(*old) { &mut j } else { &mut candidates };
            match list.last_mut() {
                Some(last) if &last.bond == sieve.target() => last.sieves.push(doc),
                _ => list.push(JEntryDoc { bond: sieve.target().clone(), sieves: vec![doc] }),
            }
        }
        let pullbacks = topology
            .pullbacks
            .iter()
            .map(|((arrow, from), to)| PullbackDoc {
                arrow: arrow.clone(),
                sieve_index: renumber[*from],
                result_sieve_index: renumber[*to],
            })
            .collect();
        TopologyDocument { version: DOCUMENT_VERSION, j, candidates, pullbacks }
    }
}
