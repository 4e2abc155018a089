//! Fusion products and threshold-gated propagation of numeric states.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::BridgeError;
use crate::collection::{Collection, Id};
use crate::combiner::StateCombiner;
use crate::composition::lift;
use crate::kernel::{BondDoc, Document, Hyperstructure, StateToken};

/// Numeric threshold per bond level.
pub type Thresholds = BTreeMap<usize, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossBond {
    pub level: usize,
    pub id: Id,
    pub support: Collection,
    pub state: StateToken,
    #[serde(default)]
    pub ordered: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FusionSpec {
    #[serde(default)]
    pub cross_bonds: Vec<CrossBond>,
    #[serde(default)]
    pub combiner: StateCombiner,
    /// Levels without a threshold are not gated.
    #[serde(default)]
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutcome {
    pub structure: Hyperstructure,
    pub top: Id,
    /// `None` when fusion does not ignite.
    pub top_state: Option<StateToken>,
}

/// State given to the top bond when fusion does not ignite.
pub const INERT: &str = "inert";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Activation {
    pub active: bool,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Propagation {
    pub activation: BTreeMap<Id, Activation>,
    /// Active bonds of the top level with their values.
    pub top: BTreeMap<Id, f64>,
}

/// Bottom-up sweep. A seeded element takes its seed; any other bond takes
/// the combined value of its members when all of them are active. A bond is
/// active when it has a value reaching its level threshold.
fn sweep(
    h: &Hyperstructure,
    combiner: &StateCombiner,
    threshold: impl Fn(usize) -> Option<f64>,
    seeds: &BTreeMap<Id, f64>,
) -> BTreeMap<Id, Activation> {
    let mut out: BTreeMap<Id, Activation> = BTreeMap::new();
    for object in h.objects() {
        let value = seeds.get(object).copied();
        out.insert(object.clone(), Activation { active: value.is_some(), value });
    }
    for level in 0..h.order() {
        for bond in h.bonds_at(level) {
            let value = match seeds.get(&bond.id) {
                Some(v) => Some(*v),
                None => {
                    let members: Option<Vec<f64>> =
                        bond.members().iter().map(|m| out.get(m).filter(|a| a.active).and_then(|a| a.value)).collect();
                    members.and_then(|vs| combiner.fold_numbers(&vs))
                }
            };
            let active = value.is_some_and(|v| threshold(level).is_none_or(|t| v >= t));
            out.insert(bond.id.clone(), Activation { active, value });
        }
    }
    out
}

fn number(id: &Id, token: &StateToken) -> Result<f64, BridgeError> {
    token.as_number().ok_or_else(|| BridgeError::NonNumericState { id: id.clone(), token: token.to_string() })
}

/// Propagates numeric initial states bottom-up. Objects without an initial
/// state are inactive; seeded bonds keep their seed and are only gated.
pub fn propagate(
    h: &Hyperstructure,
    combiner: &StateCombiner,
    thresholds: &Thresholds,
    initial: &BTreeMap<Id, StateToken>,
) -> Result<Propagation, BridgeError> {
    if !combiner.is_numeric() {
        return Err(BridgeError::NonNumericCombiner(combiner.name().to_string()));
    }
    if let Some(level) = (0..h.order()).find(|l| !thresholds.contains_key(l)) {
        return Err(BridgeError::MissingThreshold(level));
    }
    let mut seeds = BTreeMap::new();
    for (id, token) in initial {
        if !h.objects().contains(id) && !h.contains(id) {
            return Err(BridgeError::UnknownObject(id.clone()));
        }
        seeds.insert(id.clone(), number(id, token)?);
    }
    let activation = sweep(h, combiner, |l| thresholds.get(&l).copied(), &seeds);
    let top_level = h.order().saturating_sub(1);
    let top = h
        .bonds_at(top_level)
        .filter_map(|b| activation.get(&b.id).filter(|a| a.active).and_then(|a| a.value).map(|v| (b.id.clone(), v)))
        .collect();
    Ok(Propagation { activation, top })
}

fn merged(h1: &Hyperstructure, h2: &Hyperstructure) -> Result<Hyperstructure, BridgeError> {
    let d1 = h1.renamed_document(|x| x.prefixed("1:"));
    let d2 = h2.renamed_document(|x| x.prefixed("2:"));
    let mut doc = Document::new(d1.objects.iter().chain(&d2.objects).cloned().collect());
    for (level, bond) in d1.registrations().chain(d2.registrations()) {
        doc.push_bond(level, bond.clone());
    }
    doc.omega = d1.omega.iter().chain(&d2.omega).cloned().collect();
    Ok(Hyperstructure::from_document_with_cap(&doc, h1.depth_cap().max(h2.depth_cap()))?)
}

/// Disjoint union of both structures (ids prefixed `1:` and `2:`), the cross
/// bonds, and one new top bond over every maximal bond.
///
/// With a numeric combiner and numeric states on every non-identity level-0 bond, the top state is the
/// propagated value seeded from level-0 bond states; otherwise it is the fold
/// of the maximal bonds' states.
pub fn fuse(h1: &Hyperstructure, h2: &Hyperstructure, spec: &FusionSpec) -> Result<FusionOutcome, BridgeError> {
    let mut h = merged(h1, h2)?;
    for cross in &spec.cross_bonds {
        let mut bond = BondDoc::new(cross.id.clone(), cross.support.clone(), cross.state.clone());
        bond.ordered = cross.ordered;
        h = h
            .with_bond(cross.level, bond)
            .map_err(|e| BridgeError::MalformedCrossBond { id: cross.id.clone(), reason: e.to_string() })?;
    }

    let maximal: Vec<Id> = h.bonds().filter(|b| h.parents(&b.id).is_empty()).map(|b| b.id.clone()).collect();
    let (top_level, members): (usize, Vec<Id>) = match maximal.iter().map(|b| h.bond(b).expect("listed").level).max() {
        Some(level) => (level + 1, maximal.clone()),
        None => (0, h.objects().iter().cloned().collect()),
    };
    let mut lifted = Vec::new();
    for b in &members {
        if top_level == 0 {
            lifted.push(b.clone());
            continue;
        }
        let (next, id) = lift(&h, b, top_level - 1)?;
        h = next;
        lifted.push(id);
    }

    let numeric_seeds: Option<BTreeMap<Id, f64>> = if spec.combiner.is_numeric() {
        h.bonds_at(0).filter(|b| !b.is_identity).map(|b| b.state.as_number().map(|v| (b.id.clone(), v))).collect()
    } else {
        None
    };
    let top_state = if top_level == 0 {
        None
    } else if let Some(seeds) = &numeric_seeds {
        let activation = sweep(&h, &spec.combiner, |l| spec.thresholds.get(&l).copied(), seeds);
        let values: Option<Vec<f64>> =
            lifted.iter().map(|b| activation.get(b).filter(|a| a.active).and_then(|a| a.value)).collect();
        values
            .and_then(|vs| spec.combiner.fold_numbers(&vs))
            .filter(|v| spec.thresholds.get(&top_level).is_none_or(|t| *v >= *t))
            .map(StateToken::from_number)
    } else {
        Some(spec.combiner.fold(maximal.iter().map(|b| &h.bond(b).expect("listed").state))?)
    };

    let top = h.fresh_id("fusion");
    let support = Collection::Inner(lifted.iter().cloned().map(Collection::Leaf).collect());
    let state = top_state.clone().unwrap_or_else(|| StateToken::from(INERT));
    let structure = h.with_bond(top_level, BondDoc::new(top.clone(), support, state))?;
    Ok(FusionOutcome { structure, top, top_state })
}
