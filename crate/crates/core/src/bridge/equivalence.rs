//! Level-preserving bijections between sites that carry supports, states
//! and covering sieves onto each other.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::BridgeError;
use crate::collection::{Collection, Id, Shape};
use crate::kernel::Hyperstructure;
use crate::site::Site;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BridgeVerdict {
    pub equivalent: bool,
    /// Objects and bonds of the first site mapped to the second.
    pub witness: Option<BTreeMap<Id, Id>>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Signature {
    Object,
    Bond { level: usize, state: String, identity: bool, ordered: bool, shape: Shape, sieves: Vec<Vec<usize>> },
}

struct Side<'a> {
    site: &'a Site,
    ids: Vec<Id>,
    index: BTreeMap<Id, usize>,
    members: Vec<Vec<usize>>,
    parents: Vec<BTreeSet<usize>>,
    base: Vec<Signature>,
}

impl<'a> Side<'a> {
    fn new(site: &'a Site) -> Self {
        let h = site.structure();
        // Top-down, so parents are always mapped before their members.
        let mut ids: Vec<Id> = Vec::new();
        for level in (0..h.order()).rev() {
            ids.extend(h.bonds_at(level).map(|b| b.id.clone()));
        }
        ids.extend(h.objects().iter().cloned());
        let index: BTreeMap<Id, usize> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let mut members = vec![Vec::new(); ids.len()];
        let mut parents = vec![BTreeSet::new(); ids.len()];
        let mut base = vec![Signature::Object; ids.len()];
        for bond in h.bonds() {
            let i = index[&bond.id];
            members[i] = bond.members().iter().map(|m| index[m]).collect();
            for m in &members[i] {
                parents[*m].insert(i);
            }
            let mut sieves: Vec<Vec<usize>> = site
                .covering(&bond.id)
                .iter()
                .map(|s| {
                    let mut sizes: Vec<usize> = s.families().iter().map(BTreeSet::len).collect();
                    sizes.sort();
                    sizes
                })
                .collect();
            sieves.sort();
            base[i] = Signature::Bond {
                level: bond.level,
                state: bond.state.as_str().to_string(),
                identity: bond.is_identity,
                ordered: bond.ordered,
                shape: if bond.ordered { bond.support.shape() } else { bond.support.shape().sorted() },
                sieves,
            };
        }
        Side { site, ids, index, members, parents, base }
    }

    fn h(&self) -> &Hyperstructure {
        self.site.structure()
    }
}

/// Joint colour refinement: elements of either side with different colours
/// can never correspond.
fn refine(a: &Side, b: &Side) -> (Vec<usize>, Vec<usize>) {
    let mut palette: BTreeMap<Signature, usize> = BTreeMap::new();
    let mut initial = |s: &Side| -> Vec<usize> {
        s.base
            .iter()
            .map(|sig| {
                let next = palette.len();
                *palette.entry(sig.clone()).or_insert(next)
            })
            .collect()
    };
    let (mut ca, mut cb) = (initial(a), initial(b));
    loop {
        let mut palette: BTreeMap<(usize, Vec<usize>, Vec<usize>), usize> = BTreeMap::new();
        let mut step = |s: &Side, colours: &[usize]| -> Vec<usize> {
            (0..s.ids.len())
                .map(|i| {
                    let mut down: Vec<usize> = s.members[i].iter().map(|m| colours[*m]).collect();
                    let mut up: Vec<usize> = s.parents[i].iter().map(|p| colours[*p]).collect();
                    down.sort();
                    up.sort();
                    let next = palette.len();
                    *palette.entry((colours[i], down, up)).or_insert(next)
                })
                .collect()
        };
        let (na, nb) = (step(a, &ca), step(b, &cb));
        let classes = |x: &[usize], y: &[usize]| x.iter().chain(y).collect::<BTreeSet<_>>().len();
        let stable = classes(&na, &nb) == classes(&ca, &cb);
        ca = na;
        cb = nb;
        if stable {
            return (ca, cb);
        }
    }
}

struct Search<'a, 'b> {
    a: &'a Side<'b>,
    b: &'a Side<'b>,
    ca: Vec<usize>,
    cb: Vec<usize>,
    map: Vec<Option<usize>>,
    used: Vec<bool>,
    budget: u64,
    spent: u64,
}

impl Search<'_, '_> {
    fn run(&mut self, k: usize) -> Result<bool, BridgeError> {
        if k == self.a.ids.len() {
            return Ok(self.complete());
        }
        let e = k;
        let mut candidates: Vec<usize> =
            (0..self.b.ids.len()).filter(|c| !self.used[*c] && self.cb[*c] == self.ca[e]).collect();
        // Prefer the same id so a site maps to itself by the identity.
        candidates.sort_by_key(|c| (self.b.ids[*c] != self.a.ids[e], self.b.ids[*c].clone()));
        for c in candidates {
            let mapped_parents: Option<BTreeSet<usize>> = self.a.parents[e].iter().map(|p| self.map[*p]).collect();
            if mapped_parents.as_ref() != Some(&self.b.parents[c]) {
                continue;
            }
            if self.spent >= self.budget {
                return Err(BridgeError::BudgetExceeded { budget: self.budget });
            }
            self.spent += 1;
            self.map[e] = Some(c);
            self.used[c] = true;
            if self.run(k + 1)? {
                return Ok(true);
            }
            self.map[e] = None;
            self.used[c] = false;
        }
        Ok(false)
    }

    fn image(&self, id: &Id) -> Id {
        let i = self.a.index[id];
        self.b.ids[self.map[i].expect("complete map")].clone()
    }

    fn complete(&self) -> bool {
        let (ha, hb) = (self.a.h(), self.b.h());
        for bond in ha.bonds() {
            let other = hb.bond(&self.image(&bond.id)).expect("bonds map to bonds");
            let renamed: Collection = bond.support.rename(|x| self.image(x));
            let renamed = if bond.ordered { renamed } else { renamed.normalize() };
            let theirs = if other.ordered { other.support.clone() } else { other.support.normalize() };
            if renamed != theirs || bond.state != other.state {
                return false;
            }
            let rename_sieves = |site: &Site, target: &Id, f: &dyn Fn(&Id) -> Id| -> BTreeSet<BTreeSet<BTreeSet<Id>>> {
                site.covering(target)
                    .iter()
                    .map(|s| s.families().iter().map(|fam| fam.iter().map(f).collect()).collect())
                    .collect()
            };
            let mapped = rename_sieves(self.a.site, &bond.id, &|x| self.image(x));
            let target = rename_sieves(self.b.site, &other.id, &|x| x.clone());
            if mapped != target {
                return false;
            }
        }
        true
    }
}

/// Searches for a bijection of objects and bonds preserving levels, supports,
/// states and covering sieves. `budget` bounds the number of tentative
/// assignments.
pub fn bridge_equivalent(first: &Site, second: &Site, budget: u64) -> Result<BridgeVerdict, BridgeError> {
    let no = BridgeVerdict { equivalent: false, witness: None };
    let (a, b) = (Side::new(first), Side::new(second));
    if a.ids.len() != b.ids.len() || first.structure().order() != second.structure().order() {
        return Ok(no);
    }
    for level in 0..first.structure().order() {
        if first.structure().bond_count(level) != second.structure().bond_count(level) {
            return Ok(no);
        }
    }
    let (ca, cb) = refine(&a, &b);
    let histogram = |c: &[usize]| {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for x in c {
            *counts.entry(*x).or_default() += 1;
        }
        counts
    };
    if histogram(&ca) != histogram(&cb) {
        return Ok(no);
    }

    let n = a.ids.len();
    let mut search = Search { a: &a, b: &b, ca, cb, map: vec![None; n], used: vec![false; n], budget, spent: 0 };
    if !search.run(0)? {
        return Ok(no);
    }
    let witness: BTreeMap<Id, Id> =
        (0..n).map(|i| (a.ids[i].clone(), b.ids[search.map[i].expect("complete")].clone())).collect();
    Ok(BridgeVerdict { equivalent: true, witness: Some(witness) })
}
