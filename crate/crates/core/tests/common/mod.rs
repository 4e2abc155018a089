//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use hyperbond::globalizer::{PresheafDocument, PresheafKind, RestrictionDoc, ValueDoc};
use hyperbond::kernel::{id, BondDoc, Document, Finding, LevelDoc, StateToken, StructureBuilder};
use hyperbond::site::{close_sieve, maximal_sieve, CoveringFamily, Sieve};
use hyperbond::{Collection, Hyperstructure, Id};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn subset(rng: &mut ChaCha8Rng, universe: &[Id], max: usize) -> Vec<Id> {
    let k = rng.gen_range(1..=max.min(universe.len()));
    universe.choose_multiple(rng, k).cloned().collect()
}

fn leaves(ids: &[Id]) -> Collection {
    Collection::Inner(ids.iter().cloned().map(Collection::Leaf).collect())
}

/// A valid document with at most `max_levels` bond levels and `max_bonds`
/// bonds. Every level binds at least two elements so each universe has
/// room for alternative supports. States are small integers.
pub fn random_document(rng: &mut ChaCha8Rng, max_levels: usize, max_bonds: usize) -> Document {
    let objects: Vec<Id> = (0..rng.gen_range(3..=8)).map(|i| id(&format!("o{i}"))).collect();
    let levels = rng.gen_range(1..=max_levels.min(max_bonds / 2).max(1));
    let mut budget = max_bonds;
    let mut doc = Document::new(objects.clone());
    let mut universe = objects;
    for level in 0..levels {
        let reserve = 2 * (levels - level - 1);
        let lo = if level + 1 == levels { 1 } else { 2 };
        let count = rng.gen_range(lo..=(budget - reserve).clamp(lo, 6));
        budget -= count;
        let mut bonds = Vec::new();
        let mut with_identity = BTreeSet::new();
        for j in 0..count {
            let bond_id = id(&format!("b{level}_{j}"));
            let state = StateToken::from(rng.gen_range(0..10).to_string().as_str());
            let kind = rng.gen_range(0..10);
            let mut bond = match kind {
                0 | 1 => {
                    let groups = rng.gen_range(2..=3);
                    let support = Collection::Inner((0..groups).map(|_| leaves(&subset(rng, &universe, 3))).collect());
                    BondDoc::new(bond_id, support, state)
                }
                2 => {
                    let x = universe.choose(rng).unwrap().clone();
                    if with_identity.insert(x.clone()) {
                        let mut b = BondDoc::new(bond_id, leaves(&[x]), StateToken::from("identity"));
                        b.identity = true;
                        b
                    } else {
                        BondDoc::new(bond_id, leaves(&[x]), state)
                    }
                }
                3 => {
                    let pair = subset(rng, &universe, 2);
                    let mut b = BondDoc::new(bond_id, leaves(&pair), state);
                    b.ordered = pair.len() == 2;
                    b
                }
                _ => BondDoc::new(bond_id, leaves(&subset(rng, &universe, 4)), state),
            };
            bond.support = bond.canonical_support();
            bonds.push(bond);
        }
        universe = bonds.iter().map(|b| b.id.clone()).collect();
        doc.levels.push(LevelDoc { index: level, bonds });
    }
    doc
}

pub fn random_structure(rng: &mut ChaCha8Rng, max_levels: usize, max_bonds: usize) -> Hyperstructure {
    Hyperstructure::from_document(&random_document(rng, max_levels, max_bonds)).expect("generated documents are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defect {
    DanglingLeaf,
    DuplicateSupport,
    MalformedIdentity,
}

/// Injects `n` defects, each on a distinct bond, and returns the findings
/// validation must report.
pub fn inject_defects(rng: &mut ChaCha8Rng, doc: &mut Document, n: usize) -> BTreeSet<Finding> {
    let mut expected = BTreeSet::new();
    let mut pool: Vec<(usize, usize)> = doc
        .levels
        .iter()
        .enumerate()
        .flat_map(|(li, l)| {
            l.bonds.iter().enumerate().filter(|(_, b)| !b.identity && !b.ordered).map(move |(bi, _)| (li, bi))
        })
        .collect();
    pool.shuffle(rng);
    for k in 0..n {
        let defect = [Defect::DanglingLeaf, Defect::DuplicateSupport, Defect::MalformedIdentity].choose(rng).copied();
        let defect = match (defect, pool.is_empty()) {
            (_, true) => Defect::MalformedIdentity,
            (Some(d), false) => d,
            (None, _) => unreachable!(),
        };
        match defect {
            Defect::DanglingLeaf => {
                let (li, bi) = pool.pop().unwrap();
                let level = doc.levels[li].index;
                let bond = &mut doc.levels[li].bonds[bi];
                let ghost = id(&format!("ghost{k}"));
                bond.support = Collection::Inner(vec![bond.support.clone(), Collection::Leaf(ghost.clone())]);
                expected.insert(Finding::UnknownLeaf { bond: bond.id.clone(), level, leaf: ghost });
            }
            Defect::DuplicateSupport => {
                let (li, bi) = pool.pop().unwrap();
                let level = doc.levels[li].index;
                let universe: Vec<Id> = if level == 0 {
                    doc.objects.clone()
                } else {
                    let below = doc.levels.iter().find(|l| l.index == level - 1).unwrap();
                    below.bonds.iter().map(|b| b.id.clone()).collect()
                };
                let original = doc.levels[li].bonds[bi].clone();
                let mut copy = original.clone();
                copy.support = leaves(&universe);
                if copy.support.normalize() == original.support.normalize() {
                    copy.support = leaves(&universe[..1]);
                }
                expected.insert(Finding::DisjointnessViolation { bond: original.id.clone(), level });
                doc.levels[li].bonds.push(copy);
            }
            Defect::MalformedIdentity => {
                let bad = id(&format!("bad_identity{k}"));
                let pair: Vec<Id> = doc.objects.choose_multiple(rng, 2).cloned().collect();
                let mut bond = BondDoc::new(bad.clone(), leaves(&pair), StateToken::from("identity"));
                bond.identity = true;
                doc.push_bond(0, bond);
                expected.insert(Finding::IdentityShape { bond: bad });
            }
        }
    }
    expected
}

/// Random collection tree of depth at most `depth` over a few leaves.
pub fn random_tree(rng: &mut ChaCha8Rng, depth: usize) -> Collection {
    if depth <= 1 || rng.gen_bool(0.3) {
        return Collection::Leaf(id(["a", "b", "c", "d"].choose(rng).unwrap()));
    }
    let n = rng.gen_range(1..=3);
    Collection::Inner((0..n).map(|_| random_tree(rng, depth - 1)).collect())
}

/// Reflexive, transitive relations on `n` points up to relabelling, as
/// lists of non-identity pairs `(source, target)`.
pub fn preorders(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).collect();
    let perms = permutations(n);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let rel: BTreeSet<(usize, usize)> =
            pairs.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, p)| *p).collect();
        let transitive = rel.iter().all(|&(a, b)| rel.iter().all(|&(c, d)| c != b || a == d || rel.contains(&(a, d))));
        if !transitive {
            continue;
        }
        let canonical =
            perms.iter().map(|p| rel.iter().map(|&(a, b)| (p[a], p[b])).collect::<BTreeSet<_>>()).min().unwrap();
        if seen.insert(canonical.clone()) {
            out.push(canonical.into_iter().collect());
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..n {
            let mut q = p.clone();
            q.insert(slot, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn point(i: usize) -> Id {
    id(&format!("c{i}"))
}

pub fn arrow_id(s: usize, t: usize) -> Id {
    id(&format!("f{s}_{t}"))
}

/// One-level site structure: bonds `c_i` over objects `o_i`, an arrow
/// `f{s}_{t}` per related pair and identities on every `c_i`.
pub fn one_level_structure(n: usize, relation: &[(usize, usize)]) -> Hyperstructure {
    let names: Vec<String> = (0..n).map(|i| format!("o{i}")).collect();
    let mut b = StructureBuilder::new().objects(names.iter().map(String::as_str));
    for i in 0..n {
        b = b.bond(0, &format!("c{i}"), &[&format!("o{i}")], "s");
    }
    for &(s, t) in relation {
        b = b.arrow(1, &format!("f{s}_{t}"), &format!("c{s}"), &format!("c{t}"));
    }
    for i in 0..n {
        b = b.identity(1, &format!("I(c{i})"), &format!("c{i}"));
    }
    b.build().expect("one-level structures are valid")
}

/// Candidate sieves on `target`: the empty sieve, the maximal sieve and
/// the closure of every single family of arrow sources, at most `cap`.
pub fn sieve_universe(h: &Hyperstructure, target: &Id, sources: &[Id], cap: usize) -> Vec<Sieve> {
    let mut out = vec![Sieve::empty(target.clone()), maximal_sieve(h, target).unwrap()];
    for mask in 1u32..(1 << sources.len()) {
        let members: BTreeSet<Id> =
            sources.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, s)| s.clone()).collect();
        let sieve = close_sieve(h, target, [CoveringFamily { members, witness: None }]).unwrap();
        if !out.contains(&sieve) {
            out.push(sieve);
        }
    }
    out.truncate(cap);
    out
}

fn tok(s: &str) -> StateToken {
    StateToken::from(s)
}

/// All functorial presheaves on the thin category of `relation` with value
/// sets drawn from non-empty subsets of `{0, 1}`.
pub fn functorial_presheaves(n: usize, relation: &[(usize, usize)]) -> Vec<PresheafDocument> {
    let choices: [&[&str]; 3] = [&["0"], &["1"], &["0", "1"]];
    let related: BTreeSet<(usize, usize)> = relation.iter().copied().collect();
    let mut out = Vec::new();
    let mut values = vec![0usize; n];
    loop {
        let sets: Vec<&[&str]> = values.iter().map(|&v| choices[v]).collect();
        let mut maps: Vec<BTreeMap<&str, &str>> = Vec::new();
        extend_maps(&sets, relation, &related, &mut maps, &mut |maps| {
            out.push(PresheafDocument {
                version: 1,
                kind: PresheafKind::Internal,
                universes: vec![vec![tok("x")], vec![tok("0"), tok("1")]],
                values: (0..n)
                    .map(|i| ValueDoc { bond: point(i), set: sets[i].iter().map(|s| tok(s)).collect() })
                    .collect(),
                restrictions: Some(
                    relation
                        .iter()
                        .zip(maps)
                        .map(|(&(s, t), m)| RestrictionDoc {
                            arrow: arrow_id(s, t),
                            map: m.iter().map(|(k, v)| (tok(k), tok(v))).collect(),
                        })
                        .collect(),
                ),
                operation: None,
            });
        });
        // Next value assignment, odometer style.
        let mut k = 0;
        loop {
            if k == n {
                return out;
            }
            values[k] += 1;
            if values[k] < choices.len() {
                break;
            }
            values[k] = 0;
            k += 1;
        }
    }
}

type Restriction<'a> = BTreeMap<&'a str, &'a str>;

/// Restriction of arrow `s -> t` maps values of `t` to values of `s`.
fn extend_maps<'a>(
    sets: &[&'a [&'a str]],
    relation: &[(usize, usize)],
    related: &BTreeSet<(usize, usize)>,
    maps: &mut Vec<Restriction<'a>>,
    emit: &mut dyn FnMut(&[Restriction<'a>]),
) {
    let k = maps.len();
    if k == relation.len() {
        emit(maps);
        return;
    }
    let (s, t) = relation[k];
    let domain = sets[t];
    let codomain = sets[s];
    let total = codomain.len().pow(domain.len() as u32);
    for code in 0..total {
        let mut map = BTreeMap::new();
        let mut c = code;
        for v in domain {
            map.insert(*v, codomain[c % codomain.len()]);
            c /= codomain.len();
        }
        maps.push(map);
        if consistent(relation, related, maps) {
            extend_maps(sets, relation, related, maps, emit);
        }
        maps.pop();
    }
}

/// Functoriality among the assigned arrows: `res(a->c) = res(a->b) . res(b->c)`
/// and `res(a->b) . res(b->a) = id`.
fn consistent(relation: &[(usize, usize)], related: &BTreeSet<(usize, usize)>, maps: &[BTreeMap<&str, &str>]) -> bool {
    let assigned: BTreeMap<(usize, usize), &BTreeMap<&str, &str>> = relation.iter().copied().zip(maps.iter()).collect();
    for (&(a, b), first) in &assigned {
        for (&(b2, c), second) in &assigned {
            if b2 != b {
                continue;
            }
            let composite = |v: &str| first[second[v]];
            if a == c {
                if second.keys().any(|v| composite(v) != *v) {
                    return false;
                }
            } else if let Some(direct) = assigned.get(&(a, c)) {
                if direct.iter().any(|(v, w)| composite(v) != *w) {
                    return false;
                }
            } else {
                debug_assert!(related.contains(&(a, c)));
            }
        }
    }
    true
}
