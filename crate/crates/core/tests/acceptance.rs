//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use hyperbond::bridge::{
    bridge_equivalent, find_proof, fuse, propagate, transfer, CrossBond, DeductionQuery, FusionSpec, RelationDocument,
    Thresholds,
};
use hyperbond::brunnian::{check_brunnian, generate, BrunnianSpec};
use hyperbond::composition::{compatible, compose, iterated_support, lift, CompatibilityMode};
use hyperbond::globalizer::{find_globalizer, sheaf_condition_oracle, Presheaf};
use hyperbond::kernel::{id, validate_document, BondDoc, StateToken, StructureBuilder};
use hyperbond::site::{check_topology, trivial_topology, Site, Topology};
use hyperbond::{cli, Collection, Hyperstructure, Id, StateCombiner};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Verdict = Result<String, String>;

fn ensure(condition: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(message())
    }
}

fn trivial_site(h: Hyperstructure) -> Site {
    let topology = trivial_topology(&h).expect("trivial topology");
    Site::new(h, topology).expect("trivial site")
}

// 1. Validation flags exactly the injected defects.
fn axiom_suite() -> Verdict {
    let mut rng = common::rng(1);
    let mut injected = 0;
    for case in 0..1000 {
        let mut doc = common::random_document(&mut rng, 4, 20);
        let n = rng.gen_range(0..=3);
        let expected = common::inject_defects(&mut rng, &mut doc, n);
        injected += expected.len();
        let found: BTreeSet<_> = validate_document(&doc, hyperbond::DEFAULT_DEPTH_CAP).findings.into_iter().collect();
        ensure(found == expected, || format!("case {case}: expected {expected:?}, found {found:?}"))?;
        let built = Hyperstructure::from_document(&doc);
        ensure(built.is_ok() == expected.is_empty(), || format!("case {case}: build disagrees with validation"))?;
    }
    Ok(format!("1000 structures, {injected} injected defects, precision = recall = 1"))
}

// 2. find_globalizer succeeds exactly when the brute-force sheaf oracle passes.
fn glob_equals_sh() -> Verdict {
    let mut checks = 0usize;
    let mut sites = 0usize;
    for n in 1..=4 {
        for relation in common::preorders(n) {
            if relation.len() > 8 {
                continue;
            }
            let h = common::one_level_structure(n, &relation);
            let mut candidates = Vec::new();
            for b in 0..n {
                let mut sources: Vec<Id> = vec![common::point(b)];
                sources.extend(relation.iter().filter(|(_, t)| *t == b).map(|(s, _)| common::point(*s)));
                for sieve in common::sieve_universe(&h, &common::point(b), &sources, 16) {
                    let mut topology = Topology::new();
                    topology.assign(sieve);
                    candidates.push(Site::new(h.clone(), topology).map_err(|e| e.to_string())?);
                }
            }
            candidates.push(trivial_site(h.clone()));
            sites += candidates.len();
            for doc in common::functorial_presheaves(n, &relation) {
                let presheaf = Presheaf::new(&h, &doc).map_err(|e| e.to_string())?;
                for site in &candidates {
                    let sheaf = sheaf_condition_oracle(site, &presheaf).map_err(|e| e.to_string())?.holds();
                    let glob = find_globalizer(site, &presheaf, 1 << 20).map_err(|e| e.to_string())?.is_some();
                    ensure(glob == sheaf, || {
                        format!("disagreement on {n} points {relation:?}: glob {glob}, sheaf {sheaf}, presheaf {doc:?}")
                    })?;
                    checks += 1;
                }
            }
        }
    }
    Ok(format!("{sites} sites, {checks} site/presheaf pairs, 0 disagreements"))
}

// 3. The trivial topology satisfies the topology axioms.
fn trivial_topology_soundness() -> Verdict {
    let mut rng = common::rng(3);
    for case in 0..500 {
        let h = common::random_structure(&mut rng, 4, 20);
        let report = check_topology(&trivial_site(h));
        ensure(report.holds(), || format!("case {case}: {:?}", report.findings))?;
    }
    Ok("500/500 structures".into())
}

/// Support of `bond` renamed as transfer renames it.
fn expected_support(h: &Hyperstructure, bond: &hyperbond::Bond, sigma: &BTreeMap<Id, Id>) -> Collection {
    let renamed = bond.support.rename(|x| if h.objects().contains(x) { sigma[x].clone() } else { x.suffixed("@Z") });
    if bond.ordered {
        renamed
    } else {
        renamed.normalize()
    }
}

// 4. Transfer along a bijection is an isomorphism and a bridge.
fn transfer_bridge() -> Verdict {
    let mut rng = common::rng(4);
    for case in 0..200 {
        let h = common::random_structure(&mut rng, 4, 20);
        let objects: Vec<Id> = h.objects().iter().cloned().collect();
        let mut images: Vec<Id> = (0..objects.len()).map(|i| id(&format!("z{i}"))).collect();
        images.shuffle(&mut rng);
        let sigma: BTreeMap<Id, Id> = objects.iter().cloned().zip(images.iter().cloned()).collect();
        let relation = RelationDocument {
            version: 1,
            z: images.clone(),
            pairs: sigma.iter().map(|(x, z)| (z.clone(), x.clone())).collect(),
        };
        let moved = transfer(&h, &relation).map_err(|e| format!("case {case}: {e}"))?;
        for level in 0..h.order() {
            ensure(moved.bond_count(level) == h.bond_count(level), || format!("case {case}: count at {level}"))?;
        }
        for bond in h.bonds() {
            let image = moved.bond(&bond.id.suffixed("@Z")).ok_or_else(|| format!("case {case}: lost {}", bond.id))?;
            ensure(image.state == bond.state && image.level == bond.level, || format!("case {case}: {}", bond.id))?;
            ensure(image.support == expected_support(&h, bond, &sigma), || {
                format!("case {case}: support of {} is {}", bond.id, image.support)
            })?;
        }
        let verdict = bridge_equivalent(&trivial_site(h), &trivial_site(moved), 1_000_000)
            .map_err(|e| format!("case {case}: {e}"))?;
        ensure(verdict.equivalent && verdict.witness.is_some(), || format!("case {case}: not equivalent"))?;
    }
    Ok("200/200 transfers are bridges with witnesses".into())
}

// 5. Generated Brunnian structures pass; any single sub-family bond breaks them.
fn brunnian_end_to_end() -> Verdict {
    let mut injections = 0;
    for (order, objects) in [(1, 3), (2, 9), (3, 27)] {
        let h = generate(&BrunnianSpec::new(3, order)).map_err(|e| e.to_string())?;
        ensure(h.objects().len() == objects, || format!("order {order}: {} objects", h.objects().len()))?;
        ensure(h.validate().is_empty() && check_brunnian(&h).holds(), || format!("order {order} fails"))?;
        for bond in h.bonds() {
            for x in bond.members() {
                let mut rest = bond.members();
                rest.remove(&x);
                let injected = BondDoc::new(id("injected"), Collection::of_ids(rest), StateToken::from("bound"));
                let broken = h.with_bond(bond.level, injected).map_err(|e| e.to_string())?;
                ensure(!check_brunnian(&broken).holds(), || format!("injection under {} not caught", bond.id))?;
                injections += 1;
            }
        }
    }
    let mut rng = common::rng(5);
    let rings = generate(&BrunnianSpec::new(3, 2)).map_err(|e| e.to_string())?;
    let mut particles: Vec<Id> = (0..9).map(|i| id(&format!("particle{i}"))).collect();
    particles.shuffle(&mut rng);
    let relation = RelationDocument {
        version: 1,
        z: particles.clone(),
        pairs: particles.iter().cloned().zip(rings.objects().iter().cloned()).collect(),
    };
    let moved = transfer(&rings, &relation).map_err(|e| e.to_string())?;
    ensure(check_brunnian(&moved).holds(), || "particle transfer is not Brunnian".into())?;
    Ok(format!("orders 1..3 pass with 3/9/27 objects, {injections}/{injections} injections caught"))
}

fn random_bond<'h>(rng: &mut ChaCha8Rng, h: &'h Hyperstructure) -> &'h hyperbond::Bond {
    let bonds: Vec<_> = h.bonds().collect();
    bonds.choose(rng).copied().expect("structures have bonds")
}

fn same_level_pair(rng: &mut ChaCha8Rng, h: &Hyperstructure) -> Option<(Id, Id, usize)> {
    let a = random_bond(rng, h);
    let peers: Vec<_> = h.bonds_at(a.level).collect();
    let b = peers.choose(rng)?;
    Some((a.id.clone(), b.id.clone(), rng.gen_range(0..=a.level)))
}

// 6. Composition laws.
fn composition_laws() -> Verdict {
    let mut rng = common::rng(6);
    let commutative = [StateCombiner::Union, StateCombiner::Sum, StateCombiner::Min, StateCombiner::Max];
    let (mut strict_cases, mut union_cases, mut commute_cases, mut lift_cases) = (0, 0, 0, 0);
    while strict_cases < 1000 || union_cases < 1000 || commute_cases < 1000 || lift_cases < 1000 {
        let h = common::random_structure(&mut rng, 4, 20);
        let Some((a, b, p)) = same_level_pair(&mut rng, &h) else { continue };

        let strict = compatible(&h, &a, &b, p, CompatibilityMode::Strict).map_err(|e| e.to_string())?;
        let weak = compatible(&h, &a, &b, p, CompatibilityMode::Weak).map_err(|e| e.to_string())?;
        ensure(!strict || weak, || format!("strict but not weak: {a} {b} at {p}"))?;
        strict_cases += 1;

        if weak {
            let numeric = h.bonds().all(|b| b.state.as_str().parse::<f64>().is_ok());
            let combiner = if numeric { commutative.choose(&mut rng).unwrap() } else { &StateCombiner::Union };
            let (ab, x) = compose(&h, &a, &b, p, CompatibilityMode::Weak, combiner).map_err(|e| e.to_string())?;
            let mut union = iterated_support(&h, &a, p).map_err(|e| e.to_string())?;
            union.extend(iterated_support(&h, &b, p).map_err(|e| e.to_string())?);
            let got = iterated_support(&ab, &x, p).map_err(|e| e.to_string())?;
            ensure(got == union, || format!("support of {a}*{b} at {p}: {got:?} != {union:?}"))?;
            union_cases += 1;

            let (ba, y) = compose(&h, &b, &a, p, CompatibilityMode::Weak, combiner).map_err(|e| e.to_string())?;
            let (bx, by) = (ab.bond(&x).unwrap(), ba.bond(&y).unwrap());
            ensure(bx.support.normalize() == by.support.normalize() && bx.state == by.state, || {
                format!("{a}*{b} and {b}*{a} differ under {}", combiner.name())
            })?;
            commute_cases += 1;
        }

        let bond = random_bond(&mut rng, &h);
        let target = bond.level + rng.gen_range(0..=2);
        let (lifted, lifted_id) = lift(&h, &bond.id, target).map_err(|e| e.to_string())?;
        for q in 0..=bond.level {
            let before = iterated_support(&h, &bond.id, q).map_err(|e| e.to_string())?;
            let after = iterated_support(&lifted, &lifted_id, q).map_err(|e| e.to_string())?;
            ensure(before == after, || format!("lifting {} to {target} changes level {q}", bond.id))?;
        }
        lift_cases += 1;
    }
    Ok(format!(
        "{strict_cases} strict/weak, {union_cases} union, {commute_cases} commutativity, {lift_cases} lift cases"
    ))
}

/// Independent proof search: every small family, checked against every bond.
fn brute_force_proof(h: &Hyperstructure, level: usize, q: &DeductionQuery, universe: &[Id]) -> Option<BTreeSet<Id>> {
    let fam = |ids: &BTreeSet<Id>| Collection::of_ids(ids.iter().cloned());
    let matches = |parts: &[&BTreeSet<Id>]| {
        h.bonds_at(level).any(|bond| {
            if bond.ordered {
                let children = bond.support.children();
                children.len() == parts.len()
                    && children.iter().zip(parts).all(|(c, p)| c.normalize() == fam(p).normalize())
            } else {
                let target = Collection::Inner(parts.iter().map(|p| fam(p)).collect());
                bond.support.normalize() == target.normalize()
            }
        })
    };
    if matches(&[&q.given, &q.goal]) {
        return Some(BTreeSet::new());
    }
    let mut best: Option<BTreeSet<Id>> = None;
    for mask in 1u32..(1 << universe.len()) {
        let c: BTreeSet<Id> =
            universe.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, x)| x.clone()).collect();
        if c.len() > q.max_proof_size || c.iter().any(|x| q.given.contains(x) || q.goal.contains(x)) {
            continue;
        }
        if matches(&[&q.given, &c, &q.goal]) && best.as_ref().is_none_or(|b| (c.len(), &c) < (b.len(), b)) {
            best = Some(c);
        }
    }
    best
}

fn deduction_instance(rng: &mut ChaCha8Rng) -> (Hyperstructure, DeductionQuery, Vec<Id>) {
    let n = rng.gen_range(3..=8);
    let universe: Vec<Id> = (0..n).map(|i| id(&format!("u{i}"))).collect();
    let pick = |rng: &mut ChaCha8Rng, from: &[Id], max: usize| -> BTreeSet<Id> {
        let k = rng.gen_range(1..=max.min(from.len()));
        from.choose_multiple(rng, k).cloned().collect()
    };
    let given = pick(rng, &universe, 2);
    let rest: Vec<Id> = universe.iter().filter(|x| !given.contains(*x)).cloned().collect();
    let goal = pick(rng, &rest, 2);
    let free: Vec<Id> = rest.iter().filter(|x| !goal.contains(*x)).cloned().collect();
    let fam = |ids: &BTreeSet<Id>| Collection::of_ids(ids.iter().cloned());

    let mut b = StructureBuilder::new().objects(universe.iter().map(Id::as_str));
    b = b.bond_with(0, "query", fam(&given.union(&goal).cloned().collect()), "q");
    for j in 0..rng.gen_range(0..6) {
        let name = format!("d{j}");
        let proof = if free.is_empty() || rng.gen_bool(0.2) { pick(rng, &universe, 3) } else { pick(rng, &free, 4) };
        let (g, c) =
            if rng.gen_bool(0.7) { (given.clone(), goal.clone()) } else { (pick(rng, &universe, 2), goal.clone()) };
        let mut parts = vec![fam(&g), fam(&proof), fam(&c)];
        if rng.gen_bool(0.3) {
            parts.shuffle(rng);
        }
        let support = Collection::Inner(parts);
        b = if rng.gen_bool(0.3) {
            b.ordered_bond(0, &name, support, "p")
        } else {
            b.bond_with(0, &name, support, "p")
        };
    }
    if rng.gen_bool(0.1) {
        b = b.bond_with(0, "direct", Collection::Inner(vec![fam(&given), fam(&goal)]), "p");
    }
    let h = b.build().expect("deduction instances are valid");
    let query = DeductionQuery { bond: id("query"), given, goal, max_proof_size: rng.gen_range(0..=3) };
    (h, query, universe)
}

// 7. Proof search agrees with exhaustive enumeration.
fn deduction_oracle() -> Verdict {
    let mut rng = common::rng(7);
    let mut found = 0;
    for case in 0..300 {
        let (h, query, universe) = deduction_instance(&mut rng);
        let expected = brute_force_proof(&h, 0, &query, &universe);
        let got = find_proof(&h, &query).map_err(|e| e.to_string())?;
        ensure(got == expected, || format!("case {case}: expected {expected:?}, got {got:?}"))?;
        found += usize::from(got.is_some_and(|p| !p.is_empty()));
    }
    Ok(format!("300/300 instances agree ({found} with a non-empty proof)"))
}

// 8. Raising a threshold never activates a bond; fusion ignition fixtures.
fn propagation_and_fusion() -> Verdict {
    let mut rng = common::rng(8);
    let combiners = [StateCombiner::Sum, StateCombiner::Min, StateCombiner::Max];
    for case in 0..500 {
        let h = common::random_structure(&mut rng, 4, 20);
        let combiner = combiners.choose(&mut rng).unwrap();
        let thresholds: Thresholds = (0..h.order()).map(|l| (l, rng.gen_range(0..8) as f64)).collect();
        let mut states: BTreeMap<Id, StateToken> = BTreeMap::new();
        for x in h.objects() {
            if rng.gen_bool(0.9) {
                states.insert(x.clone(), StateToken::from(rng.gen_range(0..5).to_string().as_str()));
            }
        }
        let before = propagate(&h, combiner, &thresholds, &states).map_err(|e| e.to_string())?;
        let level = rng.gen_range(0..h.order());
        let mut raised = thresholds.clone();
        *raised.get_mut(&level).unwrap() += rng.gen_range(1..5) as f64;
        let after = propagate(&h, combiner, &raised, &states).map_err(|e| e.to_string())?;
        for (x, a) in &after.activation {
            ensure(!a.active || before.activation[x].active, || format!("case {case}: {x} activated by raising"))?;
        }
    }

    let pair = |state: &str| {
        StructureBuilder::new().objects(["a", "b"]).bond(0, "x", &["a", "b"], state).build().expect("valid")
    };
    let deep = StructureBuilder::new()
        .objects(["a", "b"])
        .bond(0, "x", &["a"], "1")
        .bond(0, "y", &["b"], "2")
        .bond(1, "t", &["x", "y"], "3")
        .build()
        .expect("valid");
    let sum = FusionSpec { combiner: StateCombiner::Sum, ..FusionSpec::default() };
    let cross = FusionSpec {
        cross_bonds: vec![CrossBond {
            level: 0,
            id: id("link"),
            support: Collection::of_ids([id("1:a"), id("2:b")]),
            state: StateToken::from("1"),
            ordered: false,
        }],
        ..sum.clone()
    };
    let fixtures: [(&str, Hyperstructure, Hyperstructure, &FusionSpec, &str); 3] = [
        ("3 + 4", pair("3"), pair("4"), &sum, "7"),
        ("3 + 4 + link 1", pair("3"), pair("4"), &cross, "8"),
        ("(1 + 2) + lifted 4", deep, pair("4"), &sum, "7"),
    ];
    for (name, h1, h2, spec, expected) in fixtures {
        let out = fuse(&h1, &h2, spec).map_err(|e| e.to_string())?;
        ensure(out.top_state == Some(StateToken::from(expected)), || format!("{name}: got {:?}", out.top_state))?;
    }
    Ok("500/500 monotone instances, 3/3 fusion fixtures".into())
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(std::iter::once("hyperbond").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).expect("utf-8 report"))
}

fn report(stdout: &str) -> Option<Value> {
    serde_json::from_str(stdout.lines().next()?).ok()
}

// 9. CLI roundtrip, exit-code partition and DOT grammar.
fn cli_contract() -> Verdict {
    let dir = std::env::temp_dir().join(format!("hyperbond-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let f = |name: &str| fixture(name).display().to_string();
    let out = |name: &str| dir.join(name).display().to_string();

    let structures = ["ring9.json", "unsorted.json", "cover.json", "fusion_a.json", "tree.json", "logic.json"];
    let (code, _) = run_cli(&["brunnian", "--branching", "3", "--order", "2", "--out", &out("generated.json")]);
    ensure(code == 0, || "brunnian generation failed".into())?;
    let mut docs: Vec<String> = structures.iter().map(|s| f(s)).collect();
    docs.push(out("generated.json"));
    for (k, doc) in docs.iter().enumerate() {
        let (first, second) = (out(&format!("fmt{k}a.json")), out(&format!("fmt{k}b.json")));
        ensure(run_cli(&["fmt", doc, "--out", &first]).0 == 0, || format!("fmt {doc}"))?;
        ensure(run_cli(&["fmt", &first, "--out", &second]).0 == 0, || format!("fmt {first}"))?;
        let (a, b) = (std::fs::read_to_string(&first).unwrap(), std::fs::read_to_string(&second).unwrap());
        ensure(a == b, || format!("{doc} is not a fixpoint after one roundtrip"))?;
        let parsed = hyperbond::Document::parse(&a).map_err(|e| e.to_string())?;
        ensure(parsed.canonicalize() == parsed, || format!("{doc} is not canonical"))?;

        let (code, stdout) = run_cli(&["export-dot", doc]);
        let dot = report(&stdout).and_then(|r| r["dot"].as_str().map(str::to_string)).unwrap_or_default();
        ensure(code == 0 && graphviz_rust::parse(&dot).is_ok(), || format!("DOT of {doc} does not parse"))?;
    }

    let matrix: Vec<(Vec<String>, i32)> = vec![
        (vec!["validate".into(), f("ring9.json")], 0),
        (vec!["validate".into(), out("generated.json")], 0),
        (vec!["validate".into(), f("dangling.json")], 1),
        (vec!["validate".into(), f("malformed.json")], 2),
        (vec!["validate".into(), f("missing.json")], 2),
        (vec!["frobnicate".into()], 2),
        (vec!["validate".into()], 2),
        (vec!["fmt".into(), f("unsorted.json")], 0),
        (vec!["fmt".into(), f("malformed.json")], 2),
        (
            vec![
                "compose".into(),
                f("ring9.json"),
                "--a".into(),
                "g0".into(),
                "--b".into(),
                "g1".into(),
                "--level".into(),
                "0".into(),
                "--mode".into(),
                "weak".into(),
            ],
            1,
        ),
        (
            vec![
                "compose".into(),
                f("ring9.json"),
                "--a".into(),
                "g0".into(),
                "--b".into(),
                "g0".into(),
                "--level".into(),
                "0".into(),
                "--combiner".into(),
                "sum".into(),
            ],
            0,
        ),
        (
            vec![
                "compose".into(),
                f("ring9.json"),
                "--a".into(),
                "top".into(),
                "--b".into(),
                "g1".into(),
                "--level".into(),
                "0".into(),
                "--mode".into(),
                "weak".into(),
                "--combiner".into(),
                "sum".into(),
            ],
            0,
        ),
        (
            vec![
                "compose".into(),
                f("ring9.json"),
                "--a".into(),
                "g0".into(),
                "--b".into(),
                "g1".into(),
                "--level".into(),
                "0".into(),
                "--combiner".into(),
                "bogus".into(),
            ],
            2,
        ),
        (vec!["topology-trivial".into(), f("cover.json"), "--out".into(), out("trivial.json")], 0),
        (vec!["topology-check".into(), f("cover.json"), out("trivial.json")], 0),
        (vec!["topology-check".into(), f("cover.json"), f("cover_topology.json")], 1),
        (vec!["topology-check".into(), f("cover.json"), f("malformed.json")], 2),
        (vec!["sheaf-check".into(), f("cover.json"), out("trivial.json"), f("cover_presheaf.json")], 0),
        (vec!["sheaf-check".into(), f("cover.json"), f("cover_topology.json"), f("cover_presheaf.json")], 1),
        (
            vec![
                "globalize".into(),
                f("cover.json"),
                f("cover_topology.json"),
                f("cover_presheaf.json"),
                "--search".into(),
            ],
            1,
        ),
        (
            vec!["globalize".into(), f("cover.json"), out("trivial.json"), f("cover_presheaf.json"), "--search".into()],
            0,
        ),
        (vec!["transfer".into(), f("ring9.json"), f("particles.json"), "--out".into(), out("particles_out.json")], 0),
        (vec!["brunnian-check".into(), out("generated.json")], 0),
        (vec!["brunnian-check".into(), f("unsorted.json")], 1),
        (vec!["fuse".into(), f("fusion_a.json"), f("fusion_b.json"), f("fusion_spec.json")], 0),
        (
            vec![
                "propagate".into(),
                f("tree.json"),
                "--states".into(),
                f("tree_states.json"),
                "--thresholds".into(),
                f("tree_thresholds.json"),
                "--combiner".into(),
                "sum".into(),
            ],
            0,
        ),
        (
            vec![
                "propagate".into(),
                f("tree.json"),
                "--states".into(),
                f("tree_states.json"),
                "--thresholds".into(),
                f("tree_thresholds.json"),
                "--combiner".into(),
                "pair".into(),
            ],
            1,
        ),
        (
            vec![
                "deduce".into(),
                f("logic.json"),
                "--bond".into(),
                "d".into(),
                "--given".into(),
                "a1,a2".into(),
                "--goal".into(),
                "b1".into(),
            ],
            0,
        ),
        (
            vec![
                "deduce".into(),
                f("logic.json"),
                "--bond".into(),
                "zz".into(),
                "--given".into(),
                "a".into(),
                "--goal".into(),
                "b".into(),
            ],
            1,
        ),
        (vec!["brunnian".into(), "--branching".into(), "1".into(), "--order".into(), "2".into()], 1),
    ];
    ensure(matrix.len() == 30, || format!("matrix has {} cases", matrix.len()))?;
    for (args, expected) in &matrix {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, stdout) = run_cli(&args);
        ensure(code == *expected, || format!("{args:?}: exit {code}, expected {expected}"))?;
        if code == 2 {
            continue;
        }
        let r = report(&stdout).ok_or_else(|| format!("{args:?}: no JSON report"))?;
        let findings = r["findings"].as_array().map_or(0, Vec::len);
        ensure((code == 0) == (findings == 0) && r["ok"] == (code == 0), || format!("{args:?}: partition broken"))?;
    }
    let (_, stdout) = run_cli(&["fuse", &f("fusion_a.json"), &f("fusion_b.json"), &f("fusion_spec.json")]);
    let top = report(&stdout).map(|r| r["top_state"].clone());
    ensure(top == Some(Value::from("8")), || format!("fusion through the CLI gave {top:?}"))?;
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{} documents roundtrip, 30/30 exit codes, DOT parses", docs.len()))
}

type Criterion = (&'static str, u64, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 9] = [
        ("axiom suite", 10, axiom_suite),
        ("Glob = Sh oracle equivalence", 60, glob_equals_sh),
        ("trivial topology soundness", 10, trivial_topology_soundness),
        ("transfer bridge", 20, transfer_bridge),
        ("Brunnian end-to-end", 5, brunnian_end_to_end),
        ("composition laws", 10, composition_laws),
        ("deduction oracle", 10, deduction_oracle),
        ("propagation monotonicity and fusion", 5, propagation_and_fusion),
        ("CLI contract", 5, cli_contract),
    ];
    let mut failed = 0;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*limit);
        let (status, detail) = match (&outcome, in_time) {
            (Ok(detail), true) => ("PASS", detail.clone()),
            (Ok(detail), false) => ("FAIL", format!("{detail}; over the time limit")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {}: {status} {name} [{:.2}s / {limit}s] {detail}", k + 1, elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
