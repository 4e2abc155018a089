//! Composition of bonds through iterated boundary compatibility.
//!
//! Compatibility is tested at an X-index `p`: the sets of `X_p` elements
//! reached by repeatedly taking boundaries must agree (strict) or meet (weak).
//! For a bond at level `n`, `p` ranges over `0..=n`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collection::{Collection, Id};
use crate::combiner::{CombinerError, StateCombiner};
use crate::kernel::{Bond, Hyperstructure, KernelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompatibilityMode {
    Strict,
    Weak,
}

impl std::str::FromStr for CompatibilityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(CompatibilityMode::Strict),
            "weak" => Ok(CompatibilityMode::Weak),
            other => Err(format!("unknown compatibility mode {other}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompositionError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("level {p} is out of range for bond {bond} at level {level}")]
    LevelOutOfRange { bond: Id, p: usize, level: usize },
    #[error("bonds {a} and {b} are not compatible at level {p}")]
    NotCompatible { a: Id, b: Id, p: usize },
    #[error("bonds at levels {a} and {b} cannot be composed at one level")]
    LevelMismatch { a: usize, b: usize },
    #[error("cross-level composition needs m >= n, got m = {m}, n = {n}")]
    LevelOrderViolation { m: usize, n: usize },
    #[error(transparent)]
    CombinerDomain(#[from] CombinerError),
}

/// `∂_p ∘ ⋯ ∘ ∂(bond)` flattened to a set of `X_p` ids.
pub fn iterated_support(h: &Hyperstructure, bond: &Id, p: usize) -> Result<BTreeSet<Id>, CompositionError> {
    let level = h.require_bond(bond)?.level;
    if p > level {
        return Err(CompositionError::LevelOutOfRange { bond: bond.clone(), p, level });
    }
    let mut current: BTreeSet<Id> = [bond.clone()].into();
    for _ in p..=level {
        let mut next = BTreeSet::new();
        for id in &current {
            next.extend(h.members(id)?);
        }
        current = next;
    }
    Ok(current)
}

pub fn compatible(
    h: &Hyperstructure,
    a: &Id,
    b: &Id,
    p: usize,
    mode: CompatibilityMode,
) -> Result<bool, CompositionError> {
    let sa = iterated_support(h, a, p)?;
    let sb = iterated_support(h, b, p)?;
    Ok(match mode {
        CompatibilityMode::Strict => sa == sb,
        CompatibilityMode::Weak => !sa.is_disjoint(&sb),
    })
}

/// Registers `a □_p b` at the common level of `a` and `b`.
///
/// The composite binds `[support(a), support(b)]` (normalized) and carries
/// `combiner(state(a), state(b))`. An existing bond with the same support and
/// state is returned instead of a new one.
pub fn compose(
    h: &Hyperstructure,
    a: &Id,
    b: &Id,
    p: usize,
    mode: CompatibilityMode,
    combiner: &StateCombiner,
) -> Result<(Hyperstructure, Id), CompositionError> {
    let (ba, bb) = (h.require_bond(a)?, h.require_bond(b)?);
    if ba.level != bb.level {
        return Err(CompositionError::LevelMismatch { a: ba.level, b: bb.level });
    }
    if !compatible(h, a, b, p, mode)? {
        return Err(CompositionError::NotCompatible { a: a.clone(), b: b.clone(), p });
    }
    let level = ba.level;
    let state = combiner.combine(&ba.state, &bb.state)?;
    let support = Collection::Inner(vec![ba.support.clone(), bb.support.clone()]).normalize();

    if let Some(existing) = h.bonds_at(level).find(|x| x.support.normalize() == support && x.state == state) {
        return Ok((h.clone(), existing.id.clone()));
    }
    let id = h.fresh_id(&format!("({a}*{b})"));
    let mut next = h.with_checked_bond(Bond {
        id: id.clone(),
        level,
        support: support.clone(),
        state: state.clone(),
        is_identity: false,
        ordered: false,
    })?;
    next.extend_omega(level, &support, &state);
    Ok((next, id))
}

/// Wraps `bond` in identity bonds until it reaches `level`.
pub fn lift(h: &Hyperstructure, bond: &Id, level: usize) -> Result<(Hyperstructure, Id), CompositionError> {
    let mut current = bond.clone();
    let mut structure = h.clone();
    let from = h.require_bond(bond)?.level;
    for target in from + 1..=level {
        let (next, id) = lift_once(&structure, &current, target)?;
        structure = next;
        current = id;
    }
    Ok((structure, current))
}

/// A new identity carries the state of the bond it wraps.
fn lift_once(h: &Hyperstructure, element: &Id, level: usize) -> Result<(Hyperstructure, Id), CompositionError> {
    if let Some(existing) = h.identity_of(element) {
        return Ok((h.clone(), existing.id.clone()));
    }
    // add_identity refuses the level above the current top, so build it directly.
    let id = h.fresh_id(&format!("I({element})"));
    let next = h.with_checked_bond(Bond {
        id: id.clone(),
        level,
        support: Collection::Inner(vec![Collection::Leaf(element.clone())]),
        state: h.require_bond(element)?.state.clone(),
        is_identity: true,
        ordered: false,
    })?;
    Ok((next, id))
}

/// `a_m ᵐ□ₚⁿ b_n` for `m >= n`: lifts `b` by identities to level `m`, then composes.
pub fn compose_cross(
    h: &Hyperstructure,
    a: &Id,
    b: &Id,
    p: usize,
    mode: CompatibilityMode,
    combiner: &StateCombiner,
) -> Result<(Hyperstructure, Id), CompositionError> {
    let m = h.require_bond(a)?.level;
    let n = h.require_bond(b)?.level;
    if m < n {
        return Err(CompositionError::LevelOrderViolation { m, n });
    }
    if !compatible(h, a, b, p, mode)? {
        return Err(CompositionError::NotCompatible { a: a.clone(), b: b.clone(), p });
    }
    let (lifted, b_lifted) = lift(h, b, m)?;
    compose(&lifted, a, &b_lifted, p, mode, combiner)
}
