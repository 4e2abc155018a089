//! Generalized collections: finite nested trees of ids, one element of an
//! iterated power set over a level's universe.
//!
//! Collections are stored as ordered sequences. Set semantics are recovered
//! by comparing [`Collection::normalize`]d forms.

use std::borrow::Borrow;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Default maximum nesting depth accepted when building structures.
pub const DEFAULT_DEPTH_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CollectionError {
    #[error("identifier must be non-empty and not whitespace-only")]
    InvalidId,
    #[error("inner collection nodes must have at least one child")]
    EmptyInner,
}

/// Identifier of an object or a bond.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Id(String);

impl Id {
    pub fn new(token: impl Into<String>) -> Result<Self, CollectionError> {
        let token = token.into();
        if token.trim().is_empty() {
            return Err(CollectionError::InvalidId);
        }
        Ok(Id(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Appends `suffix` to the token. Always valid since the base is.
    pub fn suffixed(&self, suffix: &str) -> Id {
        Id(format!("{}{}", self.0, suffix))
    }

    pub fn prefixed(&self, prefix: &str) -> Id {
        Id(format!("{}{}", prefix, self.0))
    }
}

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for Id {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl FromStr for Id {
    type Err = CollectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Id::new(s)
    }
}

impl TryFrom<String> for Id {
    type Error = CollectionError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Id::new(value)
    }
}

impl TryFrom<&str> for Id {
    type Error = CollectionError;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Id::new(value)
    }
}

impl Serialize for Id {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Id {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Id::new(raw).map_err(serde::de::Error::custom)
    }
}

/// A finite nested collection. A bare leaf has depth 0.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Collection {
    Leaf(Id),
    Inner(Vec<Collection>),
}

impl Collection {
    pub fn leaf(id: Id) -> Self {
        Collection::Leaf(id)
    }

    pub fn inner(children: Vec<Collection>) -> Result<Self, CollectionError> {
        if children.is_empty() {
            return Err(CollectionError::EmptyInner);
        }
        Ok(Collection::Inner(children))
    }

    /// A depth-1 collection of the given ids, in iteration order.
    ///
    /// Panics if `ids` is empty.
    pub fn of_ids<I>(ids: I) -> Self
    where
        I: IntoIterator,
        I::Item: Borrow<Id>,
    {
        let children: Vec<_> = ids.into_iter().map(|id| Collection::Leaf(id.borrow().clone())).collect();
        assert!(!children.is_empty(), "of_ids requires at least one id");
        Collection::Inner(children)
    }

    pub fn depth(&self) -> usize {
        match self {
            Collection::Leaf(_) => 0,
            Collection::Inner(children) => 1 + children.iter().map(Collection::depth).max().unwrap_or(0),
        }
    }

    /// Leaf ids in left-to-right order, duplicates included.
    pub fn leaves(&self) -> Vec<&Id> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Id>) {
        match self {
            Collection::Leaf(id) => out.push(id),
            Collection::Inner(children) => children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    /// Leaf ids in order of first appearance, without duplicates.
    pub fn distinct_leaves(&self) -> Vec<Id> {
        let mut seen = BTreeSet::new();
        self.leaves().into_iter().filter(|id| seen.insert((*id).clone())).cloned().collect()
    }

    pub fn flatten(&self) -> BTreeSet<Id> {
        self.leaves().into_iter().cloned().collect()
    }

    pub fn contains_leaf(&self, id: &Id) -> bool {
        match self {
            Collection::Leaf(x) => x == id,
            Collection::Inner(children) => children.iter().any(|c| c.contains_leaf(id)),
        }
    }

    /// Canonical form: children recursively sorted, duplicate siblings removed.
    pub fn normalize(&self) -> Collection {
        match self {
            Collection::Leaf(_) => self.clone(),
            Collection::Inner(children) => {
                let set: BTreeSet<Collection> = children.iter().map(Collection::normalize).collect();
                Collection::Inner(set.into_iter().collect())
            }
        }
    }

    pub fn is_normalized(&self) -> bool {
        *self == self.normalize()
    }

    /// Set-semantics equality.
    pub fn same_as(&self, other: &Collection) -> bool {
        self.normalize() == other.normalize()
    }

    /// The single id bound by `Leaf(x)` or `Inner[Leaf(x)]`.
    pub fn singleton_leaf(&self) -> Option<&Id> {
        match self {
            Collection::Leaf(id) => Some(id),
            Collection::Inner(children) => match children.as_slice() {
                [Collection::Leaf(id)] => Some(id),
                _ => None,
            },
        }
    }

    /// `Inner[Leaf(s), Leaf(t)]` read as the ordered pair `(s, t)`.
    pub fn as_pair(&self) -> Option<(&Id, &Id)> {
        match self {
            Collection::Inner(children) => match children.as_slice() {
                [Collection::Leaf(s), Collection::Leaf(t)] => Some((s, t)),
                _ => None,
            },
            Collection::Leaf(_) => None,
        }
    }

    pub fn children(&self) -> &[Collection] {
        match self {
            Collection::Leaf(_) => &[],
            Collection::Inner(children) => children,
        }
    }

    /// Replaces every leaf with the collection returned by `f`.
    pub fn substitute<F>(&self, f: &mut F) -> Collection
    where
        F: FnMut(&Id) -> Collection,
    {
        match self {
            Collection::Leaf(id) => f(id),
            Collection::Inner(children) => Collection::Inner(children.iter().map(|c| c.substitute(f)).collect()),
        }
    }

    pub fn rename<F>(&self, mut f: F) -> Collection
    where
        F: FnMut(&Id) -> Id,
    {
        self.substitute(&mut |id| Collection::Leaf(f(id)))
    }

    /// The tree with every leaf replaced by the same placeholder.
    pub fn shape(&self) -> Shape {
        match self {
            Collection::Leaf(_) => Shape::Leaf,
            Collection::Inner(children) => Shape::Inner(children.iter().map(Collection::shape).collect()),
        }
    }
}

/// Leaf-erased tree shape, used for cheap structural comparisons.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Shape {
    Leaf,
    Inner(Vec<Shape>),
}

impl Shape {
    /// Order-free form: children sorted recursively.
    pub fn sorted(&self) -> Shape {
        match self {
            Shape::Leaf => Shape::Leaf,
            Shape::Inner(children) => {
                let mut children: Vec<Shape> = children.iter().map(Shape::sorted).collect();
                children.sort();
                Shape::Inner(children)
            }
        }
    }
}

impl From<Id> for Collection {
    fn from(id: Id) -> Self {
        Collection::Leaf(id)
    }
}

impl fmt::Display for Collection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Collection::Leaf(id) => write!(f, "{id}"),
            Collection::Inner(children) => {
                f.write_str("[")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl Serialize for Collection {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Collection::Leaf(id) => id.serialize(serializer),
            Collection::Inner(children) => children.serialize(serializer),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCollection {
    Leaf(String),
    Inner(Vec<Collection>),
}

impl<'de> Deserialize<'de> for Collection {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match RawCollection::deserialize(deserializer)? {
            RawCollection::Leaf(token) => Id::new(token).map(Collection::Leaf).map_err(serde::de::Error::custom),
            RawCollection::Inner(children) => Collection::inner(children).map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(s: &str) -> Collection {
        Collection::Leaf(Id::new(s).unwrap())
    }

    fn n(children: Vec<Collection>) -> Collection {
        Collection::inner(children).unwrap()
    }

    fn ids(xs: &[&str]) -> BTreeSet<Id> {
        xs.iter().map(|x| Id::new(*x).unwrap()).collect()
    }

    #[test]
    fn depth_examples() {
        assert_eq!(l("a").depth(), 0);
        assert_eq!(n(vec![l("a"), l("b")]).depth(), 1);
        assert_eq!(n(vec![n(vec![l("a")]), l("b")]).depth(), 2);
    }

    #[test]
    fn flatten_examples() {
        assert_eq!(l("a").flatten(), ids(&["a"]));
        let g = n(vec![n(vec![l("a"), l("b")]), n(vec![l("b"), l("c")])]);
        assert_eq!(g.flatten(), ids(&["a", "b", "c"]));
        assert_eq!(n(vec![n(vec![n(vec![l("a")])])]).flatten(), ids(&["a"]));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(n(vec![l("b"), l("a")]).normalize(), n(vec![l("a"), l("b")]));
        assert_eq!(n(vec![l("a"), l("a")]).normalize(), n(vec![l("a")]));
        let g = n(vec![n(vec![l("b"), l("a")]), n(vec![l("a"), l("b")])]);
        assert_eq!(g.normalize(), n(vec![n(vec![l("a"), l("b")])]));
    }

    #[test]
    fn ids_reject_blank_tokens() {
        assert_eq!(Id::new(""), Err(CollectionError::InvalidId));
        assert_eq!(Id::new("  \t"), Err(CollectionError::InvalidId));
        assert!(Id::new(" a ").is_ok());
    }

    #[test]
    fn empty_inner_is_rejected() {
        assert_eq!(Collection::inner(vec![]), Err(CollectionError::EmptyInner));
        assert!(serde_json::from_str::<Collection>("[]").is_err());
        assert!(serde_json::from_str::<Collection>("[\"a\", []]").is_err());
        assert!(serde_json::from_str::<Collection>("[\"a\", \"\"]").is_err());
    }

    #[test]
    fn json_form() {
        let g: Collection = serde_json::from_str(r#"[["a","b"],["c"]]"#).unwrap();
        assert_eq!(g, n(vec![n(vec![l("a"), l("b")]), n(vec![l("c")])]));
        assert_eq!(serde_json::to_string(&g).unwrap(), r#"[["a","b"],["c"]]"#);
        let leaf: Collection = serde_json::from_str("\"a\"").unwrap();
        assert_eq!(leaf, l("a"));
    }

    #[test]
    fn pair_and_singleton_views() {
        assert_eq!(n(vec![l("s"), l("t")]).as_pair().map(|(a, b)| (a.as_str(), b.as_str())), Some(("s", "t")));
        assert!(n(vec![l("s"), l("t"), l("u")]).as_pair().is_none());
        assert_eq!(n(vec![l("x")]).singleton_leaf().map(Id::as_str), Some("x"));
        assert_eq!(l("x").singleton_leaf().map(Id::as_str), Some("x"));
        assert!(n(vec![n(vec![l("x")])]).singleton_leaf().is_none());
    }
}
