//! Named state combiners used by composition, fusion and propagation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::kernel::StateToken;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CombinerError {
    #[error("combiner {combiner} needs numeric states, got {token}")]
    NonNumeric { combiner: &'static str, token: StateToken },
    #[error("custom table has no entry for ({left},{right})")]
    MissingTableEntry { left: StateToken, right: StateToken },
    #[error("cannot fold an empty sequence of states")]
    Empty,
    #[error("unknown combiner {0}")]
    Unknown(String),
}

/// How two states are merged when bonds are combined.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum StateCombiner {
    /// `(left,right)`.
    #[default]
    Pair,
    /// Tokens read as `|`-separated sets; result is the sorted union.
    Union,
    Sum,
    Min,
    Max,
    /// Lookup keyed by `"left,right"`.
    Table(BTreeMap<String, StateToken>),
}

impl StateCombiner {
    pub fn name(&self) -> &'static str {
        match self {
            StateCombiner::Pair => "pair",
            StateCombiner::Union => "union",
            StateCombiner::Sum => "sum",
            StateCombiner::Min => "min",
            StateCombiner::Max => "max",
            StateCombiner::Table(_) => "custom",
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, StateCombiner::Sum | StateCombiner::Min | StateCombiner::Max)
    }

    pub fn is_commutative(&self) -> bool {
        match self {
            StateCombiner::Pair => false,
            StateCombiner::Union | StateCombiner::Sum | StateCombiner::Min | StateCombiner::Max => true,
            StateCombiner::Table(table) => table.iter().all(|(key, value)| {
                key.split_once(',').map(|(l, r)| table.get(&format!("{r},{l}")) == Some(value)).unwrap_or(false)
            }),
        }
    }

    pub fn combine(&self, left: &StateToken, right: &StateToken) -> Result<StateToken, CombinerError> {
        match self {
            StateCombiner::Pair => Ok(StateToken::from(format!("({left},{right})").as_str())),
            StateCombiner::Union => {
                let set: BTreeSet<&str> =
                    left.as_str().split('|').chain(right.as_str().split('|')).filter(|s| !s.is_empty()).collect();
                let joined = set.into_iter().collect::<Vec<_>>().join("|");
                StateToken::new(joined).ok_or(CombinerError::Empty)
            }
            StateCombiner::Sum | StateCombiner::Min | StateCombiner::Max => {
                let (l, r) = (self.number(left)?, self.number(right)?);
                Ok(StateToken::from_number(self.combine_numbers(l, r)))
            }
            StateCombiner::Table(table) => table
                .get(&format!("{left},{right}"))
                .cloned()
                .ok_or_else(|| CombinerError::MissingTableEntry { left: left.clone(), right: right.clone() }),
        }
    }

    /// Left fold over a non-empty sequence; a single state is returned as is.
    pub fn fold<'a, I>(&self, states: I) -> Result<StateToken, CombinerError>
    where
        I: IntoIterator<Item = &'a StateToken>,
    {
        let mut iter = states.into_iter();
        let first = iter.next().ok_or(CombinerError::Empty)?.clone();
        iter.try_fold(first, |acc, s| self.combine(&acc, s))
    }

    fn number(&self, token: &StateToken) -> Result<f64, CombinerError> {
        token.as_number().ok_or_else(|| CombinerError::NonNumeric { combiner: self.name(), token: token.clone() })
    }

    /// Numeric combiners only; other variants return `None`.
    pub fn fold_numbers(&self, values: &[f64]) -> Option<f64> {
        if !self.is_numeric() || values.is_empty() {
            return None;
        }
        Some(values[1..].iter().fold(values[0], |acc, v| self.combine_numbers(acc, *v)))
    }

    fn combine_numbers(&self, l: f64, r: f64) -> f64 {
        match self {
            StateCombiner::Sum => l + r,
            StateCombiner::Min => l.min(r),
            StateCombiner::Max => l.max(r),
            _ => unreachable!("numeric combiner"),
        }
    }
}

impl fmt::Display for StateCombiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StateCombiner {
    type Err = CombinerError;

    /// Table combiners need their table; `custom` parses to an empty table.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pair" => Ok(StateCombiner::Pair),
            "union" => Ok(StateCombiner::Union),
            "sum" => Ok(StateCombiner::Sum),
            "min" => Ok(StateCombiner::Min),
            "max" => Ok(StateCombiner::Max),
            "custom" | "custom-table" => Ok(StateCombiner::Table(BTreeMap::new())),
            other => Err(CombinerError::Unknown(other.to_string())),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct NamedCombiner {
    name: String,
    #[serde(default)]
    table: BTreeMap<String, StateToken>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCombiner {
    Name(String),
    Named(NamedCombiner),
}

impl Serialize for StateCombiner {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            StateCombiner::Table(table) => {
                NamedCombiner { name: "custom".into(), table: table.clone() }.serialize(serializer)
            }
            other => serializer.serialize_str(other.name()),
        }
    }
}

impl<'de> Deserialize<'de> for StateCombiner {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (name, table) = match RawCombiner::deserialize(deserializer)? {
            RawCombiner::Name(name) => (name, BTreeMap::new()),
            RawCombiner::Named(named) => (named.name, named.table),
        };
        match name.parse::<StateCombiner>().map_err(serde::de::Error::custom)? {
            StateCombiner::Table(_) => Ok(StateCombiner::Table(table)),
            other => Ok(other),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> StateToken {
        StateToken::from(s)
    }

    #[test]
    fn named_combiners() {
        assert_eq!(StateCombiner::Pair.combine(&t("a"), &t("b")).unwrap(), t("(a,b)"));
        assert_eq!(StateCombiner::Union.combine(&t("b|a"), &t("c|a")).unwrap(), t("a|b|c"));
        assert_eq!(StateCombiner::Sum.combine(&t("2"), &t("3.5")).unwrap(), t("5.5"));
        assert_eq!(StateCombiner::Min.combine(&t("2"), &t("3")).unwrap(), t("2"));
        assert_eq!(StateCombiner::Max.combine(&t("2"), &t("3")).unwrap(), t("3"));
        assert!(matches!(StateCombiner::Sum.combine(&t("x"), &t("1")), Err(CombinerError::NonNumeric { .. })));
    }

    #[test]
    fn custom_table() {
        let json = r#"{"name":"custom","table":{"a,b":"c","b,a":"c"}}"#;
        let combiner: StateCombiner = serde_json::from_str(json).unwrap();
        assert_eq!(combiner.combine(&t("a"), &t("b")).unwrap(), t("c"));
        assert!(combiner.is_commutative());
        assert!(matches!(combiner.combine(&t("a"), &t("a")), Err(CombinerError::MissingTableEntry { .. })));
        let plain: StateCombiner = serde_json::from_str("\"sum\"").unwrap();
        assert_eq!(plain, StateCombiner::Sum);
    }

    #[test]
    fn fold_of_one_is_identity() {
        assert_eq!(StateCombiner::Pair.fold([&t("x")]).unwrap(), t("x"));
        assert_eq!(StateCombiner::Sum.fold([&t("1"), &t("2"), &t("3")]).unwrap(), t("6"));
        assert_eq!(StateCombiner::Sum.fold([]), Err(CombinerError::Empty));
        assert_eq!(StateCombiner::Min.fold_numbers(&[3.0, 1.0, 2.0]), Some(1.0));
    }
}
