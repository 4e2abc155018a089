//! Finite hyperstructure kernel.
//!
//! Multi-level bond structures on finite collections: construction and axiom
//! validation, bond composition, sieves and topologies on bonds, globalizers,
//! structure transfer and fusion across bridges, deduction over bonds, and
//! levelwise Brunnian generators.

pub mod collection;
pub mod kernel;

pub use collection::{Collection, CollectionError, Id, DEFAULT_DEPTH_CAP};
pub use kernel::{
    Bond, Document, Finding, Hyperstructure, KernelError, StateToken, StructureBuilder, ValidationReport,
};
pub mod bridge;
pub mod brunnian;
pub mod cli;
pub mod combiner;
pub mod composition;
pub mod dot;
pub mod globalizer;
pub mod site;
pub use combiner::{CombinerError, StateCombiner};
pub use composition::{compatible, compose, compose_cross, iterated_support, CompatibilityMode, CompositionError};
