//! Categorical compositional distributional semantics.
//!
//! The crate covers the syntactic side (pregroup reduction and translation of
//! context-free grammars into pregroup dictionaries), the semantic side
//! (corpus-derived vector spaces, relational tensors and their composition,
//! regression-estimated tensors, tensor-simulated predicate logic), and an
//! evaluation harness for phrase-similarity datasets.

pub mod cfg;
pub mod eval;
pub mod logic;
pub mod pregroup;
pub mod regression;
pub mod space;
pub mod tensor;
