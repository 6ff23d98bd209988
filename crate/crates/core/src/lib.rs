//! Decision procedure for L1, the quantifier-free fragment of Leśniewski's
//! elementary ontology.
//!
//! The pipeline: [`tableau::decide`] settles a formula; a provable formula
//! comes with a closed tableau, a non-provable one with a Hintikka leaf from
//! which [`rejection`] builds a checkable rejection derivation and [`model`]
//! builds a finite countermodel. [`translate`] maps formulas into
//! first-order logic and provides a brute-force validity oracle.

pub mod cli;
pub mod corpus;
pub mod model;
pub mod parts;
pub mod rejection;
pub mod syntax;
pub mod tableau;
pub mod translate;

pub use parts::{OccurrencePath, Polarity};
pub use syntax::{parse_formula, Formula, NameVar, ParseError};
pub use tableau::{decide, Mode, Verdict, VerdictKind};
