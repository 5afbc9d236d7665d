//! Executable logical relations for a family of small typed lambda calculi.
//!
//! The layers build on each other: [`kernel`] holds syntax and substitution,
//! [`surface`] parses and prints it, [`statics`] and [`dynamics`] give the type
//! system and the small-step machine, and the remaining modules build the
//! unary, binary and step-indexed relations plus contextual equivalence on top.

pub mod kernel;
pub mod surface;
pub mod statics;
pub mod dynamics;
pub mod equivalence;
pub mod logrel;
pub mod relational;
pub mod stepworld;

pub use kernel::{Feature, LangLevel, Loc, Name, Term, Type};
