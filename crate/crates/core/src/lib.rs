//! Symbolic model checking of parameterized public announcement logic over
//! regular Kripke structures.
//!
//! Formulas compile to regular languages by automata algebra ([`semantics`]);
//! iterated announcements are resolved by learning the disappearance relation
//! ([`disappearance`]).

pub mod automata;
pub mod catalog;
pub mod disappearance;
mod error;
pub mod formula;
pub mod kripke;
pub mod script;
pub mod semantics;

pub use error::{Error, Result};
