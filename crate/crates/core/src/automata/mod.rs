//! Finite automata over multi-track alphabets.
//!
//! Letters are tuples of per-track symbols interned as mixed-radix integers
//! (see [`Layout`]). All operations are pure and return fresh automata.

mod dfa;
mod io;
mod layout;
pub mod limits;
mod nfa;
mod ops;

pub use dfa::{
    complement, complete, count_length, determinize, difference, enumerate_length, equivalent,
    included, is_empty, minimize, reduce, shortest_word,
};
pub use io::{parse_automaton, to_dot, write_automaton};
pub(crate) use layout::same_layout;
pub use layout::{Layout, Letter, Track, Word};
pub use limits::Limits;
pub use nfa::{intersect, join, JoinSpec, Nfa, State};
pub use ops::{
    boolean, compose, constraint_core, inverse, permute, sync_product, track_constraint, BoolOp,
    Constraint,
};
