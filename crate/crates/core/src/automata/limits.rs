//! Per-thread resource caps consulted by state-producing constructions.

use std::cell::Cell;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_enum: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 1_000_000,
            max_enum: 1_000_000,
        }
    }
}

thread_local! {
    static LIMITS: Cell<Limits> = Cell::new(Limits::default());
}

pub fn current() -> Limits {
    LIMITS.with(|l| l.get())
}

pub fn set(limits: Limits) {
    LIMITS.with(|l| l.set(limits));
}

/// Runs `f` with `limits` installed, restoring the previous caps afterwards.
pub fn with<T>(limits: Limits, f: impl FnOnce() -> T) -> T {
    let old = current();
    set(limits);
    let out = f();
    set(old);
    out
}
