//! Models and scripts shipped with the crate.

use crate::error::{Error, Result};
use crate::kripke::{parse_model, Kripke};

#[derive(Debug, Clone, Copy)]
pub struct Entry {
    pub name: &'static str,
    pub file: &'static str,
    pub about: &'static str,
    pub text: &'static str,
}

macro_rules! entry {
    ($name:literal, $file:literal, $about:literal) => {
        Entry {
            name: $name,
            file: $file,
            about: $about,
            text: include_str!(concat!("../../../models/", $file)),
        }
    };
}

pub const MODELS: &[Entry] = &[
    entry!("muddy", "muddy.kripke", "muddy children, two-state transducer"),
    entry!(
        "muddy_abs",
        "muddy_abs.kripke",
        "muddy children over sorted states c*m* (counting abstraction)"
    ),
    entry!(
        "highest",
        "highest.kripke",
        "two agents with distinct unary numbers; who has the highest?"
    ),
    entry!(
        "russian",
        "russian.kripke",
        "card deals; Alice, Bob and Cathy are agents a, b, c"
    ),
];

pub const SCRIPTS: &[Entry] = &[
    entry!(
        "muddy_bounded_1",
        "muddy_bounded_1.script",
        "at most one muddy child, then iterated `nobody knows`"
    ),
    entry!(
        "muddy_bounded_2",
        "muddy_bounded_2.script",
        "at most two muddy children, then iterated `nobody knows`"
    ),
    entry!(
        "muddy_bounded_3",
        "muddy_bounded_3.script",
        "at most three muddy children, then iterated `nobody knows`"
    ),
    entry!(
        "muddy_bounded_4",
        "muddy_bounded_4.script",
        "at most four muddy children, then iterated `nobody knows`"
    ),
    entry!(
        "muddy_unbounded",
        "muddy_unbounded.script",
        "any number of muddy children on the full model; the learner diverges"
    ),
    entry!(
        "muddy_abs",
        "muddy_abs.script",
        "unbounded muddy children on the sorted model"
    ),
    entry!("highest", "highest.script", "termination of the highest-number protocol"),
    entry!("russian", "russian.script", "is the announcement a good one for hand 0,1,2?"),
    entry!(
        "russian_any_hand",
        "russian_any_hand.script",
        "the same question for any hand of Alice, by swapping two card pairs"
    ),
];

pub fn model_entry(name: &str) -> Option<&'static Entry> {
    MODELS.iter().find(|e| e.name == name || e.file == name)
}

pub fn script_entry(name: &str) -> Option<&'static Entry> {
    SCRIPTS.iter().find(|e| e.name == name || e.file == name)
}

/// Parses a bundled model by name.
pub fn load(name: &str) -> Result<Kripke> {
    let e = model_entry(name).ok_or_else(|| Error::Unknown(format!("no bundled model `{name}`")))?;
    parse_model(e.text)
}
