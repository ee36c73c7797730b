//! Line-oriented automaton text format and DOT export.
//!
//! ```text
//! tracks: src:m,c obs:0,1 tgt:m,c
//! states: q0 q1
//! initial: q0
//! accepting: q1
//! trans: q0 (m,0,m) q0
//! trans: q0 (m,1,c) q1
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use super::layout::{Layout, Track};
use super::nfa::{Nfa, State};
use crate::error::{Error, Result};

/// Parses the text format. `first_line` is the line number of `text`'s first
/// line inside its enclosing document, for error messages.
pub fn parse_automaton(text: &str, first_line: usize) -> Result<Nfa> {
    let err = |line: usize, msg: String| Error::Syntax { line, msg };
    let mut layout = None;
    let mut names: HashMap<String, State> = HashMap::new();
    let mut nfa: Option<Nfa> = None;
    let mut pending_initial: Vec<(usize, String)> = Vec::new();
    let mut pending_accepting: Vec<(usize, String)> = Vec::new();
    let mut pending_trans: Vec<(usize, String, String, String)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = first_line + i;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| err(line_no, format!("expected `key: value`, got `{line}`")))?;
        let rest = rest.trim();
        match key.trim() {
            "tracks" => {
                let mut tracks = Vec::new();
                for spec in rest.split_whitespace() {
                    let (name, syms) = spec
                        .split_once(':')
                        .ok_or_else(|| err(line_no, format!("bad track `{spec}`")))?;
                    let syms: Vec<&str> = syms.split(',').filter(|s| !s.is_empty()).collect();
                    tracks.push(Track::new(name, &syms));
                }
                let l = Layout::new(tracks).map_err(|e| err(line_no, e.to_string()))?;
                nfa = Some(Nfa::new(l.clone()));
                layout = Some(l);
            }
            "states" => {
                let n = nfa
                    .as_mut()
                    .ok_or_else(|| err(line_no, "states before tracks".into()))?;
                for s in rest.split_whitespace() {
                    if names.contains_key(s) {
                        return Err(err(line_no, format!("duplicate state {s}")));
                    }
                    names.insert(s.to_string(), n.add_state(false));
                }
            }
            "initial" => {
                pending_initial.extend(rest.split_whitespace().map(|s| (line_no, s.to_string())))
            }
            "accepting" => {
                pending_accepting.extend(rest.split_whitespace().map(|s| (line_no, s.to_string())))
            }
            "trans" => {
                let open = rest
                    .find('(')
                    .ok_or_else(|| err(line_no, "missing `(`".into()))?;
                let close = rest
                    .find(')')
                    .ok_or_else(|| err(line_no, "missing `)`".into()))?;
                if close < open {
                    return Err(err(line_no, "malformed letter".into()));
                }
                let src = rest[..open].trim().to_string();
                let letter = rest[open + 1..close].to_string();
                let dst = rest[close + 1..].trim().to_string();
                if src.is_empty() || dst.is_empty() {
                    return Err(err(line_no, "transition needs source and target".into()));
                }
                pending_trans.push((line_no, src, letter, dst));
            }
            other => return Err(err(line_no, format!("unknown key `{other}`"))),
        }
    }
    let layout = layout.ok_or_else(|| err(first_line, "missing `tracks:` line".into()))?;
    let mut nfa = nfa.unwrap();
    let lookup = |names: &HashMap<String, State>, line: usize, s: &str| {
        names
            .get(s)
            .copied()
            .ok_or_else(|| err(line, format!("undeclared state {s}")))
    };
    for (line, s) in pending_initial {
        nfa.add_initial(lookup(&names, line, &s)?);
    }
    for (line, s) in pending_accepting {
        nfa.set_accepting(lookup(&names, line, &s)?, true);
    }
    for (line, src, letter, dst) in pending_trans {
        let syms: Vec<&str> = letter.split(',').map(|s| s.trim()).collect();
        let l = layout.letter(&syms).map_err(|e| err(line, e.to_string()))?;
        let p = lookup(&names, line, &src)?;
        let q = lookup(&names, line, &dst)?;
        nfa.add_transition(p, l, q);
    }
    nfa.normalize();
    Ok(nfa)
}

pub fn write_automaton(a: &Nfa) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tracks: {}", a.layout());
    let states: Vec<String> = (0..a.num_states()).map(|q| format!("q{q}")).collect();
    let _ = writeln!(out, "states: {}", states.join(" "));
    let init: Vec<String> = a.initial().iter().map(|q| format!("q{q}")).collect();
    let _ = writeln!(out, "initial: {}", init.join(" "));
    let acc: Vec<String> = (0..a.num_states() as State)
        .filter(|&q| a.is_accepting(q))
        .map(|q| format!("q{q}"))
        .collect();
    let _ = writeln!(out, "accepting: {}", acc.join(" "));
    for q in 0..a.num_states() as State {
        for &(l, r) in a.transitions(q) {
            let _ = writeln!(out, "trans: q{q} ({}) q{r}", a.layout().format_letter(l));
        }
    }
    out
}

/// DOT rendering, one edge per letter tuple.
pub fn to_dot(a: &Nfa, name: &str) -> String {
    let mut out = String::new();
    let ident: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    let _ = writeln!(out, "digraph {ident} {{");
    let _ = writeln!(out, "  rankdir=LR;");
    let _ = writeln!(out, "  node [shape=circle];");
    for q in 0..a.num_states() as State {
        let shape = if a.is_accepting(q) {
            "doublecircle"
        } else {
            "circle"
        };
        let _ = writeln!(out, "  q{q} [shape={shape}];");
    }
    for (i, q) in a.initial().iter().enumerate() {
        let _ = writeln!(out, "  init{i} [shape=point];");
        let _ = writeln!(out, "  init{i} -> q{q};");
    }
    for q in 0..a.num_states() as State {
        for &(l, r) in a.transitions(q) {
            let _ = writeln!(
                out,
                "  q{q} -> q{r} [label=\"{}\"];",
                a.layout().format_letter(l)
            );
        }
    }
    out.push_str("}\n");
    out
}
