//! Script files: announcements applied to the model, then checks.
//!
//! ```text
//! # comment
//! let model = E i: c_i
//! let s(t) = a_{t} | b_{t}
//! announce $model
//! check [!E i: $s(i)] true
//! learn A i: <i> !m_i
//! ```
//!
//! Lines starting with whitespace continue the previous one. `$name` and
//! `$name(args)` expand to the parenthesized definition.

use std::collections::HashMap;

use crate::automata::Nfa;
use crate::disappearance::{learn_relation, DisappearanceRelation, FormulaOperator};
use crate::error::{Error, Result};
use crate::formula::Core;
use crate::kripke::{state_space, Kripke};
use crate::semantics::{announce_model, check_core, compile_for, Evaluator, Options, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    /// Restrict the working model to the states satisfying the formula.
    Announce,
    /// Check validity on the working model.
    Check,
    /// Learn the disappearance relation of the announced formula.
    Learn,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Command {
    pub kind: CommandKind,
    pub formula: String,
    pub line: usize,
}

struct Macro {
    params: Vec<String>,
    body: String,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '\''
}

fn ident_at(s: &str) -> &str {
    let end = s.find(|c: char| !is_ident_char(c)).unwrap_or(s.len());
    &s[..end]
}

/// Replaces whole identifiers.
fn substitute(body: &str, params: &[String], args: &[String]) -> String {
    let mut out = String::new();
    let mut rest = body;
    while let Some(c) = rest.chars().next() {
        if c.is_ascii_alphabetic() && !out.ends_with(is_ident_char) {
            let id = ident_at(rest);
            match params.iter().position(|p| p == id) {
                Some(k) => out.push_str(&args[k]),
                None => out.push_str(id),
            }
            rest = &rest[id.len()..];
        } else {
            out.push(c);
            rest = &rest[c.len_utf8()..];
        }
    }
    out
}

/// Splits `a, b+1, (c, d)` at top-level commas.
fn split_args(s: &str) -> Vec<String> {
    let mut out = vec![];
    let mut depth = 0;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' | '{' | '[' => depth += 1,
            ')' | '}' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.trim().is_empty() || !out.is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn expand(text: &str, macros: &HashMap<String, Macro>, line: usize, depth: usize) -> Result<String> {
    if depth > 32 {
        return Err(Error::Syntax {
            line,
            msg: "macro expansion too deep".into(),
        });
    }
    let mut out = String::new();
    let mut rest = text;
    while let Some(i) = rest.find('$') {
        out.push_str(&rest[..i]);
        rest = &rest[i + 1..];
        let name = ident_at(rest);
        let m = macros.get(name).ok_or_else(|| Error::Syntax {
            line,
            msg: format!("undefined macro `${name}`"),
        })?;
        rest = &rest[name.len()..];
        let mut args = vec![];
        if rest.starts_with('(') {
            let mut depth = 0;
            let mut close = None;
            for (k, c) in rest.char_indices() {
                match c {
                    '(' => depth += 1,
                    ')' => {
                        depth -= 1;
                        if depth == 0 {
                            close = Some(k);
                            break;
                        }
                    }
                    _ => {}
                }
            }
            let close = close.ok_or_else(|| Error::Syntax {
                line,
                msg: format!("unclosed argument list of `${name}`"),
            })?;
            args = split_args(&rest[1..close]);
            rest = &rest[close + 1..];
        }
        if args.len() != m.params.len() {
            return Err(Error::Syntax {
                line,
                msg: format!(
                    "`${name}` takes {} arguments, got {}",
                    m.params.len(),
                    args.len()
                ),
            });
        }
        let args: Vec<String> = args
            .iter()
            .map(|a| expand(a, macros, line, depth + 1))
            .collect::<Result<_>>()?;
        let body = substitute(&m.body, &m.params, &args);
        out.push('(');
        out.push_str(&expand(&body, macros, line, depth + 1)?);
        out.push(')');
    }
    out.push_str(rest);
    Ok(out)
}

fn parse_let(rest: &str, line: usize) -> Result<(String, Macro)> {
    let err = |msg: &str| Error::Syntax {
        line,
        msg: msg.to_string(),
    };
    let (head, body) = rest.split_once('=').ok_or_else(|| err("expected `let name = formula`"))?;
    let head = head.trim();
    let name = ident_at(head);
    if name.is_empty() || !name.starts_with(|c: char| c.is_ascii_alphabetic()) {
        return Err(err("expected a macro name"));
    }
    let after = head[name.len()..].trim();
    let params = if after.is_empty() {
        vec![]
    } else if after.starts_with('(') && after.ends_with(')') {
        split_args(&after[1..after.len() - 1])
    } else {
        return Err(err("expected `(params)` after the macro name"));
    };
    Ok((
        name.to_string(),
        Macro {
            params,
            body: body.trim().to_string(),
        },
    ))
}

/// Parses a script into commands with macros expanded.
pub fn parse_script(text: &str) -> Result<Vec<Command>> {
    // join continuation lines, remembering where each logical line starts
    let mut logical: Vec<(usize, String)> = vec![];
    for (k, raw) in text.lines().enumerate() {
        let code = raw.split('#').next().unwrap_or("");
        if code.trim().is_empty() {
            continue;
        }
        if code.starts_with(char::is_whitespace) {
            match logical.last_mut() {
                Some((_, l)) => {
                    l.push(' ');
                    l.push_str(code.trim());
                }
                None => {
                    return Err(Error::Syntax {
                        line: k + 1,
                        msg: "continuation line without a command".into(),
                    })
                }
            }
        } else {
            logical.push((k + 1, code.trim().to_string()));
        }
    }
    let mut macros: HashMap<String, Macro> = HashMap::new();
    let mut out = vec![];
    for (line, l) in logical {
        let (word, rest) = l.split_once(char::is_whitespace).unwrap_or((&l, ""));
        let kind = match word {
            "let" => {
                let (name, m) = parse_let(rest, line)?;
                macros.insert(name, m);
                continue;
            }
            "announce" => CommandKind::Announce,
            "check" => CommandKind::Check,
            "learn" => CommandKind::Learn,
            other => {
                return Err(Error::Syntax {
                    line,
                    msg: format!("unknown command `{other}`"),
                })
            }
        };
        let formula = expand(rest.trim(), &macros, line, 0)?;
        if formula.is_empty() {
            return Err(Error::Syntax {
                line,
                msg: "missing formula".into(),
            });
        }
        out.push(Command {
            kind,
            formula,
            line,
        });
    }
    Ok(out)
}

/// Result of one command.
#[derive(Debug, Clone)]
pub enum Outcome {
    /// The working model after the announcement, and its state space.
    Announced { states: Nfa },
    Checked(Verdict),
    Learned(Box<DisappearanceRelation>),
}

/// A working model with the announcements made so far.
pub struct Session {
    model: Kripke,
    ev: Evaluator,
}

impl Session {
    pub fn new(model: Kripke, opts: Options) -> Self {
        Session {
            model,
            ev: Evaluator::new(opts),
        }
    }

    pub fn model(&self) -> &Kripke {
        &self.model
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.ev
    }

    fn compile(&mut self, src: &str) -> Result<Core> {
        let order = self.ev.options().var_order.clone();
        let (f, analysis) = compile_for(&self.model, src, &order)?;
        if !analysis.closed {
            return Err(Error::Formula {
                pos: 0,
                msg: format!("free variables: {}", analysis.free.join(", ")),
            });
        }
        self.ev.register(&analysis);
        Ok(f)
    }

    pub fn run(&mut self, cmd: &Command) -> Result<Outcome> {
        let f = self.compile(&cmd.formula)?;
        match cmd.kind {
            CommandKind::Announce => {
                self.model = announce_model(&mut self.ev, &self.model, &f)?;
                // evaluation caches are keyed by transducer, so a fresh
                // evaluator keeps memory bounded across announcements
                let opts = self.ev.options().clone();
                let old = std::mem::replace(&mut self.ev, Evaluator::new(opts));
                self.ev.inherit(old);
                Ok(Outcome::Announced {
                    states: state_space(&self.model)?,
                })
            }
            CommandKind::Check => Ok(Outcome::Checked(check_core(&mut self.ev, &self.model, &f)?)),
            CommandKind::Learn => {
                let opts = self.ev.options().clone();
                let budget = opts.budget;
                let mut op = FormulaOperator::new(&self.model, &f, opts)?;
                Ok(Outcome::Learned(Box::new(learn_relation(&mut op, &budget)?)))
            }
        }
    }
}
