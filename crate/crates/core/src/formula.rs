//! Formula syntax: parsing, desugaring to the core connectives, and static
//! analysis (renaming, variable order, star preconditions).
//!
//! ```text
//! φ ::= true | false | φ & φ | φ | φ | !φ | φ -> φ | φ <-> φ
//!     | E v: φ | A v: φ | t = t | t != t | v % n = 0 | p_t
//!     | <t> φ | K t φ | [! φ] φ | [!! φ] φ | [! φ]^n φ | [! φ]* φ
//! t ::= v | n | v + n        (write p_{v+n} for compound subscripts)
//! ```
//!
//! Unary operators bind tighter than `&`, then `|`, `->` (right associative)
//! and `<->`. A quantifier body extends as far to the right as possible.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(u32),
    Plus(String, u32),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(n) => write!(f, "{n}"),
            Term::Plus(v, n) => write!(f, "{v}+{n}"),
        }
    }
}

/// Surface syntax tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
    Eq(Term, Term),
    Neq(Term, Term),
    Mod(Term, u32),
    Prop { name: String, at: Term, pos: usize },
    Diamond(Term, Box<Formula>),
    Knows(Term, Box<Formula>),
    Announce(Box<Formula>, Box<Formula>),
    /// `[!! φ] ψ`, read as `φ & [! φ] ψ`.
    AnnounceConj(Box<Formula>, Box<Formula>),
    Iter(Box<Formula>, Box<Formula>, u32),
    Star(Box<Formula>, Box<Formula>),
}

/// Core syntax tree produced by [`desugar`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Core {
    Top,
    Not(Box<Core>),
    And(Box<Core>, Box<Core>),
    Exists(String, Box<Core>),
    AtZero(String),
    ModZero(String, u32),
    /// `a = b + k`
    Offset(String, String, u32),
    Prop(String, String),
    Diamond(String, Box<Core>),
    Announce(Box<Core>, Box<Core>),
    Star(Box<Core>, Box<Core>),
}

// ---------------------------------------------------------------- lexer

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u32),
    True,
    False,
    Ex,
    All,
    Knows,
    And,
    Or,
    Not,
    Imp,
    Iff,
    LParen,
    RParen,
    LBrace,
    RBrace,
    AnnOpen,
    AnnConjOpen,
    RBrack,
    Caret,
    Star,
    Lt,
    Gt,
    Eq,
    Neq,
    Percent,
    Colon,
    Comma,
    Plus,
    Underscore,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(n) => format!("`{n}`"),
        Tok::End => "end of input".into(),
        other => format!("{other:?}"),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |pos: usize, msg: String| Error::Formula { pos, msg };
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let rest = &src[i..];
        let (tok, len) = if rest.starts_with("<->") {
            (Tok::Iff, 3)
        } else if rest.starts_with("->") {
            (Tok::Imp, 2)
        } else if rest.starts_with("!=") {
            (Tok::Neq, 2)
        } else if rest.starts_with("[!!") {
            (Tok::AnnConjOpen, 3)
        } else if rest.starts_with("[!") {
            (Tok::AnnOpen, 2)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            let n: u32 = src[i..j]
                .parse()
                .map_err(|_| err(i, format!("number `{}` too large", &src[i..j])))?;
            (Tok::Num(n), j - i)
        } else if c.is_ascii_alphabetic() {
            let mut j = i;
            while j < b.len() && (b[j].is_ascii_alphanumeric() || b[j] == b'\'') {
                j += 1;
            }
            let word = &src[i..j];
            let t = match word {
                "true" => Tok::True,
                "false" => Tok::False,
                "E" => Tok::Ex,
                "A" => Tok::All,
                "K" => Tok::Knows,
                _ => Tok::Ident(word.to_string()),
            };
            (t, j - i)
        } else {
            let t = match c {
                b'&' => Tok::And,
                b'|' => Tok::Or,
                b'!' => Tok::Not,
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b'{' => Tok::LBrace,
                b'}' => Tok::RBrace,
                b']' => Tok::RBrack,
                b'^' => Tok::Caret,
                b'*' => Tok::Star,
                b'<' => Tok::Lt,
                b'>' => Tok::Gt,
                b'=' => Tok::Eq,
                b'%' => Tok::Percent,
                b':' => Tok::Colon,
                b',' => Tok::Comma,
                b'+' => Tok::Plus,
                b'_' => Tok::Underscore,
                _ => {
                    let ch = rest.chars().next().unwrap();
                    return Err(err(i, format!("unexpected character `{ch}`")));
                }
            };
            (t, 1)
        };
        out.push((tok, start));
        i += len;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

// ---------------------------------------------------------------- parser

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn idx(&self, k: usize) -> usize {
        (self.at + k).min(self.toks.len() - 1)
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.idx(0)].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[self.idx(1)].0
    }

    fn pos(&self) -> usize {
        self.toks[self.idx(0)].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.idx(0)].0.clone();
        self.at += 1;
        t
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Formula {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected {}, found {}", describe(&t), describe(self.peek())))
        }
    }

    fn iff(&mut self) -> Result<Formula> {
        let mut l = self.imp()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let r = self.imp()?;
            l = Formula::Iff(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn imp(&mut self) -> Result<Formula> {
        let l = self.or()?;
        if *self.peek() == Tok::Imp {
            self.bump();
            let r = self.imp()?;
            return Ok(Formula::Implies(Box::new(l), Box::new(r)));
        }
        Ok(l)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut l = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let r = self.and()?;
            l = Formula::Or(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut l = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let r = self.unary()?;
            l = Formula::And(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn ident(&mut self) -> Result<String> {
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            other => {
                self.at -= 1;
                self.fail(format!("expected a variable, found {}", describe(&other)))
            }
        }
    }

    fn term(&mut self) -> Result<Term> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Term::Const(n))
            }
            Tok::Ident(v) => {
                self.bump();
                if *self.peek() == Tok::Plus {
                    self.bump();
                    match self.bump() {
                        Tok::Num(n) => Ok(if n == 0 { Term::Var(v) } else { Term::Plus(v, n) }),
                        _ => {
                            self.at -= 1;
                            self.fail("expected a number after `+`")
                        }
                    }
                } else {
                    Ok(Term::Var(v))
                }
            }
            Tok::LBrace => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RBrace)?;
                Ok(t)
            }
            other => self.fail(format!("expected a term, found {}", describe(&other))),
        }
    }

    fn subscript(&mut self) -> Result<Term> {
        // `p_i+1` is rejected: compound subscripts need braces
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Term::Const(n))
            }
            Tok::Ident(v) => {
                self.bump();
                Ok(Term::Var(v))
            }
            Tok::LBrace => self.term(),
            other => self.fail(format!("expected a subscript, found {}", describe(&other))),
        }
    }

    fn binders(&mut self) -> Result<Vec<String>> {
        let mut vs = vec![self.ident()?];
        loop {
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                    vs.push(self.ident()?);
                }
                Tok::Ident(_) => vs.push(self.ident()?),
                _ => break,
            }
        }
        self.expect(Tok::Colon)?;
        Ok(vs)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Formula::Not(Box::new(self.unary()?)))
            }
            Tok::Ex | Tok::All => {
                let ex = self.bump() == Tok::Ex;
                let vs = self.binders()?;
                let mut body = self.iff()?;
                for v in vs.into_iter().rev() {
                    body = if ex {
                        Formula::Exists(v, Box::new(body))
                    } else {
                        Formula::Forall(v, Box::new(body))
                    };
                }
                Ok(body)
            }
            Tok::Knows => {
                self.bump();
                let t = self.term()?;
                Ok(Formula::Knows(t, Box::new(self.unary()?)))
            }
            Tok::Lt => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::Gt)?;
                Ok(Formula::Diamond(t, Box::new(self.unary()?)))
            }
            Tok::AnnOpen | Tok::AnnConjOpen => {
                let conj = self.bump() == Tok::AnnConjOpen;
                let phi = self.iff()?;
                self.expect(Tok::RBrack)?;
                let iter = match self.peek() {
                    Tok::Star => {
                        self.bump();
                        Some(None)
                    }
                    Tok::Caret => {
                        self.bump();
                        match self.bump() {
                            Tok::Num(n) => Some(Some(n)),
                            _ => {
                                self.at -= 1;
                                return self.fail("expected an iteration count after `^`");
                            }
                        }
                    }
                    _ => None,
                };
                let psi = Box::new(self.unary()?);
                // `[!!φ]*` and `[!!φ]^n` announce the negation
                let phi = match (conj, &iter) {
                    (true, Some(_)) => Box::new(Formula::Not(Box::new(phi))),
                    _ => Box::new(phi),
                };
                Ok(match (conj, iter) {
                    (_, Some(None)) => Formula::Star(phi, psi),
                    (_, Some(Some(n))) => Formula::Iter(phi, psi, n),
                    (true, None) => Formula::AnnounceConj(phi, psi),
                    (false, None) => Formula::Announce(phi, psi),
                })
            }
            Tok::LParen => {
                self.bump();
                let f = self.iff()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(name) if *self.peek2() == Tok::Underscore => {
                let pos = self.pos();
                self.bump();
                self.bump();
                let at = self.subscript()?;
                Ok(Formula::Prop { name, at, pos })
            }
            Tok::Ident(v) if *self.peek2() == Tok::Percent => {
                self.bump();
                self.bump();
                let k = match self.bump() {
                    Tok::Num(k) if k > 0 => k,
                    _ => {
                        self.at -= 1;
                        return self.fail("expected a positive modulus");
                    }
                };
                self.expect(Tok::Eq)?;
                match self.bump() {
                    Tok::Num(0) => Ok(Formula::Mod(Term::Var(v), k)),
                    _ => {
                        self.at -= 1;
                        self.fail("only `% k = 0` is supported")
                    }
                }
            }
            Tok::Ident(_) | Tok::Num(_) | Tok::LBrace => {
                let l = self.term()?;
                match self.bump() {
                    Tok::Eq => Ok(Formula::Eq(l, self.term()?)),
                    Tok::Neq => Ok(Formula::Neq(l, self.term()?)),
                    other => {
                        self.at -= 1;
                        self.fail(format!("expected `=` or `!=`, found {}", describe(&other)))
                    }
                }
            }
            other => self.fail(format!("expected a formula, found {}", describe(&other))),
        }
    }
}

pub fn parse_formula(src: &str) -> Result<Formula> {
    let mut p = Parser {
        toks: lex(src)?,
        at: 0,
    };
    let f = p.iff()?;
    if *p.peek() != Tok::End {
        return p.fail(format!("unexpected {}", describe(p.peek())));
    }
    Ok(f)
}

// ---------------------------------------------------------------- printing

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Iff(..) => 1,
        Formula::Implies(..) => 2,
        Formula::Or(..) => 3,
        Formula::And(..) => 4,
        Formula::Exists(..) | Formula::Forall(..) => 0,
        _ => 5,
    }
}

fn subscript(t: &Term) -> String {
    match t {
        Term::Plus(..) => format!("{{{t}}}"),
        _ => t.to_string(),
    }
}

struct Wrap<'a>(&'a Formula, u8);

impl fmt::Display for Wrap<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if prec(self.0) < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Formula::*;
        match self {
            True => write!(f, "true"),
            False => write!(f, "false"),
            Not(a) => write!(f, "!{}", Wrap(a, 5)),
            And(a, b) => write!(f, "{} & {}", Wrap(a, 4), Wrap(b, 5)),
            Or(a, b) => write!(f, "{} | {}", Wrap(a, 3), Wrap(b, 4)),
            Implies(a, b) => write!(f, "{} -> {}", Wrap(a, 3), Wrap(b, 2)),
            Iff(a, b) => write!(f, "{} <-> {}", Wrap(a, 1), Wrap(b, 2)),
            Exists(v, a) => write!(f, "E {v}: {a}"),
            Forall(v, a) => write!(f, "A {v}: {a}"),
            Eq(a, b) => write!(f, "{a} = {b}"),
            Neq(a, b) => write!(f, "{a} != {b}"),
            Mod(t, k) => write!(f, "{t}%{k}=0"),
            Prop { name, at, .. } => write!(f, "{name}_{}", subscript(at)),
            Diamond(t, a) => write!(f, "<{t}> {}", Wrap(a, 5)),
            Knows(t, a) => write!(f, "K {t} {}", Wrap(a, 5)),
            Announce(a, b) => write!(f, "[! {a}] {}", Wrap(b, 5)),
            AnnounceConj(a, b) => write!(f, "[!!{a}] {}", Wrap(b, 5)),
            Iter(a, b, n) => write!(f, "[! {a}]^{n} {}", Wrap(b, 5)),
            Star(a, b) => write!(f, "[! {a}]* {}", Wrap(b, 5)),
        }
    }
}

fn core_prec(c: &Core) -> u8 {
    match c {
        Core::And(..) => 4,
        Core::Exists(..) => 0,
        _ => 5,
    }
}

struct CWrap<'a>(&'a Core, u8);

impl fmt::Display for CWrap<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if core_prec(self.0) < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Core {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Core::*;
        match self {
            Top => write!(f, "true"),
            Not(a) => write!(f, "!{}", CWrap(a, 5)),
            And(a, b) => write!(f, "{} & {}", CWrap(a, 4), CWrap(b, 5)),
            Exists(v, a) => write!(f, "E {v}: {a}"),
            AtZero(v) => write!(f, "{v} = 0"),
            ModZero(v, k) => write!(f, "{v}%{k}=0"),
            Offset(a, b, 0) => write!(f, "{a} = {b}"),
            Offset(a, b, k) => write!(f, "{a} = {b}+{k}"),
            Prop(p, v) => write!(f, "{p}_{v}"),
            Diamond(v, a) => write!(f, "<{v}> {}", CWrap(a, 5)),
            Announce(a, b) => write!(f, "[! {a}] {}", CWrap(b, 5)),
            Star(a, b) => write!(f, "[! {a}]* {}", CWrap(b, 5)),
        }
    }
}

// ---------------------------------------------------------------- queries

impl Formula {
    fn idents(&self, out: &mut HashSet<String>) {
        use Formula::*;
        let term = |t: &Term, out: &mut HashSet<String>| match t {
            Term::Var(v) | Term::Plus(v, _) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
        };
        match self {
            True | False => {}
            Not(a) => a.idents(out),
            And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b) | Announce(a, b)
            | AnnounceConj(a, b) | Iter(a, b, _) | Star(a, b) => {
                a.idents(out);
                b.idents(out);
            }
            Exists(v, a) | Forall(v, a) => {
                out.insert(v.clone());
                a.idents(out);
            }
            Eq(s, t) | Neq(s, t) => {
                term(s, out);
                term(t, out);
            }
            Mod(t, _) | Prop { at: t, .. } => term(t, out),
            Diamond(t, a) | Knows(t, a) => {
                term(t, out);
                a.idents(out);
            }
        }
    }

    /// Proposition occurrences `(name, byte offset)`.
    pub fn props(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        self.walk(&mut |f| {
            if let Formula::Prop { name, pos, .. } = f {
                out.push((name.clone(), *pos));
            }
        });
        out
    }

    fn walk(&self, visit: &mut impl FnMut(&Formula)) {
        use Formula::*;
        visit(self);
        match self {
            Not(a) | Exists(_, a) | Forall(_, a) | Diamond(_, a) | Knows(_, a) => a.walk(visit),
            And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b) | Announce(a, b)
            | AnnounceConj(a, b) | Iter(a, b, _) | Star(a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
            _ => {}
        }
    }
}

/// Replaces free occurrences of agent aliases by their indices.
pub fn bind_agents(f: &Formula, agents: &BTreeMap<String, usize>) -> Formula {
    fn term(t: &Term, bound: &[String], agents: &BTreeMap<String, usize>) -> Term {
        match t {
            Term::Var(v) if !bound.contains(v) => match agents.get(v) {
                Some(&i) => Term::Const(i as u32),
                None => t.clone(),
            },
            Term::Plus(v, n) if !bound.contains(v) => match agents.get(v) {
                Some(&i) => Term::Const(i as u32 + n),
                None => t.clone(),
            },
            _ => t.clone(),
        }
    }
    fn go(f: &Formula, bound: &mut Vec<String>, ag: &BTreeMap<String, usize>) -> Formula {
        use Formula::*;
        let b2 = |a: &Formula, b: &Formula, bound: &mut Vec<String>| {
            (Box::new(go(a, bound, ag)), Box::new(go(b, bound, ag)))
        };
        match f {
            True | False => f.clone(),
            Not(a) => Not(Box::new(go(a, bound, ag))),
            And(a, b) => {
                let (a, b) = b2(a, b, bound);
                And(a, b)
            }
            Or(a, b) => {
                let (a, b) = b2(a, b, bound);
                Or(a, b)
            }
            Implies(a, b) => {
                let (a, b) = b2(a, b, bound);
                Implies(a, b)
            }
            Iff(a, b) => {
                let (a, b) = b2(a, b, bound);
                Iff(a, b)
            }
            Announce(a, b) => {
                let (a, b) = b2(a, b, bound);
                Announce(a, b)
            }
            AnnounceConj(a, b) => {
                let (a, b) = b2(a, b, bound);
                AnnounceConj(a, b)
            }
            Iter(a, b, n) => {
                let (a, b) = b2(a, b, bound);
                Iter(a, b, *n)
            }
            Star(a, b) => {
                let (a, b) = b2(a, b, bound);
                Star(a, b)
            }
            Exists(v, a) | Forall(v, a) => {
                bound.push(v.clone());
                let a = Box::new(go(a, bound, ag));
                bound.pop();
                if matches!(f, Exists(..)) {
                    Exists(v.clone(), a)
                } else {
                    Forall(v.clone(), a)
                }
            }
            Eq(s, t) => Eq(term(s, bound, ag), term(t, bound, ag)),
            Neq(s, t) => Neq(term(s, bound, ag), term(t, bound, ag)),
            Mod(t, k) => Mod(term(t, bound, ag), *k),
            Prop { name, at, pos } => Prop {
                name: name.clone(),
                at: term(at, bound, ag),
                pos: *pos,
            },
            Diamond(t, a) => Diamond(term(t, bound, ag), Box::new(go(a, bound, ag))),
            Knows(t, a) => Knows(term(t, bound, ag), Box::new(go(a, bound, ag))),
        }
    }
    go(f, &mut Vec::new(), agents)
}

// ---------------------------------------------------------------- desugaring

fn not(c: Core) -> Core {
    match c {
        Core::Not(a) => *a,
        c => Core::Not(Box::new(c)),
    }
}

fn and(a: Core, b: Core) -> Core {
    Core::And(Box::new(a), Box::new(b))
}

fn or(a: Core, b: Core) -> Core {
    not(and(not(a), not(b)))
}

fn implies(a: Core, b: Core) -> Core {
    not(and(a, not(b)))
}

fn exists(v: String, body: Core) -> Core {
    Core::Exists(v, Box::new(body))
}

struct Fresh {
    used: HashSet<String>,
    next: usize,
}

impl Fresh {
    fn var(&mut self) -> String {
        loop {
            let v = format!("j{}", self.next);
            self.next += 1;
            if self.used.insert(v.clone()) {
                return v;
            }
        }
    }

    /// A variable denoting `t`, with the binders and constraints that define it.
    fn lower(&mut self, t: &Term) -> (String, Vec<(String, Core)>) {
        match t {
            Term::Var(v) => (v.clone(), vec![]),
            Term::Const(n) => {
                let z = self.var();
                let mut defs = vec![(z.clone(), Core::AtZero(z.clone()))];
                if *n == 0 {
                    return (z, defs);
                }
                let v = self.var();
                defs.push((v.clone(), Core::Offset(v.clone(), z, *n)));
                (v, defs)
            }
            Term::Plus(b, n) => {
                let v = self.var();
                (v.clone(), vec![(v.clone(), Core::Offset(v, b.clone(), *n))])
            }
        }
    }

    fn with_term(&mut self, t: &Term, body: impl FnOnce(String) -> Core) -> Core {
        let (v, defs) = self.lower(t);
        let mut inner = body(v);
        let mut constraints = defs.iter().map(|(_, c)| c.clone()).rev();
        // E j0: E j1: (c0 & c1 & body)
        for c in constraints.by_ref() {
            inner = and(c, inner);
        }
        for (v, _) in defs.into_iter().rev() {
            inner = exists(v, inner);
        }
        inner
    }

    fn equal(&mut self, s: &Term, t: &Term) -> Core {
        use Term::*;
        let top = Core::Top;
        let bot = not(Core::Top);
        match (s, t) {
            (Const(a), Const(b)) => {
                if a == b {
                    top
                } else {
                    bot
                }
            }
            (Var(v), Const(0)) | (Const(0), Var(v)) => Core::AtZero(v.clone()),
            (Var(v), Const(n)) | (Const(n), Var(v)) => {
                let z = self.var();
                exists(z.clone(), and(Core::AtZero(z.clone()), Core::Offset(v.clone(), z, *n)))
            }
            (Plus(v, k), Const(n)) | (Const(n), Plus(v, k)) => {
                if n < k {
                    bot
                } else {
                    self.equal(&Var(v.clone()), &Const(n - k))
                }
            }
            _ => {
                let (a, ka) = match s {
                    Var(v) => (v.clone(), 0),
                    Plus(v, k) => (v.clone(), *k),
                    Const(_) => unreachable!(),
                };
                let (b, kb) = match t {
                    Var(v) => (v.clone(), 0),
                    Plus(v, k) => (v.clone(), *k),
                    Const(_) => unreachable!(),
                };
                if a == b {
                    return if ka == kb { top } else { bot };
                }
                // a + ka = b + kb
                if ka == kb {
                    Core::Offset(a.clone().max(b.clone()), a.min(b), 0)
                } else if ka > kb {
                    Core::Offset(b, a, ka - kb)
                } else {
                    Core::Offset(a, b, kb - ka)
                }
            }
        }
    }

    fn run(&mut self, f: &Formula) -> Core {
        use Formula::*;
        match f {
            True => Core::Top,
            False => not(Core::Top),
            Not(a) => not(self.run(a)),
            And(a, b) => and(self.run(a), self.run(b)),
            Or(a, b) => or(self.run(a), self.run(b)),
            Implies(a, b) => implies(self.run(a), self.run(b)),
            Iff(a, b) => {
                let (a, b) = (self.run(a), self.run(b));
                and(implies(a.clone(), b.clone()), implies(b, a))
            }
            Exists(v, a) => exists(v.clone(), self.run(a)),
            Forall(v, a) => not(exists(v.clone(), not(self.run(a)))),
            Eq(s, t) => self.equal(s, t),
            Neq(s, t) => not(self.equal(s, t)),
            Mod(t, k) => match t {
                Term::Const(n) => {
                    if n % k == 0 {
                        Core::Top
                    } else {
                        not(Core::Top)
                    }
                }
                Term::Var(v) => Core::ModZero(v.clone(), *k),
                Term::Plus(..) => {
                    let k = *k;
                    self.with_term(t, |v| Core::ModZero(v, k))
                }
            },
            Prop { name, at, .. } => {
                let name = name.clone();
                self.with_term(at, |v| Core::Prop(name, v))
            }
            Diamond(t, a) => {
                let body = self.run(a);
                self.with_term(t, |v| Core::Diamond(v, Box::new(body)))
            }
            Knows(t, a) => {
                let body = not(self.run(a));
                not(self.with_term(t, |v| Core::Diamond(v, Box::new(body))))
            }
            Announce(a, b) => Core::Announce(Box::new(self.run(a)), Box::new(self.run(b))),
            AnnounceConj(a, b) => {
                let a = self.run(a);
                and(a.clone(), Core::Announce(Box::new(a), Box::new(self.run(b))))
            }
            Iter(a, b, n) => {
                let a = self.run(a);
                let mut body = self.run(b);
                for _ in 0..*n {
                    body = Core::Announce(Box::new(a.clone()), Box::new(body));
                }
                body
            }
            Star(a, b) => Core::Star(Box::new(self.run(a)), Box::new(self.run(b))),
        }
    }
}

/// Lowers the surface tree to the core connectives.
pub fn desugar(f: &Formula) -> Core {
    let mut used = HashSet::new();
    f.idents(&mut used);
    Fresh { used, next: 0 }.run(f)
}

// ---------------------------------------------------------------- analysis

impl Core {
    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        fn go(c: &Core, bound: &mut Vec<String>, out: &mut Vec<String>) {
            let mut var = |v: &String, bound: &Vec<String>| {
                if !bound.contains(v) && !out.contains(v) {
                    out.push(v.clone());
                }
            };
            match c {
                Core::Top => {}
                Core::Not(a) => go(a, bound, out),
                Core::And(a, b) | Core::Announce(a, b) | Core::Star(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                Core::Exists(v, a) => {
                    bound.push(v.clone());
                    go(a, bound, out);
                    bound.pop();
                }
                Core::AtZero(v) | Core::ModZero(v, _) | Core::Prop(_, v) => var(v, bound),
                Core::Offset(a, b, _) => {
                    var(a, bound);
                    var(b, bound);
                }
                Core::Diamond(v, a) => {
                    var(v, bound);
                    go(a, bound, out);
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn has_star(&self) -> bool {
        match self {
            Core::Star(..) => true,
            Core::Not(a) | Core::Exists(_, a) | Core::Diamond(_, a) => a.has_star(),
            Core::And(a, b) | Core::Announce(a, b) => a.has_star() || b.has_star(),
            _ => false,
        }
    }

    /// Node count.
    pub fn size(&self) -> usize {
        match self {
            Core::Not(a) | Core::Exists(_, a) | Core::Diamond(_, a) => 1 + a.size(),
            Core::And(a, b) | Core::Announce(a, b) | Core::Star(a, b) => 1 + a.size() + b.size(),
            _ => 1,
        }
    }

    /// Rendering with bound variables replaced by de Bruijn indices; equal
    /// keys mean alpha-equivalent formulas with the same free variables.
    pub fn canonical_key(&self) -> String {
        fn v(name: &str, bound: &[String]) -> String {
            match bound.iter().rposition(|b| b == name) {
                Some(i) => format!("#{}", bound.len() - 1 - i),
                None => format!("${name}"),
            }
        }
        fn go(c: &Core, bound: &mut Vec<String>, out: &mut String) {
            match c {
                Core::Top => out.push('T'),
                Core::Not(a) => {
                    out.push('!');
                    go(a, bound, out);
                }
                Core::And(a, b) => {
                    out.push_str("&(");
                    go(a, bound, out);
                    out.push(',');
                    go(b, bound, out);
                    out.push(')');
                }
                Core::Announce(a, b) => {
                    out.push_str("[(");
                    go(a, bound, out);
                    out.push(',');
                    go(b, bound, out);
                    out.push(')');
                }
                Core::Star(a, b) => {
                    out.push_str("*(");
                    go(a, bound, out);
                    out.push(',');
                    go(b, bound, out);
                    out.push(')');
                }
                Core::Exists(x, a) => {
                    out.push('E');
                    bound.push(x.clone());
                    go(a, bound, out);
                    bound.pop();
                }
                Core::AtZero(x) => out.push_str(&format!("z({})", v(x, bound))),
                Core::ModZero(x, k) => out.push_str(&format!("m({},{k})", v(x, bound))),
                Core::Offset(a, b, k) => {
                    out.push_str(&format!("o({},{},{k})", v(a, bound), v(b, bound)))
                }
                Core::Prop(p, x) => out.push_str(&format!("p({p},{})", v(x, bound))),
                Core::Diamond(x, a) => {
                    out.push_str(&format!("d({})", v(x, bound)));
                    go(a, bound, out);
                }
            }
        }
        let mut out = String::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// The same formula in surface syntax.
    pub fn to_formula(&self) -> Formula {
        use Formula as F;
        let b = |c: &Core| Box::new(c.to_formula());
        match self {
            Core::Top => F::True,
            Core::Not(a) => F::Not(b(a)),
            Core::And(x, y) => F::And(b(x), b(y)),
            Core::Exists(v, a) => F::Exists(v.clone(), b(a)),
            Core::AtZero(v) => F::Eq(Term::Var(v.clone()), Term::Const(0)),
            Core::ModZero(v, k) => F::Mod(Term::Var(v.clone()), *k),
            Core::Offset(x, y, k) => F::Eq(
                Term::Var(x.clone()),
                if *k == 0 {
                    Term::Var(y.clone())
                } else {
                    Term::Plus(y.clone(), *k)
                },
            ),
            Core::Prop(p, v) => F::Prop {
                name: p.clone(),
                at: Term::Var(v.clone()),
                pos: 0,
            },
            Core::Diamond(v, a) => F::Diamond(Term::Var(v.clone()), b(a)),
            Core::Announce(x, y) => F::Announce(b(x), b(y)),
            Core::Star(x, y) => F::Star(b(x), b(y)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Analysis {
    /// All variables of the renamed formula, in track order.
    pub vars: Vec<String>,
    pub free: Vec<String>,
    pub closed: bool,
    pub star_free: bool,
}

fn rename(c: &Core, scope: &mut Vec<(String, String)>, used: &mut HashSet<String>) -> Core {
    let look = |v: &String, scope: &Vec<(String, String)>| {
        scope
            .iter()
            .rev()
            .find(|(o, _)| o == v)
            .map_or_else(|| v.clone(), |(_, n)| n.clone())
    };
    match c {
        Core::Top => Core::Top,
        Core::Not(a) => Core::Not(Box::new(rename(a, scope, used))),
        Core::And(a, b) => Core::And(Box::new(rename(a, scope, used)), Box::new(rename(b, scope, used))),
        Core::Announce(a, b) => {
            Core::Announce(Box::new(rename(a, scope, used)), Box::new(rename(b, scope, used)))
        }
        Core::Star(a, b) => Core::Star(Box::new(rename(a, scope, used)), Box::new(rename(b, scope, used))),
        Core::Exists(v, a) => {
            let mut name = v.clone();
            let mut k = 1;
            while used.contains(&name) {
                name = format!("{v}{k}");
                k += 1;
            }
            used.insert(name.clone());
            scope.push((v.clone(), name.clone()));
            let body = rename(a, scope, used);
            scope.pop();
            Core::Exists(name, Box::new(body))
        }
        Core::AtZero(v) => Core::AtZero(look(v, scope)),
        Core::ModZero(v, k) => Core::ModZero(look(v, scope), *k),
        Core::Offset(a, b, k) => Core::Offset(look(a, scope), look(b, scope), *k),
        Core::Prop(p, v) => Core::Prop(p.clone(), look(v, scope)),
        Core::Diamond(v, a) => Core::Diamond(look(v, scope), Box::new(rename(a, scope, used))),
    }
}

fn var_order(c: &Core, out: &mut Vec<String>) {
    let add = |v: &String, out: &mut Vec<String>| {
        if !out.contains(v) {
            out.push(v.clone());
        }
    };
    match c {
        Core::Top => {}
        Core::Not(a) => var_order(a, out),
        Core::And(a, b) | Core::Announce(a, b) | Core::Star(a, b) => {
            var_order(a, out);
            var_order(b, out);
        }
        Core::Exists(v, a) => {
            add(v, out);
            var_order(a, out);
        }
        Core::AtZero(v) | Core::ModZero(v, _) | Core::Prop(_, v) => add(v, out),
        Core::Offset(a, b, _) => {
            add(a, out);
            add(b, out);
        }
        Core::Diamond(v, a) => {
            add(v, out);
            var_order(a, out);
        }
    }
}

/// Checks the preconditions of every iterated announcement: the announced
/// formula is closed and star-free, the whole node is closed, and no
/// enclosing announcement depends on a variable.
fn check_stars(c: &Core, open_context: bool) -> Result<()> {
    match c {
        Core::Star(a, b) => {
            if !a.is_closed() {
                return Err(Error::UnsupportedStar(format!(
                    "announced formula `{a}` has free variables"
                )));
            }
            if a.has_star() {
                return Err(Error::UnsupportedStar(format!(
                    "announced formula `{a}` contains an iterated announcement"
                )));
            }
            if !b.is_closed() {
                return Err(Error::UnsupportedStar(format!(
                    "formula `{b}` under the iteration has free variables"
                )));
            }
            if open_context {
                return Err(Error::UnsupportedStar(
                    "iterated announcement below an announcement with free variables".into(),
                ));
            }
            check_stars(b, false)
        }
        Core::Announce(a, b) => {
            check_stars(a, open_context)?;
            check_stars(b, open_context || !a.is_closed())
        }
        Core::Not(a) | Core::Exists(_, a) | Core::Diamond(_, a) => check_stars(a, open_context),
        Core::And(a, b) => {
            check_stars(a, open_context)?;
            check_stars(b, open_context)
        }
        _ => Ok(()),
    }
}

/// Renames bound variables apart, fixes the variable order and checks the
/// iterated announcements. `order` lists variables to put first.
pub fn analyze_with(c: &Core, order: &[String]) -> Result<(Core, Analysis)> {
    let free = c.free_vars();
    let mut used: HashSet<String> = free.iter().cloned().collect();
    let renamed = rename(c, &mut Vec::new(), &mut used);
    check_stars(&renamed, false)?;
    let mut natural = Vec::new();
    var_order(&renamed, &mut natural);
    let mut vars: Vec<String> = order.iter().filter(|v| natural.contains(v)).cloned().collect();
    for v in natural {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let analysis = Analysis {
        vars,
        closed: free.is_empty(),
        free,
        star_free: !renamed.has_star(),
    };
    Ok((renamed, analysis))
}

pub fn analyze(c: &Core) -> Result<(Core, Analysis)> {
    analyze_with(c, &[])
}

/// Parses, binds agent aliases, desugars and analyzes.
pub fn compile(
    src: &str,
    agents: &BTreeMap<String, usize>,
    order: &[String],
) -> Result<(Core, Analysis)> {
    let f = bind_agents(&parse_formula(src)?, agents);
    analyze_with(&desugar(&f), order)
}
