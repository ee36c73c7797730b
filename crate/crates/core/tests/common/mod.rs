//! Explicit-state reference checker.
//!
//! Worlds of one fixed length are enumerated from the transducer and formulas
//! are evaluated on the surface syntax tree, clause by clause, with no
//! automata involved beyond listing the transitions.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use prmc_core::automata::{enumerate_length, intersect, Layout, Letter, Nfa, Word};
use prmc_core::disappearance::{
    iterate_at_length, of_length, pair_layout, FormulaOperator, RestrictionOperator,
};
use prmc_core::formula::{bind_agents, parse_formula, Formula, Term};
use prmc_core::kripke::{state_space, Kripke};
use prmc_core::script::{parse_script, CommandKind, Session};
use prmc_core::semantics::{compile_for, Options};

/// Closed star-free formulas over the muddy model, one or more per clause
/// of the evaluator.
pub const CORPUS: &[&str] = &[
    "true",
    "false",
    "E i: m_i",
    "A i: m_i",
    "E i: i = 0 & m_i",
    "E i: i % 2 = 0 & m_i",
    "E i: i % 3 = 0 & !m_i",
    "E i: E j: i = j & m_i & !m_j",
    "E i: E j: i = j + 1 & m_i & !m_j",
    "E i: E j: i = j + 2 & m_i & m_j",
    "E i: m_{i+1} & !m_i",
    "E i: i != 1 & m_i",
    "E i: <i> !m_i",
    "A i: K i m_i | K i !m_i",
    "E i: E j: i != j & <i> <j> m_i",
    "E i: K i (E j: j != i & m_j)",
    "[! E i: m_i] E i: K i m_i",
    "[! E i: m_i] [! A i: <i> !m_i] E i: K i m_i",
    "[! E i: m_i & <i> !m_i] A j: !m_j | <j> m_j",
    "[!! E i: m_i] A i: <i> !m_i",
    "[! E i: m_i]^2 E j: m_j",
    "E i: [! m_i] K i m_i",
    "E i: E j: [! m_i | m_j] <i> !m_j",
    "m_0 <-> !!m_0",
    "A i: (i % 2 = 0 -> m_i) -> E j: m_j",
];

pub struct Explicit {
    pub len: usize,
    pub states: Vec<Word>,
    index: HashMap<Word, usize>,
    /// `rel[i][s]`: worlds agent `i` considers possible at `s`.
    rel: Vec<Vec<Vec<usize>>>,
    /// `label[p][s][pos]`
    label: Vec<Vec<Vec<bool>>>,
    props: HashMap<String, usize>,
    agents: std::collections::BTreeMap<String, usize>,
}

impl Explicit {
    pub fn new(m: &Kripke, len: usize) -> Self {
        let sig = m.signature().clone();
        let layout = m.trans_layout().clone();
        let words = enumerate_length(m.trans(), len).expect("small length");
        let mut states: Vec<Word> = vec![];
        let mut index = HashMap::new();
        let mut edges = vec![];
        for w in &words {
            let mut src = vec![];
            let mut tgt = vec![];
            let mut agent = None;
            for (p, &l) in w.iter().enumerate() {
                let d = layout.decode(l);
                src.push(d[0]);
                tgt.push(d[2]);
                if d[1] == 1 {
                    agent = Some(p);
                }
            }
            for s in [&src, &tgt] {
                if !index.contains_key(s) {
                    index.insert(s.clone(), states.len());
                    states.push(s.clone());
                }
            }
            edges.push((index[&src], agent.expect("obs bit"), index[&tgt]));
        }
        let mut rel = vec![vec![vec![]; states.len()]; len];
        for (s, i, t) in edges {
            rel[i][s].push(t);
        }
        let mut props = HashMap::new();
        let mut label = vec![];
        for (k, p) in sig.props.iter().enumerate() {
            props.insert(p.clone(), k);
            label.push(
                states
                    .iter()
                    .map(|s| s.iter().map(|&c| sig.holds(k, c)).collect())
                    .collect(),
            );
        }
        Explicit {
            len,
            states,
            index,
            rel,
            label,
            props,
            agents: sig.agents.clone(),
        }
    }

    pub fn all(&self) -> Vec<bool> {
        vec![true; self.states.len()]
    }

    pub fn index(&self, w: &[Letter]) -> Option<usize> {
        self.index.get(w).copied()
    }

    pub fn related(&self, agent: usize, s: usize, t: usize) -> bool {
        agent < self.len && self.rel[agent][s].contains(&t)
    }

    fn value(&self, t: &Term, val: &HashMap<String, usize>) -> usize {
        match t {
            Term::Var(v) => val[v],
            Term::Const(n) => *n as usize,
            Term::Plus(v, n) => val[v] + *n as usize,
        }
    }

    /// Worlds of `alive` satisfying `f` under `val`.
    pub fn sat(&self, f: &Formula, alive: &[bool], val: &mut HashMap<String, usize>) -> Vec<bool> {
        use Formula::*;
        let n = self.states.len();
        let map = |g: &dyn Fn(usize) -> bool| -> Vec<bool> {
            (0..n).map(|s| alive[s] && g(s)).collect()
        };
        match f {
            True => alive.to_vec(),
            False => vec![false; n],
            Not(a) => {
                let x = self.sat(a, alive, val);
                map(&|s| !x[s])
            }
            And(a, b) => {
                let (x, y) = (self.sat(a, alive, val), self.sat(b, alive, val));
                map(&|s| x[s] && y[s])
            }
            Or(a, b) => {
                let (x, y) = (self.sat(a, alive, val), self.sat(b, alive, val));
                map(&|s| x[s] || y[s])
            }
            Implies(a, b) => {
                let (x, y) = (self.sat(a, alive, val), self.sat(b, alive, val));
                map(&|s| !x[s] || y[s])
            }
            Iff(a, b) => {
                let (x, y) = (self.sat(a, alive, val), self.sat(b, alive, val));
                map(&|s| x[s] == y[s])
            }
            Exists(v, a) | Forall(v, a) => {
                let exists = matches!(f, Exists(..));
                let old = val.get(v).copied();
                let mut acc = vec![!exists; n];
                for i in 0..self.len {
                    val.insert(v.clone(), i);
                    let x = self.sat(a, alive, val);
                    for s in 0..n {
                        acc[s] = if exists { acc[s] || x[s] } else { acc[s] && x[s] };
                    }
                }
                match old {
                    Some(o) => val.insert(v.clone(), o),
                    None => val.remove(v),
                };
                map(&|s| acc[s])
            }
            Eq(a, b) | Neq(a, b) => {
                let eq = self.value(a, val) == self.value(b, val);
                let want = matches!(f, Eq(..));
                map(&|_| eq == want)
            }
            Mod(t, k) => {
                let x = self.value(t, val);
                let positional = matches!(t, Term::Plus(..));
                let ok = x.is_multiple_of(*k as usize) && (!positional || x < self.len);
                map(&|_| ok)
            }
            Prop { name, at, .. } => {
                let p = self.props[name];
                let i = self.value(at, val);
                map(&|s| i < self.len && self.label[p][s][i])
            }
            Diamond(t, a) | Knows(t, a) => {
                let i = self.value(t, val);
                let x = self.sat(a, alive, val);
                let possible = |s: usize, want: bool| {
                    i < self.len && self.rel[i][s].iter().any(|&u| alive[u] && x[u] == want)
                };
                if matches!(f, Diamond(..)) {
                    map(&|s| possible(s, true))
                } else {
                    map(&|s| !possible(s, false))
                }
            }
            Announce(a, b) => {
                let x = self.sat(a, alive, val);
                let y = self.sat(b, &x, val);
                map(&|s| !x[s] || y[s])
            }
            AnnounceConj(a, b) => {
                let x = self.sat(a, alive, val);
                let y = self.sat(b, &x, val);
                map(&|s| x[s] && y[s])
            }
            Iter(a, b, k) => {
                let mut g = (**b).clone();
                for _ in 0..*k {
                    g = Announce(a.clone(), Box::new(g));
                }
                self.sat(&g, alive, val)
            }
            Star(a, b) => {
                let stages = self.stages(a, alive, val);
                let mut acc = vec![false; n];
                for st in &stages {
                    let y = self.sat(b, st, val);
                    for s in 0..n {
                        acc[s] |= !st[s] || y[s];
                    }
                }
                map(&|s| acc[s])
            }
        }
    }

    /// `S_0 = alive, S_{k+1} = ⟦a⟧(M|S_k)` up to the fixpoint (included once).
    pub fn stages(&self, a: &Formula, alive: &[bool], val: &mut HashMap<String, usize>) -> Vec<Vec<bool>> {
        let mut out = vec![alive.to_vec()];
        loop {
            let cur = out.last().unwrap();
            let next = self.sat(a, cur, val);
            if &next == cur {
                return out;
            }
            out.push(next);
        }
    }

    pub fn parse(&self, src: &str) -> Formula {
        bind_agents(&parse_formula(src).expect("formula parses"), &self.agents)
    }

    /// Worlds satisfying a closed formula.
    pub fn check(&self, src: &str) -> Vec<bool> {
        let f = self.parse(src);
        self.sat(&f, &self.all(), &mut HashMap::new())
    }

    pub fn words(&self, mask: &[bool]) -> Vec<Word> {
        let mut w: Vec<Word> = (0..self.states.len())
            .filter(|&s| mask[s])
            .map(|s| self.states[s].clone())
            .collect();
        w.sort();
        w
    }

    /// Drop rounds under iterated announcement of `src`: `None` for worlds
    /// that never disappear.
    pub fn drop_rounds(&self, src: &str, alive: &[bool]) -> Vec<Option<usize>> {
        let f = self.parse(src);
        let stages = self.stages(&f, alive, &mut HashMap::new());
        let last = stages.last().unwrap().clone();
        (0..self.states.len())
            .map(|s| {
                if last[s] {
                    None
                } else {
                    Some(stages.iter().take_while(|st| st[s]).count())
                }
            })
            .collect()
    }
}

/// Symbolic states of length `len`, enumerated and sorted.
pub fn states_at(a: &Nfa, len: usize) -> Vec<Word> {
    let sliced = intersect(a, &of_length(a.layout().clone(), len)).unwrap();
    let mut w = enumerate_length(&sliced, len).unwrap();
    w.sort();
    w
}

pub fn state_words(m: &Kripke, len: usize) -> Vec<Word> {
    states_at(&state_space(m).unwrap(), len)
}

/// `s ≼ t` from drop rounds (`None` = never).
pub fn leq(a: Option<usize>, b: Option<usize>) -> bool {
    match (a, b) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(x), Some(y)) => x <= y,
    }
}

/// The working model after the script's announcements, and the operator of
/// its `learn` command.
pub fn script_operator(model: &str, script: &str) -> (Kripke, FormulaOperator) {
    let m = prmc_core::catalog::load(model).unwrap();
    let text = prmc_core::catalog::script_entry(script).unwrap().text;
    let mut session = Session::new(m, Options::default());
    let mut learn = None;
    for cmd in parse_script(text).unwrap() {
        match cmd.kind {
            CommandKind::Announce => {
                session.run(&cmd).unwrap();
            }
            CommandKind::Learn if learn.is_none() => learn = Some(cmd.formula),
            _ => {}
        }
    }
    let m = session.model().clone();
    let op = formula_operator(&m, &learn.expect("script learns a relation"));
    (m, op)
}

pub fn announced(model: &str, announcements: &[&str]) -> Kripke {
    let mut session = Session::new(prmc_core::catalog::load(model).unwrap(), Options::default());
    for a in announcements {
        session
            .run(&prmc_core::script::Command {
                kind: CommandKind::Announce,
                formula: a.to_string(),
                line: 0,
            })
            .unwrap();
    }
    session.model().clone()
}

pub fn formula_operator(m: &Kripke, phi: &str) -> FormulaOperator {
    let (f, _) = compile_for(m, phi, &[]).unwrap();
    FormulaOperator::new(m, &f, Options::default()).unwrap()
}

/// Drop round of every word of `S_0 ∩ Σ^len`; `None` when it never drops.
pub fn drop_rounds(op: &mut dyn RestrictionOperator, len: usize) -> BTreeMap<Word, Option<usize>> {
    let slices = iterate_at_length(op, len).unwrap();
    let last = slices.last().cloned().unwrap_or_default();
    let mut out = BTreeMap::new();
    for w in &slices[0] {
        let r = if last.contains(w) {
            None
        } else {
            Some(slices.iter().take_while(|s| s.contains(w)).count())
        };
        out.insert(w.clone(), r);
    }
    out
}

/// `≼ ∩ (Σ^len × Σ^len)` from explicit iteration.
pub fn brute_relation(op: &mut dyn RestrictionOperator, len: usize) -> BTreeSet<(Word, Word)> {
    let ranks = drop_rounds(op, len);
    let mut out = BTreeSet::new();
    for (s, &a) in &ranks {
        for (t, &b) in &ranks {
            if leq(a, b) {
                out.insert((s.clone(), t.clone()));
            }
        }
    }
    out
}

pub fn split_pair(state: &Layout, w: &[Letter]) -> (Word, Word) {
    let pair = pair_layout(state).unwrap();
    let k = state.arity();
    let mut s = vec![];
    let mut t = vec![];
    for &l in w {
        let d = pair.decode(l);
        s.push(state.encode(&d[..k]));
        t.push(state.encode(&d[k..]));
    }
    (s, t)
}

pub fn join_pair(state: &Layout, s: &[Letter], t: &[Letter]) -> Word {
    let pair = pair_layout(state).unwrap();
    s.iter()
        .zip(t)
        .map(|(&a, &b)| {
            let mut d = state.decode(a);
            d.extend(state.decode(b));
            pair.encode(&d)
        })
        .collect()
}

/// The pairs of length `len` in a relation automaton.
pub fn relation_at(rel: &Nfa, state: &Layout, len: usize) -> BTreeSet<(Word, Word)> {
    states_at(rel, len)
        .into_iter()
        .map(|w| split_pair(state, &w))
        .collect()
}

/// `F(X)` for an explicit set of words of one length.
pub fn apply_at_length(op: &mut dyn RestrictionOperator, x: &BTreeSet<Word>, len: usize) -> BTreeSet<Word> {
    let layout = op.state_layout();
    let a = Nfa::from_words(layout, x.iter());
    states_at(&op.apply(&a).unwrap(), len).into_iter().collect()
}

/// Finite-length laws of the explicit relation: a total preorder, the class
/// of `s` is what `F` removes from `↑s` unless `↑s` is a fixpoint, and the
/// top class is the limit.
pub fn preorder_violation(op: &mut dyn RestrictionOperator, len: usize) -> Option<String> {
    let rel = brute_relation(op, len);
    let slices = iterate_at_length(op, len).unwrap();
    let s0: Vec<Word> = slices[0].clone();
    let r = |a: &Word, b: &Word| rel.contains(&(a.clone(), b.clone()));
    for a in &s0 {
        if !r(a, a) {
            return Some(format!("{}: not reflexive at {a:?}", op.name()));
        }
        for b in &s0 {
            if !r(a, b) && !r(b, a) {
                return Some(format!("{}: {a:?} and {b:?} incomparable", op.name()));
            }
            for c in &s0 {
                if r(a, b) && r(b, c) && !r(a, c) {
                    return Some(format!("{}: not transitive at {a:?} {b:?} {c:?}", op.name()));
                }
            }
        }
    }
    for s in &s0 {
        let up: BTreeSet<Word> = s0.iter().filter(|u| r(s, u)).cloned().collect();
        let class: BTreeSet<Word> = up.iter().filter(|u| r(u, s)).cloned().collect();
        let f_up: BTreeSet<Word> = apply_at_length(op, &up, len)
            .intersection(&up)
            .cloned()
            .collect();
        let removed: BTreeSet<Word> = up.difference(&f_up).cloned().collect();
        if !(class == removed || (class == up && f_up == up)) {
            return Some(format!("{}: class of {s:?} is not peeled at length {len}", op.name()));
        }
    }
    let last: BTreeSet<Word> = slices.last().unwrap().iter().cloned().collect();
    if !last.is_empty() {
        let top: BTreeSet<Word> = s0
            .iter()
            .filter(|s| s0.iter().all(|u| r(u, s)))
            .cloned()
            .collect();
        if top != last {
            return Some(format!("{}: top class differs from the limit at length {len}", op.name()));
        }
    }
    None
}
