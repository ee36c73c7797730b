use std::sync::Arc;

use rustc_hash::FxHashMap;

use super::layout::{same_layout, Layout, Letter};
use super::limits;
use crate::error::{Error, Result};

pub type State = u32;

/// Nondeterministic automaton over a [`Layout`]. Transitions of each state are
/// kept sorted by letter and deduplicated.
#[derive(Clone, Debug)]
pub struct Nfa {
    layout: Arc<Layout>,
    initial: Vec<State>,
    accepting: Vec<bool>,
    delta: Vec<Vec<(Letter, State)>>,
}

impl Nfa {
    pub fn new(layout: Arc<Layout>) -> Self {
        Nfa {
            layout,
            initial: Vec::new(),
            accepting: Vec::new(),
            delta: Vec::new(),
        }
    }

    pub fn empty(layout: Arc<Layout>) -> Self {
        Nfa::new(layout)
    }

    /// Accepts only the empty word.
    pub fn epsilon(layout: Arc<Layout>) -> Self {
        let mut n = Nfa::new(layout);
        let q = n.add_state(true);
        n.add_initial(q);
        n
    }

    /// Words whose every letter lies in `letters`.
    pub fn letters_star(layout: Arc<Layout>, letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut n = Nfa::new(layout);
        let q = n.add_state(true);
        n.add_initial(q);
        for l in letters {
            n.add_transition(q, l, q);
        }
        n.normalize();
        n
    }

    /// All words over the full letter set.
    pub fn universal(layout: Arc<Layout>) -> Self {
        let size = layout.size();
        Nfa::letters_star(layout, 0..size)
    }

    /// Single-letter words drawn from `letters`.
    pub fn letter_set(layout: Arc<Layout>, letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut n = Nfa::new(layout);
        let p = n.add_state(false);
        let q = n.add_state(true);
        n.add_initial(p);
        for l in letters {
            n.add_transition(p, l, q);
        }
        n.normalize();
        n
    }

    /// The single word `w`.
    pub fn word(layout: Arc<Layout>, w: &[Letter]) -> Self {
        let mut n = Nfa::new(layout);
        let mut q = n.add_state(w.is_empty());
        n.add_initial(q);
        for (i, &l) in w.iter().enumerate() {
            let r = n.add_state(i + 1 == w.len());
            n.add_transition(q, l, r);
            q = r;
        }
        n
    }

    /// Prefix-tree automaton of a finite set of words.
    pub fn from_words<'a>(
        layout: Arc<Layout>,
        words: impl IntoIterator<Item = &'a Vec<Letter>>,
    ) -> Self {
        let mut n = Nfa::new(layout);
        let root = n.add_state(false);
        n.add_initial(root);
        let mut children: FxHashMap<(State, Letter), State> = FxHashMap::default();
        for w in words {
            let mut q = root;
            for &l in w {
                q = match children.get(&(q, l)) {
                    Some(&r) => r,
                    None => {
                        let r = n.add_state(false);
                        n.add_transition(q, l, r);
                        children.insert((q, l), r);
                        r
                    }
                };
            }
            n.accepting[q as usize] = true;
        }
        n.normalize();
        n
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.delta.iter().map(|d| d.len()).sum()
    }

    pub fn initial(&self) -> &[State] {
        &self.initial
    }

    pub fn is_accepting(&self, q: State) -> bool {
        self.accepting[q as usize]
    }

    pub fn transitions(&self, q: State) -> &[(Letter, State)] {
        &self.delta[q as usize]
    }

    pub fn add_state(&mut self, accepting: bool) -> State {
        self.accepting.push(accepting);
        self.delta.push(Vec::new());
        (self.accepting.len() - 1) as State
    }

    pub fn add_initial(&mut self, q: State) {
        if !self.initial.contains(&q) {
            self.initial.push(q);
            self.initial.sort_unstable();
        }
    }

    pub fn set_accepting(&mut self, q: State, acc: bool) {
        self.accepting[q as usize] = acc;
    }

    /// Adds a transition; call [`Nfa::normalize`] after a batch of additions.
    pub fn add_transition(&mut self, p: State, l: Letter, q: State) {
        debug_assert!(l < self.layout.size());
        self.delta[p as usize].push((l, q));
    }

    pub fn normalize(&mut self) {
        for d in &mut self.delta {
            d.sort_unstable();
            d.dedup();
        }
    }

    /// True when at most one initial state and no letter is ambiguous.
    pub fn is_deterministic(&self) -> bool {
        self.initial.len() <= 1
            && self
                .delta
                .iter()
                .all(|d| d.windows(2).all(|w| w[0].0 != w[1].0))
    }

    pub fn accepts(&self, word: &[Letter]) -> bool {
        let mut cur: Vec<State> = self.initial.clone();
        let mut next = Vec::new();
        for &l in word {
            next.clear();
            for &q in &cur {
                let d = &self.delta[q as usize];
                let start = d.partition_point(|&(m, _)| m < l);
                for &(m, r) in &d[start..] {
                    if m != l {
                        break;
                    }
                    next.push(r);
                }
            }
            next.sort_unstable();
            next.dedup();
            std::mem::swap(&mut cur, &mut next);
            if cur.is_empty() {
                return false;
            }
        }
        cur.iter().any(|&q| self.accepting[q as usize])
    }

    /// Letters occurring on some transition, sorted.
    pub fn used_letters(&self) -> Vec<Letter> {
        let mut v: Vec<Letter> = self.delta.iter().flatten().map(|&(l, _)| l).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Removes states that are unreachable or cannot reach acceptance.
    pub fn trim(&self) -> Nfa {
        let n = self.num_states();
        let mut reach = vec![false; n];
        let mut stack: Vec<State> = self.initial.clone();
        for &q in &stack {
            reach[q as usize] = true;
        }
        while let Some(q) = stack.pop() {
            for &(_, r) in &self.delta[q as usize] {
                if !reach[r as usize] {
                    reach[r as usize] = true;
                    stack.push(r);
                }
            }
        }
        let mut rev: Vec<Vec<State>> = vec![Vec::new(); n];
        for (p, d) in self.delta.iter().enumerate() {
            if reach[p] {
                for &(_, q) in d {
                    rev[q as usize].push(p as State);
                }
            }
        }
        let mut coreach = vec![false; n];
        let mut stack: Vec<State> = (0..n as State)
            .filter(|&q| reach[q as usize] && self.accepting[q as usize])
            .collect();
        for &q in &stack {
            coreach[q as usize] = true;
        }
        while let Some(q) = stack.pop() {
            for &p in &rev[q as usize] {
                if !coreach[p as usize] {
                    coreach[p as usize] = true;
                    stack.push(p);
                }
            }
        }
        let keep: Vec<bool> = (0..n).map(|q| reach[q] && coreach[q]).collect();
        self.restrict_states(&keep)
    }

    /// Removes only unreachable states.
    pub fn accessible(&self) -> Nfa {
        let n = self.num_states();
        let mut reach = vec![false; n];
        let mut stack: Vec<State> = self.initial.clone();
        for &q in &stack {
            reach[q as usize] = true;
        }
        while let Some(q) = stack.pop() {
            for &(_, r) in &self.delta[q as usize] {
                if !reach[r as usize] {
                    reach[r as usize] = true;
                    stack.push(r);
                }
            }
        }
        self.restrict_states(&reach)
    }

    fn restrict_states(&self, keep: &[bool]) -> Nfa {
        let mut map = vec![State::MAX; keep.len()];
        let mut out = Nfa::new(self.layout.clone());
        for (q, &k) in keep.iter().enumerate() {
            if k {
                map[q] = out.add_state(self.accepting[q]);
            }
        }
        for (q, &k) in keep.iter().enumerate() {
            if !k {
                continue;
            }
            let nq = map[q];
            out.delta[nq as usize] = self.delta[q]
                .iter()
                .filter(|&&(_, r)| keep[r as usize])
                .map(|&(l, r)| (l, map[r as usize]))
                .collect();
        }
        out.initial = self
            .initial
            .iter()
            .filter(|&&q| keep[q as usize])
            .map(|&q| map[q as usize])
            .collect();
        out
    }

    /// Same automaton over a relabelled layout with identical domains.
    pub fn with_layout(&self, layout: Arc<Layout>) -> Result<Nfa> {
        if !self.layout.same_domains(&layout) {
            return Err(Error::Layout(format!("[{}] vs [{}]", self.layout, layout)));
        }
        let mut out = self.clone();
        out.layout = layout;
        Ok(out)
    }

    /// Keeps only transitions whose letter satisfies `pred`.
    pub fn filter_letters(&self, pred: impl Fn(Letter) -> bool) -> Nfa {
        let mut out = self.clone();
        let mut memo: FxHashMap<Letter, bool> = FxHashMap::default();
        for d in &mut out.delta {
            d.retain(|&(l, _)| *memo.entry(l).or_insert_with(|| pred(l)));
        }
        out
    }

    /// Morphic image under a per-letter total map into `target`.
    pub fn map_letters(&self, target: Arc<Layout>, f: impl Fn(Letter) -> Letter) -> Nfa {
        let mut memo: FxHashMap<Letter, Letter> = FxHashMap::default();
        let mut out = Nfa {
            layout: target,
            initial: self.initial.clone(),
            accepting: self.accepting.clone(),
            delta: Vec::with_capacity(self.delta.len()),
        };
        for d in &self.delta {
            let mut nd: Vec<(Letter, State)> = d
                .iter()
                .map(|&(l, q)| (*memo.entry(l).or_insert_with(|| f(l)), q))
                .collect();
            nd.sort_unstable();
            nd.dedup();
            out.delta.push(nd);
        }
        out
    }

    /// Keeps the tracks listed in `keep`, in that order.
    pub fn project(&self, keep: &[usize]) -> Result<Nfa> {
        for &k in keep {
            if k >= self.layout.arity() {
                return Err(Error::Layout(format!("track index {k} out of range")));
            }
        }
        let target = Layout::new(keep.iter().map(|&k| self.layout.track(k).clone()).collect())?;
        let src = self.layout.clone();
        let t2 = target.clone();
        Ok(self.map_letters(target, move |l| {
            let digits: Vec<u32> = keep.iter().map(|&k| src.digit(l, k)).collect();
            t2.encode(&digits)
        }))
    }

    pub fn project_names(&self, keep: &[&str]) -> Result<Nfa> {
        let idx: Vec<usize> = keep
            .iter()
            .map(|n| self.layout.require(n))
            .collect::<Result<_>>()?;
        self.project(&idx)
    }

    /// Union by juxtaposition.
    pub fn union(&self, other: &Nfa) -> Result<Nfa> {
        same_layout(&self.layout, &other.layout)?;
        let mut out = self.clone();
        let off = out.num_states() as State;
        out.accepting.extend_from_slice(&other.accepting);
        for d in &other.delta {
            out.delta
                .push(d.iter().map(|&(l, q)| (l, q + off)).collect());
        }
        for &q in &other.initial {
            out.initial.push(q + off);
        }
        out.initial.sort_unstable();
        Ok(out)
    }

    pub fn concat(&self, other: &Nfa) -> Result<Nfa> {
        same_layout(&self.layout, &other.layout)?;
        let mut out = Nfa::new(self.layout.clone());
        let off = self.num_states() as State;
        let eps_in_other = other.initial.iter().any(|&q| other.accepting[q as usize]);
        for q in 0..self.num_states() {
            out.add_state(self.accepting[q] && eps_in_other);
        }
        for q in 0..other.num_states() {
            out.add_state(other.accepting[q]);
        }
        for (q, d) in self.delta.iter().enumerate() {
            out.delta[q] = d.clone();
        }
        for (q, d) in other.delta.iter().enumerate() {
            out.delta[q + off as usize] = d.iter().map(|&(l, r)| (l, r + off)).collect();
        }
        let starts: Vec<(Letter, State)> = other
            .initial
            .iter()
            .flat_map(|&i| other.delta[i as usize].iter().map(|&(l, r)| (l, r + off)))
            .collect();
        for q in 0..self.num_states() {
            if self.accepting[q] {
                out.delta[q].extend_from_slice(&starts);
            }
        }
        out.initial = self.initial.clone();
        out.normalize();
        Ok(out)
    }

    pub fn star(&self) -> Nfa {
        let mut out = self.clone();
        let starts: Vec<(Letter, State)> = self
            .initial
            .iter()
            .flat_map(|&i| self.delta[i as usize].iter().copied())
            .collect();
        for q in 0..self.num_states() {
            if self.accepting[q] {
                out.delta[q].extend_from_slice(&starts);
            }
        }
        let fresh = out.add_state(true);
        out.delta[fresh as usize] = starts;
        out.initial = vec![fresh];
        out.normalize();
        out
    }

    /// Reverse automaton.
    pub fn reverse(&self) -> Nfa {
        let mut out = Nfa::new(self.layout.clone());
        for q in 0..self.num_states() {
            out.add_state(self.initial.contains(&(q as State)));
        }
        for (p, d) in self.delta.iter().enumerate() {
            for &(l, q) in d {
                out.delta[q as usize].push((l, p as State));
            }
        }
        out.initial = (0..self.num_states() as State)
            .filter(|&q| self.accepting[q as usize])
            .collect();
        out.normalize();
        out
    }
}

/// Column assignment for [`join`]: columns `0..out.arity()` are output
/// columns, higher ones are hidden and projected away.
pub struct JoinSpec<'a> {
    pub a_cols: &'a [usize],
    pub b_cols: &'a [usize],
    pub out: Arc<Layout>,
}

struct Side {
    info: FxHashMap<Letter, (u64, Letter)>,
}

impl Side {
    fn get(&self, l: Letter) -> (u64, Letter) {
        self.info[&l]
    }
}

/// Synchronous product of `a` and `b` where tracks mapped to the same column
/// must carry equal symbols; the result keeps the output columns only.
pub fn join(a: &Nfa, b: &Nfa, spec: &JoinSpec) -> Result<Nfa> {
    let la = a.layout();
    let lb = b.layout();
    if spec.a_cols.len() != la.arity() || spec.b_cols.len() != lb.arity() {
        return Err(Error::Layout("join column map arity mismatch".into()));
    }
    let out = &spec.out;
    let ncols = spec
        .a_cols
        .iter()
        .chain(spec.b_cols)
        .copied()
        .max()
        .map_or(0, |m| m + 1)
        .max(out.arity());
    let mut dom: Vec<Option<&Vec<String>>> = vec![None; ncols];
    for (i, &c) in spec.a_cols.iter().enumerate() {
        if dom[c].is_some() {
            return Err(Error::Layout("column used twice by one operand".into()));
        }
        dom[c] = Some(&la.track(i).syms);
    }
    let mut shared: Vec<usize> = Vec::new();
    for (j, &c) in spec.b_cols.iter().enumerate() {
        if spec.b_cols[..j].contains(&c) {
            return Err(Error::Layout("column used twice by one operand".into()));
        }
        match dom[c] {
            Some(s) => {
                if *s != lb.track(j).syms {
                    return Err(Error::Layout(format!(
                        "joined tracks disagree on domain: {}",
                        lb.track(j).name
                    )));
                }
                shared.push(c);
            }
            None => dom[c] = Some(&lb.track(j).syms),
        }
    }
    for c in 0..out.arity() {
        match dom[c] {
            Some(s) if *s == out.track(c).syms => {}
            _ => return Err(Error::Layout(format!("output column {c} not provided"))),
        }
    }
    shared.sort_unstable();

    let a_side = side_info(a, spec.a_cols, &shared, out, &[]);
    let b_side = side_info(b, spec.b_cols, &shared, out, spec.a_cols);

    // b transitions per state, sorted by shared key
    let b_sorted: Vec<Vec<(u64, Letter, State)>> = (0..b.num_states() as State)
        .map(|q| {
            let mut v: Vec<(u64, Letter, State)> = b
                .transitions(q)
                .iter()
                .map(|&(l, r)| {
                    let (k, c) = b_side.get(l);
                    (k, c, r)
                })
                .collect();
            v.sort_unstable();
            v
        })
        .collect();

    let cap = limits::current().max_states;
    let mut res = Nfa::new(out.clone());
    let mut index: FxHashMap<(State, State), State> = FxHashMap::default();
    let mut queue: Vec<(State, State)> = Vec::new();
    for &p in a.initial() {
        for &q in b.initial() {
            let s = res.add_state(a.is_accepting(p) && b.is_accepting(q));
            index.insert((p, q), s);
            res.add_initial(s);
            queue.push((p, q));
        }
    }
    let mut head = 0;
    let mut buf: Vec<(Letter, State)> = Vec::new();
    while head < queue.len() {
        let (p, q) = queue[head];
        head += 1;
        let src = index[&(p, q)];
        buf.clear();
        let bq = &b_sorted[q as usize];
        for &(l, p2) in a.transitions(p) {
            let (k, ca) = a_side.get(l);
            let start = bq.partition_point(|e| e.0 < k);
            for &(kb, cb, q2) in &bq[start..] {
                if kb != k {
                    break;
                }
                let tgt = match index.get(&(p2, q2)) {
                    Some(&t) => t,
                    None => {
                        if res.num_states() >= cap {
                            return Err(Error::Capacity(format!("product exceeds {cap} states")));
                        }
                        let t = res.add_state(a.is_accepting(p2) && b.is_accepting(q2));
                        index.insert((p2, q2), t);
                        queue.push((p2, q2));
                        t
                    }
                };
                buf.push((ca + cb, tgt));
            }
        }
        buf.sort_unstable();
        buf.dedup();
        res.delta[src as usize] = buf.clone();
    }
    Ok(res.trim())
}

fn side_info(
    nfa: &Nfa,
    cols: &[usize],
    shared: &[usize],
    out: &Layout,
    provided: &[usize],
) -> Side {
    let l = nfa.layout();
    let shared_pos: Vec<usize> = shared
        .iter()
        .map(|s| cols.iter().position(|c| c == s).expect("shared column"))
        .collect();
    let mut info = FxHashMap::default();
    for letter in nfa.used_letters() {
        let mut c = 0 as Letter;
        for (i, &col) in cols.iter().enumerate() {
            if col < out.arity() && !provided.contains(&col) {
                c += l.digit(letter, i) * out.place(col);
            }
        }
        let mut k = 0u64;
        for &i in &shared_pos {
            k = k * l.track(i).syms.len() as u64 + l.digit(letter, i) as u64;
        }
        info.insert(letter, (k, c));
    }
    Side { info }
}

/// Intersection of two automata over the same layout.
pub fn intersect(a: &Nfa, b: &Nfa) -> Result<Nfa> {
    same_layout(a.layout(), b.layout())?;
    let cols: Vec<usize> = (0..a.layout().arity()).collect();
    join(
        a,
        b,
        &JoinSpec {
            a_cols: &cols,
            b_cols: &cols,
            out: a.layout().clone(),
        },
    )
}
