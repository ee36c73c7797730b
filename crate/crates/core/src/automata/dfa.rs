//! Subset construction, partition-refinement minimization, and the
//! BFS-based language comparisons built on them.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use super::layout::{same_layout, Letter, Word};
use super::limits;
use super::nfa::{Nfa, State};
use crate::error::{Error, Result};

const SINK: State = State::MAX;

/// Subset construction. The result is a partial DFA (missing transitions go to
/// an implicit rejecting sink) with only reachable states.
pub fn determinize(a: &Nfa) -> Result<Nfa> {
    if a.is_deterministic() {
        return Ok(a.accessible());
    }
    let cap = limits::current().max_states;
    let mut out = Nfa::new(a.layout().clone());
    let mut index: FxHashMap<Vec<State>, State> = FxHashMap::default();
    let mut subsets: Vec<Vec<State>> = Vec::new();
    let start: Vec<State> = a.initial().to_vec();
    let acc = start.iter().any(|&q| a.is_accepting(q));
    let s0 = out.add_state(acc);
    out.add_initial(s0);
    index.insert(start.clone(), s0);
    subsets.push(start);
    let mut buf: Vec<(Letter, State)> = Vec::new();
    let mut i = 0;
    while i < subsets.len() {
        buf.clear();
        for &q in &subsets[i] {
            buf.extend_from_slice(a.transitions(q));
        }
        buf.sort_unstable();
        buf.dedup();
        let mut j = 0;
        while j < buf.len() {
            let l = buf[j].0;
            let mut k = j;
            let mut target: Vec<State> = Vec::new();
            while k < buf.len() && buf[k].0 == l {
                target.push(buf[k].1);
                k += 1;
            }
            let t = match index.get(&target) {
                Some(&t) => t,
                None => {
                    if out.num_states() >= cap {
                        return Err(Error::Capacity(format!(
                            "determinization exceeds {cap} states"
                        )));
                    }
                    let acc = target.iter().any(|&q| a.is_accepting(q));
                    let t = out.add_state(acc);
                    index.insert(target.clone(), t);
                    subsets.push(target);
                    t
                }
            };
            out.add_transition(i as State, l, t);
            j = k;
        }
        i += 1;
    }
    Ok(out)
}

/// Minimal trimmed DFA: partial, no sink, no useless states.
pub fn reduce(a: &Nfa) -> Result<Nfa> {
    let d = determinize(&a.trim())?;
    Ok(refine(&d.trim()))
}

/// Moore-style refinement on a trimmed partial DFA.
fn refine(d: &Nfa) -> Nfa {
    let n = d.num_states();
    if n == 0 {
        return Nfa::empty(d.layout().clone());
    }
    let mut class: Vec<u32> = (0..n as State).map(|q| d.is_accepting(q) as u32).collect();
    let mut count = {
        let mut c = class.clone();
        c.sort_unstable();
        c.dedup();
        c.len()
    };
    loop {
        let mut ids: FxHashMap<(u32, Vec<(Letter, u32)>), u32> = FxHashMap::default();
        let mut next = vec![0u32; n];
        for q in 0..n {
            let sig: Vec<(Letter, u32)> = d
                .transitions(q as State)
                .iter()
                .map(|&(l, r)| (l, class[r as usize]))
                .collect();
            let len = ids.len() as u32;
            next[q] = *ids.entry((class[q], sig)).or_insert(len);
        }
        let new_count = ids.len();
        class = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    // renumber classes in BFS order from the initial state for stable output
    let mut order: Vec<u32> = vec![u32::MAX; count];
    let mut rep: Vec<State> = Vec::with_capacity(count);
    let mut queue: VecDeque<State> = VecDeque::new();
    let init = d.initial()[0];
    order[class[init as usize] as usize] = 0;
    rep.push(init);
    queue.push_back(init);
    while let Some(q) = queue.pop_front() {
        for &(_, r) in d.transitions(q) {
            let c = class[r as usize] as usize;
            if order[c] == u32::MAX {
                order[c] = rep.len() as u32;
                rep.push(r);
                queue.push_back(r);
            }
        }
    }
    let mut out = Nfa::new(d.layout().clone());
    for &q in &rep {
        out.add_state(d.is_accepting(q));
    }
    for (i, &q) in rep.iter().enumerate() {
        for &(l, r) in d.transitions(q) {
            out.add_transition(i as State, l, order[class[r as usize] as usize]);
        }
    }
    out.add_initial(0);
    out.normalize();
    out
}

/// Complete minimal DFA over the full letter set of the layout.
pub fn minimize(a: &Nfa) -> Result<Nfa> {
    let r = reduce(a)?;
    complete(&r)
}

/// Adds a rejecting sink so every state has a transition on every letter.
pub fn complete(d: &Nfa) -> Result<Nfa> {
    let size = d.layout().size() as usize;
    let n = d.num_states().max(1);
    if size.saturating_mul(n + 1) > limits::current().max_states.saturating_mul(64) {
        return Err(Error::Capacity(format!(
            "completing {n} states over {size} letters"
        )));
    }
    let mut out = d.clone();
    if out.num_states() == 0 {
        let s = out.add_state(false);
        out.add_initial(s);
    }
    let mut sink: Option<State> = None;
    if d.num_states() == 0 {
        sink = Some(0);
    }
    for q in 0..out.num_states() as State {
        let present: Vec<Letter> = out.transitions(q).iter().map(|&(l, _)| l).collect();
        if present.len() == size {
            continue;
        }
        let s = *sink.get_or_insert_with(|| out.add_state(false));
        let mut it = present.iter().peekable();
        for l in 0..size as Letter {
            if it.peek() == Some(&&l) {
                it.next();
            } else {
                out.add_transition(q, l, s);
            }
        }
    }
    if let Some(s) = sink {
        for l in 0..size as Letter {
            out.add_transition(s, l, s);
        }
    }
    out.normalize();
    Ok(out)
}

/// Complement relative to all words over the full letter set.
pub fn complement(a: &Nfa) -> Result<Nfa> {
    let c = complete(&determinize(a)?)?;
    let mut out = c.clone();
    for q in 0..c.num_states() as State {
        out.set_accepting(q, !c.is_accepting(q));
    }
    Ok(out)
}

fn step(d: &Nfa, q: State, l: Letter) -> State {
    if q == SINK {
        return SINK;
    }
    let t = d.transitions(q);
    match t.binary_search_by(|&(m, _)| m.cmp(&l)) {
        Ok(i) => t[i].1,
        Err(_) => SINK,
    }
}

fn acc(d: &Nfa, q: State) -> bool {
    q != SINK && d.is_accepting(q)
}

fn start(d: &Nfa) -> State {
    d.initial().first().copied().unwrap_or(SINK)
}

/// `a \ b`, built as the product of `a` with the subset automaton of `b`.
pub fn difference(a: &Nfa, b: &Nfa) -> Result<Nfa> {
    same_layout(a.layout(), b.layout())?;
    let db = determinize(&b.trim())?;
    let cap = limits::current().max_states;
    let mut out = Nfa::new(a.layout().clone());
    let mut index: FxHashMap<(State, State), State> = FxHashMap::default();
    let mut queue: Vec<(State, State)> = Vec::new();
    let s0 = start(&db);
    for &p in a.initial() {
        let s = out.add_state(a.is_accepting(p) && !acc(&db, s0));
        index.insert((p, s0), s);
        out.add_initial(s);
        queue.push((p, s0));
    }
    let mut head = 0;
    while head < queue.len() {
        let (p, q) = queue[head];
        head += 1;
        let src = index[&(p, q)];
        for &(l, p2) in a.transitions(p) {
            let q2 = step(&db, q, l);
            let t = match index.get(&(p2, q2)) {
                Some(&t) => t,
                None => {
                    if out.num_states() >= cap {
                        return Err(Error::Capacity(format!("difference exceeds {cap} states")));
                    }
                    let t = out.add_state(a.is_accepting(p2) && !acc(&db, q2));
                    index.insert((p2, q2), t);
                    queue.push((p2, q2));
                    t
                }
            };
            out.add_transition(src, l, t);
        }
    }
    out.normalize();
    Ok(out.trim())
}

/// Shortest word accepted by exactly one of `a`, `b` (when `both_ways`) or
/// by `a` but not `b`. Ties are broken by letter order.
fn distinguish(a: &Nfa, b: &Nfa, both_ways: bool) -> Result<Option<Word>> {
    same_layout(a.layout(), b.layout())?;
    let da = determinize(&a.trim())?;
    let db = determinize(&b.trim())?;
    let differs = |p: State, q: State| {
        let (x, y) = (acc(&da, p), acc(&db, q));
        if both_ways {
            x != y
        } else {
            x && !y
        }
    };
    let mut parent: FxHashMap<(State, State), Option<((State, State), Letter)>> =
        FxHashMap::default();
    let mut queue: VecDeque<(State, State)> = VecDeque::new();
    let s = (start(&da), start(&db));
    parent.insert(s, None);
    queue.push_back(s);
    let mut letters: Vec<Letter> = Vec::new();
    while let Some((p, q)) = queue.pop_front() {
        if differs(p, q) {
            let mut w = Vec::new();
            let mut cur = (p, q);
            while let Some(&Some((prev, l))) = parent.get(&cur) {
                w.push(l);
                cur = prev;
            }
            w.reverse();
            return Ok(Some(w));
        }
        letters.clear();
        if p != SINK {
            letters.extend(da.transitions(p).iter().map(|&(l, _)| l));
        }
        if q != SINK && both_ways {
            letters.extend(db.transitions(q).iter().map(|&(l, _)| l));
        }
        letters.sort_unstable();
        letters.dedup();
        for &l in &letters {
            let nxt = (step(&da, p, l), step(&db, q, l));
            if nxt.0 == SINK && (nxt.1 == SINK || !both_ways) {
                continue;
            }
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(nxt) {
                e.insert(Some(((p, q), l)));
                queue.push_back(nxt);
            }
        }
    }
    Ok(None)
}

/// `None` when the languages coincide, otherwise a shortest word of the
/// symmetric difference (least in letter order among the shortest).
pub fn equivalent(a: &Nfa, b: &Nfa) -> Result<Option<Word>> {
    distinguish(a, b, true)
}

/// `None` when `L(a) ⊆ L(b)`, otherwise a shortest witness in `a \ b`.
pub fn included(a: &Nfa, b: &Nfa) -> Result<Option<Word>> {
    distinguish(a, b, false)
}

/// Shortest accepted word, least in letter order.
pub fn shortest_word(a: &Nfa) -> Result<Option<Word>> {
    let empty = Nfa::empty(a.layout().clone());
    distinguish(a, &empty, false)
}

pub fn is_empty(a: &Nfa) -> bool {
    a.trim().num_states() == 0
}

/// Number of accepted words of length `l` (saturating).
pub fn count_length(a: &Nfa, l: usize) -> Result<u128> {
    let d = determinize(&a.trim())?;
    let n = d.num_states();
    if n == 0 {
        return Ok(0);
    }
    let mut ways: Vec<u128> = (0..n as State).map(|q| d.is_accepting(q) as u128).collect();
    for _ in 0..l {
        ways = (0..n as State)
            .map(|q| {
                d.transitions(q)
                    .iter()
                    .fold(0u128, |acc, &(_, r)| acc.saturating_add(ways[r as usize]))
            })
            .collect();
    }
    Ok(ways[d.initial()[0] as usize])
}

/// All accepted words of length `l`, in increasing letter order.
pub fn enumerate_length(a: &Nfa, l: usize) -> Result<Vec<Word>> {
    let cap = limits::current().max_enum;
    let d = determinize(&a.trim())?;
    let n = d.num_states();
    if n == 0 {
        return Ok(Vec::new());
    }
    // alive[r][q]: some accepted word of length r starts at q
    let mut alive: Vec<Vec<bool>> = Vec::with_capacity(l + 1);
    alive.push((0..n as State).map(|q| d.is_accepting(q)).collect());
    for r in 1..=l {
        let prev = &alive[r - 1];
        let row: Vec<bool> = (0..n as State)
            .map(|q| d.transitions(q).iter().any(|&(_, t)| prev[t as usize]))
            .collect();
        alive.push(row);
    }
    let mut out: Vec<Word> = Vec::new();
    let init = d.initial()[0];
    if !alive[l][init as usize] {
        return Ok(out);
    }
    let mut word: Word = Vec::with_capacity(l);
    let mut stack: Vec<(State, usize)> = vec![(init, 0)];
    // iterative DFS; each frame remembers the next transition index to try
    while let Some(top) = stack.len().checked_sub(1) {
        let (q, mut idx) = stack[top];
        if top == l {
            if out.len() >= cap {
                return Err(Error::Capacity(format!(
                    "more than {cap} words of length {l}"
                )));
            }
            out.push(word.clone());
            stack.pop();
            word.pop();
            continue;
        }
        let trans = d.transitions(q);
        let mut next = None;
        while idx < trans.len() {
            let (letter, t) = trans[idx];
            idx += 1;
            if alive[l - top - 1][t as usize] {
                next = Some((letter, t));
                break;
            }
        }
        stack[top].1 = idx;
        match next {
            Some((letter, t)) => {
                word.push(letter);
                stack.push((t, 0));
            }
            None => {
                stack.pop();
                word.pop();
            }
        }
    }
    Ok(out)
}
