use std::sync::Arc;

use super::dfa;
use super::layout::{Layout, Letter, Track};
use super::nfa::{join, JoinSpec, Nfa};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoolOp {
    Union,
    Intersect,
    Difference,
}

/// Binary boolean operation; the complement is [`dfa::complement`].
pub fn boolean(a: &Nfa, b: &Nfa, op: BoolOp) -> Result<Nfa> {
    match op {
        BoolOp::Union => a.union(b),
        BoolOp::Intersect => super::nfa::intersect(a, b),
        BoolOp::Difference => dfa::difference(a, b),
    }
}

/// Track names of `layout` made unique by suffixing clashes.
fn disjoint_tracks(first: &Layout, second: &Layout) -> Vec<Track> {
    let mut tracks: Vec<Track> = first.tracks().to_vec();
    for t in second.tracks() {
        let mut name = t.name.clone();
        let mut k = 2;
        while tracks.iter().any(|u| u.name == name) {
            name = format!("{}{}", t.name, k);
            k += 1;
        }
        tracks.push(t.renamed(name));
    }
    tracks
}

/// `{ w1 ⊗ w2 | w1 ∈ L(a), w2 ∈ L(b), |w1| = |w2| }` over the concatenated layout.
pub fn sync_product(a: &Nfa, b: &Nfa) -> Result<Nfa> {
    let out = Layout::new(disjoint_tracks(a.layout(), b.layout()))?;
    let n = a.layout().arity();
    let a_cols: Vec<usize> = (0..n).collect();
    let b_cols: Vec<usize> = (n..n + b.layout().arity()).collect();
    join(
        a,
        b,
        &JoinSpec {
            a_cols: &a_cols,
            b_cols: &b_cols,
            out,
        },
    )
}

/// Reorders (or duplicates-free permutes) tracks: track `i` of the result is
/// track `perm[i]` of `a`.
pub fn permute(a: &Nfa, perm: &[usize]) -> Result<Nfa> {
    let mut sorted = perm.to_vec();
    sorted.sort_unstable();
    if sorted != (0..a.layout().arity()).collect::<Vec<_>>() {
        return Err(Error::Layout("not a permutation of the tracks".into()));
    }
    a.project(perm)
}

/// Two-track relation inverse (track swap).
pub fn inverse(r: &Nfa) -> Result<Nfa> {
    let k = r.layout().arity();
    if !k.is_multiple_of(2) {
        return Err(Error::Layout(
            "relation needs an even number of tracks".into(),
        ));
    }
    let h = k / 2;
    let perm: Vec<usize> = (h..k).chain(0..h).collect();
    let swapped = r.project(&perm)?;
    swapped.with_layout(r.layout().clone())
}

/// `{(x,z) | ∃y: (x,y) ∈ r ∧ (y,z) ∈ s}`. Both operands are relations whose
/// tracks split evenly into a source half and a target half.
pub fn compose(r: &Nfa, s: &Nfa) -> Result<Nfa> {
    if r.layout() != s.layout() {
        return Err(Error::Layout(format!(
            "[{}] vs [{}]",
            r.layout(),
            s.layout()
        )));
    }
    let k = r.layout().arity();
    if !k.is_multiple_of(2) {
        return Err(Error::Layout(
            "relation needs an even number of tracks".into(),
        ));
    }
    let h = k / 2;
    for i in 0..h {
        if r.layout().track(i).syms != r.layout().track(h + i).syms {
            return Err(Error::Layout(
                "relation halves have different domains".into(),
            ));
        }
    }
    // columns: x = 0..h, z = h..k, hidden y = k..k+h
    let r_cols: Vec<usize> = (0..h).chain(k..k + h).collect();
    let s_cols: Vec<usize> = (k..k + h).chain(h..k).collect();
    join(
        r,
        s,
        &JoinSpec {
            a_cols: &r_cols,
            b_cols: &s_cols,
            out: r.layout().clone(),
        },
    )
}

/// Fixed regular constraints on the tracks of a layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// Both tracks carry the same symbol at every position.
    Equal(usize, usize),
    /// The bit track spells `0*10*`.
    ExactlyOne(usize),
    /// The bit track spells `10*`.
    AtZero(usize),
    /// Tracks `(i, j)` spell `(0,0)*(1,0)(0,0)^{k-1}(0,1)(0,0)*` for `k > 0`
    /// and `(0,0)*(1,1)(0,0)*` for `k = 0`: the 1 of `j` sits `k` places after
    /// the 1 of `i`.
    Offset(usize, usize, u32),
    /// The bit track spells `(0^k)*10*`.
    ModZero(usize, u32),
}

fn bit_track(l: &Layout, i: usize) -> Result<()> {
    if i >= l.arity() {
        return Err(Error::Layout(format!("track index {i} out of range")));
    }
    if l.track(i).syms != ["0", "1"] {
        return Err(Error::Layout(format!(
            "track {} is not a bit track",
            l.track(i).name
        )));
    }
    Ok(())
}

/// Automaton over the constrained tracks only (bit tracks named `x`, `y`).
pub fn constraint_core(c: Constraint) -> Result<Nfa> {
    let one = Layout::single(Track::bits("x"));
    let two = Layout::new(vec![Track::bits("x"), Track::bits("y")])?;
    let chain = |layout: Arc<Layout>, pattern: &[(Vec<Letter>, bool)]| {
        // pattern: sequence of (letters, looping) segments, accepting at the end
        let mut n = Nfa::new(layout);
        let mut q = n.add_state(false);
        n.add_initial(q);
        for (letters, looping) in pattern {
            if *looping {
                for &l in letters {
                    n.add_transition(q, l, q);
                }
            } else {
                let r = n.add_state(false);
                for &l in letters {
                    n.add_transition(q, l, r);
                }
                q = r;
            }
        }
        n.set_accepting(q, true);
        n.normalize();
        n
    };
    Ok(match c {
        Constraint::Equal(..) => {
            return Err(Error::Layout(
                "equality constraints depend on the domain".into(),
            ))
        }
        Constraint::ExactlyOne(_) => {
            chain(one, &[(vec![0], true), (vec![1], false), (vec![0], true)])
        }
        Constraint::AtZero(_) => chain(one, &[(vec![1], false), (vec![0], true)]),
        Constraint::ModZero(_, k) => {
            if k == 0 {
                return Err(Error::Layout("modulus must be positive".into()));
            }
            let mut n = Nfa::new(one);
            let states: Vec<_> = (0..k).map(|_| n.add_state(false)).collect();
            let end = n.add_state(true);
            n.add_initial(states[0]);
            for i in 0..k as usize {
                n.add_transition(states[i], 0, states[(i + 1) % k as usize]);
            }
            n.add_transition(states[0], 1, end);
            n.add_transition(end, 0, end);
            n.normalize();
            n
        }
        Constraint::Offset(_, _, k) => {
            // letters over (x,y): 0=(0,0) 1=(0,1) 2=(1,0) 3=(1,1)
            if k == 0 {
                chain(two, &[(vec![0], true), (vec![3], false), (vec![0], true)])
            } else {
                let mut pat = vec![(vec![0], true), (vec![2], false)];
                for _ in 1..k {
                    pat.push((vec![0], false));
                }
                pat.push((vec![1], false));
                pat.push((vec![0], true));
                chain(two, &pat)
            }
        }
    })
}

/// The constraint as an automaton over the whole `layout`, other tracks free.
pub fn track_constraint(layout: &Arc<Layout>, c: Constraint) -> Result<Nfa> {
    if let Constraint::Equal(i, j) = c {
        if i >= layout.arity() || j >= layout.arity() {
            return Err(Error::Layout("track index out of range".into()));
        }
        if layout.track(i).syms != layout.track(j).syms {
            return Err(Error::Layout("equal() needs tracks with one domain".into()));
        }
        let letters = (0..layout.size()).filter(|&l| layout.digit(l, i) == layout.digit(l, j));
        return Ok(Nfa::letters_star(layout.clone(), letters));
    }
    let cols: Vec<usize> = match c {
        Constraint::ExactlyOne(i) | Constraint::AtZero(i) | Constraint::ModZero(i, _) => {
            bit_track(layout, i)?;
            vec![i]
        }
        Constraint::Offset(i, j, _) => {
            bit_track(layout, i)?;
            bit_track(layout, j)?;
            if i == j {
                return Err(Error::Layout("offset needs two distinct tracks".into()));
            }
            vec![i, j]
        }
        Constraint::Equal(..) => unreachable!(),
    };
    let core = constraint_core(c)?;
    let all: Vec<usize> = (0..layout.arity()).collect();
    join(
        &Nfa::universal(layout.clone()),
        &core,
        &JoinSpec {
            a_cols: &all,
            b_cols: &cols,
            out: layout.clone(),
        },
    )
}
