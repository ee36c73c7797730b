//! Disappearance relations and iterated announcements.
//!
//! A restriction operator `F` shrinks a state set. Iterating it from `S_0`
//! gives `S_0 ⊇ S_1 ⊇ …`; `s ≼ t` holds when `s` disappears no later than
//! `t`. For length-preserving operators the relation is learned as a
//! synchronous two-track language with Angluin's algorithm: membership is
//! answered by iterating `F` on a single length, equivalence by checking that
//! the hypothesis is a total preorder whose classes are peeled off by `F`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::automata::{
    complement, difference, enumerate_length, equivalent, intersect, inverse, is_empty, join, permute,
    reduce, shortest_word, JoinSpec, Layout, Letter, Nfa, Track, Word,
};
use crate::error::{Error, Result};
use crate::formula::Core;
use crate::kripke::{extend_context, restrict, state_space, Kripke};
use crate::semantics::{Evaluator, Options};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_eq: usize,
    pub max_mq: usize,
    /// Longest counterexample the brute-force oracle will look at.
    pub max_len: usize,
    /// Lengths re-checked against the oracle once learning succeeds.
    pub certify_len: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_eq: 500,
            max_mq: 1_000_000,
            max_len: 12,
            certify_len: 6,
        }
    }
}

/// Why learning stopped without an answer.
#[derive(Debug, Clone)]
pub struct Divergence {
    pub operator: String,
    pub reason: String,
    pub eq_queries: usize,
    pub mq_queries: usize,
    pub last_hypothesis: Option<Nfa>,
    pub transcript: Vec<String>,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} ({} equivalence, {} membership queries",
            self.operator, self.reason, self.eq_queries, self.mq_queries
        )?;
        if let Some(h) = &self.last_hypothesis {
            write!(f, ", last hypothesis {} states", h.num_states())?;
        }
        write!(f, ")")
    }
}

pub trait RestrictionOperator {
    fn name(&self) -> String;

    /// Layout of state words.
    fn state_layout(&self) -> Arc<Layout>;

    /// `S_0`.
    fn initial(&self) -> Nfa;

    /// `F(X)` for `X ⊆ S_0`.
    fn apply(&mut self, x: &Nfa) -> Result<Nfa>;

    /// `{(c, t) | t ∈ F(↑c)}` where `↑c = {u | (c, u) ∈ r}`, if the operator
    /// can compute it symbolically.
    fn uniform_apply(&mut self, _r: &Nfa) -> Result<Option<Nfa>> {
        Ok(None)
    }

    /// `S_k ∩ Σ^len` for `k = 0, 1, …` up to the fixpoint, each entry
    /// strictly smaller than the previous one.
    fn slices(&mut self, len: usize) -> Result<Vec<Nfa>> {
        let sigma = of_length(self.state_layout(), len);
        let mut x = reduce(&intersect(&self.initial(), &sigma)?)?;
        let mut out = vec![];
        loop {
            let y = reduce(&intersect(&self.apply(&x)?, &x)?)?;
            let done = equivalent(&x, &y)?.is_none();
            out.push(x);
            if done {
                return Ok(out);
            }
            x = y;
        }
    }
}

/// All words of length `len`.
pub fn of_length(layout: Arc<Layout>, len: usize) -> Nfa {
    let size = layout.size();
    let mut n = Nfa::new(layout);
    let mut q = n.add_state(len == 0);
    n.add_initial(q);
    for i in 0..len {
        let r = n.add_state(i + 1 == len);
        for l in 0..size {
            n.add_transition(q, l, r);
        }
        q = r;
    }
    n.normalize();
    n
}

/// State tracks followed by primed copies.
pub fn pair_layout(state: &Layout) -> Result<Arc<Layout>> {
    let mut tracks = state.tracks().to_vec();
    tracks.extend(
        state
            .tracks()
            .iter()
            .map(|t| t.renamed(format!("{}'", t.name))),
    );
    Layout::new(tracks)
}

fn pair_product(a: &Nfa, b: &Nfa, pair: &Arc<Layout>) -> Result<Nfa> {
    let w = a.layout().arity();
    let a_cols: Vec<usize> = (0..w).collect();
    let b_cols: Vec<usize> = (w..2 * w).collect();
    join(
        a,
        b,
        &JoinSpec {
            a_cols: &a_cols,
            b_cols: &b_cols,
            out: pair.clone(),
        },
    )
}

fn split(w: &[Letter], size: u32) -> (Word, Word) {
    w.iter().map(|&l| (l / size, l % size)).unzip()
}

fn diagonal(s: &Nfa, pair: &Arc<Layout>) -> Nfa {
    let size = s.layout().size();
    s.map_letters(pair.clone(), |l| l * size + l)
}

/// Rank of a word among the slices: `None` outside `S_0`, `Some(usize::MAX)`
/// for words that never disappear.
fn rank_in(slices: &[Nfa], w: &[Letter]) -> Option<usize> {
    let mut r = None;
    for (k, x) in slices.iter().enumerate() {
        if !x.accepts(w) {
            break;
        }
        r = Some(k);
    }
    r.map(|k| if k + 1 == slices.len() { usize::MAX } else { k })
}

/// The relation restricted to length `len`, from its slices.
fn truth_at(slices: &[Nfa], pair: &Arc<Layout>) -> Result<Nfa> {
    let mut acc = Nfa::empty(pair.clone());
    for k in 0..slices.len() {
        let exact = match slices.get(k + 1) {
            Some(next) => difference(&slices[k], next)?,
            None => slices[k].clone(),
        };
        if is_empty(&exact) {
            continue;
        }
        acc = acc.union(&pair_product(&exact, &slices[k], pair)?)?;
    }
    reduce(&acc)
}

/// `S_k ∩ Σ^len`, enumerated.
pub fn iterate_at_length(op: &mut dyn RestrictionOperator, len: usize) -> Result<Vec<Vec<Word>>> {
    op.slices(len)?
        .iter()
        .map(|x| enumerate_length(x, len))
        .collect()
}

/// `s ≼ t`. False when either word lies outside `S_0` or the lengths differ.
pub fn membership_query(op: &mut dyn RestrictionOperator, s: &[Letter], t: &[Letter]) -> Result<bool> {
    if s.len() != t.len() {
        return Ok(false);
    }
    let slices = op.slices(s.len())?;
    Ok(match (rank_in(&slices, s), rank_in(&slices, t)) {
        (Some(a), Some(b)) => a <= b,
        _ => false,
    })
}

/// Which check of the equivalence query failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// Pairs outside `S_0 × S_0`.
    Domain,
    Reflexive,
    Transitive,
    Total,
    /// The minimal classes are not what `F` removes.
    Peeling,
    /// Direct comparison with the per-length oracle.
    Oracle,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Domain => "domain",
            Condition::Reflexive => "reflexive",
            Condition::Transitive => "transitive",
            Condition::Total => "total",
            Condition::Peeling => "peeling",
            Condition::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone)]
pub enum EqAnswer {
    Equal,
    Counterexample { word: Word, condition: Condition },
    /// Agrees with the oracle up to the length cap but cannot be certified.
    Uncertified,
    /// A violation exists only beyond the length cap.
    TooLong { len: usize, condition: Condition },
}

struct Oracle<'a> {
    op: &'a mut dyn RestrictionOperator,
    slices: HashMap<usize, Vec<Nfa>>,
    pair: Arc<Layout>,
    size: u32,
}

impl<'a> Oracle<'a> {
    fn new(op: &'a mut dyn RestrictionOperator) -> Result<Self> {
        let state = op.state_layout();
        Ok(Oracle {
            pair: pair_layout(&state)?,
            size: state.size(),
            op,
            slices: HashMap::new(),
        })
    }

    fn slices(&mut self, len: usize) -> Result<&[Nfa]> {
        if !self.slices.contains_key(&len) {
            let s = self.op.slices(len)?;
            self.slices.insert(len, s);
        }
        Ok(&self.slices[&len])
    }

    fn member(&mut self, w: &[Letter]) -> Result<bool> {
        let size = self.size;
        let (s, t) = split(w, size);
        let slices = self.slices(w.len())?;
        Ok(matches!(
            (rank_in(slices, &s), rank_in(slices, &t)),
            (Some(a), Some(b)) if a <= b
        ))
    }

    fn truth(&mut self, len: usize) -> Result<Nfa> {
        let pair = self.pair.clone();
        truth_at(self.slices(len)?, &pair)
    }

    /// Length of a shortest `x ⊗ y ⊗ z` meeting every relation on its pair of
    /// components.
    fn triples(&self, parts: &[(&Nfa, &Vec<usize>, &Vec<usize>)]) -> Result<Option<usize>> {
        let state = self.op.state_layout();
        let mut tracks = self.pair.tracks().to_vec();
        tracks.extend(state.tracks().iter().map(|t| t.renamed(format!("{}''", t.name))));
        let out = Layout::new(tracks)?;
        let mut acc = Nfa::universal(out.clone());
        let all: Vec<usize> = (0..out.arity()).collect();
        for (r, a, b) in parts {
            let cols: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
            acc = join(
                &acc,
                r,
                &JoinSpec {
                    a_cols: &all,
                    b_cols: &cols,
                    out: out.clone(),
                },
            )?;
            if is_empty(&acc) {
                return Ok(None);
            }
        }
        Ok(shortest_word(&acc)?.map(|w| w.len()))
    }

    /// Shortest-lex pair word of length `len` on which `h` is wrong.
    fn diff_at(&mut self, h: &Nfa, len: usize) -> Result<Option<Word>> {
        let truth = self.truth(len)?;
        let hl = intersect(h, &of_length(self.pair.clone(), len))?;
        let d = difference(&hl, &truth)?.union(&difference(&truth, &hl)?)?;
        shortest_word(&d)
    }

    fn equivalence(&mut self, h: &Nfa, max_len: usize) -> Result<EqAnswer> {
        let s0 = reduce(&self.op.initial())?;
        let pair = self.pair.clone();
        let ss = pair_product(&s0, &s0, &pair)?;
        let hinv = inverse(h)?;
        let mut checks: Vec<(Condition, Nfa)> = vec![
            (Condition::Domain, difference(h, &ss)?),
            (Condition::Reflexive, difference(&diagonal(&s0, &pair), h)?),
            (Condition::Total, difference(&ss, &h.union(&hinv)?)?),
        ];
        let mut found = None;
        for (c, a) in checks.drain(..) {
            if let Some(w) = shortest_word(&a)? {
                found = Some((c, w.len()));
                break;
            }
        }
        let w = s0.layout().arity();
        let (x, y, z): (Vec<usize>, Vec<usize>, Vec<usize>) =
            ((0..w).collect(), (w..2 * w).collect(), (2 * w..3 * w).collect());
        if found.is_none() {
            // (x,y) ∈ R, (y,z) ∈ R, (x,z) ∉ R
            let not_h = complement(h)?;
            let bad = self.triples(&[(h, &x, &y), (h, &y, &z), (&not_h, &x, &z)])?;
            if let Some(n) = bad {
                found = Some((Condition::Transitive, n));
            }
        }
        let mut symbolic = true;
        if found.is_none() {
            match self.op.uniform_apply(h)? {
                Some(u) => {
                    let h_q = intersect(h, &hinv)?;
                    let h_nq = difference(h, &hinv)?;
                    // (t,s) ∈ R exactly when t ∈ F(↑s)
                    let c1 = reduce(&intersect(&h_q, &u)?.union(&difference(&h_nq, &u)?)?)?;
                    // (t,s) ∉ R or t ∉ F(↑s)
                    let c2 = reduce(&h_nq.union(&difference(h, &u)?)?)?;
                    if let Some(n) = self.triples(&[(&c1, &x, &y), (&c2, &x, &z)])? {
                        found = Some((Condition::Peeling, n));
                    }
                }
                None => symbolic = false,
            }
        }
        match found {
            Some((condition, len)) => {
                if len > max_len {
                    return Ok(EqAnswer::TooLong { len, condition });
                }
                match self.diff_at(h, len)? {
                    Some(word) => Ok(EqAnswer::Counterexample { word, condition }),
                    None => Err(Error::Capacity(format!(
                        "{condition} check failed at length {len} but the oracle agrees there"
                    ))),
                }
            }
            None if symbolic => Ok(EqAnswer::Equal),
            None => {
                for len in 0..=max_len {
                    if let Some(word) = self.diff_at(h, len)? {
                        return Ok(EqAnswer::Counterexample {
                            word,
                            condition: Condition::Oracle,
                        });
                    }
                }
                Ok(EqAnswer::Uncertified)
            }
        }
    }
}

/// Checks a hypothesis for `≼` over the pair layout.
pub fn equivalence_query(
    op: &mut dyn RestrictionOperator,
    h: &Nfa,
    budget: &Budget,
) -> Result<EqAnswer> {
    Oracle::new(op)?.equivalence(h, budget.max_len)
}

/// A learned disappearance relation.
#[derive(Debug, Clone)]
pub struct DisappearanceRelation {
    /// Trimmed minimal DFA over the pair layout.
    pub relation: Nfa,
    pub eq_queries: usize,
    pub mq_queries: usize,
    /// State counts of the successive hypotheses.
    pub hypotheses: Vec<usize>,
    /// Lengths at which the relation was compared with the oracle.
    pub certified_upto: usize,
    pub transcript: Vec<String>,
}

impl DisappearanceRelation {
    pub fn num_states(&self) -> usize {
        self.relation.num_states()
    }
}

struct Table {
    prefixes: Vec<Word>,
    suffixes: Vec<Word>,
}

/// Angluin's algorithm, counterexample suffixes added as experiments.
pub fn learn_relation(
    op: &mut dyn RestrictionOperator,
    budget: &Budget,
) -> Result<DisappearanceRelation> {
    let name = op.name();
    let mut oracle = Oracle::new(op)?;
    let pair = oracle.pair.clone();
    let letters = pair.size();
    let mut cache: HashMap<Word, bool> = HashMap::new();
    let mut transcript = vec![format!("learning {name}")];
    let mut hypotheses = vec![];
    let mut eqs = 0usize;
    let mut table = Table {
        prefixes: vec![vec![]],
        suffixes: vec![vec![]],
    };
    let mut last: Option<Nfa> = None;

    let diverge = |reason: String,
                   eqs: usize,
                   mqs: usize,
                   last: Option<Nfa>,
                   mut transcript: Vec<String>| {
        transcript.push(format!("diverged: {reason}"));
        Error::Diverged(Box::new(Divergence {
            operator: name.clone(),
            reason,
            eq_queries: eqs,
            mq_queries: mqs,
            last_hypothesis: last,
            transcript,
        }))
    };

    loop {
        // close the table
        let mut rows: HashMap<Vec<bool>, usize> = HashMap::new();
        let row_of = |u: &[Letter],
                          suffixes: &[Word],
                          cache: &mut HashMap<Word, bool>,
                          oracle: &mut Oracle|
         -> Result<Vec<bool>> {
            suffixes
                .iter()
                .map(|e| {
                    let mut w = u.to_vec();
                    w.extend_from_slice(e);
                    if let Some(&b) = cache.get(&w) {
                        return Ok(b);
                    }
                    let b = oracle.member(&w)?;
                    cache.insert(w, b);
                    Ok(b)
                })
                .collect()
        };
        let mut i = 0;
        let mut delta: Vec<Vec<usize>> = vec![];
        let mut accepting = vec![];
        while i < table.prefixes.len() {
            let u = table.prefixes[i].clone();
            let r = row_of(&u, &table.suffixes, &mut cache, &mut oracle)?;
            accepting.push(r[0]);
            rows.entry(r).or_insert(i);
            i += 1;
        }
        let mut q = 0;
        while q < table.prefixes.len() {
            let mut succ = Vec::with_capacity(letters as usize);
            for a in 0..letters {
                let mut ua = table.prefixes[q].clone();
                ua.push(a);
                let r = row_of(&ua, &table.suffixes, &mut cache, &mut oracle)?;
                let target = match rows.get(&r) {
                    Some(&t) => t,
                    None => {
                        let t = table.prefixes.len();
                        accepting.push(r[0]);
                        rows.insert(r, t);
                        table.prefixes.push(ua);
                        t
                    }
                };
                succ.push(target);
            }
            delta.push(succ);
            q += 1;
            if cache.len() > budget.max_mq {
                return Err(diverge(
                    format!("membership budget {} exhausted", budget.max_mq),
                    eqs,
                    cache.len(),
                    last,
                    transcript,
                ));
            }
        }
        let mut h = Nfa::new(pair.clone());
        for &acc in &accepting {
            h.add_state(acc);
        }
        h.add_initial(0);
        for (p, succ) in delta.iter().enumerate() {
            for (a, &t) in succ.iter().enumerate() {
                h.add_transition(p as u32, a as Letter, t as u32);
            }
        }
        h.normalize();
        let h = reduce(&h)?;
        hypotheses.push(h.num_states());
        if eqs >= budget.max_eq {
            return Err(diverge(
                format!("equivalence budget {} exhausted", budget.max_eq),
                eqs,
                cache.len(),
                Some(h),
                transcript,
            ));
        }
        eqs += 1;
        let answer = oracle.equivalence(&h, budget.max_len)?;
        match answer {
            EqAnswer::Equal => {
                transcript.push(format!("eq {eqs}: {} states, accepted", h.num_states()));
                let mut certified_upto = 0;
                for len in 0..=budget.certify_len {
                    if let Some(w) = oracle.diff_at(&h, len)? {
                        return Err(Error::Capacity(format!(
                            "accepted hypothesis disagrees with the oracle on {}",
                            pair.format_word(&w)
                        )));
                    }
                    certified_upto = len;
                }
                transcript.push(format!(
                    "done: {} states, {eqs} equivalence, {} membership queries",
                    h.num_states(),
                    cache.len()
                ));
                return Ok(DisappearanceRelation {
                    relation: h,
                    eq_queries: eqs,
                    mq_queries: cache.len(),
                    hypotheses,
                    certified_upto,
                    transcript,
                });
            }
            EqAnswer::Counterexample { word, condition } => {
                transcript.push(format!(
                    "eq {eqs}: {} states, {condition} fails, counterexample {}",
                    h.num_states(),
                    pair.format_word(&word)
                ));
                for k in 0..word.len() {
                    let e = word[k..].to_vec();
                    if !table.suffixes.contains(&e) {
                        table.suffixes.push(e);
                    }
                }
                last = Some(h);
            }
            EqAnswer::Uncertified => {
                transcript.push(format!("eq {eqs}: {} states, no certificate", h.num_states()));
                return Err(diverge(
                    format!(
                        "hypothesis agrees with the oracle up to length {} but cannot be certified",
                        budget.max_len
                    ),
                    eqs,
                    cache.len(),
                    Some(h),
                    transcript,
                ));
            }
            EqAnswer::TooLong { len, condition } => {
                transcript.push(format!(
                    "eq {eqs}: {} states, {condition} fails at length {len}",
                    h.num_states()
                ));
                return Err(diverge(
                    format!(
                        "shortest violation has length {len}, beyond the cap {}",
                        budget.max_len
                    ),
                    eqs,
                    cache.len(),
                    Some(h),
                    transcript,
                ));
            }
        }
    }
}

/// `F(X) = X`; the relation is `S_0 × S_0`.
pub struct IdentityOperator {
    s0: Nfa,
}

impl IdentityOperator {
    pub fn new(s0: Nfa) -> Self {
        IdentityOperator { s0 }
    }
}

impl RestrictionOperator for IdentityOperator {
    fn name(&self) -> String {
        "identity".into()
    }

    fn state_layout(&self) -> Arc<Layout> {
        self.s0.layout().clone()
    }

    fn initial(&self) -> Nfa {
        self.s0.clone()
    }

    fn apply(&mut self, x: &Nfa) -> Result<Nfa> {
        Ok(x.clone())
    }

    fn uniform_apply(&mut self, r: &Nfa) -> Result<Option<Nfa>> {
        Ok(Some(r.clone()))
    }
}

/// Announcing a closed formula: `F(X) = ⟦φ⟧(M|X)`.
pub struct FormulaOperator {
    m: Kripke,
    phi: Core,
    s0: Nfa,
    opts: Options,
}

impl FormulaOperator {
    pub fn new(m: &Kripke, phi: &Core, opts: Options) -> Result<Self> {
        if !phi.is_closed() || phi.has_star() {
            return Err(Error::UnsupportedStar(format!(
                "announced formula must be closed and star-free: {phi}"
            )));
        }
        Ok(FormulaOperator {
            s0: reduce(&state_space(m)?)?,
            m: m.clone(),
            phi: phi.clone(),
            opts,
        })
    }

    fn evaluator(&self) -> Evaluator {
        Evaluator::new(Options {
            dot_dir: None,
            ..self.opts.clone()
        })
    }
}

impl RestrictionOperator for FormulaOperator {
    fn name(&self) -> String {
        format!("announcing {}", self.phi)
    }

    fn state_layout(&self) -> Arc<Layout> {
        self.m.state_layout()
    }

    fn initial(&self) -> Nfa {
        self.s0.clone()
    }

    fn apply(&mut self, x: &Nfa) -> Result<Nfa> {
        let sub = restrict(&self.m, x)?;
        let mut ev = self.evaluator();
        let sat = ev.sat_states(&sub, &self.phi)?;
        intersect(&sat, x)
    }

    fn uniform_apply(&mut self, r: &Nfa) -> Result<Option<Nfa>> {
        let sat = context_sat(&self.m, r, &self.phi, &mut self.evaluator())?;
        Ok(Some(sat))
    }
}

/// Context tracks copying the state tracks of `m`.
fn context_tracks(m: &Kripke) -> Vec<Track> {
    let base = m.ctx().len();
    m.state_layout()
        .tracks()
        .iter()
        .enumerate()
        .map(|(i, t)| t.renamed(format!("ctx{}", base + i)))
        .collect()
}

/// Evaluates closed `f` on every slice `M|↑c`, `↑c = {u | (c, u) ∈ r}`, and
/// returns `{(c, u) | u ∈ ⟦f⟧(M|↑c)}` over the pair layout of `m`.
fn context_sat(m: &Kripke, r: &Nfa, f: &Core, ev: &mut Evaluator) -> Result<Nfa> {
    let w = m.state_layout().arity();
    let ctx = context_tracks(m);
    let mut tracks = m.state_layout().tracks().to_vec();
    tracks.extend(ctx.iter().cloned());
    let flipped: Vec<usize> = (w..2 * w).chain(0..w).collect();
    let constraint = permute(r, &flipped)?.with_layout(Layout::new(tracks)?)?;
    let k = extend_context(m, ctx, &constraint)?;
    let sat = ev.sat_states(&k, f)?;
    let back = permute(&sat, &flipped)?;
    reduce(&back.with_layout(r.layout().clone())?)
}

/// `⟦[φ!]* ψ⟧(M)`: states that disappear under iterated `φ`, together with
/// the states satisfying `ψ` in some stage `M|S_k`.
pub fn star_sat(ev: &mut Evaluator, m: &Kripke, phi: &Core, psi: &Core) -> Result<Nfa> {
    let opts = ev.options().clone();
    let budget = opts.budget;
    let mut op = FormulaOperator::new(m, phi, opts)?;
    let learned = match learn_relation(&mut op, &budget) {
        Ok(l) => l,
        Err(e) => {
            if let Error::Diverged(d) = &e {
                for line in &d.transcript {
                    ev.log(line.clone());
                }
            }
            return Err(e);
        }
    };
    ev.stats_mut().relations_learned += 1;
    for line in &learned.transcript {
        ev.log(line.clone());
    }
    let rel = &learned.relation;
    let u = op
        .uniform_apply(rel)?
        .expect("formula operators apply uniformly");
    let s0 = op.initial();
    let pair = rel.layout().clone();
    let w = s0.layout().arity();
    let s_cols: Vec<usize> = (0..w).collect();
    let surviving = intersect(&u, &diagonal(&s0, &pair))?.project(&s_cols)?;
    let vanishing = difference(&s0, &surviving.with_layout(s0.layout().clone())?)?;
    let stage = context_sat(m, rel, psi, ev)?;
    // (t, s) with s ∈ ⟦ψ⟧(M|↑t): keep s
    let t_cols: Vec<usize> = (w..2 * w).collect();
    let in_stage = stage.project(&t_cols)?.with_layout(s0.layout().clone())?;
    reduce(&vanishing.union(&in_stage)?)
}

/// The operator on `a*b*` that keeps `ε` and `a^n b^m` (n, m > 0) whenever
/// `a^{n-1} b^{m-1}` is kept. Words `a^n b^n` survive forever; `a^n b^m` with
/// `n ≠ m` disappears in round `min(n, m) + 1`. The relation is not regular.
pub struct AnBnOperator {
    layout: Arc<Layout>,
    s0: Nfa,
}

impl Default for AnBnOperator {
    fn default() -> Self {
        Self::new()
    }
}

impl AnBnOperator {
    pub fn new() -> Self {
        let layout = Layout::single(Track::new("st", &["a", "b"]));
        let mut s0 = Nfa::new(layout.clone());
        let p = s0.add_state(true);
        let q = s0.add_state(true);
        s0.add_initial(p);
        s0.add_transition(p, 0, p);
        s0.add_transition(p, 1, q);
        s0.add_transition(q, 1, q);
        s0.normalize();
        AnBnOperator { layout, s0 }
    }
}

impl RestrictionOperator for AnBnOperator {
    fn name(&self) -> String {
        "a^n b^m peeling".into()
    }

    fn state_layout(&self) -> Arc<Layout> {
        self.layout.clone()
    }

    fn initial(&self) -> Nfa {
        self.s0.clone()
    }

    fn apply(&mut self, x: &Nfa) -> Result<Nfa> {
        let a = Nfa::word(self.layout.clone(), &[0]);
        let b = Nfa::word(self.layout.clone(), &[1]);
        let wrapped = a.concat(x)?.concat(&b)?;
        let eps = Nfa::epsilon(self.layout.clone());
        intersect(&eps.union(&wrapped)?, &self.s0)
    }

    /// The operator moves between lengths `len, len - 2, …`, so all of them
    /// are iterated together and then cut back to `len`.
    fn slices(&mut self, len: usize) -> Result<Vec<Nfa>> {
        let mut support = Nfa::empty(self.layout.clone());
        for l in (len % 2..=len).step_by(2) {
            support = support.union(&of_length(self.layout.clone(), l))?;
        }
        let mut x = reduce(&intersect(&self.s0, &support)?)?;
        let exact = of_length(self.layout.clone(), len);
        let mut out: Vec<Nfa> = vec![];
        loop {
            let cut = reduce(&intersect(&x, &exact)?)?;
            let same = match out.last() {
                Some(prev) => equivalent(prev, &cut)?.is_none(),
                None => false,
            };
            if !same {
                out.push(cut);
            }
            let y = reduce(&intersect(&self.apply(&x)?, &x)?)?;
            if equivalent(&x, &y)?.is_none() {
                return Ok(out);
            }
            x = y;
        }
    }
}
