//! Satisfaction sets as regular languages.
//!
//! A formula is evaluated against an extended transducer: the structure's
//! transducer with one bit track per variable, each spelling `0*10*`. Only
//! the variables that matter are carried: a satisfaction set has tracks
//! `st`, the context tracks, then one track per free variable of the formula
//! or of the transducer, in the evaluator's variable order.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::automata::{
    constraint_core, difference, intersect, is_empty, join, reduce, shortest_word, to_dot,
    Constraint, JoinSpec, Layout, Nfa, Track, Word,
};
use crate::disappearance::{self, Budget};
use crate::error::{Error, Result};
use crate::formula::{analyze_with, bind_agents, desugar, parse_formula, Analysis, Core};
use crate::kripke::{restrict, state_space, Kripke, OBS, SRC, TGT};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

fn var_track(v: &str) -> Track {
    Track::bits(format!("@{v}"))
}

/// Transducer of a structure extended with valuation tracks.
#[derive(Debug, Clone)]
pub struct ExtTransducer {
    base: Kripke,
    vars: Vec<String>,
    nfa: Nfa,
    id: u64,
}

impl ExtTransducer {
    pub fn from_kripke(m: &Kripke) -> Self {
        ExtTransducer {
            base: m.clone(),
            vars: vec![],
            nfa: m.trans().clone(),
            id: fresh_id(),
        }
    }

    pub fn nfa(&self) -> &Nfa {
        &self.nfa
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn base(&self) -> &Kripke {
        &self.base
    }

    /// The structure itself; only defined without valuation tracks.
    pub fn to_kripke(&self) -> Result<Kripke> {
        if !self.vars.is_empty() {
            return Err(Error::UnsupportedStar(format!(
                "transducer depends on variables {}",
                self.vars.join(", ")
            )));
        }
        self.base.with_trans(self.nfa.clone())
    }

    /// State words with their valuations: projection to `src`, context, vars.
    pub fn states(&self) -> Result<Nfa> {
        let k = self.base.trans_layout().arity();
        let cols: Vec<usize> = std::iter::once(SRC)
            .chain(3..k)
            .chain(k..k + self.vars.len())
            .collect();
        let p = self.nfa.project(&cols)?;
        p.with_layout(sat_layout(&self.base, &self.vars)?)
    }
}

fn sat_layout(m: &Kripke, vars: &[String]) -> Result<Arc<Layout>> {
    let mut tracks = m.state_layout().tracks().to_vec();
    tracks.extend(vars.iter().map(|v| var_track(v)));
    Layout::new(tracks)
}

fn trans_layout(m: &Kripke, vars: &[String]) -> Result<Arc<Layout>> {
    let mut tracks = m.trans_layout().tracks().to_vec();
    tracks.extend(vars.iter().map(|v| var_track(v)));
    Layout::new(tracks)
}

/// A satisfaction set: state words (with context) and valuations.
#[derive(Debug, Clone)]
pub struct SatSet {
    vars: Vec<String>,
    nfa: Nfa,
}

impl SatSet {
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn nfa(&self) -> &Nfa {
        &self.nfa
    }

    /// Projection to the state tracks.
    pub fn states(&self) -> Result<Nfa> {
        let width = self.nfa.layout().arity() - self.vars.len();
        self.nfa.project(&(0..width).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Variables to place first in the track order.
    pub var_order: Vec<String>,
    /// Directory receiving a DOT file per evaluation step.
    pub dot_dir: Option<PathBuf>,
    pub budget: Budget,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub steps: usize,
    pub cache_hits: usize,
    pub peak_states: usize,
    pub relations_learned: usize,
}

pub struct Evaluator {
    opts: Options,
    order: Vec<String>,
    cache: HashMap<(String, u64), SatSet>,
    tops: HashMap<(u64, Vec<String>), SatSet>,
    announced: HashMap<(String, u64), ExtTransducer>,
    stats: Stats,
    transcript: Vec<String>,
    dot_seq: usize,
}

fn exactly_one() -> Nfa {
    constraint_core(Constraint::ExactlyOne(0)).expect("fixed automaton")
}

impl Evaluator {
    pub fn new(opts: Options) -> Self {
        let order = opts.var_order.clone();
        Evaluator {
            opts,
            order,
            cache: HashMap::new(),
            tops: HashMap::new(),
            announced: HashMap::new(),
            stats: Stats::default(),
            transcript: Vec::new(),
            dot_seq: 0,
        }
    }

    pub fn options(&self) -> &Options {
        &self.opts
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    pub(crate) fn stats_mut(&mut self) -> &mut Stats {
        &mut self.stats
    }

    /// Lines logged by the learner while resolving iterated announcements.
    pub fn transcript(&self) -> &[String] {
        &self.transcript
    }

    /// Takes over variable order, statistics and transcript of `old`.
    pub fn inherit(&mut self, old: Evaluator) {
        self.order = old.order;
        self.stats = old.stats;
        self.transcript = old.transcript;
        self.dot_seq = old.dot_seq;
    }

    pub(crate) fn log(&mut self, line: String) {
        self.transcript.push(line);
    }

    /// Extends the variable order with the variables of an analyzed formula.
    pub fn register(&mut self, analysis: &Analysis) {
        for v in &analysis.vars {
            if !self.order.contains(v) {
                self.order.push(v.clone());
            }
        }
    }

    fn rank(&mut self, v: &str) -> usize {
        match self.order.iter().position(|o| o == v) {
            Some(i) => i,
            None => {
                self.order.push(v.to_string());
                self.order.len() - 1
            }
        }
    }

    fn sorted<'a>(&mut self, vars: impl IntoIterator<Item = &'a String>) -> Vec<String> {
        let mut vs: Vec<String> = Vec::new();
        for v in vars {
            if !vs.contains(v) {
                vs.push(v.clone());
            }
        }
        let mut keyed: Vec<(usize, String)> = vs.into_iter().map(|v| (self.rank(&v), v)).collect();
        keyed.sort();
        keyed.into_iter().map(|(_, v)| v).collect()
    }

    fn note(&mut self, a: &Nfa) {
        self.stats.peak_states = self.stats.peak_states.max(a.num_states());
    }

    fn dump(&mut self, kind: &str, a: &Nfa) {
        if let Some(dir) = &self.opts.dot_dir {
            self.dot_seq += 1;
            let name = format!("{:04}-{kind}", self.dot_seq);
            let _ = std::fs::create_dir_all(dir);
            let _ = std::fs::write(dir.join(format!("{name}.dot")), to_dot(a, &name));
        }
    }

    /// Adds unconstrained (exactly-one) tracks for the missing variables.
    /// `fixed` is the number of leading non-variable tracks.
    fn cylindrify(
        &mut self,
        nfa: &Nfa,
        fixed: usize,
        have: &[String],
        want: &[String],
        layout_for: impl Fn(&[String]) -> Result<Arc<Layout>>,
    ) -> Result<Nfa> {
        let mut cur: Vec<String> = have.to_vec();
        let mut a = nfa.clone();
        for v in want {
            if cur.contains(v) {
                continue;
            }
            let mut next = cur.clone();
            next.push(v.clone());
            let next = self.sorted(next.iter());
            let out = layout_for(&next)?;
            let pos = |name: &String| fixed + next.iter().position(|x| x == name).unwrap();
            let a_cols: Vec<usize> = (0..fixed).chain(cur.iter().map(pos)).collect();
            let b_cols = [pos(v)];
            a = join(
                &a,
                &exactly_one(),
                &JoinSpec {
                    a_cols: &a_cols,
                    b_cols: &b_cols,
                    out,
                },
            )?;
            cur = next;
        }
        Ok(a)
    }

    fn align(&mut self, s: &SatSet, want: &[String], base: &Kripke) -> Result<SatSet> {
        if s.vars == want {
            return Ok(s.clone());
        }
        let fixed = 1 + base.ctx().len();
        let nfa = self.cylindrify(&s.nfa, fixed, &s.vars, want, |vs| sat_layout(base, vs))?;
        Ok(SatSet {
            vars: want.to_vec(),
            nfa,
        })
    }

    fn align_t(&mut self, t: &ExtTransducer, want: &[String]) -> Result<ExtTransducer> {
        if t.vars == want {
            return Ok(t.clone());
        }
        let fixed = t.base.trans_layout().arity();
        let base = t.base.clone();
        let nfa = self.cylindrify(&t.nfa, fixed, &t.vars, want, |vs| trans_layout(&base, vs))?;
        Ok(ExtTransducer {
            base: t.base.clone(),
            vars: want.to_vec(),
            nfa,
            id: fresh_id(),
        })
    }

    /// The extended transducer over exactly the variables `vars`.
    pub fn init_extended(&mut self, m: &Kripke, vars: &[String]) -> Result<ExtTransducer> {
        let t = ExtTransducer::from_kripke(m);
        let want = self.sorted(vars.iter());
        self.align_t(&t, &want)
    }

    /// `⟦⊤⟧(T)` over `want ⊇ vars(T)`.
    pub fn top(&mut self, t: &ExtTransducer, want: &[String]) -> Result<SatSet> {
        let key = (t.id, want.to_vec());
        if let Some(s) = self.tops.get(&key) {
            return Ok(s.clone());
        }
        let base = SatSet {
            vars: t.vars.clone(),
            nfa: reduce(&t.states()?)?,
        };
        let s = self.align(&base, want, &t.base)?;
        self.tops.insert(key, s.clone());
        Ok(s)
    }

    fn union_vars(&mut self, a: &[String], b: &[String]) -> Vec<String> {
        let all: Vec<String> = a.iter().chain(b).cloned().collect();
        self.sorted(all.iter())
    }

    fn var_col(t: &ExtTransducer, vars: &[String], v: &str) -> usize {
        1 + t.base.ctx().len() + vars.iter().position(|x| x == v).expect("variable present")
    }

    pub fn eval(&mut self, f: &Core, t: &ExtTransducer) -> Result<SatSet> {
        let key = (f.canonical_key(), t.id);
        if let Some(s) = self.cache.get(&key) {
            self.stats.cache_hits += 1;
            return Ok(s.clone());
        }
        let s = self.eval_uncached(f, t)?;
        self.stats.steps += 1;
        self.note(&s.nfa);
        let kind = match f {
            Core::Top => "top",
            Core::Not(_) => "not",
            Core::And(..) => "and",
            Core::Exists(..) => "exists",
            Core::AtZero(_) | Core::ModZero(..) | Core::Offset(..) => "index",
            Core::Prop(..) => "prop",
            Core::Diamond(..) => "diamond",
            Core::Announce(..) => "announce",
            Core::Star(..) => "star",
        };
        self.dump(kind, &s.nfa);
        self.cache.insert(key, s.clone());
        Ok(s)
    }

    fn atom_top(&mut self, t: &ExtTransducer, vars: &[&String]) -> Result<SatSet> {
        let want = self.union_vars(&t.vars, &vars.iter().map(|v| (*v).clone()).collect::<Vec<_>>());
        self.top(t, &want)
    }

    fn eval_uncached(&mut self, f: &Core, t: &ExtTransducer) -> Result<SatSet> {
        match f {
            Core::Top => {
                let vars = t.vars.clone();
                self.top(t, &vars)
            }
            Core::Not(a) => {
                let sa = self.eval(a, t)?;
                let top = self.top(t, &sa.vars)?;
                Ok(SatSet {
                    nfa: reduce(&difference(&top.nfa, &sa.nfa)?)?,
                    vars: sa.vars,
                })
            }
            Core::And(a, b) => {
                let sa = self.eval(a, t)?;
                if is_empty(&sa.nfa) {
                    let want = self.union_vars(&sa.vars, &b.free_vars());
                    let want = self.union_vars(&want, &t.vars);
                    let layout = sat_layout(&t.base, &want)?;
                    return Ok(SatSet {
                        vars: want,
                        nfa: Nfa::empty(layout),
                    });
                }
                let sb = self.eval(b, t)?;
                let want = self.union_vars(&sa.vars, &sb.vars);
                let sa = self.align(&sa, &want, &t.base)?;
                let sb = self.align(&sb, &want, &t.base)?;
                Ok(SatSet {
                    nfa: intersect(&sa.nfa, &sb.nfa)?,
                    vars: want,
                })
            }
            Core::Exists(v, a) => {
                let sa = self.eval(a, t)?;
                let with = self.union_vars(&sa.vars, std::slice::from_ref(v));
                let sa = self.align(&sa, &with, &t.base)?;
                let drop = Self::var_col(t, &sa.vars, v);
                let keep: Vec<usize> = (0..sa.nfa.layout().arity()).filter(|&c| c != drop).collect();
                let vars: Vec<String> = sa.vars.iter().filter(|x| *x != v).cloned().collect();
                let nfa = sa.nfa.project(&keep)?;
                Ok(SatSet {
                    nfa: reduce(&nfa)?,
                    vars,
                })
            }
            Core::AtZero(v) | Core::ModZero(v, _) => {
                let top = self.atom_top(t, &[v])?;
                let c = match f {
                    Core::AtZero(_) => Constraint::AtZero(0),
                    Core::ModZero(_, k) => Constraint::ModZero(0, *k),
                    _ => unreachable!(),
                };
                let col = Self::var_col(t, &top.vars, v);
                self.constrain(top, c, &[col])
            }
            Core::Offset(a, b, k) => {
                let top = self.atom_top(t, &[a, b])?;
                // the 1 of `a` sits k places after the 1 of `b`
                let cols = [
                    Self::var_col(t, &top.vars, b),
                    Self::var_col(t, &top.vars, a),
                ];
                self.constrain(top, Constraint::Offset(0, 1, *k), &cols)
            }
            Core::Prop(p, v) => {
                let sig = t.base.signature().clone();
                let pi = sig
                    .prop_index(p)
                    .ok_or_else(|| Error::Unknown(format!("unknown proposition `{p}`")))?;
                let top = self.atom_top(t, &[v])?;
                let col = Self::var_col(t, &top.vars, v);
                let layout = top.nfa.layout().clone();
                let nfa = top.nfa.filter_letters(|l| {
                    layout.digit(l, col) == 0 || sig.holds(pi, layout.digit(l, 0))
                });
                Ok(SatSet {
                    nfa: nfa.trim(),
                    vars: top.vars,
                })
            }
            Core::Diamond(v, a) => {
                let sa = self.eval(a, t)?;
                let r = self.union_vars(&sa.vars, std::slice::from_ref(v));
                let sa = self.align(&sa, &r, &t.base)?;
                let tx = self.align_t(t, &r)?;
                let k = t.base.trans_layout().arity();
                let vcol = k + r.iter().position(|x| x == v).unwrap();
                let tl = tx.nfa.layout().clone();
                let tf = tx
                    .nfa
                    .filter_letters(|l| tl.digit(l, OBS) == tl.digit(l, vcol));
                let c = t.base.ctx().len();
                let out = sat_layout(&t.base, &r)?;
                let width = out.arity();
                let (h_obs, h_tgt) = (width, width + 1);
                let a_cols: Vec<usize> = [0, h_obs, h_tgt]
                    .into_iter()
                    .chain(1..=c)
                    .chain(1 + c..width)
                    .collect();
                let b_cols: Vec<usize> = std::iter::once(h_tgt).chain(1..width).collect();
                let nfa = join(
                    &tf,
                    &sa.nfa,
                    &JoinSpec {
                        a_cols: &a_cols,
                        b_cols: &b_cols,
                        out,
                    },
                )?;
                Ok(SatSet {
                    nfa: reduce(&nfa)?,
                    vars: r,
                })
            }
            Core::Announce(a, b) => {
                let neg = self.eval(&Core::Not(a.clone()), t)?;
                let t2 = self.announce(t, a)?;
                let sb = self.eval(b, &t2)?;
                let want = self.union_vars(&neg.vars, &sb.vars);
                let neg = self.align(&neg, &want, &t.base)?;
                let sb = self.align(&sb, &want, &t.base)?;
                Ok(SatSet {
                    nfa: reduce(&neg.nfa.union(&sb.nfa)?)?,
                    vars: want,
                })
            }
            Core::Star(a, b) => {
                let m = t.to_kripke()?;
                let nfa = disappearance::star_sat(self, &m, a, b)?;
                Ok(SatSet {
                    nfa: nfa.with_layout(sat_layout(&t.base, &[])?)?,
                    vars: vec![],
                })
            }
        }
    }

    fn constrain(&mut self, top: SatSet, c: Constraint, cols: &[usize]) -> Result<SatSet> {
        let core = constraint_core(c)?;
        let all: Vec<usize> = (0..top.nfa.layout().arity()).collect();
        let nfa = join(
            &top.nfa,
            &core,
            &JoinSpec {
                a_cols: &all,
                b_cols: cols,
                out: top.nfa.layout().clone(),
            },
        )?;
        Ok(SatSet {
            nfa,
            vars: top.vars,
        })
    }

    /// `T{φ!}`: transitions whose source and target both satisfy `φ` under
    /// the shared valuation.
    pub fn announce(&mut self, t: &ExtTransducer, f: &Core) -> Result<ExtTransducer> {
        let key = (f.canonical_key(), t.id);
        if let Some(t2) = self.announced.get(&key) {
            return Ok(t2.clone());
        }
        let sa = self.eval(f, t)?;
        let tx = self.align_t(t, &sa.vars)?;
        let layout = tx.nfa.layout().clone();
        let k = t.base.trans_layout().arity();
        let all: Vec<usize> = (0..layout.arity()).collect();
        let mut nfa = tx.nfa.clone();
        for side in [SRC, TGT] {
            let b_cols: Vec<usize> = std::iter::once(side)
                .chain(3..k)
                .chain(k..layout.arity())
                .collect();
            nfa = join(
                &nfa,
                &sa.nfa,
                &JoinSpec {
                    a_cols: &all,
                    b_cols: &b_cols,
                    out: layout.clone(),
                },
            )?;
        }
        let nfa = reduce(&nfa)?;
        self.note(&nfa);
        self.dump("transducer", &nfa);
        let t2 = ExtTransducer {
            base: t.base.clone(),
            vars: sa.vars,
            nfa,
            id: fresh_id(),
        };
        self.announced.insert(key, t2.clone());
        Ok(t2)
    }

    /// State words of `m` satisfying a closed formula.
    pub fn sat_states(&mut self, m: &Kripke, f: &Core) -> Result<Nfa> {
        let t = ExtTransducer::from_kripke(m);
        let s = self.eval(f, &t)?;
        if !s.vars.is_empty() {
            return Err(Error::Formula {
                pos: 0,
                msg: format!("free variables: {}", s.vars.join(", ")),
            });
        }
        Ok(s.nfa)
    }
}

/// Parses a formula and prepares it for evaluation on `m`: agent aliases are
/// bound, propositions checked and bound variables renamed apart.
pub fn compile_for(m: &Kripke, src: &str, order: &[String]) -> Result<(Core, Analysis)> {
    let f = parse_formula(src)?;
    let sig = m.signature();
    for (p, pos) in f.props() {
        if sig.prop_index(&p).is_none() {
            return Err(Error::Formula {
                pos,
                msg: format!("unknown proposition `{p}`"),
            });
        }
    }
    let f = bind_agents(&f, &sig.agents);
    analyze_with(&desugar(&f), order)
}

#[derive(Debug, Clone)]
pub struct Verdict {
    /// States where the formula fails.
    pub counterexamples: Nfa,
    /// A shortest counterexample state, if any.
    pub witness: Option<Word>,
}

impl Verdict {
    pub fn valid(&self) -> bool {
        self.witness.is_none()
    }
}

/// Checks a closed formula on every state of `m`.
pub fn check_core(ev: &mut Evaluator, m: &Kripke, f: &Core) -> Result<Verdict> {
    let neg = ev.sat_states(m, &Core::Not(Box::new(f.clone())))?;
    let counterexamples = reduce(&neg)?;
    let witness = shortest_word(&counterexamples)?;
    Ok(Verdict {
        counterexamples,
        witness,
    })
}

pub fn check_valid(ev: &mut Evaluator, m: &Kripke, src: &str) -> Result<Verdict> {
    let order = ev.options().var_order.clone();
    let (f, analysis) = compile_for(m, src, &order)?;
    if !analysis.closed {
        return Err(Error::Formula {
            pos: 0,
            msg: format!("free variables: {}", analysis.free.join(", ")),
        });
    }
    ev.register(&analysis);
    check_core(ev, m, &f)
}

/// Restricts `m` to the states satisfying a closed formula.
pub fn announce_model(ev: &mut Evaluator, m: &Kripke, f: &Core) -> Result<Kripke> {
    let keep = ev.sat_states(m, f)?;
    let r = restrict(m, &keep)?;
    r.minimized()
}

/// Convenience: state space of `m` after announcing closed `f`.
pub fn announced_states(ev: &mut Evaluator, m: &Kripke, f: &Core) -> Result<Nfa> {
    state_space(&announce_model(ev, m, f)?)
}
