//! Regular Kripke structures given by length-preserving transducers.
//!
//! A structure carries a base alphabet with a per-letter labelling and a
//! transducer over `src ⊗ obs ⊗ tgt`. Context tracks may follow; they are
//! shared by source and target, so a structure with context tracks is a
//! family of ordinary structures indexed by the context word.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::automata::{
    included, join, parse_automaton, track_constraint, Constraint, JoinSpec, Layout, Letter, Nfa,
    Track, Word,
};
use crate::error::{Error, Result};

pub const SRC: usize = 0;
pub const OBS: usize = 1;
pub const TGT: usize = 2;

/// Alphabet, propositions and agent aliases shared by derived structures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub sigma: Track,
    pub props: Vec<String>,
    /// `labels[sym]` lists the propositions true at a position carrying `sym`.
    pub labels: Vec<Vec<usize>>,
    pub agents: BTreeMap<String, usize>,
}

impl Signature {
    pub fn prop_index(&self, name: &str) -> Option<usize> {
        self.props.iter().position(|p| p == name)
    }

    pub fn holds(&self, prop: usize, sym: u32) -> bool {
        self.labels[sym as usize].contains(&prop)
    }

    pub fn agent(&self, name: &str) -> Option<usize> {
        self.agents.get(name).copied()
    }
}

#[derive(Debug, Clone)]
pub struct Kripke {
    sig: Arc<Signature>,
    ctx: Vec<Track>,
    trans: Nfa,
}

pub type RegularKripke = Kripke;
pub type ContextKripke = Kripke;

fn trans_layout(sigma: &Track, ctx: &[Track]) -> Result<Arc<Layout>> {
    let mut tracks = vec![
        sigma.renamed("src"),
        Track::bits("obs"),
        sigma.renamed("tgt"),
    ];
    tracks.extend(ctx.iter().cloned());
    Layout::new(tracks)
}

fn state_layout(sigma: &Track, ctx: &[Track]) -> Result<Arc<Layout>> {
    let mut tracks = vec![sigma.renamed("st")];
    tracks.extend(ctx.iter().cloned());
    Layout::new(tracks)
}

impl Kripke {
    /// Wraps a transducer; its tracks must be `src, obs, tgt` followed by the
    /// context tracks.
    pub fn new(sig: Arc<Signature>, ctx: Vec<Track>, trans: Nfa) -> Result<Self> {
        let want = trans_layout(&sig.sigma, &ctx)?;
        let trans = trans.with_layout(want)?;
        Ok(Kripke { sig, ctx, trans })
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn sigma(&self) -> &Track {
        &self.sig.sigma
    }

    pub fn ctx(&self) -> &[Track] {
        &self.ctx
    }

    pub fn trans(&self) -> &Nfa {
        &self.trans
    }

    pub fn trans_layout(&self) -> &Arc<Layout> {
        self.trans.layout()
    }

    /// Layout of state words: `st` then the context tracks.
    pub fn state_layout(&self) -> Arc<Layout> {
        state_layout(&self.sig.sigma, &self.ctx).expect("checked at construction")
    }

    /// Same structure with another transducer over the same layout.
    pub fn with_trans(&self, trans: Nfa) -> Result<Self> {
        crate::automata::same_layout(self.trans.layout(), trans.layout())?;
        Ok(Kripke {
            sig: self.sig.clone(),
            ctx: self.ctx.clone(),
            trans,
        })
    }

    pub fn minimized(&self) -> Result<Self> {
        self.with_trans(crate::automata::reduce(&self.trans)?)
    }

    /// Columns of the transducer holding the state word seen from `src` or `tgt`.
    pub(crate) fn side_cols(&self, side: usize) -> Vec<usize> {
        std::iter::once(side).chain(3..3 + self.ctx.len()).collect()
    }
}

/// Parses a model document and validates it.
pub fn parse_model(text: &str) -> Result<Kripke> {
    let err = |line: usize, msg: String| Error::Syntax { line, msg };
    let mut alphabet: Option<(usize, Vec<String>)> = None;
    let mut props_line: Option<(usize, String)> = None;
    let mut agents = BTreeMap::new();
    let mut block: Option<(usize, String)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if let Some((_, body)) = block.as_mut() {
            body.push_str(raw);
            body.push('\n');
            continue;
        }
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| err(line_no, format!("expected `key: value`, got `{line}`")))?;
        let rest = rest.trim();
        match key.trim() {
            "alphabet" => {
                alphabet = Some((line_no, rest.split_whitespace().map(String::from).collect()))
            }
            "props" => props_line = Some((line_no, rest.to_string())),
            "agents" => {
                for a in rest.split_whitespace() {
                    let (name, idx) = a
                        .split_once('=')
                        .ok_or_else(|| err(line_no, format!("bad agent alias `{a}`")))?;
                    let idx: usize = idx
                        .parse()
                        .map_err(|_| err(line_no, format!("bad agent index `{idx}`")))?;
                    agents.insert(name.to_string(), idx);
                }
            }
            "transducer" => {
                if !rest.is_empty() {
                    return Err(err(line_no, "`transducer:` takes no value".into()));
                }
                block = Some((line_no + 1, String::new()));
            }
            other => return Err(err(line_no, format!("unknown key `{other}`"))),
        }
    }
    let (aline, syms) = alphabet.ok_or_else(|| err(1, "missing `alphabet:` line".into()))?;
    if syms.is_empty() {
        return Err(err(aline, "empty alphabet".into()));
    }
    let sym_refs: Vec<&str> = syms.iter().map(String::as_str).collect();
    let sigma = Track::new("st", &sym_refs);
    if sym_refs.iter().any(|s| s.contains(',') || s.contains('|')) {
        return Err(err(aline, "letters may not contain `,` or `|`".into()));
    }
    let mut props: Vec<String> = Vec::new();
    let mut labels: Vec<Vec<usize>> = vec![Vec::new(); syms.len()];
    if let Some((pline, body)) = props_line {
        for entry in body.split(';').map(str::trim).filter(|e| !e.is_empty()) {
            let (sym, set) = entry
                .split_once('=')
                .ok_or_else(|| err(pline, format!("bad labelling `{entry}`")))?;
            let sym = sym.trim();
            let idx = sigma
                .sym_index(sym)
                .ok_or_else(|| err(pline, format!("`{sym}` is not in the alphabet")))?;
            let set = set.trim();
            let inner = set
                .strip_prefix('{')
                .and_then(|s| s.strip_suffix('}'))
                .ok_or_else(|| err(pline, format!("expected `{{...}}` in `{entry}`")))?;
            for p in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                let pi = match props.iter().position(|q| q == p) {
                    Some(pi) => pi,
                    None => {
                        props.push(p.to_string());
                        props.len() - 1
                    }
                };
                if !labels[idx as usize].contains(&pi) {
                    labels[idx as usize].push(pi);
                }
            }
        }
    }
    let sig = Arc::new(Signature {
        sigma: sigma.clone(),
        props,
        labels,
        agents,
    });
    let layout = trans_layout(&sigma, &[])?;
    let trans = match block {
        None => Nfa::empty(layout),
        Some((first, body)) => {
            let has_tracks = body
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .any(|l| l.starts_with("tracks:"));
            let body = if has_tracks {
                body
            } else {
                format!("tracks: {layout}\n{body}")
            };
            let first = if has_tracks { first } else { first - 1 };
            let a = parse_automaton(&body, first)?;
            let got = a.layout();
            if got.arity() != 3
                || got.track(0).syms != sigma.syms
                || got.track(2).syms != sigma.syms
                || got.track(1).syms != ["0", "1"]
            {
                return Err(Error::Validation {
                    check: "letters".into(),
                    witness: format!(
                        "transducer tracks [{got}] do not match alphabet {}",
                        syms.join(",")
                    ),
                });
            }
            a.with_layout(layout)?
        }
    };
    let m = Kripke::new(sig, vec![], trans.trim())?;
    validate_model(&m)?;
    Ok(m)
}

fn witness(m: &Kripke, w: &Word) -> String {
    m.trans_layout().format_word(w)
}

/// Words `s ⊗ V(i,|s|) ⊗ s` for `s` in the state space.
fn reflexive_pairs(m: &Kripke) -> Result<Nfa> {
    let layout = m.trans_layout().clone();
    let eq = track_constraint(&layout, Constraint::Equal(SRC, TGT))?;
    let one = track_constraint(&layout, Constraint::ExactlyOne(OBS))?;
    let diag = crate::automata::intersect(&eq, &one)?;
    let all: Vec<usize> = (0..layout.arity()).collect();
    join(
        &diag,
        &state_space(m)?,
        &JoinSpec {
            a_cols: &all,
            b_cols: &m.side_cols(SRC),
            out: layout,
        },
    )
}

/// Checks the obs-track shape and reflexivity.
pub fn validate_model(m: &Kripke) -> Result<()> {
    let layout = m.trans_layout().clone();
    let shape = track_constraint(&layout, Constraint::ExactlyOne(OBS))?;
    if let Some(w) = included(m.trans(), &shape)? {
        return Err(Error::Validation {
            check: "obs-shape".into(),
            witness: witness(m, &w),
        });
    }
    if let Some(w) = included(&reflexive_pairs(m)?, m.trans())? {
        return Err(Error::Validation {
            check: "reflexivity".into(),
            witness: witness(m, &w),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct S5Report {
    pub reflexive: bool,
    pub symmetric: bool,
    pub transitive: bool,
    /// `(property, witness word)` for each failed property.
    pub witnesses: Vec<(String, String)>,
}

impl S5Report {
    pub fn all(&self) -> bool {
        self.reflexive && self.symmetric && self.transitive
    }
}

impl fmt::Display for S5Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let yn = |b: bool| if b { "yes" } else { "no" };
        write!(
            f,
            "reflexive: {}  symmetric: {}  transitive: {}",
            yn(self.reflexive),
            yn(self.symmetric),
            yn(self.transitive)
        )?;
        for (p, w) in &self.witnesses {
            write!(f, "\n  {p} fails on {w}")?;
        }
        Ok(())
    }
}

/// Transducer with source and target swapped.
pub fn swapped(m: &Kripke) -> Result<Nfa> {
    let k = m.trans_layout().arity();
    let perm: Vec<usize> = [TGT, OBS, SRC].into_iter().chain(3..k).collect();
    m.trans()
        .project(&perm)?
        .with_layout(m.trans_layout().clone())
}

/// `{s ⊗ V ⊗ u | ∃t: s ⊗ V ⊗ t ∈ T ∧ t ⊗ V ⊗ u ∈ T}`.
pub fn self_compose(m: &Kripke) -> Result<Nfa> {
    let layout = m.trans_layout().clone();
    let k = layout.arity();
    let mid = k;
    let a_cols: Vec<usize> = [SRC, OBS, mid].into_iter().chain(3..k).collect();
    let b_cols: Vec<usize> = [mid, OBS, TGT].into_iter().chain(3..k).collect();
    join(
        m.trans(),
        m.trans(),
        &JoinSpec {
            a_cols: &a_cols,
            b_cols: &b_cols,
            out: layout,
        },
    )
}

pub fn check_s5(m: &Kripke) -> Result<S5Report> {
    let mut witnesses = Vec::new();
    let refl = included(&reflexive_pairs(m)?, m.trans())?;
    if let Some(w) = &refl {
        witnesses.push(("reflexivity".to_string(), witness(m, w)));
    }
    let sym = included(m.trans(), &swapped(m)?)?;
    if let Some(w) = &sym {
        witnesses.push(("symmetry".to_string(), witness(m, w)));
    }
    let trans = included(&self_compose(m)?, m.trans())?;
    if let Some(w) = &trans {
        witnesses.push(("transitivity".to_string(), witness(m, w)));
    }
    Ok(S5Report {
        reflexive: refl.is_none(),
        symmetric: sym.is_none(),
        transitive: trans.is_none(),
        witnesses,
    })
}

fn check_state_language(m: &Kripke, keep: &Nfa) -> Result<()> {
    let want = m.state_layout();
    if !keep.layout().same_domains(&want) {
        return Err(Error::Layout(format!(
            "state language over [{}], structure states are [{}]",
            keep.layout(),
            want
        )));
    }
    Ok(())
}

/// Keeps transitions whose source and target both lie in `keep`.
pub fn restrict(m: &Kripke, keep: &Nfa) -> Result<Kripke> {
    check_state_language(m, keep)?;
    let layout = m.trans_layout().clone();
    let all: Vec<usize> = (0..layout.arity()).collect();
    let mut t = m.trans().clone();
    for side in [SRC, TGT] {
        t = join(
            &t,
            keep,
            &JoinSpec {
                a_cols: &all,
                b_cols: &m.side_cols(side),
                out: layout.clone(),
            },
        )?;
    }
    m.with_trans(t)
}

/// Projection of the transducer to `src` and the context tracks.
pub fn state_space(m: &Kripke) -> Result<Nfa> {
    m.trans()
        .project(&m.side_cols(SRC))?
        .with_layout(m.state_layout())
}

/// Adds context tracks: for each context word `c` the slice is `m`
/// restricted to `{s | s ⊗ c ∈ constraint}`. The constraint is over the
/// current state layout followed by the new tracks.
pub fn extend_context(m: &Kripke, ctx: Vec<Track>, constraint: &Nfa) -> Result<Kripke> {
    let added = ctx.len();
    let mut new_ctx = m.ctx.clone();
    new_ctx.extend(ctx);
    let want = state_layout(&m.sig.sigma, &new_ctx)?;
    if !constraint.layout().same_domains(&want) {
        return Err(Error::Layout(format!(
            "context constraint over [{}], expected [{}]",
            constraint.layout(),
            want
        )));
    }
    let out = trans_layout(&m.sig.sigma, &new_ctx)?;
    let k = m.trans_layout().arity();
    let mut t = m.trans().clone();
    for side in [SRC, TGT] {
        let c_cols: Vec<usize> = std::iter::once(side).chain(3..k + added).collect();
        let t_cols: Vec<usize> = (0..t.layout().arity()).collect();
        t = join(
            &t,
            constraint,
            &JoinSpec {
                a_cols: &t_cols,
                b_cols: &c_cols,
                out: out.clone(),
            },
        )?;
    }
    Kripke::new(m.sig.clone(), new_ctx, t)
}

/// The ordinary structure obtained by fixing every context track.
pub fn slice(m: &Kripke, ctx_words: &[Word]) -> Result<Kripke> {
    if ctx_words.len() != m.ctx.len() {
        return Err(Error::Layout(format!(
            "{} context words for {} context tracks",
            ctx_words.len(),
            m.ctx.len()
        )));
    }
    let len = ctx_words.first().map(Vec::len);
    if ctx_words.iter().any(|w| Some(w.len()) != len) {
        return Err(Error::Layout("context words of different lengths".into()));
    }
    let layout = m.trans_layout().clone();
    let ctx_layout = Layout::new(m.ctx.clone())?;
    let n = len.unwrap_or(0);
    let word: Vec<Letter> = (0..n)
        .map(|p| {
            let digits: Vec<u32> = ctx_words.iter().map(|w| w[p]).collect();
            ctx_layout.encode(&digits)
        })
        .collect();
    let fixed = Nfa::word(ctx_layout, &word);
    let all: Vec<usize> = (0..layout.arity()).collect();
    let t = join(
        m.trans(),
        &fixed,
        &JoinSpec {
            a_cols: &all,
            b_cols: &(3..layout.arity()).collect::<Vec<_>>(),
            out: trans_layout(&m.sig.sigma, &[])?,
        },
    )?;
    Kripke::new(m.sig.clone(), vec![], t)
}
