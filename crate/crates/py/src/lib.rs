//! Python bindings: models, validity checks and learned disappearance
//! relations.
//!
//! ```python
//! import prmc
//! m = prmc.Model.load("muddy")
//! v = m.check("E i: m_i")
//! v.valid, v.witness          # (False, "c")
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use prmc_core::automata::{enumerate_length, limits, write_automaton, Layout, Limits, Nfa, Word};
use prmc_core::disappearance::{pair_layout, Budget, DisappearanceRelation};
use prmc_core::kripke::{self, Kripke};
use prmc_core::script::{self, CommandKind, Outcome};
use prmc_core::semantics::{self, Options};
use prmc_core::{catalog, Error};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(prmc, PrmcError, PyException, "Base class of checker errors.");
create_exception!(prmc, InputError, PrmcError, "Malformed model, script or formula.");
create_exception!(prmc, CapacityError, PrmcError, "A state or enumeration cap was hit.");
create_exception!(prmc, DivergedError, PrmcError, "The learner exceeded its budget.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Capacity(_) => CapacityError::new_err(e.to_string()),
        Error::Diverged(d) => DivergedError::new_err((
            d.to_string(),
            d.eq_queries,
            d.mq_queries,
            d.last_hypothesis.as_ref().map(write_automaton),
        )),
        _ => InputError::new_err(e.to_string()),
    }
}

fn words(layout: &Layout, a: &Nfa, length: usize) -> PyResult<Vec<String>> {
    let ws = enumerate_length(a, length).map_err(to_py)?;
    Ok(ws.iter().map(|w| layout.format_word(w)).collect())
}

fn options(var_order: Option<Vec<String>>, max_eq: Option<usize>) -> Options {
    let mut budget = Budget::default();
    if let Some(n) = max_eq {
        budget.max_eq = n;
    }
    Options {
        var_order: var_order.unwrap_or_default(),
        dot_dir: None,
        budget,
    }
}

/// An automatic Kripke model.
#[pyclass(module = "prmc", frozen, from_py_object)]
#[derive(Clone)]
pub struct Model {
    inner: Kripke,
}

#[pymethods]
impl Model {
    /// A bundled model by name, see `models()`.
    #[staticmethod]
    fn load(name: &str) -> PyResult<Self> {
        Ok(Model {
            inner: catalog::load(name).map_err(to_py)?,
        })
    }

    /// A model from the text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Model {
            inner: kripke::parse_model(text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| to_py(e.into()))?;
        Self::parse(&text)
    }

    #[getter]
    fn alphabet(&self) -> Vec<String> {
        self.inner.sigma().syms.clone()
    }

    #[getter]
    fn props(&self) -> Vec<String> {
        self.inner.signature().props.clone()
    }

    #[getter]
    fn agents(&self) -> BTreeMap<String, usize> {
        self.inner.signature().agents.clone()
    }

    fn check_s5(&self) -> PyResult<S5Report> {
        let r = kripke::check_s5(&self.inner).map_err(to_py)?;
        Ok(S5Report {
            reflexive: r.reflexive,
            symmetric: r.symmetric,
            transitive: r.transitive,
            witnesses: r.witnesses,
        })
    }

    /// States of the given length, as strings over the alphabet.
    fn states(&self, length: usize) -> PyResult<Vec<String>> {
        let s = kripke::state_space(&self.inner).map_err(to_py)?;
        words(&self.inner.state_layout(), &s, length)
    }

    /// The model restricted to the states satisfying `formula`.
    fn announce(&self, formula: &str) -> PyResult<Model> {
        let mut s = Session::new(self.clone(), None, None);
        s.announce(formula)?;
        Ok(s.model())
    }

    #[pyo3(signature = (formula, var_order = None))]
    fn check(&self, formula: &str, var_order: Option<Vec<String>>) -> PyResult<Verdict> {
        Session::new(self.clone(), var_order, None).check(formula)
    }

    /// The disappearance relation of announcing `formula` until nothing changes.
    #[pyo3(signature = (formula, max_eq = None))]
    fn learn(&self, formula: &str, max_eq: Option<usize>) -> PyResult<Relation> {
        Session::new(self.clone(), None, max_eq).learn(formula)
    }

    /// The transducer in the text automaton format.
    fn automaton(&self) -> String {
        write_automaton(self.inner.trans())
    }

    /// The state space in the text automaton format.
    fn state_automaton(&self) -> PyResult<String> {
        Ok(write_automaton(&kripke::state_space(&self.inner).map_err(to_py)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(alphabet={:?}, props={:?}, {} transducer states)",
            self.inner.sigma().syms,
            self.inner.signature().props,
            self.inner.trans().num_states()
        )
    }
}

#[pyclass(module = "prmc", frozen, get_all)]
pub struct S5Report {
    reflexive: bool,
    symmetric: bool,
    transitive: bool,
    /// `(property, transducer word)` pairs for each failed property.
    witnesses: Vec<(String, String)>,
}

fn py_bool(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

#[pymethods]
impl S5Report {
    fn __bool__(&self) -> bool {
        self.reflexive && self.symmetric && self.transitive
    }

    fn __repr__(&self) -> String {
        format!(
            "S5Report(reflexive={}, symmetric={}, transitive={})",
            py_bool(self.reflexive),
            py_bool(self.symmetric),
            py_bool(self.transitive)
        )
    }
}

/// Outcome of a validity check.
#[pyclass(module = "prmc", frozen)]
pub struct Verdict {
    layout: Arc<Layout>,
    counterexamples: Nfa,
    witness: Option<Word>,
}

#[pymethods]
impl Verdict {
    #[getter]
    fn valid(&self) -> bool {
        self.witness.is_none()
    }

    /// A shortest refuting state, if any.
    #[getter]
    fn witness(&self) -> Option<String> {
        self.witness.as_ref().map(|w| self.layout.format_word(w))
    }

    fn counterexamples(&self, length: usize) -> PyResult<Vec<String>> {
        words(&self.layout, &self.counterexamples, length)
    }

    fn automaton(&self) -> String {
        write_automaton(&self.counterexamples)
    }

    fn __bool__(&self) -> bool {
        self.valid()
    }

    fn __repr__(&self) -> String {
        match self.witness() {
            None => "Verdict(valid)".into(),
            Some(w) => format!("Verdict(invalid, witness='{w}')"),
        }
    }
}

/// A learned disappearance relation: `s <= t` when `s` vanishes no later
/// than `t` under repeated announcement.
#[pyclass(module = "prmc", frozen)]
pub struct Relation {
    state: Arc<Layout>,
    pair: Arc<Layout>,
    inner: DisappearanceRelation,
}

impl Relation {
    fn new(state: Arc<Layout>, inner: DisappearanceRelation) -> PyResult<Self> {
        let pair = pair_layout(&state).map_err(to_py)?;
        Ok(Relation { state, pair, inner })
    }
}

#[pymethods]
impl Relation {
    /// States of the minimal DFA.
    #[getter]
    fn states(&self) -> usize {
        self.inner.num_states()
    }

    #[getter]
    fn eq_queries(&self) -> usize {
        self.inner.eq_queries
    }

    #[getter]
    fn mq_queries(&self) -> usize {
        self.inner.mq_queries
    }

    #[getter]
    fn hypotheses(&self) -> Vec<usize> {
        self.inner.hypotheses.clone()
    }

    #[getter]
    fn certified_upto(&self) -> usize {
        self.inner.certified_upto
    }

    #[getter]
    fn transcript(&self) -> Vec<String> {
        self.inner.transcript.clone()
    }

    fn related(&self, s: &str, t: &str) -> PyResult<bool> {
        let s = self.state.parse_word(s).map_err(to_py)?;
        let t = self.state.parse_word(t).map_err(to_py)?;
        if s.len() != t.len() {
            return Ok(false);
        }
        let w: Word = s
            .iter()
            .zip(&t)
            .map(|(&a, &b)| {
                let mut d = self.state.decode(a);
                d.extend(self.state.decode(b));
                self.pair.encode(&d)
            })
            .collect();
        Ok(self.inner.relation.accepts(&w))
    }

    /// Related pairs of the given length.
    fn pairs(&self, length: usize) -> PyResult<Vec<(String, String)>> {
        let k = self.state.arity();
        let ws = enumerate_length(&self.inner.relation, length).map_err(to_py)?;
        Ok(ws
            .iter()
            .map(|w| {
                let (s, t): (Word, Word) = w
                    .iter()
                    .map(|&l| {
                        let d = self.pair.decode(l);
                        (self.state.encode(&d[..k]), self.state.encode(&d[k..]))
                    })
                    .unzip();
                (self.state.format_word(&s), self.state.format_word(&t))
            })
            .collect())
    }

    fn automaton(&self) -> String {
        write_automaton(&self.inner.relation)
    }

    fn __repr__(&self) -> String {
        format!(
            "Relation(states={}, eq_queries={}, mq_queries={})",
            self.inner.num_states(),
            self.inner.eq_queries,
            self.inner.mq_queries
        )
    }
}

/// A working model that announcements update in place.
#[pyclass(module = "prmc", unsendable)]
pub struct Session {
    inner: script::Session,
}

impl Session {
    fn run(&mut self, kind: CommandKind, formula: &str) -> PyResult<Outcome> {
        let cmd = script::Command {
            kind,
            formula: formula.to_string(),
            line: 0,
        };
        self.inner.run(&cmd).map_err(to_py)
    }

    fn outcome(&self, py: Python<'_>, o: Outcome) -> PyResult<Py<PyAny>> {
        let state = self.inner.model().state_layout();
        Ok(match o {
            Outcome::Announced { .. } => Py::new(py, self.model())?.into_any(),
            Outcome::Checked(v) => Py::new(py, verdict(state, v))?.into_any(),
            Outcome::Learned(r) => Py::new(py, Relation::new(state, *r)?)?.into_any(),
        })
    }
}

fn verdict(layout: Arc<Layout>, v: semantics::Verdict) -> Verdict {
    Verdict {
        layout,
        counterexamples: v.counterexamples,
        witness: v.witness,
    }
}

#[pymethods]
impl Session {
    #[new]
    #[pyo3(signature = (model, var_order = None, max_eq = None))]
    fn new(model: Model, var_order: Option<Vec<String>>, max_eq: Option<usize>) -> Self {
        Session {
            inner: script::Session::new(model.inner, options(var_order, max_eq)),
        }
    }

    /// The current model.
    #[getter]
    fn model(&self) -> Model {
        Model {
            inner: self.inner.model().clone(),
        }
    }

    /// Restricts the model to `formula`; returns the number of automaton
    /// states of the new state space.
    fn announce(&mut self, formula: &str) -> PyResult<usize> {
        match self.run(CommandKind::Announce, formula)? {
            Outcome::Announced { states } => Ok(states.num_states()),
            _ => unreachable!(),
        }
    }

    fn check(&mut self, formula: &str) -> PyResult<Verdict> {
        match self.run(CommandKind::Check, formula)? {
            Outcome::Checked(v) => Ok(verdict(self.inner.model().state_layout(), v)),
            _ => unreachable!(),
        }
    }

    fn learn(&mut self, formula: &str) -> PyResult<Relation> {
        match self.run(CommandKind::Learn, formula)? {
            Outcome::Learned(r) => Relation::new(self.inner.model().state_layout(), *r),
            _ => unreachable!(),
        }
    }

    /// Runs a script, given as text or a bundled name. Announcements yield
    /// the new `Model`, checks a `Verdict`, learns a `Relation`.
    fn run_script(&mut self, py: Python<'_>, script: &str) -> PyResult<Vec<Py<PyAny>>> {
        let text = match catalog::script_entry(script) {
            Some(e) => e.text,
            None => script,
        };
        let cmds = script::parse_script(text).map_err(to_py)?;
        let mut out = vec![];
        for c in &cmds {
            let o = self.inner.run(c).map_err(to_py)?;
            out.push(self.outcome(py, o)?);
        }
        Ok(out)
    }

    #[getter]
    fn transcript(&self) -> Vec<String> {
        self.inner.evaluator().transcript().to_vec()
    }
}

/// Bundled models as `(name, description)` pairs.
#[pyfunction]
fn models() -> Vec<(&'static str, &'static str)> {
    catalog::MODELS.iter().map(|e| (e.name, e.about)).collect()
}

#[pyfunction]
fn scripts() -> Vec<(&'static str, &'static str)> {
    catalog::SCRIPTS.iter().map(|e| (e.name, e.about)).collect()
}

#[pyfunction]
fn script_text(name: &str) -> PyResult<&'static str> {
    catalog::script_entry(name)
        .map(|e| e.text)
        .ok_or_else(|| InputError::new_err(format!("no bundled script {name}")))
}

/// Caps on automaton size and enumeration for the calling thread.
#[pyfunction]
#[pyo3(signature = (max_states = None, max_enum = None))]
fn set_limits(max_states: Option<usize>, max_enum: Option<usize>) -> (usize, usize) {
    let mut l = limits::current();
    if let Some(n) = max_states {
        l.max_states = n;
    }
    if let Some(n) = max_enum {
        l.max_enum = n;
    }
    limits::set(l);
    (l.max_states, l.max_enum)
}

#[pyfunction]
fn reset_limits() {
    limits::set(Limits::default());
}

#[pymodule]
pub fn prmc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<Model>()?;
    m.add_class::<S5Report>()?;
    m.add_class::<Verdict>()?;
    m.add_class::<Relation>()?;
    m.add_class::<Session>()?;
    m.add_function(wrap_pyfunction!(models, m)?)?;
    m.add_function(wrap_pyfunction!(scripts, m)?)?;
    m.add_function(wrap_pyfunction!(script_text, m)?)?;
    m.add_function(wrap_pyfunction!(set_limits, m)?)?;
    m.add_function(wrap_pyfunction!(reset_limits, m)?)?;
    m.add("PrmcError", py.get_type::<PrmcError>())?;
    m.add("InputError", py.get_type::<InputError>())?;
    m.add("CapacityError", py.get_type::<CapacityError>())?;
    m.add("DivergedError", py.get_type::<DivergedError>())?;
    Ok(())
}
