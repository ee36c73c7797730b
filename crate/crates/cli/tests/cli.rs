use std::path::Path;
use std::process::{Command, Output};

use prmc_core::automata::{parse_automaton, Nfa};
use tempfile::tempdir;

fn prmc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prmc"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn load(path: &Path) -> Nfa {
    parse_automaton(&std::fs::read_to_string(path).unwrap(), 1).unwrap()
}

#[test]
fn lists_bundled_entries() {
    let d = tempdir().unwrap();
    let o = prmc(d.path(), &["models"]);
    assert!(o.status.success());
    let out = stdout(&o);
    for name in ["muddy", "muddy_abs", "highest", "russian", "muddy_bounded_3", "russian_any_hand"] {
        assert!(out.contains(name), "{name}");
    }
}

#[test]
fn valid_formula_exits_zero() {
    let d = tempdir().unwrap();
    let o = prmc(d.path(), &["check", "muddy", "-f", "A i: m_i | !m_i"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("VALID"));
    assert!(!d.path().join("counterexample-1.aut").exists());
}

#[test]
fn invalid_formula_writes_counterexamples() {
    let d = tempdir().unwrap();
    let o = prmc(d.path(), &["check", "muddy", "-f", "true", "-f", "E i: m_i", "-o", "out"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("INVALID") && out.contains("witness: c"), "{out}");
    // numbered by position among the checks
    let a = load(&d.path().join("out/counterexample-2.aut"));
    assert!(a.accepts(&a.layout().parse_word("ccc").unwrap()));
    assert!(!a.accepts(&a.layout().parse_word("cmc").unwrap()));
}

#[test]
fn model_from_a_file_path() {
    let d = tempdir().unwrap();
    let text = prmc_core::catalog::model_entry("muddy").unwrap().text;
    std::fs::write(d.path().join("m.kripke"), text).unwrap();
    let o = prmc(d.path(), &["check", "m.kripke", "-f", "true"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn input_errors_exit_two() {
    let d = tempdir().unwrap();
    std::fs::write(d.path().join("bad.kripke"), "alphabet: m c\nnonsense\n").unwrap();
    let cases: [&[&str]; 5] = [
        &["check", "no-such-model", "-f", "true"],
        &["check", "muddy", "-f", "E i m_i"],
        &["check", "muddy", "-f", "m_i"],
        &["check", "bad.kripke", "-f", "true"],
        &["check", "muddy"],
    ];
    for args in cases {
        let o = prmc(d.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stdout(&o));
        assert!(stderr(&o).starts_with("error:"), "{args:?}");
    }
    assert!(stderr(&prmc(d.path(), cases[3])).contains("line 2"));
}

#[test]
fn capacity_exits_three() {
    let d = tempdir().unwrap();
    let o = prmc(
        d.path(),
        &["check", "muddy", "--max-states", "2", "-f", "[! E i: m_i] A i: <i> !m_i"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
}

#[test]
fn zero_limits_are_rejected_by_the_parser() {
    let d = tempdir().unwrap();
    let o = prmc(d.path(), &["check", "muddy", "--max-enum", "0", "-f", "true"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("must be positive"));
}

#[test]
fn learn_writes_relation_and_transcript() {
    let d = tempdir().unwrap();
    let o = prmc(
        d.path(),
        &["learn", "muddy", "--script", "muddy_bounded_1", "--transcript", "t.log"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("learned"));
    let rel = load(&d.path().join("relation-1.aut"));
    assert_eq!(rel.layout().arity(), 2);
    let log = std::fs::read_to_string(d.path().join("t.log")).unwrap();
    assert!(!log.trim().is_empty());
}

#[test]
fn learn_from_formula_flag() {
    let d = tempdir().unwrap();
    let o = prmc(d.path(), &["learn", "muddy", "-f", "A i: <i> !m_i"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(d.path().join("relation-1.aut").exists());
}

#[test]
fn divergence_exits_three_with_the_last_hypothesis() {
    let d = tempdir().unwrap();
    let o = prmc(d.path(), &["learn", "muddy", "--script", "muddy_unbounded"]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("DIVERGED"));
    assert!(d.path().join("hypothesis-1.aut").exists());
    assert!(!d.path().join("relation-1.aut").exists());
}

#[test]
fn inspect_dumps_each_announcement() {
    let d = tempdir().unwrap();
    let o = prmc(
        d.path(),
        &["inspect", "muddy", "--script", "muddy_bounded_2", "--dot-out", "dots"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("reflexive: yes"));
    for f in ["model.dot", "states-0.dot", "states-1.dot", "states-2.aut"] {
        assert!(d.path().join("dots").join(f).exists(), "{f}");
    }
    assert!(!d.path().join("dots/states-3.aut").exists());
    let dot = std::fs::read_to_string(d.path().join("dots/model.dot")).unwrap();
    assert!(dot.starts_with("digraph"));
}

#[test]
fn inspect_reports_an_empty_state_space() {
    let d = tempdir().unwrap();
    std::fs::write(
        d.path().join("e.kripke"),
        "alphabet: m c\nprops: m = {m}\ntransducer:\ntracks: src:m,c obs:0,1 tgt:m,c\n\
         states: q0\ninitial: q0\naccepting:\n",
    )
    .unwrap();
    let o = prmc(d.path(), &["inspect", "e.kripke"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("state space is empty"));
}

#[test]
fn variable_order_does_not_change_verdicts() {
    let d = tempdir().unwrap();
    let f = "A i: A j: (m_i & m_j) -> E k: m_k";
    let a = prmc(d.path(), &["check", "muddy", "-f", f]);
    let b = prmc(d.path(), &["check", "muddy", "--var-order", "j,i", "-f", f]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
}
