//! Acceptance suite run through the `prmc` binary: one PASS/FAIL line per
//! criterion. Verdicts and written automata are compared with the explicit
//! reference checker. Time limits are wall clock per invocation.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use prmc_core::automata::{equivalent, parse_automaton, Nfa, Word};
use prmc_core::catalog;
use prmc_core::kripke::Kripke;
use prmc_core::disappearance::{iterate_at_length, pair_layout, RestrictionOperator};
use tempfile::TempDir;

const S5_LIMIT: Duration = Duration::from_secs(5);
const ROUNDS_LIMIT: Duration = Duration::from_secs(10);
const EXACTLY_ONE_LIMIT: Duration = Duration::from_secs(10);
const LEARN_LIMIT: Duration = Duration::from_secs(60);
const ABS_LIMIT: Duration = Duration::from_secs(60);
const HIGHEST_LIMIT: Duration = Duration::from_secs(120);
const RUSSIAN_LIMIT: Duration = Duration::from_secs(300);
const SLICE_LEN: usize = 6;
const ORACLE_LEN: usize = 4;
const HIGHEST_N: usize = 5;
const RUSSIAN_N: usize = 6;

type Outcome_ = Result<String, String>;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
    took: Duration,
}

fn prmc(dir: &Path, args: &[&str]) -> Run {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_prmc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("prmc runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        took: t.elapsed(),
    }
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(r: &Run, limit: Duration, what: &str) -> Result<(), String> {
    ensure(r.took <= limit, format!("{what} took {:.2?}, limit {limit:?}", r.took))
}

fn exit(r: &Run, code: i32, what: &str) -> Result<(), String> {
    ensure(
        r.code == code,
        format!("{what}: exit {} (want {code}): {}{}", r.code, r.stdout.trim(), r.stderr.trim()),
    )
}

fn load(path: &Path) -> Result<Nfa, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_automaton(&text, 1).map_err(|e| format!("{}: {e}", path.display()))
}

fn tmp() -> TempDir {
    tempfile::tempdir().unwrap()
}

fn s5() -> Outcome_ {
    let d = tmp();
    let r = prmc(d.path(), &["inspect", "muddy"]);
    exit(&r, 0, "inspect")?;
    ensure(
        r.stdout.contains("reflexive: yes  symmetric: yes  transitive: yes"),
        r.stdout.clone(),
    )?;
    within(&r, S5_LIMIT, "inspect")?;
    let m = catalog::load("muddy").unwrap();
    for len in 1..=ORACLE_LEN {
        let ex = Explicit::new(&m, len);
        let n = ex.states.len();
        for i in 0..len {
            for s in 0..n {
                for t in 0..n {
                    let same = (0..len).all(|p| p == i || ex.states[s][p] == ex.states[t][p]);
                    ensure(ex.related(i, s, t) == same, format!("explicit closure, length {len}"))?;
                }
            }
        }
    }
    Ok(format!("reported S5 in {:.2?}; explicit closure agrees at lengths 1..={ORACLE_LEN}", r.took))
}

fn rounds() -> Outcome_ {
    let d = tmp();
    let script = d.path().join("rounds.script");
    std::fs::write(
        &script,
        "announce E i: m_i\nannounce A i: <i> !m_i\nannounce A i: <i> !m_i\nannounce A i: <i> !m_i\n",
    )
    .unwrap();
    let r = prmc(d.path(), &["inspect", "muddy", "--script", "rounds.script", "--dot-out", "dots"]);
    exit(&r, 0, "inspect")?;
    within(&r, ROUNDS_LIMIT, "announcements")?;
    let m = catalog::load("muddy").unwrap();
    for k in 1..=4 {
        let a = load(&d.path().join(format!("dots/states-{k}.aut")))?;
        let want = at_least_muddy(&m, k);
        let diff = equivalent(&a, &want).map_err(|e| e.to_string())?;
        ensure(diff.is_none(), format!("after announcement {k}: differs on {diff:?}"))?;
    }
    Ok("states-1..4 equal the automata for at least 1..4 muddy children".into())
}

fn at_least_muddy(m: &Kripke, k: usize) -> Nfa {
    let layout = m.state_layout();
    let any = Nfa::universal(layout.clone());
    let mark = Nfa::letter_set(layout.clone(), [layout.letter(&["m"]).unwrap()]);
    (0..k).fold(any.clone(), |a, _| a.concat(&mark).unwrap().concat(&any).unwrap())
}

fn exactly_one() -> Outcome_ {
    let d = tmp();
    let src = "[! E i: m_i & (A j: i != j -> !m_j)] A i: (K i m_i | K i !m_i)";
    let r = prmc(d.path(), &["check", "muddy", "-f", src]);
    exit(&r, 0, "check")?;
    ensure(r.stdout.contains("VALID"), r.stdout.clone())?;
    within(&r, EXACTLY_ONE_LIMIT, "check")?;
    let m = catalog::load("muddy").unwrap();
    for len in 1..=ORACLE_LEN {
        ensure(Explicit::new(&m, len).check(src).iter().all(|&b| b), format!("explicit refutes at {len}"))?;
    }
    Ok(format!("VALID in {:.2?}; explicit checker agrees at lengths 1..={ORACLE_LEN}", r.took))
}

fn corpus() -> Outcome_ {
    let m = catalog::load("muddy").unwrap();
    let exs: Vec<Explicit> = (1..=ORACLE_LEN).map(|l| Explicit::new(&m, l)).collect();
    let mut invalid = 0;
    for src in CORPUS {
        let d = tmp();
        let r = prmc(d.path(), &["check", "muddy", "-f", src]);
        let refuted: Vec<Vec<Word>> = exs
            .iter()
            .map(|ex| ex.words(&ex.check(src).iter().map(|b| !b).collect::<Vec<_>>()))
            .collect();
        if refuted.iter().all(|w| w.is_empty()) {
            exit(&r, 0, src)?;
            continue;
        }
        invalid += 1;
        exit(&r, 1, src)?;
        let cex = load(&d.path().join("counterexample-1.aut"))?;
        for (i, want) in refuted.iter().enumerate() {
            ensure(&states_at(&cex, i + 1) == want, format!("`{src}`: counterexamples differ at length {}", i + 1))?;
        }
    }
    Ok(format!(
        "{} formulas ({invalid} invalid), verdicts and counterexample sets match at lengths 1..={ORACLE_LEN}",
        CORPUS.len()
    ))
}

fn learned_states(stdout: &str) -> Option<usize> {
    let rest = stdout.split("learned ").nth(1)?;
    rest.split_whitespace().next()?.parse().ok()
}

fn count_m(w: &Word) -> usize {
    w.iter().filter(|&&l| l == 0).count()
}

fn bounded_muddy() -> Outcome_ {
    let mut sizes = vec![];
    for k in 1..=4usize {
        let d = tmp();
        let script = format!("muddy_bounded_{k}");
        let r = prmc(d.path(), &["learn", "muddy", "--script", &script]);
        exit(&r, 0, &script)?;
        within(&r, LEARN_LIMIT, &format!("learning M={k}"))?;
        let n = learned_states(&r.stdout).ok_or_else(|| r.stdout.clone())?;
        let rel = load(&d.path().join("relation-1.aut"))?;
        let (_, mut op) = script_operator("muddy", &script);
        let state = op.state_layout();
        for len in 0..=SLICE_LEN {
            ensure(
                relation_at(&rel, &state, len) == brute_relation(&mut op, len),
                format!("M={k}: relation differs from explicit iteration at length {len}"),
            )?;
            let s0 = iterate_at_length(&mut op, len).unwrap()[0].clone();
            ensure(
                s0.iter().all(|w| (1..=k).contains(&count_m(w))),
                format!("M={k}: unexpected initial states at {len}"),
            )?;
            let closed: BTreeSet<(Word, Word)> = s0
                .iter()
                .flat_map(|s| s0.iter().map(move |t| (s.clone(), t.clone())))
                .filter(|(s, t)| count_m(s) <= count_m(t))
                .collect();
            ensure(
                relation_at(&rel, &state, len) == closed,
                format!("M={k}: differs from the muddy-count order at {len}"),
            )?;
        }
        sizes.push(n);
    }
    let steps: Vec<i64> = sizes.windows(2).map(|w| w[1] as i64 - w[0] as i64).collect();
    let summary = format!("DFA sizes {sizes:?}, increments {steps:?}");
    ensure(sizes.windows(2).all(|w| w[0] <= w[1]), format!("not monotone: {summary}"))?;
    ensure(steps.windows(2).all(|d| d[1] <= d[0]), format!("growth above linear: {summary}"))?;
    Ok(summary)
}

fn abstracted_muddy() -> Outcome_ {
    let d = tmp();
    let r = prmc(d.path(), &["check", "muddy_abs", "--script", "muddy_abs"]);
    exit(&r, 0, "check")?;
    ensure(!r.stdout.contains("INVALID"), r.stdout.clone())?;
    within(&r, ABS_LIMIT, "check")?;
    Ok(format!("both checks VALID in {:.2?}", r.took))
}

fn verdict_line(r: &Run) -> String {
    let mut out: Vec<&str> = r
        .stdout
        .lines()
        .filter(|l| l.contains("VALID") || l.contains("witness"))
        .map(str::trim)
        .collect();
    out.extend(r.stderr.lines().map(str::trim));
    out.join("; ")
}

fn highest() -> Outcome_ {
    let d = tmp();
    let r = prmc(d.path(), &["check", "highest", "--script", "highest"]);
    let m = catalog::load("highest").unwrap();
    let src = parse_command(catalog::script_entry("highest").unwrap().text);
    let kept = (1..=HIGHEST_N).find(|&len| !Explicit::new(&m, len).check(&src).iter().all(|&b| b));
    let note = match kept {
        None => format!("explicit iteration empties lengths 1..={HIGHEST_N}"),
        Some(len) => format!("explicit iteration keeps a state at length {len}"),
    };
    ensure(r.code == 0, format!("exit {} in {:.2?}: {}; {note}", r.code, r.took, verdict_line(&r)))?;
    within(&r, HIGHEST_LIMIT, "check")?;
    ensure(kept.is_none(), note.clone())?;
    Ok(format!("{}; {note}", verdict_line(&r)))
}

fn russian() -> Outcome_ {
    let d = tmp();
    let r = prmc(d.path(), &["check", "russian", "--script", "russian"]);
    let m = catalog::load("russian").unwrap();
    let src = parse_command(catalog::script_entry("russian").unwrap().text);
    let ex = Explicit::new(&m, RUSSIAN_N);
    let bad: Vec<String> = ex
        .words(&ex.check(&src).iter().map(|b| !b).collect::<Vec<_>>())
        .iter()
        .map(|w| m.state_layout().format_word(w))
        .collect();
    let note = format!("explicit check at N={RUSSIAN_N} refutes on [{}]", bad.join(" "));
    if r.code == 1 {
        let cex = load(&d.path().join("counterexample-1.aut"))?;
        let got: Vec<String> = states_at(&cex, RUSSIAN_N).iter().map(|w| m.state_layout().format_word(w)).collect();
        ensure(got == bad, format!("counterexamples at N={RUSSIAN_N} {got:?} differ from explicit; {note}"))?;
    }
    ensure(r.code == 0, format!("exit {} in {:.2?}: {}; {note}", r.code, r.took, verdict_line(&r)))?;
    within(&r, RUSSIAN_LIMIT, "check")?;
    Ok(format!("VALID in {:.2?}; {note}", r.took))
}

fn parse_command(script: &str) -> String {
    let cmds = prmc_core::script::parse_script(script).unwrap();
    cmds.into_iter()
        .find(|c| c.kind == prmc_core::script::CommandKind::Check)
        .unwrap()
        .formula
}

fn divergence() -> Outcome_ {
    let d = tmp();
    let r = prmc(d.path(), &["learn", "muddy", "--script", "muddy_unbounded"]);
    exit(&r, 3, "learn")?;
    ensure(r.stdout.contains("DIVERGED"), r.stdout.clone())?;
    let h = load(&d.path().join("hypothesis-1.aut"))?;
    ensure(!d.path().join("relation-1.aut").exists(), "a relation was written")?;
    let r2 = prmc(d.path(), &["learn", "muddy", "--script", "muddy_bounded_2", "--eq-budget", "1"]);
    exit(&r2, 3, "learn with one equivalence query")?;
    Ok(format!(
        "unbounded muddy DIVERGED with exit 3 and a {}-state hypothesis; budget of 1 query also diverges",
        h.num_states()
    ))
}

fn preorders() -> Outcome_ {
    let cases: [(&str, &[&str]); 5] = [
        ("muddy", &["--script", "muddy_bounded_1"]),
        ("muddy", &["--script", "muddy_bounded_2"]),
        ("muddy", &["--script", "muddy_bounded_3"]),
        ("muddy_abs", &["--script", "muddy_abs"]),
        ("muddy", &["--script", "nonmono.script"]),
    ];
    for (model, extra) in cases {
        let d = tmp();
        std::fs::write(d.path().join("nonmono.script"), "announce E i: m_i\nlearn A i: m_i | K i !m_i\n").unwrap();
        let mut args = vec!["learn", model];
        args.extend_from_slice(extra);
        let r = prmc(d.path(), &args);
        exit(&r, 0, &args.join(" "))?;
        let rel = load(&d.path().join("relation-1.aut"))?;
        let state = catalog::load(model).unwrap().state_layout();
        ensure(
            **rel.layout() == *pair_layout(&state).unwrap(),
            format!("{}: relation is not over state pairs", args.join(" ")),
        )?;
        for len in 1..=ORACLE_LEN {
            let pairs = relation_at(&rel, &state, len);
            let dom: BTreeSet<Word> = pairs.iter().flat_map(|(s, t)| [s.clone(), t.clone()]).collect();
            for s in &dom {
                for t in &dom {
                    let st = pairs.contains(&(s.clone(), t.clone()));
                    ensure(st || pairs.contains(&(t.clone(), s.clone())), format!("not total at {len}"))?;
                    for u in &dom {
                        if st && pairs.contains(&(t.clone(), u.clone())) {
                            ensure(pairs.contains(&(s.clone(), u.clone())), format!("not transitive at {len}"))?;
                        }
                    }
                }
            }
        }
    }
    let (_, mut op) = script_operator("muddy", "muddy_bounded_2");
    let d = tmp();
    prmc(d.path(), &["learn", "muddy", "--script", "muddy_bounded_2"]);
    let rel = load(&d.path().join("relation-1.aut"))?;
    let lib = prmc_core::disappearance::learn_relation(&mut op, &Default::default()).map_err(|e| e.to_string())?;
    ensure(equivalent(&rel, &lib.relation).unwrap().is_none(), "CLI and library relations differ")?;
    Ok(format!("{} learned relations are total preorders at lengths 1..={ORACLE_LEN}", cases.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome_); 10] = [
        ("S5 validation of the muddy model", s5),
        ("state spaces after nobody-knows rounds", rounds),
        ("exactly one muddy child", exactly_one),
        ("oracle equivalence corpus", corpus),
        ("bounded muddy children", bounded_muddy),
        ("unbounded muddy children, sorted model", abstracted_muddy),
        ("highest number", highest),
        ("russian cards", russian),
        ("divergence", divergence),
        ("preorder laws", preorders),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let e = t.elapsed();
        match r {
            Ok(msg) => println!("criterion {:>2} PASS  {name} [{e:.2?}]: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} [{e:.2?}]: {msg}", i + 1)
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
