mod common;

use common::{state_words, states_at, Explicit};
use prmc_core::automata::{equivalent, is_empty, Nfa, Track};
use prmc_core::catalog;
use prmc_core::kripke::{
    check_s5, extend_context, parse_model, restrict, slice, state_space, validate_model, Kripke,
};
use prmc_core::Error;

const MUDDY: &str = include_str!("../../../models/muddy.kripke");

const HEADER: &str = "alphabet: m c\nprops: m = {m}\ntransducer:\ntracks: src:m,c obs:0,1 tgt:m,c\n";

fn muddy() -> Kripke {
    parse_model(MUDDY).unwrap()
}

fn with_body(body: &str) -> String {
    format!("{HEADER}{body}")
}

#[test]
fn muddy_document_parses() {
    let m = muddy();
    let t = m.trans_layout();
    assert_eq!(t.arity(), 3);
    assert!(m.trans().accepts(&t.parse_word("ccm|001|ccc").unwrap()));
    assert!(m.trans().accepts(&t.parse_word("mcm|100|ccm").unwrap()));
    assert!(!m.trans().accepts(&t.parse_word("ccm|001|mcc").unwrap()));
    assert!(!m.trans().accepts(&t.parse_word("ccm|000|ccm").unwrap()));
    assert_eq!(m.signature().props, vec!["m".to_string()]);
}

#[test]
fn empty_transducer_is_a_model_without_states() {
    let m = parse_model(&with_body("states: q0\ninitial: q0\naccepting:\n")).unwrap();
    assert!(is_empty(&state_space(&m).unwrap()));
    assert!(check_s5(&m).unwrap().all());
}

#[test]
fn two_observation_bits_are_rejected() {
    let doc = with_body(
        "states: q0 q1 q2\ninitial: q0\naccepting: q1\n\
         trans: q0 (m,0,m) q0\ntrans: q0 (c,0,c) q0\ntrans: q0 (m,1,m) q1\ntrans: q0 (c,1,c) q1\n\
         trans: q1 (m,0,m) q1\ntrans: q1 (c,0,c) q1\ntrans: q1 (m,1,m) q2\ntrans: q2 (m,0,m) q1\n",
    );
    match parse_model(&doc) {
        Err(Error::Validation { check, .. }) => assert_eq!(check, "obs-shape"),
        other => panic!("expected an obs-shape failure, got {other:?}"),
    }
}

#[test]
fn missing_loop_is_reported_with_witness() {
    // drop the clean child's loop at the observed position
    let doc = MUDDY.replace("trans: q0 (c,1,c) q1\n", "");
    match parse_model(&doc) {
        Err(Error::Validation { check, witness }) => {
            assert_eq!(check, "reflexivity");
            assert_eq!(witness, "c|1|c");
        }
        other => panic!("expected a reflexivity failure, got {other:?}"),
    }
}

#[test]
fn syntax_errors_carry_line_numbers() {
    match parse_model("alphabet: m c\nbogus line\n") {
        Err(Error::Syntax { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_model("props: m = {m}\n"), Err(Error::Syntax { .. })));
}

#[test]
fn muddy_is_s5_and_agrees_with_explicit_closure() {
    let m = muddy();
    let r = check_s5(&m).unwrap();
    assert!(r.all(), "{r}");
    for len in 1..=4 {
        let ex = Explicit::new(&m, len);
        let n = ex.states.len();
        assert_eq!(n, 1 << len);
        for i in 0..len {
            for s in 0..n {
                assert!(ex.related(i, s, s));
                for t in 0..n {
                    if ex.related(i, s, t) {
                        assert!(ex.related(i, t, s));
                        for u in 0..n {
                            if ex.related(i, t, u) {
                                assert!(ex.related(i, s, u));
                            }
                        }
                    }
                    // the explicit closure: differ at most at position i
                    let same_elsewhere = (0..len)
                        .all(|p| p == i || ex.states[s][p] == ex.states[t][p]);
                    assert_eq!(ex.related(i, s, t), same_elsewhere);
                }
            }
        }
    }
}

#[test]
fn one_directional_edge_breaks_symmetry() {
    // identity plus mm -> mc for agent 1
    let doc = with_body(
        "states: q0 q1 q2 q3\ninitial: q0\naccepting: q1 q3\n\
         trans: q0 (m,0,m) q0\ntrans: q0 (c,0,c) q0\ntrans: q0 (m,1,m) q1\ntrans: q0 (c,1,c) q1\n\
         trans: q1 (m,0,m) q1\ntrans: q1 (c,0,c) q1\n\
         trans: q0 (m,0,m) q2\ntrans: q2 (m,1,c) q3\n",
    );
    let m = parse_model(&doc).unwrap();
    let r = check_s5(&m).unwrap();
    assert!(r.reflexive && !r.symmetric && r.transitive);
    assert_eq!(r.witnesses, vec![("symmetry".to_string(), "mm|01|mc".to_string())]);
}

fn some_muddy(m: &Kripke) -> Nfa {
    let layout = m.state_layout();
    let any = Nfa::universal(layout.clone());
    any.concat(&Nfa::letter_set(layout.clone(), [layout.letter(&["m"]).unwrap()]))
        .unwrap()
        .concat(&any)
        .unwrap()
}

#[test]
fn state_space_of_muddy_is_every_nonempty_word() {
    let m = muddy();
    let layout = m.state_layout();
    let plus = Nfa::universal(layout.clone())
        .concat(&Nfa::letter_set(layout.clone(), 0..layout.size()))
        .unwrap();
    assert!(equivalent(&state_space(&m).unwrap(), &plus).unwrap().is_none());
}

#[test]
fn restriction_cuts_the_state_space() {
    let m = muddy();
    let keep = some_muddy(&m);
    let r = restrict(&m, &keep).unwrap();
    assert!(equivalent(&state_space(&r).unwrap(), &keep).unwrap().is_none());
    assert!(check_s5(&r).unwrap().all());

    let same = restrict(&m, &state_space(&m).unwrap()).unwrap();
    assert!(equivalent(same.trans(), m.trans()).unwrap().is_none());

    let none = restrict(&m, &Nfa::empty(m.state_layout())).unwrap();
    assert!(is_empty(none.trans()));
}

#[test]
fn restriction_rejects_foreign_layouts() {
    let m = muddy();
    let other = Nfa::universal(prmc_core::automata::Layout::single(Track::new("x", &["a"])));
    assert!(restrict(&m, &other).is_err());
}

#[test]
fn context_slices_restrict_the_model() {
    let m = muddy();
    let ctx = Track::new("ctx", &["m", "c"]);
    let layout = prmc_core::automata::Layout::new(vec![m.sigma().clone(), ctx.clone()]).unwrap();

    // full relation: every slice is the model itself
    let full = extend_context(&m, vec![ctx.clone()], &Nfa::universal(layout.clone())).unwrap();
    // equality: the slice at t holds only t
    let eq_letters = (0..2u32).map(|d| layout.encode(&[d, d]));
    let eq = extend_context(&m, vec![ctx.clone()], &Nfa::letters_star(layout.clone(), eq_letters))
        .unwrap();
    // upward closure of the muddy count: slice at t holds u with |u|_m >= |t|_m
    let mut up = Nfa::new(layout.clone());
    // state d counts (muddy in u) - (muddy in t), shifted by 3
    let q: Vec<u32> = (0..7).map(|d| up.add_state(d >= 3)).collect();
    up.add_initial(q[3]);
    for (from, &p) in q.iter().enumerate() {
        for s in 0..2u32 {
            for c in 0..2u32 {
                let delta = (s == 0) as i32 - (c == 0) as i32;
                let to = from as i32 + delta;
                if (0..7).contains(&to) {
                    up.add_transition(p, layout.encode(&[s, c]), q[to as usize]);
                }
            }
        }
    }

    for len in 1..=3 {
        for t in state_words(&m, len) {
            let f = slice(&full, std::slice::from_ref(&t)).unwrap();
            assert_eq!(state_words(&f, len), state_words(&m, len));
            assert!(equivalent(
                &prmc_core::automata::intersect(
                    f.trans(),
                    &prmc_core::disappearance::of_length(m.trans_layout().clone(), len)
                )
                .unwrap(),
                &prmc_core::automata::intersect(
                    m.trans(),
                    &prmc_core::disappearance::of_length(m.trans_layout().clone(), len)
                )
                .unwrap()
            )
            .unwrap()
            .is_none());

            let e = slice(&eq, std::slice::from_ref(&t)).unwrap();
            assert_eq!(state_words(&e, len), vec![t.clone()]);

            let u = slice(&extend_context(&m, vec![ctx.clone()], &up).unwrap(), std::slice::from_ref(&t)).unwrap();
            let count = |w: &[u32]| w.iter().filter(|&&l| l == 0).count();
            let want: Vec<_> = state_words(&m, len)
                .into_iter()
                .filter(|w| count(w) >= count(&t))
                .collect();
            assert_eq!(states_at(&state_space(&u).unwrap(), len), want, "{t:?}");
        }
    }
}

#[test]
fn context_constraint_layout_is_checked() {
    let m = muddy();
    let bad = Nfa::universal(m.state_layout());
    assert!(extend_context(&m, vec![Track::new("ctx", &["m", "c"])], &bad).is_err());
}

#[test]
fn bundled_models_validate_and_are_s5() {
    for e in catalog::MODELS {
        let m = catalog::load(e.name).unwrap();
        validate_model(&m).unwrap();
        let r = check_s5(&m).unwrap();
        assert!(r.all(), "{}: {r}", e.name);
    }
}
