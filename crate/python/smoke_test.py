"""Smoke test for the Python bindings.

Build and install first:  pip install --no-build-isolation -e crates/py
Then run:                 python3 python/smoke_test.py   (or pytest python/)
"""

import prmc


def test_catalog():
    names = [n for n, _ in prmc.models()]
    assert {"muddy", "muddy_abs", "highest", "russian"} <= set(names)
    assert "muddy_bounded_2" in [n for n, _ in prmc.scripts()]
    assert "learn" in prmc.script_text("muddy_bounded_2")


def test_muddy_model():
    m = prmc.Model.load("muddy")
    assert m.alphabet == ["m", "c"]
    assert m.props == ["m"]
    r = m.check_s5()
    assert r and r.witnesses == []
    assert sorted(m.states(2)) == ["cc", "cm", "mc", "mm"]


def test_checks():
    m = prmc.Model.load("muddy")
    assert m.check("[! E i: m_i & (A j: i != j -> !m_j)] A i: (K i m_i | K i !m_i)").valid
    v = m.check("E i: m_i")
    assert not v and v.witness == "c"
    assert v.counterexamples(3) == ["ccc"]
    assert v.automaton().startswith("tracks:")


def test_announcements():
    m = prmc.Model.load("muddy").announce("E i: m_i")
    assert "cc" not in m.states(2)
    s = prmc.Session(prmc.Model.load("muddy"))
    s.announce("E i: m_i")
    s.announce("A i: <i> !m_i")
    assert all(w.count("m") >= 2 for w in s.model.states(4))


def test_learning():
    s = prmc.Session(prmc.Model.load("muddy"))
    out = s.run_script("muddy_bounded_2")
    rel = next(o for o in out if isinstance(o, prmc.Relation))
    assert rel.states == 9
    # fewer muddy children vanish sooner
    assert rel.related("mcc", "mmc")
    assert not rel.related("mmc", "mcc")
    assert ("mcc", "mcc") in rel.pairs(3)
    assert out[-1].valid


def test_errors():
    m = prmc.Model.load("muddy")
    for bad in ["E i m_i", "m_i", "q_0"]:
        try:
            m.check(bad)
        except prmc.InputError:
            pass
        else:
            raise AssertionError(bad)
    try:
        prmc.Model.parse("alphabet: m c\nnonsense\n")
    except prmc.InputError as e:
        assert "line 2" in str(e)
    else:
        raise AssertionError("malformed model accepted")
    s = prmc.Session(prmc.Model.load("muddy"), max_eq=500)
    s.announce("E i: m_i")
    try:
        s.learn("A i: <i> !m_i")
    except prmc.DivergedError as e:
        msg, eq, mq, hypothesis = e.args
        assert eq > 0 and mq > 0 and hypothesis.startswith("tracks:")
    else:
        raise AssertionError("unbounded muddy children were learned")
    prmc.set_limits(max_states=3)
    try:
        m.check("[! E i: m_i] A i: <i> !m_i")
    except prmc.CapacityError:
        pass
    else:
        raise AssertionError("cap not enforced")
    finally:
        prmc.reset_limits()


if __name__ == "__main__":
    for name, f in list(globals().items()):
        if name.startswith("test_"):
            f()
            print("ok", name)
