"""Regenerates the bundled transducers that are products of small counters.

    python3 models/generate.py

muddy.kripke is written by hand and is not touched.
"""

from itertools import product
from pathlib import Path

HERE = Path(__file__).resolve().parent


def build(sigma, init, step, accept):
    """Deterministic transducer over (src, obs, tgt), reachable part only."""
    letters = [(x, o, y) for x in sigma for o in "01" for y in sigma]
    index = {init: 0}
    order = [init]
    delta = {}
    i = 0
    while i < len(order):
        q = order[i]
        i += 1
        for l in letters:
            r = step(q, l)
            if r is None:
                continue
            if r not in index:
                index[r] = len(order)
                order.append(r)
            delta[(index[q], l)] = index[r]
    acc = {index[q] for q in order if accept(q)}
    return minimize(len(order), letters, delta, acc)


def minimize(n, letters, delta, acc):
    # drop states that cannot reach acceptance
    alive = set(acc)
    changed = True
    while changed:
        changed = False
        for (p, _), r in delta.items():
            if r in alive and p not in alive:
                alive.add(p)
                changed = True
    if 0 not in alive:
        return 0, {}, set()
    delta = {k: r for k, r in delta.items() if k[0] in alive and r in alive}
    cls = {q: int(q in acc) for q in alive}
    while True:
        sig = {q: (cls[q],) + tuple(cls.get(delta.get((q, l)), -1) for l in letters) for q in alive}
        ids = {}
        new = {}
        for q in sorted(alive):
            new[q] = ids.setdefault(sig[q], len(ids))
        if len(ids) == len(set(cls.values())):
            cls = new
            break
        cls = new
    # renumber in BFS order from the initial state
    num = {cls[0]: 0}
    queue = [0]
    while queue:
        q = queue.pop(0)
        for l in letters:
            r = delta.get((q, l))
            if r is not None and cls[r] not in num:
                num[cls[r]] = len(num)
                queue.append(r)
    out = {}
    for (p, l), r in delta.items():
        out[(num[cls[p]], l)] = num[cls[r]]
    return len(num), out, {num[cls[q]] for q in acc if q in alive}


def render(header, sigma, machine):
    n, delta, acc = machine
    lines = [header.rstrip(), "transducer:"]
    syms = ",".join(sigma)
    lines.append(f"tracks: src:{syms} obs:0,1 tgt:{syms}")
    lines.append("states: " + " ".join(f"q{i}" for i in range(n)))
    lines.append("initial: q0")
    lines.append("accepting: " + " ".join(f"q{i}" for i in sorted(acc)))
    for (p, (x, o, y)), r in sorted(delta.items()):
        lines.append(f"trans: q{p} ({x},{o},{y}) q{r}")
    return "\n".join(lines) + "\n"


def muddy_abs():
    # the muddy relation restricted to sorted states c*m*
    sigma = ["m", "c"]

    def step(q, l):
        sp, tp, seen = q
        x, o, y = l
        if o == "1":
            if seen:
                return None
            seen = True
        elif x != y:
            return None
        if sp == "m" and x == "c" or tp == "m" and y == "c":
            return None
        return (x if x == "m" else sp, y if y == "m" else tp, seen)

    header = """# Counting abstraction of the muddy children: states are sorted, c*m*.
# A child at the clean/muddy boundary may flip its own letter; every other
# child only considers the actual state possible.
alphabet: m c
props: m = {m}; c = {}
"""
    return render(header, sigma, build(sigma, ("c", "c", False), step, lambda q: q[2]))


def highest():
    sigma = ["".join(p) for p in product("01", repeat=2)]

    def step(q, l):
        # per side: (a in zero block, b in zero block, tracks differ so far)
        s, t, pos, obs, eq_a, eq_b = q
        x, o, y = l

        def adv(side, letter):
            za, zb, diff = side
            a, b = letter
            if za and a == "1" or zb and b == "1":
                return None
            return (za or a == "0", zb or b == "0", diff or a != b)

        s2, t2 = adv(s, x), adv(t, y)
        if s2 is None or t2 is None:
            return None
        if o == "1":
            if obs is not None:
                return None
            obs = pos
        return (s2, t2, min(pos + 1, 2), obs, eq_a and x[0] == y[0], eq_b and x[1] == y[1])

    def accept(q):
        s, t, _, obs, eq_a, eq_b = q
        if obs is None or not s[2] or not t[2]:
            return False
        return {0: eq_a, 1: eq_b}.get(obs, True)

    header = """# Highest number. A letter is a bit pair (a, b); each track spells 1*0*
# and encodes a number in unary by the length of its 1-prefix. Numbers are
# distinct. Agent 0 sees the a-track, agent 1 the b-track, other positions
# are observers who only know the state is valid.
alphabet: 00 01 10 11
props: 10 = {a}; 01 = {b}; 11 = {a, b}
"""
    init = ((False, False, False), (False, False, False), 0, None, True, True)
    return render(header, sigma, build(sigma, init, step, accept))


def russian():
    sigma = ["A", "B", "C"]

    def step(q, l):
        pos, obs, agree, same = q
        x, o, y = l
        if o == "1":
            if obs is not None:
                return None
            obs = pos
        agree = tuple(a and ((x == p) == (y == p)) for a, p in zip(agree, sigma))
        return (min(pos + 1, 4), obs, agree, same and x == y)

    def accept(q):
        _, obs, agree, same = q
        if obs is None:
            return False
        return agree[obs - 1] if obs in (1, 2, 3) else same

    header = """# Russian cards. Position i of a deal holds the owner of card i.
# Alice, Bob and Cathy are agents 1, 2 and 3; each relates deals that agree
# on their own hand. Every other agent sees the whole deal.
alphabet: A B C
props: A = {a}; B = {b}; C = {c}
agents: a=1 b=2 c=3
"""
    return render(header, sigma, build(sigma, (0, None, (True,) * 3, True), step, accept))


if __name__ == "__main__":
    for name, text in [("muddy_abs", muddy_abs()), ("highest", highest()), ("russian", russian())]:
        (HERE / f"{name}.kripke").write_text(text)
        print(name, text.count("\ntrans:"), "transitions")
