from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from protocontract.ast import (
    Branch,
    Choice,
    Continue,
    DoInterrupt,
    Interaction,
    ProtocolDecl,
    Rec,
    falls_through,
    validate,
    walk,
)
from protocontract.automaton import (
    EdgeKind,
    EdgeLabel,
    build_automaton,
    check_invariants,
    dump,
    enabled,
    load,
    to_dot,
)
from protocontract.bundled import PROTOCOLS, protocol_source
from protocontract.diagnostics import DiagnosticError
from protocontract.parser import parse_protocol

GOLDEN = Path(__file__).parent / "golden"


def edges(a):
    return {(t.label.endpoint, t.src, t.dst) for t in a.transitions}


def test_guessing_game(gg):
    a = build_automaton(gg)
    assert a.states == (1, 2, 3)
    assert a.initial == 1
    assert a.terminals == {3}
    assert edges(a) == {("lock", 1, 2), ("guess", 2, 2), ("closeGame", 2, 3)}
    kinds = {t.label.endpoint: (t.label.kind, t.label.role) for t in a.transitions}
    assert kinds == {
        "lock": (EdgeKind.USER_CALL, "Owner"),
        "guess": (EdgeKind.USER_CALL, "Player"),
        "closeGame": (EdgeKind.AUTO_INTERRUPT, "Contract"),
    }


def test_rec_guessing_game(decls):
    a = build_automaton(decls["rec_guessing_game"])
    assert len(a.states) == 5
    assert edges(a) == {
        ("lock", 1, 2), ("proceedWithGame", 2, 3), ("guess", 3, 2), ("cancelGame", 2, 4), ("closeGame", 4, 5),
    }
    assert a.terminals == {5}


def test_choice_guessing_game_merges_branch_exits(decls):
    a = build_automaton(decls["choice_guessing_game"])
    assert edges(a) == {
        ("lock", 1, 2), ("proceedWithGame", 2, 3), ("guess", 3, 4), ("cancelGame", 2, 4), ("closeGame", 4, 5),
    }
    assert a.terminals == {5}


def test_ping_pong(decls):
    a = build_automaton(decls["ping_pong"])
    assert edges(a) == {("init", 1, 2), ("ping", 2, 3), ("pong", 3, 2)}
    assert a.terminals == frozenset()


def test_crowdfunding(decls):
    a = build_automaton(decls["crowdfunding"])
    assert edges(a) == {("init", 1, 2), ("continue", 2, 3), ("contribute", 3, 2), ("closeCrowdfund", 2, 4)}
    assert a.terminals == {4}


def test_auction(decls):
    a = build_automaton(decls["auction"])
    assert edges(a) == {("beginAuction", 1, 2), ("bid", 2, 2), ("endAuction", 2, 3)}
    assert a.terminals == {3}


def test_empty_protocol():
    a = build_automaton(parse_protocol("protocol Empty () {}"))
    assert a.states == (1,) and a.initial == 1 and a.terminals == {1} and a.transitions == ()
    dot = to_dot(a)
    assert dot.count("doublecircle") == 1 and "->" not in dot


def test_invalid_protocol_is_refused():
    with pytest.raises(DiagnosticError):
        build_automaton(parse_protocol("protocol P (role A) { L; }"))


def test_enabled(gg, decls):
    a = build_automaton(gg)
    assert enabled(a, 2) == [EdgeLabel("closeGame", "Contract"), EdgeLabel("guess", "Player", gg.body[1].body[0].body[0].params)]
    assert enabled(a, 3) == []
    rec = build_automaton(decls["rec_guessing_game"])
    assert [lab.endpoint for lab in enabled(rec, 2)] == ["cancelGame", "proceedWithGame"]
    with pytest.raises(KeyError):
        enabled(a, 9)


def test_dot_guessing_game(gg):
    dot = to_dot(build_automaton(gg))
    assert dot.startswith('digraph "GuessingGame" {')
    assert '  2 -> 2 [label="guess"];' in dot
    assert '  2 -> 3 [label="closeGame", style=dashed];' in dot
    assert "  3 [shape=doublecircle];" in dot
    assert sum(1 for line in dot.splitlines() if "[shape=" in line) == 3


@pytest.mark.parametrize("stem", list(PROTOCOLS))
def test_dot_matches_golden(stem, decls):
    assert to_dot(build_automaton(decls[stem])) == (GOLDEN / f"{stem}.dot").read_text()


@pytest.mark.parametrize("stem", list(PROTOCOLS))
def test_invariants_and_dump_round_trip(stem, decls):
    a = build_automaton(decls[stem])
    assert check_invariants(a) == []
    assert load(dump(a)) == a
    assert build_automaton(decls[stem]) == a


def test_invariant_checker_detects_violations(gg):
    a = build_automaton(gg)
    broken = load(dump(a) + "edge 3 1 guess Player UserCall String\nedge 2 1 guess Player UserCall String\n")
    problems = check_invariants(broken)
    assert any("two guess edges" in p for p in problems)
    assert any("terminal state 3" in p for p in problems)
    orphan = load(dump(a).replace("states 3", "states 4"))
    assert check_invariants(orphan) == ["state 4 is unreachable"]


# ---------------------------------------------------------------------------
# edge count, checked against structure read off the syntax tree


def _body_nodes(a, do: DoInterrupt) -> set[int]:
    """States of the do-body: the region entered through the body's own endpoints."""
    names = {i.endpoint for i in walk(do.body) if isinstance(i, Interaction)}
    names |= {b.label for i in walk(do.body) if isinstance(i, Choice) for b in i.branches}
    handler_srcs = {t.src for t in a.transitions if t.label.endpoint == do.handler.endpoint}
    inside = {t.src for t in a.transitions if t.label.endpoint in names}
    inside |= {t.dst for t in a.transitions if t.label.endpoint in names}
    # a body without interactions still owns its entry node
    return inside or handler_srcs


def expected_edge_count(decl, a) -> int:
    dos = [i for i in walk(decl.body) if isinstance(i, DoInterrupt)]
    handlers = {d.handler.endpoint for d in dos}
    plain = sum(1 for i in walk(decl.body) if isinstance(i, Interaction) and i.endpoint not in handlers)
    labels = sum(len(i.branches) for i in walk(decl.body) if isinstance(i, Choice))
    return plain + labels + sum(len(_body_nodes(a, d)) for d in dos)


@pytest.mark.parametrize("stem", list(PROTOCOLS))
def test_edge_count(stem, decls):
    a = build_automaton(decls[stem])
    assert len(a.transitions) == expected_edge_count(decls[stem], a)


def test_interrupt_from_every_body_node():
    decl = parse_protocol(
        "protocol P (role A) { do { a () from A; b () from A; rec L { c () from A; L; } } "
        "interrupt { stop () from Contract; } d () from A; }"
    )
    a = build_automaton(decl)
    stops = sorted(t.src for t in a.transitions if t.label.endpoint == "stop")
    assert stops == [1, 2, 3]  # c loops on the rec anchor 3
    post = {t.dst for t in a.transitions if t.label.endpoint == "stop"}
    assert len(post) == 1
    assert [t.label.endpoint for t in a.outgoing(post.pop())] == ["d"]
    assert check_invariants(a) == []


def test_guessing_game_one_interrupt_per_body_node(gg):
    a = build_automaton(gg)
    interrupts = [t for t in a.transitions if t.label.kind is EdgeKind.AUTO_INTERRUPT]
    assert sorted(t.src for t in interrupts) == [2]
    assert {t.dst for t in interrupts} <= a.terminals


# ---------------------------------------------------------------------------
# random well-formed protocols


@st.composite
def valid_decls(draw):
    counter = iter(range(10**6))
    roles = ("A", "B")

    def fresh(prefix):
        return f"{prefix}{next(counter)}"

    def block(depth, labels, in_do):
        out = []
        for _ in range(draw(st.integers(0, 3))):
            options = ["interaction"]
            if depth > 0:
                options += ["choice", "rec"] + ([] if in_do else ["do"])
            if labels:
                options.append("continue")
            kind = draw(st.sampled_from(options))
            if kind == "interaction":
                item = Interaction(fresh("e"), (), draw(st.sampled_from(roles)))
            elif kind == "continue":
                item = Continue(draw(st.sampled_from(labels)))
            elif kind == "choice":
                n = draw(st.integers(2, 3))
                item = Choice(draw(st.sampled_from(roles)),
                              tuple(Branch(fresh("b"), block(depth - 1, labels, in_do)) for _ in range(n)))
            elif kind == "rec":
                label = fresh("L")
                item = Rec(label, block(depth - 1, labels + [label], in_do))
            else:
                item = DoInterrupt(block(depth - 1, labels, True), Interaction(fresh("h"), (), "Contract"))
            out.append(item)
            if not falls_through(item):
                break
        return tuple(out)

    return ProtocolDecl("Random", roles, (), block(3, [], False))


@settings(max_examples=400, deadline=None)
@given(valid_decls())
def test_random_protocols_satisfy_invariants(decl):
    assert validate(decl) == []
    a = build_automaton(decl)
    assert check_invariants(a) == []
    assert a.initial == 1
    assert a.states == tuple(range(1, len(a.states) + 1))
    assert build_automaton(decl) == a
    assert load(dump(a)) == a
    for t in a.transitions:
        assert (t.label.kind is EdgeKind.AUTO_INTERRUPT) == (t.label.role == "Contract")
