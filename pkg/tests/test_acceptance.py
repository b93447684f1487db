"""Acceptance criteria, one check per criterion.

Each check returns ``(passed, detail)``.  Under pytest every criterion prints a
``[ACCEPT n] PASS|FAIL`` line and then asserts; ``python3 tests/test_acceptance.py``
prints the same lines and exits non-zero if any criterion fails.
"""

from __future__ import annotations

import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from support import check_run, random_scenario  # noqa: E402

from protocontract.automaton import EdgeKind, build_automaton, check_invariants, to_dot  # noqa: E402
from protocontract.ast import validate  # noqa: E402
from protocontract.bundled import PROTOCOLS, protocol_source, scenario_source  # noqa: E402
from protocontract.codegen import count_loc, count_stubs, emit_stubs  # noqa: E402
from protocontract.diagnostics import DiagnosticError  # noqa: E402
from protocontract.logic import DEFAULT_PACK, register_pack  # noqa: E402
from protocontract.parser import parse_protocol  # noqa: E402
from protocontract.scenario import load_scenario  # noqa: E402
from protocontract.simulator import EventKind, Mode, advance_slot, init_simulation, run_scenario, submit_call  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"
SEED = 20240601
RUNS_PER_PROTOCOL = 1000


def _gg():
    return parse_protocol(protocol_source("guessing_game"))


def criterion_1():
    """Guarded double-lock replay ends 7 / 13 with the second lock rejected."""
    start = time.perf_counter()
    state, log = run_scenario(_gg(), register_pack("guessing_game"), load_scenario(scenario_source("double_lock")))
    elapsed = time.perf_counter() - start
    balances = dict(state.balances)
    ok = (
        "Previous lock detected" in log
        and balances == {"wallet1": 7, "wallet2": 13}
        and state.pot == 0
        and any(e.kind is EventKind.TRIGGER_FIRED for e in state.log)
        and elapsed < 1.0
    )
    return ok, f"owner={balances.get('wallet1')} player={balances.get('wallet2')} pot={state.pot} in {elapsed:.3f}s"


def criterion_2():
    """Unguarded replay: both locks accepted, guess fails, 7 stuck in the contract."""
    state, log = run_scenario(_gg(), register_pack("guessing_game"),
                              load_scenario(scenario_source("double_lock")), Mode.UNGUARDED)
    accepted = [e.endpoint for e in state.log if e.kind is EventKind.CALL_ACCEPTED]
    rejected = [e.endpoint for e in state.log if e.kind is EventKind.CALL_REJECTED]
    later = advance_slot(state, 100)
    # hand accounting: owner 10 - 3 - 4, player untouched, contract 3 + 4
    expected = {"wallet1": 10 - 3 - 4, "wallet2": 10}
    ok = (
        accepted == ["lock", "lock"]
        and rejected == ["guess"]
        and dict(state.balances) == expected
        and state.pot == 7
        and later.pot == 7
        and dict(later.balances) == expected
    )
    return ok, f"owner={state.balances['wallet1']} player={state.balances['wallet2']} contract={state.pot}"


def criterion_3():
    """GuessingGame automaton shape."""
    a = build_automaton(_gg())
    got = {(t.label.endpoint, t.src, t.dst, t.label.kind) for t in a.transitions}
    want = {
        ("lock", 1, 2, EdgeKind.USER_CALL),
        ("guess", 2, 2, EdgeKind.USER_CALL),
        ("closeGame", 2, 3, EdgeKind.AUTO_INTERRUPT),
    }
    ok = len(a.states) == 3 and got == want and a.terminals == {3}
    return ok, f"{len(a.states)} states, {len(a.transitions)} edges, terminals {sorted(a.terminals)}"


def criterion_4():
    """All seven protocols parse, validate, satisfy the invariants and match golden DOT."""
    failures = []
    for stem in PROTOCOLS:
        try:
            decl = parse_protocol(protocol_source(stem))
        except DiagnosticError as exc:
            failures.append(f"{stem}: {exc}")
            continue
        if validate(decl):
            failures.append(f"{stem}: validation diagnostics")
            continue
        a = build_automaton(decl)
        problems = check_invariants(a)
        if problems:
            failures.append(f"{stem}: {problems}")
        if to_dot(a) != (GOLDEN / f"{stem}.dot").read_text():
            failures.append(f"{stem}: DOT differs from golden")
    return not failures, "; ".join(failures) or f"{len(PROTOCOLS)} protocols clean"


def criterion_5():
    """Auction: bids at slots 2, 4, 6; endAuction fires at slot 10 exactly; seller paid."""
    decl = parse_protocol(protocol_source("auction"))
    st = init_simulation(decl, build_automaton(decl), register_pack("auction"),
                         {"seller": 0, "bidder1": 50, "bidder2": 50},
                         {"seller": "Seller", "bidder1": "Buyer", "bidder2": "Buyer"})
    total = st.total
    st = submit_call(advance_slot(st, 1), "seller", "beginAuction", ("artwork", 1))
    bids = [(2, "bidder1", 5), (4, "bidder2", 9), (6, "bidder1", 14)]
    conserved = True
    for slot, bidder, amount in bids:
        st = advance_slot(st, slot - st.slot)
        st = submit_call(st, bidder, "bid", (amount,))
        conserved &= st.total == total
    fired_early = False
    while st.slot < 9:
        st = advance_slot(st, 1)
        fired_early |= st.machine_state != 2
    st = advance_slot(st, 1)
    fired = [e for e in st.log if e.kind is EventKind.TRIGGER_FIRED]
    st = advance_slot(st, 5)
    refires = [e for e in st.log if e.kind is EventKind.TRIGGER_FIRED]
    accepted = [e.slot for e in st.log if e.kind is EventKind.CALL_ACCEPTED and e.endpoint == "bid"]
    ok = (
        accepted == [2, 4, 6]
        and not fired_early
        and [e.slot for e in fired] == [10]
        and len(refires) == 1
        and st.machine_state == 3
        and st.balances["seller"] == 14
        and st.balances["bidder1"] == 50 - 14
        and st.balances["bidder2"] == 50
        and st.pot == 0
        and conserved
        and st.total == total
    )
    return ok, (f"bids at {accepted}, endAuction at slot {[e.slot for e in fired]}, "
                f"seller={st.balances['seller']}, total {st.total}/{total}")


def criterion_6():
    """Randomised guarded scenarios per protocol: ledger invariants and reproducible logs."""
    failures = []
    runs = 0
    for stem in PROTOCOLS:
        decl = parse_protocol(protocol_source(stem))
        automaton = build_automaton(decl)
        handlers = register_pack(DEFAULT_PACK[decl.name])
        rng = random.Random(f"{SEED}:{stem}")
        for i in range(RUNS_PER_PROTOCOL):
            sc = random_scenario(rng, decl, Mode.GUARDED)
            violations = check_run(decl, sc, automaton, handlers)
            if run_scenario(decl, handlers, sc)[1] != run_scenario(decl, handlers, sc)[1]:
                violations.append("logs differ between two runs")
            runs += 1
            if violations:
                failures.append(f"{stem} #{i}: {violations[0]}")
                break
    return not failures, "; ".join(failures) or f"{runs} scenarios, {RUNS_PER_PROTOCOL} per protocol, seed {SEED}"


def criterion_7():
    """Codegen: 5 GuessingGame stubs; stub LOC >= 3x protocol LOC everywhere."""
    stubs = count_stubs(emit_stubs(_gg()))
    ratios = {}
    for stem in PROTOCOLS:
        src = protocol_source(stem)
        ratios[stem] = count_loc(emit_stubs(parse_protocol(src)), "#") / count_loc(src, "//")
    worst = min(ratios, key=ratios.get)
    ok = stubs == 5 and all(r >= 3 for r in ratios.values())
    return ok, f"GuessingGame stubs={stubs}, lowest LOC ratio {ratios[worst]:.2f} ({worst})"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7]


def _report(n, check):
    ok, detail = check()
    return ok, f"[ACCEPT {n}] {'PASS' if ok else 'FAIL'}: {check.__doc__.splitlines()[0]} -- {detail}"


@pytest.mark.parametrize("n", range(1, len(CRITERIA) + 1))
def test_criterion(n, capsys):
    ok, line = _report(n, CRITERIA[n - 1])
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [_report(n, check) for n, check in enumerate(CRITERIA, start=1)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
