"""Random scenario generation and invariant checks shared by the property tests."""

from __future__ import annotations

import random
from dataclasses import dataclass

from protocontract.ast import BaseType, ProtocolDecl, endpoints
from protocontract.automaton import Automaton, build_automaton, enabled
from protocontract.logic import DEFAULT_PACK, funds_of, register_pack
from protocontract.scenario import Call, Scenario, Wait
from protocontract.simulator import (
    EventKind,
    LedgerState,
    Mode,
    advance_slot,
    init_simulation,
    submit_call,
)

WORDS = ("Pink Floyd", "Led Zeppelin", "", "Game over", "tok")


def random_scenario(rng: random.Random, decl: ProtocolDecl, mode: Mode = Mode.GUARDED) -> Scenario:
    """Random scenario biased towards calls the live automaton state would accept.

    Actions are generated while a guarded shadow simulation runs, so that about
    two thirds of the calls name an enabled endpoint and a wallet holding its
    role; the rest are arbitrary and mostly exercise the rejection paths.
    """
    n_wallets = max(len(decl.roles), rng.randint(1, 4))
    wallets = [f"wallet{i}" for i in range(1, n_wallets + 1)]
    balances = {w: rng.randint(0, 40) for w in wallets}
    roles = {}
    for i, w in enumerate(wallets):
        if i < len(decl.roles):
            roles[w] = decl.roles[i]
        elif decl.roles and rng.random() < 0.8:
            roles[w] = rng.choice(decl.roles)
    eps = {ep.name: ep for ep in endpoints(decl)}
    automaton = build_automaton(decl)
    shadow = init_simulation(decl, automaton, register_pack(DEFAULT_PACK[decl.name]), balances, roles)

    actions = []
    for _ in range(rng.randint(0, 14)):
        if not eps or rng.random() < 0.3:
            action = Wait(rng.randint(1, 5))
            actions.append(action)
            shadow = advance_slot(shadow, action.slots)
            continue
        live = [lab for lab in enabled(automaton, shadow.machine_state) if lab.role in roles.values()]
        if live and rng.random() < 0.65:
            label = rng.choice(live)
            ep = eps[label.endpoint]
            wallet = rng.choice([w for w, r in roles.items() if r == label.role])
        else:
            ep = rng.choice(list(eps.values()))
            wallet = rng.choice(wallets)
        args = tuple(rng.randint(0, 15) if p is BaseType.VALUE else rng.choice(WORDS) for p in ep.params)
        action = Call(wallet, ep.name, args)
        actions.append(action)
        shadow = submit_call(shadow, wallet, ep.name, args)
    return Scenario(balances, roles, tuple(actions), mode)


@dataclass
class Violations:
    items: list[str]

    def add(self, msg: str) -> None:
        self.items.append(msg)


def _snapshot(st: LedgerState):
    return (dict(st.balances), st.pot, st.machine_state, st.contents, st.outputs, st.armed)


def check_run(decl: ProtocolDecl, scenario: Scenario, automaton: Automaton | None = None,
              handlers=None) -> list[str]:
    """Replay ``scenario`` step by step, returning every invariant violation found."""
    automaton = automaton or build_automaton(decl)
    if handlers is None:
        handlers = register_pack(DEFAULT_PACK[decl.name])
    st = init_simulation(decl, automaton, handlers, scenario.initial_balances, scenario.roles, scenario.mode)
    edges = {(t.src, t.label.endpoint, t.label.role, t.dst) for t in automaton.transitions}
    total = st.total
    bad = Violations([])
    fired = 0

    for action in scenario.actions:
        before = st
        if isinstance(action, Call):
            st = submit_call(st, action.wallet, action.endpoint, action.args)
        else:
            st = advance_slot(st, action.slots)
        new_events = st.log[len(before.log):]

        if st.total != total:
            bad.add(f"conservation: {st.total} != {total} after {action}")
        if any(v < 0 for v in st.balances.values()) or st.pot < 0:
            bad.add(f"negative funds after {action}")
        if st.mode is Mode.GUARDED and st.pot != funds_of(st.contents):
            bad.add(f"pot {st.pot} differs from stored funds {funds_of(st.contents)}")
        if st.slot < before.slot:
            bad.add("slot went backwards")

        for ev in new_events:
            # judge by the observed machine states, not by what the event claims
            if ev.kind is EventKind.CALL_ACCEPTED and st.mode is Mode.GUARDED:
                key = (before.machine_state, ev.endpoint, st.role_of.get(ev.actor), st.machine_state)
                if key not in edges:
                    bad.add(f"accepted call {key} has no automaton transition")
            if ev.kind is EventKind.TRIGGER_FIRED:
                fired += 1
                if (before.machine_state, ev.endpoint, "Contract", st.machine_state) not in edges:
                    bad.add(f"trigger fired along a missing edge {ev}")
                if st.armed:
                    bad.add("triggers still armed after firing")
                if any(t.src == ev.dst for t in automaton.transitions if t.label.endpoint == ev.endpoint):
                    bad.add("interrupt did not leave its region")

        if isinstance(action, Call) and new_events and new_events[0].kind is EventKind.CALL_REJECTED:
            if len(new_events) != 1:
                bad.add("rejection produced extra events")
            if _snapshot(st) != _snapshot(before):
                bad.add(f"rejected call {action} changed the ledger")

    if fired > 1:
        bad.add(f"trigger fired {fired} times")
    return bad.items
