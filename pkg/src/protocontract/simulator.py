"""Deterministic slot-based ledger for protocol-governed contracts.

Every operation takes a :class:`LedgerState` and returns a new one; states are
never mutated, so a simulation can be forked at any point.

Funds move only through the contract's stored funds value: when a handler
returns new contents whose funds differ from the old by ``delta``, the caller
pays ``delta`` into the pot (or receives ``-delta`` from it).  Automatic
interrupts settle against the owner wallet instead of a caller.
"""

from __future__ import annotations

import enum
import json
from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, replace
from types import MappingProxyType

from .ast import CONTRACT, BaseType, Endpoint, ProtocolDecl, TriggerKind, endpoints
from .automaton import Automaton, EdgeKind, build_automaton
from .logic import (
    CallContext,
    Err,
    VARIANT_OF,
    FundsPredicate,
    HandlerTable,
    NewState,
    SlotAt,
    StateContents,
    TriggerSpec,
    default_contents,
    funds_of,
    identity,
    matches_signature,
)


class SimulationError(Exception):
    """Misuse of the simulator: bad setup, unknown endpoint, ill-typed arguments."""


class Mode(enum.Enum):
    GUARDED = "guarded"
    UNGUARDED = "unguarded"


class EventKind(enum.Enum):
    CALL_ACCEPTED = "CallAccepted"
    CALL_REJECTED = "CallRejected"
    TRIGGER_FIRED = "TriggerFired"
    TRANSFER = "Transfer"
    MESSAGE = "Message"


@dataclass(frozen=True)
class SimEvent:
    slot: int
    kind: EventKind
    actor: str
    detail: str
    call: str | None = None
    endpoint: str | None = None
    src: int | None = None
    dst: int | None = None

    def render(self) -> list[str]:
        lines = [f"{self.actor}: EndpointCall {self.call}"] if self.call is not None else []
        lines.append(f"{self.actor}: {self.detail}")
        return lines


@dataclass(frozen=True)
class ArmedTrigger:
    kind: TriggerKind
    spec: TriggerSpec
    target: str

    def describe(self) -> str:
        if isinstance(self.spec, SlotAt):
            cond = f"slot >= {self.spec.slot}"
        else:
            cond = self.spec.description
        return f"{self.kind.value} trigger ({cond}) -> {self.target}"


@dataclass(frozen=True)
class Program:
    decl: ProtocolDecl
    automaton: Automaton
    handlers: HandlerTable

    def endpoint(self, name: str) -> Endpoint:
        for ep in endpoints(self.decl):
            if ep.name == name:
                return ep
        raise SimulationError(f"protocol {self.decl.name} has no endpoint {name!r}")

    def handler(self, name: str):
        return self.handlers.get(name, identity)


@dataclass(frozen=True)
class LedgerState:
    program: Program
    slot: int
    balances: Mapping[str, int]
    pot: int
    machine_state: int
    contents: StateContents
    armed: tuple[ArmedTrigger, ...]
    mode: Mode
    outputs: tuple[StateContents, ...]
    log: tuple[SimEvent, ...]
    role_of: Mapping[str, str]
    owner_wallet: str | None

    @property
    def total(self) -> int:
        return sum(self.balances.values()) + self.pot


def _frozen(d: dict) -> Mapping:
    return MappingProxyType(dict(d))


def _pairs(items: Mapping[str, object] | Iterable[tuple[str, object]], what: str) -> dict:
    pairs = items.items() if isinstance(items, Mapping) else items
    out: dict = {}
    for key, value in pairs:
        if key in out:
            raise SimulationError(f"duplicate wallet id {key!r} in {what}")
        out[key] = value
    return out


def init_simulation(
    decl: ProtocolDecl,
    automaton: Automaton,
    handlers: HandlerTable,
    balances: Mapping[str, int] | Iterable[tuple[str, int]],
    roles: Mapping[str, str] | Iterable[tuple[str, str]],
    mode: Mode = Mode.GUARDED,
) -> LedgerState:
    bal = _pairs(balances, "balances")
    role_of = _pairs(roles, "role assignment")
    for wallet, amount in bal.items():
        if isinstance(amount, bool) or not isinstance(amount, int) or amount < 0:
            raise SimulationError(f"balance of {wallet} must be a non-negative integer, got {amount!r}")
    for wallet, role in role_of.items():
        if wallet not in bal:
            raise SimulationError(f"wallet {wallet} has a role but no balance")
        if role not in decl.roles:
            raise SimulationError(f"role {role} is not declared by protocol {decl.name}")
    for role in decl.roles:
        if role not in role_of.values():
            raise SimulationError(f"role {role} is not assigned to any wallet")

    owner = None
    if decl.roles:
        owner = next(w for w, r in role_of.items() if r == decl.roles[0])

    return LedgerState(
        program=Program(decl, automaton, handlers),
        slot=0,
        balances=_frozen(bal),
        pot=0,
        machine_state=automaton.initial,
        contents=default_contents(decl.fields),
        armed=(),
        mode=mode,
        outputs=(),
        log=(),
        role_of=_frozen(role_of),
        owner_wallet=owner,
    )


# ---------------------------------------------------------------------------
# calls

_PY_TYPE = {BaseType.VALUE: int}
_FIELD_VARIANTS = tuple(VARIANT_OF.values())


def _plain_args(ep: Endpoint, args: Iterable[object]) -> tuple[object, ...]:
    values = tuple(a.value if isinstance(a, _FIELD_VARIANTS) else a for a in args)
    if len(values) != len(ep.params):
        raise SimulationError(f"{ep.name} expects {len(ep.params)} argument(s), got {len(values)}")
    for param, value in zip(ep.params, values):
        want = _PY_TYPE.get(param, str)
        if isinstance(value, bool) or not isinstance(value, want):
            raise SimulationError(f"{ep.name}: {value!r} is not a {param.value}")
    return values


def _render_call(endpoint: str, args: tuple[object, ...]) -> str:
    return json.dumps({"tag": endpoint, "args": list(args)}, ensure_ascii=False, separators=(",", ":"))


class _Rejected(Exception):
    pass


def _settle(
    balances: Mapping[str, int],
    counterparty: str | None,
    delta: int,
    payouts: tuple[tuple[str, int], ...],
    slot: int,
) -> tuple[dict[str, int], list[SimEvent]]:
    for wallet, amount in payouts:
        if wallet not in balances or isinstance(amount, bool) or not isinstance(amount, int) or amount <= 0:
            raise SimulationError(f"invalid payout {amount!r} to {wallet!r}")
    owed = delta + sum(amount for _, amount in payouts)
    new = dict(balances)
    events: list[SimEvent] = []
    if owed:
        if counterparty is None:
            raise _Rejected(f"no wallet to settle a funds change of {delta}")
        if owed > 0 and new[counterparty] < owed:
            raise _Rejected(f"Insufficient funds: {counterparty} holds {new[counterparty]} Lovelace, needs {owed}")
        new[counterparty] -= owed
        direction = "to contract" if owed > 0 else "from contract"
        events.append(SimEvent(slot, EventKind.TRANSFER, counterparty, f"Transfer {abs(owed)} Lovelace {direction}"))
    for wallet, amount in payouts:
        new[wallet] += amount
        events.append(SimEvent(slot, EventKind.TRANSFER, wallet, f"Transfer {amount} Lovelace from contract"))
    return new, events


def _arm(st: LedgerState, ep: Endpoint, args: tuple[object, ...]) -> tuple[ArmedTrigger, ...]:
    armed = []
    for trig in ep.triggers:
        cond = trig.condition
        if cond is not None:
            if trig.kind is TriggerKind.SLOT:
                spec: TriggerSpec = SlotAt(cond.value)
            else:
                spec = FundsPredicate(cond.holds, f"funds {cond.op} {cond.value}")
        else:
            hook_name = f"{ep.name}{trig.kind.hook_suffix}"
            hook = st.program.handlers.get(hook_name)
            if hook is None:
                raise SimulationError(f"handler table lacks trigger hook {hook_name}")
            spec = hook(*args)
        if trig.kind is TriggerKind.SLOT and not isinstance(spec, SlotAt):
            raise SimulationError(f"slot trigger of {ep.name} must yield SlotAt, got {spec!r}")
        if trig.kind is TriggerKind.FUNDS and not isinstance(spec, FundsPredicate):
            raise SimulationError(f"funds trigger of {ep.name} must yield FundsPredicate, got {spec!r}")
        if isinstance(spec, SlotAt) and spec.slot < st.slot:
            raise _Rejected(f"slot trigger at slot {spec.slot} has already passed")
        armed.append(ArmedTrigger(trig.kind, spec, trig.target))
    return tuple(armed)


def _check_result(st: LedgerState, endpoint: str, result: object) -> NewState | Err:
    if isinstance(result, Err):
        return result
    if not isinstance(result, NewState):
        raise SimulationError(f"handler {endpoint} returned {result!r}, expected NewState or Err")
    if not matches_signature(st.program.decl.fields, result.contents):
        raise SimulationError(f"handler {endpoint} returned contents not matching the field signature")
    return result


def submit_call(st: LedgerState, caller: str, endpoint: str, args: Iterable[object] = ()) -> LedgerState:
    """Invoke ``endpoint`` on behalf of wallet ``caller`` at the current slot.

    Rejections (guard failure, handler error, insufficient funds) are logged
    and leave everything but the log untouched.  Misuse raises
    :class:`SimulationError`.
    """
    if caller not in st.balances:
        raise SimulationError(f"unknown wallet {caller!r}")
    ep = st.program.endpoint(endpoint)
    values = _plain_args(ep, args)
    call = _render_call(endpoint, values)

    def reject(reason: str) -> LedgerState:
        ev = SimEvent(st.slot, EventKind.CALL_REJECTED, caller, reason, call, endpoint)
        return replace(st, log=st.log + (ev,))

    try:
        if st.mode is Mode.UNGUARDED:
            return _submit_unguarded(st, caller, ep, values, call)
        return _submit_guarded(st, caller, ep, values, call)
    except _Rejected as exc:
        return reject(str(exc))


def _submit_guarded(st: LedgerState, caller: str, ep: Endpoint, values: tuple, call: str) -> LedgerState:
    auto = st.program.automaton
    edge = auto.step(st.machine_state, ep.name)
    if edge is None:
        if st.machine_state != auto.initial and auto.step(auto.initial, ep.name) is not None:
            raise _Rejected(f"Previous {ep.name} detected. This {ep.name} produces no effect")
        raise _Rejected(f"{ep.name} is not enabled in state {st.machine_state}")
    role = st.role_of.get(caller)
    if edge.label.kind is EdgeKind.AUTO_INTERRUPT:
        raise _Rejected(f"{ep.name} runs automatically and cannot be called by a wallet")
    if role != edge.label.role:
        raise _Rejected(f"{ep.name} must be called by {edge.label.role}, not {role or 'an unassigned wallet'}")

    ctx = CallContext(caller, role, st.slot)
    result = _check_result(st, ep.name, st.program.handler(ep.name)(ctx, st.contents, *values))
    if isinstance(result, Err):
        raise _Rejected(result.message)

    new_armed = _arm(st, ep, values)
    delta = funds_of(result.contents) - st.pot
    balances, transfers = _settle(st.balances, caller, delta, result.payouts, st.slot)

    events = [SimEvent(st.slot, EventKind.CALL_ACCEPTED, caller,
                       f"Successful transaction to state {edge.dst}", call, ep.name, edge.src, edge.dst)]
    if result.message:
        events.append(SimEvent(st.slot, EventKind.MESSAGE, caller, result.message))
    events += transfers
    events += [SimEvent(st.slot, EventKind.MESSAGE, CONTRACT, f"armed {t.describe()}") for t in new_armed]
    return replace(
        st,
        balances=_frozen(balances),
        pot=funds_of(result.contents),
        machine_state=edge.dst,
        contents=result.contents,
        armed=st.armed + new_armed,
        log=st.log + tuple(events),
    )


def _submit_unguarded(st: LedgerState, caller: str, ep: Endpoint, values: tuple, call: str) -> LedgerState:
    """Vanilla contract: no FSM, no roles, no triggers; each lock adds an output."""
    auto = st.program.automaton
    ctx = CallContext(caller, st.role_of.get(caller, ""), st.slot)
    handler = st.program.handler(ep.name)

    if auto.step(auto.initial, ep.name) is not None:
        result = _check_result(st, ep.name, handler(ctx, default_contents(st.program.decl.fields), *values))
        if isinstance(result, Err):
            raise _Rejected(f"Validation failed: {result.message}")
        old_outputs: tuple[StateContents, ...] = ()
        new_outputs = (result.contents,)
        payouts = result.payouts
        messages = [result.message] if result.message else []
        keep = st.outputs
    else:
        if not st.outputs:
            raise _Rejected("Validation failed: no contract output to spend")
        results = []
        for output in st.outputs:
            r = _check_result(st, ep.name, handler(ctx, output, *values))
            if isinstance(r, Err):
                raise _Rejected(f"Validation failed: {r.message}")
            results.append(r)
        old_outputs = st.outputs
        new_outputs = tuple(r.contents for r in results)
        payouts = tuple(p for r in results for p in r.payouts)
        messages = list(dict.fromkeys(r.message for r in results if r.message))
        keep = ()

    delta = sum(funds_of(c) for c in new_outputs) - sum(funds_of(c) for c in old_outputs)
    balances, transfers = _settle(st.balances, caller, delta, payouts, st.slot)
    outputs = keep + new_outputs
    events = [SimEvent(st.slot, EventKind.CALL_ACCEPTED, caller,
                       f"Validating transaction: {len(outputs)} contract output(s)", call, ep.name)]
    events += [SimEvent(st.slot, EventKind.MESSAGE, caller, m) for m in messages]
    events += transfers
    return replace(
        st,
        balances=_frozen(balances),
        pot=sum(funds_of(c) for c in outputs),
        outputs=outputs,
        log=st.log + tuple(events),
    )


# ---------------------------------------------------------------------------
# time


def _trigger_due(st: LedgerState, trig: ArmedTrigger) -> bool:
    if isinstance(trig.spec, SlotAt):
        return st.slot >= trig.spec.slot
    return trig.spec(st.pot)


def _fire(st: LedgerState) -> LedgerState:
    auto = st.program.automaton
    # funds triggers are evaluated before slot triggers; at most one fires
    for trig in sorted(st.armed, key=lambda t: t.kind is not TriggerKind.FUNDS):
        edge = auto.step(st.machine_state, trig.target)
        if edge is None or edge.label.kind is not EdgeKind.AUTO_INTERRUPT or not _trigger_due(st, trig):
            continue
        actor = st.owner_wallet or CONTRACT
        ctx = CallContext(None, CONTRACT, st.slot)
        result = _check_result(st, trig.target, st.program.handler(trig.target)(ctx, st.contents))
        try:
            if isinstance(result, Err):
                raise _Rejected(result.message)
            delta = funds_of(result.contents) - st.pot
            balances, transfers = _settle(st.balances, st.owner_wallet, delta, result.payouts, st.slot)
        except _Rejected as exc:
            ev = SimEvent(st.slot, EventKind.MESSAGE, CONTRACT, f"{trig.describe()} failed: {exc}")
            return replace(st, log=st.log + (ev,))
        events = [SimEvent(st.slot, EventKind.TRIGGER_FIRED, CONTRACT,
                           f"{trig.kind.value} trigger fired: {trig.target}, state {edge.src} -> {edge.dst}",
                           endpoint=trig.target, src=edge.src, dst=edge.dst)]
        if result.message:
            events.append(SimEvent(st.slot, EventKind.MESSAGE, actor, result.message))
        events += transfers
        return replace(
            st,
            balances=_frozen(balances),
            pot=funds_of(result.contents),
            machine_state=edge.dst,
            contents=result.contents,
            armed=(),
            log=st.log + tuple(events),
        )
    return st


def advance_slot(st: LedgerState, n: int = 1) -> LedgerState:
    """Advance ``n`` slots, evaluating armed triggers after each increment."""
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise SimulationError(f"slot advance must be a positive integer, got {n!r}")
    for _ in range(n):
        st = replace(st, slot=st.slot + 1)
        if st.armed and st.mode is Mode.GUARDED:
            st = _fire(st)
    return st


# ---------------------------------------------------------------------------
# rendering and scenarios


def render_log(st: LedgerState) -> str:
    by_slot: dict[int, list[SimEvent]] = defaultdict(list)
    for ev in st.log:
        by_slot[ev.slot].append(ev)
    lines = []
    for k in range(st.slot + 1):
        lines.append(f"=== Slot {k} ===")
        for ev in by_slot[k]:
            lines += ev.render()
    return "\n".join(lines) + "\n"


def render_balances(st: LedgerState) -> str:
    lines = ["Final balances:"]
    lines += [f"  {wallet}: {amount}" for wallet, amount in st.balances.items()]
    lines.append(f"  contract: {st.pot}")
    return "\n".join(lines) + "\n"


def run_scenario(decl: ProtocolDecl, handlers: HandlerTable, scenario, mode: Mode | None = None) -> tuple[LedgerState, str]:
    """Replay ``scenario`` from slot 0 and return the final state and its log.

    ``mode`` overrides the scenario's own mode when given.  Scenario problems
    are reported as a :class:`~protocontract.diagnostics.DiagnosticError`
    before anything executes.
    """
    from .diagnostics import DiagnosticError
    from .scenario import Call, Wait, check_scenario

    diags = check_scenario(scenario, decl)
    if diags:
        raise DiagnosticError(diags)
    automaton = build_automaton(decl)
    st = init_simulation(decl, automaton, handlers, scenario.initial_balances, scenario.roles,
                         mode or scenario.mode)
    for action in scenario.actions:
        if isinstance(action, Call):
            st = submit_call(st, action.wallet, action.endpoint, action.args)
        elif isinstance(action, Wait):
            st = advance_slot(st, action.slots)
    return st, render_log(st)
