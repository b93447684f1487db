"""Scenario files: initial balances, role bindings and an ordered action list.

The JSON layout is documented in ``docs/formats.md``; the canonical example is
``scenarios/double_lock.json`` inside this package.
"""

from __future__ import annotations

import json
import json.scanner
from dataclasses import dataclass, field
from typing import Any, Union

from .ast import BaseType, ProtocolDecl, endpoints
from .diagnostics import NO_SPAN, Diagnostic, DiagnosticError, Span, span_at
from .logic import VARIANT_OF, FieldValue, Funds
from .simulator import Mode


@dataclass(frozen=True)
class Call:
    wallet: str
    endpoint: str
    args: tuple[str | int, ...] = ()
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Wait:
    slots: int
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


Action = Union[Call, Wait]


@dataclass(frozen=True)
class Scenario:
    initial_balances: dict[str, int]
    roles: dict[str, str]
    actions: tuple[Action, ...] = ()
    mode: Mode = Mode.GUARDED
    description: str = ""


_TOP_KEYS = {"initial_balances", "roles", "actions", "mode", "description"}
_CALL_KEYS = {"type", "wallet", "tag", "args"}
_WAIT_KEYS = {"type", "slots"}


class _PositionDecoder(json.JSONDecoder):
    """Records the source offset of every object and array it builds."""

    def __init__(self) -> None:
        super().__init__(object_pairs_hook=self._object)
        self.offsets: dict[int, int] = {}
        self.duplicates: list[tuple[str, dict]] = []
        base_object, base_array = self.parse_object, self.parse_array

        def parse_object(s_and_end, *rest):
            obj, end = base_object(s_and_end, *rest)
            self.offsets[id(obj)] = s_and_end[1] - 1
            return obj, end

        def parse_array(s_and_end, *rest):
            arr, end = base_array(s_and_end, *rest)
            self.offsets[id(arr)] = s_and_end[1] - 1
            return arr, end

        self.parse_object = parse_object
        self.parse_array = parse_array
        self.scan_once = json.scanner.py_make_scanner(self)

    def _object(self, pairs: list[tuple[str, Any]]) -> dict:
        obj: dict = {}
        for key, value in pairs:
            if key in obj:
                self.duplicates.append((key, obj))
            obj[key] = value
        return obj


def _is_int(v: object) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def load_scenario(text: str) -> Scenario:
    """Parse scenario JSON; raise :class:`DiagnosticError` on any schema violation."""
    decoder = _PositionDecoder()
    try:
        data = decoder.decode(text)
    except json.JSONDecodeError as exc:
        raise DiagnosticError([Diagnostic("E-JSON", exc.msg, span_at(text, exc.pos))]) from None
    except RecursionError:
        raise DiagnosticError([Diagnostic("E-JSON", "nesting too deep", span_at(text, 0))]) from None

    diags: list[Diagnostic] = []

    def at(node: object) -> Span:
        return span_at(text, decoder.offsets.get(id(node), 0))

    def err(code: str, message: str, node: object) -> None:
        diags.append(Diagnostic(code, message, at(node)))

    if not isinstance(data, dict):
        raise DiagnosticError([Diagnostic("E-SCHEMA", "scenario must be a JSON object", span_at(text, 0))])
    for key, obj in decoder.duplicates:
        wallets = obj is data.get("initial_balances") or obj is data.get("roles")
        err("E-WALLET-DUP" if wallets else "E-SCHEMA", f"key {key!r} appears more than once", obj)
    for key in sorted(set(data) - _TOP_KEYS):
        err("E-SCHEMA", f"unknown key {key!r}", data)
    for key in ("initial_balances", "roles", "actions"):
        if key not in data:
            err("E-SCHEMA", f"missing required key {key!r}", data)

    balances: dict[str, int] = {}
    raw = data.get("initial_balances", {})
    if not isinstance(raw, dict):
        err("E-SCHEMA", "initial_balances must be an object", data)
    else:
        for wallet, amount in raw.items():
            if not _is_int(amount) or amount < 0:
                err("E-SCHEMA", f"balance of {wallet!r} must be a non-negative integer", raw)
            else:
                balances[wallet] = amount

    roles: dict[str, str] = {}
    raw = data.get("roles", {})
    if not isinstance(raw, dict):
        err("E-SCHEMA", "roles must be an object", data)
    else:
        for wallet, role in raw.items():
            if not isinstance(role, str):
                err("E-SCHEMA", f"role of {wallet!r} must be a string", raw)
            elif wallet not in balances:
                err("E-WALLET-UNKNOWN", f"wallet {wallet!r} is not in initial_balances", raw)
            else:
                roles[wallet] = role

    mode = Mode.GUARDED
    if "mode" in data:
        try:
            mode = Mode(data["mode"])
        except (ValueError, TypeError):
            err("E-SCHEMA", "mode must be 'guarded' or 'unguarded'", data)

    description = data.get("description", "")
    if not isinstance(description, str):
        err("E-SCHEMA", "description must be a string", data)
        description = ""

    actions: list[Action] = []
    raw = data.get("actions", [])
    if not isinstance(raw, list):
        err("E-SCHEMA", "actions must be an array", data)
        raw = []
    for i, entry in enumerate(raw):
        where = f"actions[{i}]"
        if not isinstance(entry, dict):
            err("E-SCHEMA", f"{where} must be an object", raw)
            continue
        kind = entry.get("type")
        if kind == "wait":
            for key in sorted(set(entry) - _WAIT_KEYS):
                err("E-SCHEMA", f"{where}: unknown key {key!r}", entry)
            slots = entry.get("slots")
            if not _is_int(slots) or slots < 1:
                err("E-SCHEMA", f"{where}: slots must be a positive integer", entry)
            else:
                actions.append(Wait(slots, at(entry)))
        elif kind == "call":
            for key in sorted(set(entry) - _CALL_KEYS):
                err("E-SCHEMA", f"{where}: unknown key {key!r}", entry)
            wallet, tag, args = entry.get("wallet"), entry.get("tag"), entry.get("args", [])
            ok = True
            if not isinstance(wallet, str):
                err("E-SCHEMA", f"{where}: wallet must be a string", entry)
                ok = False
            elif wallet not in balances:
                err("E-WALLET-UNKNOWN", f"{where}: wallet {wallet!r} is not in initial_balances", entry)
                ok = False
            if not isinstance(tag, str):
                err("E-SCHEMA", f"{where}: tag must name an endpoint", entry)
                ok = False
            if not isinstance(args, list) or not all(isinstance(a, str) or _is_int(a) for a in args):
                err("E-SCHEMA", f"{where}: args must be an array of strings and integers", entry)
                ok = False
            if ok:
                actions.append(Call(wallet, tag, tuple(args), at(entry)))
        else:
            err("E-SCHEMA", f"{where}: type must be 'call' or 'wait'", entry)

    if diags:
        raise DiagnosticError(diags)
    return Scenario(balances, roles, tuple(actions), mode, description)


def dump_scenario(sc: Scenario) -> str:
    data: dict[str, Any] = {}
    if sc.description:
        data["description"] = sc.description
    data["mode"] = sc.mode.value
    data["initial_balances"] = dict(sc.initial_balances)
    data["roles"] = dict(sc.roles)
    actions: list[dict[str, Any]] = []
    for a in sc.actions:
        if isinstance(a, Wait):
            actions.append({"type": "wait", "slots": a.slots})
        else:
            actions.append({"type": "call", "wallet": a.wallet, "tag": a.endpoint, "args": list(a.args)})
    data["actions"] = actions
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def coerce_arg(param: BaseType, literal: str | int) -> FieldValue:
    """Convert a scenario literal to the stored value variant for ``param``."""
    if param is BaseType.VALUE:
        if not _is_int(literal):
            raise ValueError(f"{literal!r} is not an integer amount")
        return Funds(literal)  # rejects negatives
    if not isinstance(literal, str):
        raise ValueError(f"{literal!r} is not a string")
    return VARIANT_OF[param](literal)


def check_scenario(sc: Scenario, decl: ProtocolDecl) -> list[Diagnostic]:
    """Referential checks of a loaded scenario against a protocol."""
    diags: list[Diagnostic] = []
    for wallet, role in sc.roles.items():
        if wallet not in sc.initial_balances:
            diags.append(Diagnostic("E-WALLET-UNKNOWN", f"wallet {wallet!r} is not in initial_balances"))
        if role not in decl.roles:
            diags.append(Diagnostic("E-ROLE-UNKNOWN", f"role {role!r} is not declared by protocol {decl.name}"))
    for role in decl.roles:
        if role not in sc.roles.values():
            diags.append(Diagnostic("E-ROLE-UNASSIGNED", f"role {role} is not bound to any wallet"))

    table = {ep.name: ep for ep in endpoints(decl)}
    for a in sc.actions:
        if not isinstance(a, Call):
            continue
        if a.wallet not in sc.initial_balances:
            diags.append(Diagnostic("E-WALLET-UNKNOWN", f"wallet {a.wallet!r} is not in initial_balances", a.span))
        ep = table.get(a.endpoint)
        if ep is None:
            diags.append(Diagnostic("E-ENDPOINT-UNKNOWN", f"protocol {decl.name} has no endpoint {a.endpoint!r}", a.span))
            continue
        if len(a.args) != len(ep.params):
            diags.append(Diagnostic(
                "E-ARG-ARITY", f"{a.endpoint} takes {len(ep.params)} argument(s), got {len(a.args)}", a.span))
            continue
        for param, literal in zip(ep.params, a.args):
            try:
                coerce_arg(param, literal)
            except ValueError as exc:
                diags.append(Diagnostic("E-ARG-TYPE", f"{a.endpoint}: {param.value} argument: {exc}", a.span))
    return diags
