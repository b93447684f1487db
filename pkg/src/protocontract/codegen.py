"""Generated artefacts: the contract manifest and business-logic stubs.

The manifest is the machine-readable interface of a contract (roles, stored
fields, endpoints with their automaton edges, trigger hooks).  The stub file is
a Python module following the handler-table plugin interface of
:mod:`protocontract.logic`, with one placeholder per endpoint and per trigger
hook, ready to be filled in by the contract author.
"""

from __future__ import annotations

import keyword
from dataclasses import dataclass

from .ast import BaseType, ProtocolDecl, TriggerKind, endpoints
from .automaton import Automaton, EdgeKind, build_automaton
from .logic import signature


@dataclass(frozen=True)
class ManifestEndpoint:
    name: str
    params: tuple[BaseType, ...]
    role: str
    kind: EdgeKind
    edges: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ManifestHook:
    name: str
    endpoint: str
    kind: TriggerKind
    target: str
    condition: tuple[str, str, int] | None = None


@dataclass(frozen=True)
class Manifest:
    protocol: str
    roles: tuple[str, ...]
    fields: tuple[BaseType, ...]
    endpoints: tuple[ManifestEndpoint, ...]
    hooks: tuple[ManifestHook, ...]


def build_manifest(decl: ProtocolDecl, automaton: Automaton) -> Manifest:
    eps = []
    hooks = []
    for ep in endpoints(decl):
        edges = tuple(sorted((t.src, t.dst) for t in automaton.transitions if t.label.endpoint == ep.name))
        kind = EdgeKind.AUTO_INTERRUPT if ep.role == "Contract" else EdgeKind.USER_CALL
        eps.append(ManifestEndpoint(ep.name, ep.params, ep.role, kind, edges))
        for trig in ep.triggers:
            cond = None
            if trig.condition is not None:
                cond = (trig.condition.subject, trig.condition.op, trig.condition.value)
            hooks.append(ManifestHook(f"{ep.name}{trig.kind.hook_suffix}", ep.name, trig.kind, trig.target, cond))
    return Manifest(decl.name, decl.roles, decl.fields, tuple(eps), tuple(hooks))


def _types(params: tuple[BaseType, ...]) -> str:
    return "(" + ",".join(p.value for p in params) + ")"


def emit_manifest(decl: ProtocolDecl, automaton: Automaton) -> str:
    """Serialise the manifest; see docs/formats.md for the record layout."""
    m = build_manifest(decl, automaton)
    lines = [
        f"protocol {m.protocol}",
        " ".join(["roles", *m.roles]),
        " ".join(["fields", *(f.value for f in m.fields)]),
    ]
    for ep in m.endpoints:
        edges = " ".join(f"{s}->{d}" for s, d in ep.edges)
        lines.append(f"endpoint {ep.name} {_types(ep.params)} {ep.role} {ep.kind.value} {edges}".rstrip())
    for h in m.hooks:
        line = f"hook {h.name} {h.endpoint} {h.kind.value} {h.target}"
        if h.condition is not None:
            line += " when {} {} {}".format(*h.condition)
        lines.append(line)
    return "\n".join(lines) + "\n"


def parse_manifest(text: str) -> Manifest:
    protocol, roles, fields = "", (), ()
    eps: list[ManifestEndpoint] = []
    hooks: list[ManifestHook] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        head, *rest = line.split()
        if head == "protocol":
            protocol = rest[0]
        elif head == "roles":
            roles = tuple(rest)
        elif head == "fields":
            fields = tuple(BaseType(f) for f in rest)
        elif head == "endpoint":
            name, params, role, kind, *edges = rest
            inner = params[1:-1]
            types = tuple(BaseType(p) for p in inner.split(",")) if inner else ()
            pairs = tuple((int(s), int(d)) for s, d in (e.split("->") for e in edges))
            eps.append(ManifestEndpoint(name, types, role, EdgeKind(kind), pairs))
        elif head == "hook":
            name, endpoint, kind, target, *cond = rest
            condition = None
            if cond:
                if len(cond) != 4 or cond[0] != "when":
                    raise ValueError(f"line {lineno}: malformed hook condition")
                condition = (cond[1], cond[2], int(cond[3]))
            hooks.append(ManifestHook(name, endpoint, TriggerKind(kind), target, condition))
        else:
            raise ValueError(f"line {lineno}: unknown record {head!r}")
    return Manifest(protocol, roles, fields, tuple(eps), tuple(hooks))


# ---------------------------------------------------------------------------
# stubs

_PY_ANNOTATION = {BaseType.VALUE: "int"}


def python_name(name: str) -> str:
    return name + "_" if keyword.iskeyword(name) else name


def _arg_list(params: tuple[BaseType, ...]) -> list[str]:
    return [f"arg{i}: {_PY_ANNOTATION.get(p, 'str')}" for i, p in enumerate(params, start=1)]


def _arg_doc(params: tuple[BaseType, ...]) -> list[str]:
    if not params:
        return []
    described = ", ".join(f"arg{i} ({p.value})" for i, p in enumerate(params, start=1))
    return [f"    Arguments: {described}."]


def _tuple_text(types: tuple[BaseType, ...]) -> str:
    return "(" + ", ".join(t.value for t in types) + ")"


def emit_stubs(decl: ProtocolDecl) -> str:
    """Python module with one placeholder handler per endpoint and trigger hook."""
    automaton = build_automaton(decl)
    manifest = build_manifest(decl, automaton)
    stored = _tuple_text(signature(decl.fields))
    out = [
        f'"""Business logic for protocol {decl.name}.',
        "",
        f"Roles: {', '.join(decl.roles) or '(none)'}",
        f"Stored contents: {stored}; the last Value holds the contract funds.",
        "",
        "Endpoint handlers take (ctx, current, *args) and return NewState(contents)",
        "to advance the state machine or Err(message) to reject the call.",
        "Trigger hooks take the endpoint arguments and return the firing condition.",
        '"""',
        "",
        "from protocontract.logic import Err, Funds, FundsPredicate, NewState, SlotAt  # noqa: F401",
    ]
    table: list[tuple[str, str]] = []

    for ep in manifest.endpoints:
        fn = python_name(ep.name)
        args = ", ".join(["ctx", "current", *_arg_list(ep.params)])
        edges = ", ".join(f"{s} -> {d}" for s, d in ep.edges)
        how = "Runs automatically when a trigger fires." if ep.kind is EdgeKind.AUTO_INTERRUPT else f"Called by a wallet with role {ep.role}."
        out += [
            "",
            "",
            f"def {fn}({args}):",
            f'    """Endpoint {ep.name} {_tuple_text(ep.params)} from {ep.role}.',
            "",
            f"    {how}",
            *_arg_doc(ep.params),
            f"    Automaton transitions: {edges}.",
            f"    current: {stored}",
            "",
            "    Return NewState(new contents) to advance or Err(message) to reject.",
            '    """',
            f'    raise NotImplementedError("{ep.name}: business logic not written yet")',
        ]
        table.append((ep.name, fn))

    for hook in manifest.hooks:
        ep = next(e for e in manifest.endpoints if e.name == hook.endpoint)
        args = ", ".join(_arg_list(ep.params))
        if hook.kind is TriggerKind.FUNDS:
            result = "FundsPredicate(lambda funds: ...) over the contract funds"
        else:
            result = "SlotAt(slot) naming the slot at which the trigger fires"
        declared = ""
        if hook.condition is not None:
            declared = "    The protocol already fixes the condition: {} {} {}.".format(*hook.condition)
        out += [
            "",
            "",
            f"def {hook.name}({args}):",
            f'    """{hook.kind.value.capitalize()} trigger armed by {hook.endpoint}; fires {hook.target}.',
            "",
            f"    Receives the arguments of {hook.endpoint} {_tuple_text(ep.params)}.",
            *_arg_doc(ep.params),
            f"    Return {result}.",
            *([declared] if declared else []),
            '    """',
            f'    raise NotImplementedError("{hook.name}: trigger condition not written yet")',
        ]
        table.append((hook.name, hook.name))

    out += ["", "", "HANDLERS = {"]
    out += [f'    "{name}": {fn},' for name, fn in table]
    out.append("}")
    return "\n".join(out) + "\n"


def count_stubs(stub_source: str) -> int:
    return sum(1 for line in stub_source.splitlines() if line.startswith("def "))


def count_loc(text: str, comment: str = "//") -> int:
    """Non-blank lines that hold more than a comment."""
    return sum(1 for line in text.splitlines() if line.strip() and not line.strip().startswith(comment))
