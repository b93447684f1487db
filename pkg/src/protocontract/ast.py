"""Protocol language syntax tree and structural well-formedness checks.

All nodes are frozen dataclasses. Source spans are carried for diagnostics but
excluded from equality, so two trees parsed from differently formatted sources
compare equal when their structure matches.
"""

from __future__ import annotations

import enum
from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import Union

from .diagnostics import NO_SPAN, Diagnostic, Span

CONTRACT = "Contract"


class BaseType(enum.Enum):
    STRING = "String"
    HASHED_STRING = "HashedString"
    PUBKEYHASH = "PubKeyHash"
    VALUE = "Value"
    TOKEN = "Token"

    def __str__(self) -> str:
        return self.value


class TriggerKind(enum.Enum):
    FUNDS = "funds"
    SLOT = "slot"

    @property
    def hook_suffix(self) -> str:
        return "FundTrigger" if self is TriggerKind.FUNDS else "SlotTrigger"


COMPARISONS = ("==", "<=", ">=", "<", ">")


@dataclass(frozen=True)
class Condition:
    """``<subject> <op> <literal>``, e.g. ``slot == 10``."""

    subject: str
    op: str
    value: int
    span: Span = field(default=NO_SPAN, compare=False, repr=False)

    def holds(self, observed: int) -> bool:
        return {
            "==": observed == self.value,
            "<=": observed <= self.value,
            ">=": observed >= self.value,
            "<": observed < self.value,
            ">": observed > self.value,
        }[self.op]


@dataclass(frozen=True)
class TriggerDecl:
    kind: TriggerKind
    target: str
    condition: Condition | None = None
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Interaction:
    endpoint: str
    params: tuple[BaseType, ...]
    role: str
    triggers: tuple[TriggerDecl, ...] = ()
    span: Span = field(default=NO_SPAN, compare=False, repr=False)

    def hook_name(self, kind: TriggerKind) -> str:
        return f"{self.endpoint}{kind.hook_suffix}"


@dataclass(frozen=True)
class Branch:
    label: str
    body: tuple[ProtocolItem, ...]
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Choice:
    role: str
    branches: tuple[Branch, ...]
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Rec:
    label: str
    body: tuple[ProtocolItem, ...]
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Continue:
    label: str
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class DoInterrupt:
    body: tuple[ProtocolItem, ...]
    handler: Interaction
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


ProtocolItem = Union[Interaction, Choice, Rec, Continue, DoInterrupt]


@dataclass(frozen=True)
class ProtocolDecl:
    name: str
    roles: tuple[str, ...]
    fields: tuple[BaseType, ...]
    body: tuple[ProtocolItem, ...]
    span: Span = field(default=NO_SPAN, compare=False, repr=False)
    role_spans: tuple[Span, ...] = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class Endpoint:
    """A callable operation: an interaction or a choice branch label."""

    name: str
    params: tuple[BaseType, ...]
    role: str
    triggers: tuple[TriggerDecl, ...] = ()
    is_branch: bool = False


# ---------------------------------------------------------------------------
# traversal helpers


def walk(items: tuple[ProtocolItem, ...]) -> Iterator[ProtocolItem]:
    """Pre-order traversal in source order, interrupt handlers included."""
    for item in items:
        yield item
        if isinstance(item, Choice):
            for branch in item.branches:
                yield from walk(branch.body)
        elif isinstance(item, Rec):
            yield from walk(item.body)
        elif isinstance(item, DoInterrupt):
            yield from walk(item.body)
            yield item.handler


def endpoints(decl: ProtocolDecl) -> list[Endpoint]:
    """Every endpoint in declaration order; branch labels are zero-parameter endpoints."""
    found: list[Endpoint] = []
    for item in walk(decl.body):
        if isinstance(item, Interaction):
            found.append(Endpoint(item.endpoint, item.params, item.role, item.triggers))
        elif isinstance(item, Choice):
            for branch in item.branches:
                found.append(Endpoint(branch.label, (), item.role, is_branch=True))
    return found


def interrupt_handlers(decl: ProtocolDecl) -> list[Interaction]:
    return [item.handler for item in walk(decl.body) if isinstance(item, DoInterrupt)]


def falls_through(item: ProtocolItem) -> bool:
    """Whether control can leave ``item`` other than through a Continue."""
    if isinstance(item, Continue):
        return False
    if isinstance(item, Choice):
        return any(block_falls_through(b.body) for b in item.branches)
    if isinstance(item, Rec):
        return block_falls_through(item.body)
    return True


def block_falls_through(items: tuple[ProtocolItem, ...]) -> bool:
    return all(falls_through(item) for item in items)


# ---------------------------------------------------------------------------
# validation


def validate(decl: ProtocolDecl) -> list[Diagnostic]:
    """Return every well-formedness violation in ``decl`` (empty when valid)."""
    diags: list[Diagnostic] = []
    roles = set()
    for i, role in enumerate(decl.roles):
        span = decl.role_spans[i] if i < len(decl.role_spans) else decl.span
        if role == CONTRACT:
            diags.append(Diagnostic("E-ROLE-RESERVED", "Contract is a reserved role and cannot be declared", span))
        elif role in roles:
            diags.append(Diagnostic("E-ROLE-DUP", f"role {role} declared twice", span))
        roles.add(role)

    interrupts = {h.endpoint for h in interrupt_handlers(decl)}
    seen_endpoints: set[str] = set()

    def check_role(role: str, span: Span) -> None:
        if role != CONTRACT and role not in decl.roles:
            diags.append(Diagnostic("E-ROLE-UNDECLARED", f"role {role} is not declared by protocol {decl.name}", span))

    def check_endpoint_name(name: str, span: Span) -> None:
        if name in seen_endpoints:
            diags.append(Diagnostic("E-ENDPOINT-DUP", f"endpoint {name} is declared more than once", span))
        seen_endpoints.add(name)

    def check_interaction(item: Interaction, as_handler: bool) -> None:
        check_role(item.role, item.span)
        check_endpoint_name(item.endpoint, item.span)
        if as_handler:
            if item.role != CONTRACT or item.params or item.triggers:
                diags.append(Diagnostic(
                    "E-INTERRUPT-HANDLER",
                    f"interrupt handler {item.endpoint} must be a parameterless interaction from Contract without triggers",
                    item.span,
                ))
            return
        if item.role == CONTRACT:
            diags.append(Diagnostic(
                "E-CONTRACT-CALL",
                f"{item.endpoint} from Contract may only appear in an interrupt block",
                item.span,
            ))
        kinds: set[TriggerKind] = set()
        for trig in item.triggers:
            if trig.kind in kinds:
                diags.append(Diagnostic("E-TRIGGER-DUP", f"{item.endpoint} declares two {trig.kind.value} triggers", trig.span))
            kinds.add(trig.kind)
            if trig.target not in interrupts:
                diags.append(Diagnostic(
                    "E-TRIGGER-TARGET",
                    f"trigger targets {trig.target}, which is not an interrupt endpoint",
                    trig.span,
                ))
            cond = trig.condition
            if cond is not None:
                if cond.subject != trig.kind.value:
                    diags.append(Diagnostic(
                        "E-TRIGGER-CONDITION",
                        f"{trig.kind.value} trigger condition must test {trig.kind.value}, not {cond.subject}",
                        cond.span,
                    ))
                elif trig.kind is TriggerKind.SLOT and cond.op != "==":
                    diags.append(Diagnostic("E-TRIGGER-CONDITION", "slot trigger condition must use ==", cond.span))

    def check_block(items: tuple[ProtocolItem, ...], labels: tuple[str, ...]) -> None:
        dead = False
        for item in items:
            if dead:
                diags.append(Diagnostic("E-UNREACHABLE", "item follows a block that never falls through", item.span))
                dead = False  # one report per block
            if isinstance(item, Interaction):
                check_interaction(item, as_handler=False)
            elif isinstance(item, Continue):
                if item.label not in labels:
                    diags.append(Diagnostic("E-LABEL-UNBOUND", f"recursion label {item.label} is not bound by an enclosing rec", item.span))
            elif isinstance(item, Choice):
                check_role(item.role, item.span)
                if item.role == CONTRACT:
                    diags.append(Diagnostic("E-CONTRACT-CALL", "a choice cannot be made by Contract", item.span))
                if len(item.branches) < 2:
                    diags.append(Diagnostic("E-CHOICE-ARITY", "a choice needs at least two branches", item.span))
                branch_labels: set[str] = set()
                for branch in item.branches:
                    if branch.label in branch_labels:
                        diags.append(Diagnostic("E-CHOICE-DUP-LABEL", f"branch label {branch.label} repeated", branch.span))
                    else:
                        check_endpoint_name(branch.label, branch.span)
                    branch_labels.add(branch.label)
                for branch in item.branches:
                    check_block(branch.body, labels)
            elif isinstance(item, Rec):
                if item.label in labels:
                    diags.append(Diagnostic("E-LABEL-SHADOWED", f"rec label {item.label} shadows an enclosing rec", item.span))
                check_block(item.body, labels + (item.label,))
            elif isinstance(item, DoInterrupt):
                check_block(item.body, labels)
                check_interaction(item.handler, as_handler=True)
            if not falls_through(item):
                dead = True

    check_block(decl.body, ())
    return diags
