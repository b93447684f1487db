"""Finite state automata governing endpoint calls.

Nodes are the points before and after interactions; every endpoint (and every
choice branch label) is an edge.  Construction allocates nodes in source order
and merges them with a union-find wherever control re-joins: a ``Continue``
joins its anchor, a falling-through choice branch joins the shared post-choice
node.  States are then numbered densely from 1 by first allocation, so the
numbering follows a depth-first walk of the source.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass

from .ast import (
    CONTRACT,
    BaseType,
    Choice,
    Continue,
    DoInterrupt,
    Interaction,
    ProtocolDecl,
    ProtocolItem,
    Rec,
    validate,
)
from .diagnostics import DiagnosticError


class EdgeKind(enum.Enum):
    USER_CALL = "UserCall"
    AUTO_INTERRUPT = "AutoInterrupt"


@dataclass(frozen=True)
class EdgeLabel:
    endpoint: str
    role: str
    params: tuple[BaseType, ...] = ()

    @property
    def kind(self) -> EdgeKind:
        return EdgeKind.AUTO_INTERRUPT if self.role == CONTRACT else EdgeKind.USER_CALL


@dataclass(frozen=True)
class Transition:
    src: int
    label: EdgeLabel
    dst: int


@dataclass(frozen=True)
class Automaton:
    name: str
    states: tuple[int, ...]
    initial: int
    terminals: frozenset[int]
    transitions: tuple[Transition, ...]

    def outgoing(self, state: int) -> list[Transition]:
        return [t for t in self.transitions if t.src == state]

    def step(self, state: int, endpoint: str) -> Transition | None:
        for t in self.transitions:
            if t.src == state and t.label.endpoint == endpoint:
                return t
        return None


def _order(t: Transition) -> tuple[int, str, int]:
    return (t.src, t.label.endpoint, t.dst)


class _Builder:
    def __init__(self) -> None:
        self.parent: list[int] = []
        self.edges: list[tuple[int, EdgeLabel, int]] = []
        self.interrupts: list[tuple[list[int], EdgeLabel, int]] = []
        self.anchors: dict[str, int] = {}

    def fresh(self) -> int:
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def find(self, n: int) -> int:
        while self.parent[n] != n:
            self.parent[n] = self.parent[self.parent[n]]
            n = self.parent[n]
        return n

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the earlier allocation as representative
            lo, hi = min(ra, rb), max(ra, rb)
            self.parent[hi] = lo

    def edge(self, src: int, label: EdgeLabel) -> int:
        dst = self.fresh()
        self.edges.append((src, label, dst))
        return dst

    def block(self, items: tuple[ProtocolItem, ...], cur: int) -> int | None:
        """Wire ``items`` from node ``cur``; return the fall-through node, if any."""
        for item in items:
            if isinstance(item, Interaction):
                cur = self.edge(cur, EdgeLabel(item.endpoint, item.role, item.params))
            elif isinstance(item, Continue):
                self.union(cur, self.anchors[item.label])
                return None
            elif isinstance(item, Choice):
                exit_node: int | None = None
                for branch in item.branches:
                    entry = self.edge(cur, EdgeLabel(branch.label, item.role))
                    end = self.block(branch.body, entry)
                    if end is None:
                        continue
                    if exit_node is None:
                        exit_node = end
                    else:
                        self.union(end, exit_node)
                if exit_node is None:
                    return None
                cur = exit_node
            elif isinstance(item, Rec):
                self.anchors[item.label] = cur
                end = self.block(item.body, cur)
                del self.anchors[item.label]
                if end is None:
                    return None
                cur = end
            elif isinstance(item, DoInterrupt):
                first_edge = len(self.edges)
                end = self.block(item.body, cur)
                touched = [cur] + [n for s, _, d in self.edges[first_edge:] for n in (s, d)]
                if end is not None:
                    touched.append(end)
                post = self.fresh()
                h = item.handler
                self.interrupts.append((touched, EdgeLabel(h.endpoint, h.role, h.params), post))
                cur = post
        return cur


def build_automaton(decl: ProtocolDecl) -> Automaton:
    """Translate a well-formed protocol into its automaton.

    Raises :class:`DiagnosticError` when ``decl`` does not validate.
    """
    diags = validate(decl)
    if diags:
        raise DiagnosticError(diags)

    b = _Builder()
    start = b.fresh()
    end = b.block(decl.body, start)

    raw: set[tuple[int, EdgeLabel, int]] = {(b.find(s), lab, b.find(d)) for s, lab, d in b.edges}
    for touched, label, post in b.interrupts:
        for n in {b.find(x) for x in touched}:
            raw.add((n, label, b.find(post)))

    mentioned = {b.find(start)} | {s for s, _, _ in raw} | {d for _, _, d in raw}
    number = {rep: i for i, rep in enumerate(sorted(mentioned), start=1)}
    transitions = tuple(sorted((Transition(number[s], lab, number[d]) for s, lab, d in raw), key=_order))

    terminals: frozenset[int] = frozenset()
    if end is not None:
        final = number[b.find(end)]
        if not any(t.src == final for t in transitions):
            terminals = frozenset({final})

    return Automaton(
        name=decl.name,
        states=tuple(range(1, len(number) + 1)),
        initial=number[b.find(start)],
        terminals=terminals,
        transitions=transitions,
    )


def enabled(a: Automaton, state: int) -> list[EdgeLabel]:
    """Labels leaving ``state``, sorted by endpoint name."""
    if state not in a.states:
        raise KeyError(f"automaton {a.name} has no state {state}")
    return sorted((t.label for t in a.transitions if t.src == state), key=lambda lab: lab.endpoint)


def check_invariants(a: Automaton) -> list[str]:
    """Return violated structural invariants (determinism, reachability, terminal sinks)."""
    problems = []
    seen: set[tuple[int, str]] = set()
    for t in a.transitions:
        key = (t.src, t.label.endpoint)
        if key in seen:
            problems.append(f"state {t.src} has two {t.label.endpoint} edges")
        seen.add(key)

    reached = {a.initial}
    queue = deque([a.initial])
    while queue:
        s = queue.popleft()
        for t in a.outgoing(s):
            if t.dst not in reached:
                reached.add(t.dst)
                queue.append(t.dst)
    for s in a.states:
        if s not in reached:
            problems.append(f"state {s} is unreachable")

    for s in sorted(a.terminals):
        if a.outgoing(s):
            problems.append(f"terminal state {s} has outgoing transitions")
    return problems


# ---------------------------------------------------------------------------
# exports


def to_dot(a: Automaton) -> str:
    """Graphviz digraph; interrupt edges dashed, terminal states double-circled."""
    lines = [f'digraph "{a.name}" {{', "  rankdir=LR;"]
    for s in a.states:
        attrs = ["shape=doublecircle" if s in a.terminals else "shape=circle"]
        if s == a.initial:
            attrs.append("style=bold")
        lines.append(f"  {s} [{', '.join(attrs)}];")
    for t in a.transitions:
        extra = ", style=dashed" if t.label.kind is EdgeKind.AUTO_INTERRUPT else ""
        lines.append(f'  {t.src} -> {t.dst} [label="{t.label.endpoint}"{extra}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def dump(a: Automaton) -> str:
    """Lossless line-oriented serialisation (format documented in docs/formats.md)."""
    lines = [
        f"automaton {a.name}",
        f"states {len(a.states)}",
        f"initial {a.initial}",
        "terminals " + " ".join(str(s) for s in sorted(a.terminals)),
    ]
    for t in a.transitions:
        params = ",".join(p.value for p in t.label.params) or "-"
        lines.append(f"edge {t.src} {t.dst} {t.label.endpoint} {t.label.role} {t.label.kind.value} {params}")
    return "\n".join(lines) + "\n"


def load(text: str) -> Automaton:
    """Inverse of :func:`dump`."""
    name, count, initial = "", 0, 1
    terminals: set[int] = set()
    transitions = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        head, *rest = line.split()
        if head == "automaton":
            name = rest[0]
        elif head == "states":
            count = int(rest[0])
        elif head == "initial":
            initial = int(rest[0])
        elif head == "terminals":
            terminals = {int(x) for x in rest}
        elif head == "edge":
            src, dst, endpoint, role, kind, params = rest
            types = () if params == "-" else tuple(BaseType(p) for p in params.split(","))
            label = EdgeLabel(endpoint, role, types)
            if label.kind.value != kind:
                raise ValueError(f"line {lineno}: edge kind {kind} disagrees with role {role}")
            transitions.append(Transition(int(src), label, int(dst)))
        else:
            raise ValueError(f"line {lineno}: unknown record {head!r}")
    return Automaton(name, tuple(range(1, count + 1)), initial, frozenset(terminals), tuple(sorted(transitions, key=_order)))
