"""Source spans and positioned diagnostics shared by every front-end stage."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    """A region of source text.

    ``line`` and ``column`` are 1-based; ``offset`` is a 0-based character
    index into the source and ``length`` counts characters.
    """

    line: int
    column: int
    offset: int
    length: int

    @property
    def end(self) -> int:
        return self.offset + self.length


NO_SPAN = Span(1, 1, 0, 0)


# Closed set of diagnostic codes. Keep README/docs in sync when adding one.
CODES: dict[str, str] = {
    # lexing / parsing
    "E-LEX-CHAR": "character outside the lexical alphabet",
    "E-SYNTAX": "unexpected token",
    # protocol well-formedness
    "E-ROLE-UNDECLARED": "interaction names a role missing from the role list",
    "E-ROLE-RESERVED": "Contract declared as a protocol role",
    "E-ROLE-DUP": "role declared twice",
    "E-LABEL-UNBOUND": "recursion label used outside a matching rec",
    "E-LABEL-SHADOWED": "rec label reused inside a rec with the same label",
    "E-CHOICE-DUP-LABEL": "choice branch label repeated",
    "E-CHOICE-ARITY": "choice with fewer than two branches",
    "E-ENDPOINT-DUP": "endpoint or branch label declared more than once",
    "E-TRIGGER-TARGET": "trigger target is not an interrupt endpoint",
    "E-TRIGGER-DUP": "two triggers of the same kind on one interaction",
    "E-TRIGGER-CONDITION": "trigger condition does not match the trigger kind",
    "E-INTERRUPT-HANDLER": "interrupt handler is not a parameterless Contract interaction",
    "E-CONTRACT-CALL": "Contract interaction outside an interrupt block",
    "E-UNREACHABLE": "protocol item can never be reached",
    # scenarios
    "E-JSON": "malformed JSON",
    "E-SCHEMA": "scenario does not follow the documented schema",
    "E-WALLET-UNKNOWN": "wallet not listed in initial_balances",
    "E-WALLET-DUP": "wallet listed twice",
    "E-ROLE-UNKNOWN": "role not declared by the protocol",
    "E-ROLE-UNASSIGNED": "protocol role bound to no wallet",
    "E-ENDPOINT-UNKNOWN": "endpoint not declared by the protocol",
    "E-ARG-ARITY": "wrong number of endpoint arguments",
    "E-ARG-TYPE": "argument literal does not match the parameter type",
}


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Span = NO_SPAN

    def __post_init__(self) -> None:
        if self.code not in CODES:
            raise ValueError(f"undocumented diagnostic code {self.code!r}")

    def render(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.span.line}:{self.span.column}: {self.code}: {self.message}"


class DiagnosticError(Exception):
    """Raised by front-end stages that reject their input."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(f"{d.code}: {d.message}" for d in self.diagnostics))

    def render(self, filename: str = "<input>") -> str:
        return "\n".join(d.render(filename) for d in self.diagnostics)


def span_at(source: str, offset: int, length: int = 1) -> Span:
    """Build a span for ``offset`` by counting lines in ``source``."""
    offset = max(0, min(offset, len(source)))
    line = source.count("\n", 0, offset) + 1
    column = offset - (source.rfind("\n", 0, offset) + 1) + 1
    length = max(0, min(length, len(source) - offset))
    return Span(line, column, offset, length)
