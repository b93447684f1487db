"""Recursive-descent parser for protocol sources.

The grammar (see ``docs/grammar.md``) is LL(1) once the interaction/continue
alternatives are left-factored on their shared leading identifier.  Errors
inside an item are collected and the parser resynchronises at the next ``;``
or ``}``, so one run can report several problems.
"""

from __future__ import annotations

from .ast import (
    COMPARISONS,
    CONTRACT,
    BaseType,
    Branch,
    Choice,
    Condition,
    Continue,
    DoInterrupt,
    Interaction,
    ProtocolDecl,
    ProtocolItem,
    Rec,
    TriggerDecl,
    TriggerKind,
    validate,
)
from .diagnostics import Diagnostic, DiagnosticError, Span, span_at
from .lexer import Token, tokenize

_TYPES = {t.value: t for t in BaseType}


class _Sync(Exception):
    """Unwinds to the nearest recovery point after a diagnostic was recorded."""


def _describe(tok: Token | None) -> str:
    return "end of input" if tok is None else repr(tok.lexeme)


class _Parser:
    def __init__(self, source: str, tokens: list[Token]):
        self.source = source
        self.tokens = tokens
        self.pos = 0
        self.diags: list[Diagnostic] = []

    # -- token plumbing ----------------------------------------------------

    @property
    def tok(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def peek(self, ahead: int = 1) -> Token | None:
        i = self.pos + ahead
        return self.tokens[i] if i < len(self.tokens) else None

    def at(self, lexeme: str) -> bool:
        return self.tok is not None and self.tok.is_(lexeme)

    def advance(self) -> Token:
        tok = self.tok
        assert tok is not None
        self.pos += 1
        return tok

    def here(self) -> Span:
        if self.tok is not None:
            return self.tok.span
        return span_at(self.source, len(self.source), 0)

    def error(self, message: str) -> _Sync:
        self.diags.append(Diagnostic("E-SYNTAX", f"{message}, found {_describe(self.tok)}", self.here()))
        return _Sync()

    def expect(self, lexeme: str, context: str = "") -> Token:
        if not self.at(lexeme):
            where = f" {context}" if context else ""
            raise self.error(f"expected {lexeme!r}{where}")
        return self.advance()

    def ident(self, what: str) -> Token:
        if self.tok is None or self.tok.kind != "identifier":
            raise self.error(f"expected {what}")
        return self.advance()

    def role_name(self) -> Token:
        if self.at(CONTRACT) or (self.tok is not None and self.tok.kind == "identifier"):
            return self.advance()
        raise self.error("expected role name")

    def base_type(self) -> BaseType:
        tok = self.tok
        if tok is None or tok.kind != "keyword" or tok.lexeme not in _TYPES:
            raise self.error("expected a type (String, HashedString, PubKeyHash, Value or Token)")
        self.advance()
        return _TYPES[tok.lexeme]

    def recover(self) -> None:
        while self.tok is not None:
            if self.at(";"):
                self.advance()
                return
            if self.at("}"):
                return
            self.advance()

    # -- grammar -----------------------------------------------------------

    def protocol(self) -> ProtocolDecl | None:
        try:
            start = self.expect("protocol", "at start of protocol")
            name = self.ident("protocol name")
            self.expect("(", "after protocol name")
            roles: list[str] = []
            role_spans: list[Span] = []
            if not self.at(")"):
                while True:
                    self.expect("role", "in role list")
                    tok = self.role_name()
                    roles.append(tok.lexeme)
                    role_spans.append(tok.span)
                    if not self.at(","):
                        break
                    self.advance()
            if not self.at(")"):
                raise self.error("expected ')' or ',' in role list")
            self.advance()
            self.expect("{", "to open protocol body")
        except _Sync:
            return None

        fields: list[BaseType] = []
        while self.at("field"):
            try:
                self.advance()
                fields.append(self.base_type())
                while self.at(","):
                    self.advance()
                    fields.append(self.base_type())
                self.expect(";", "after field declaration")
            except _Sync:
                self.recover()

        body = self.items()
        try:
            self.expect("}", "to close protocol body")
            if self.tok is not None:
                raise self.error("expected end of input after protocol")
        except _Sync:
            pass
        return ProtocolDecl(name.lexeme, tuple(roles), tuple(fields), body, start.span, tuple(role_spans))

    def items(self) -> tuple[ProtocolItem, ...]:
        found: list[ProtocolItem] = []
        while self.tok is not None and not self.at("}"):
            try:
                found.append(self.item())
            except _Sync:
                self.recover()
        return tuple(found)

    def block(self, context: str) -> tuple[ProtocolItem, ...]:
        self.expect("{", context)
        body = self.items()
        self.expect("}", f"to close {context.removeprefix('to open ')}")
        return body

    def item(self) -> ProtocolItem:
        tok = self.tok
        assert tok is not None
        if tok.is_("choice"):
            return self.choice()
        if tok.is_("rec"):
            self.advance()
            label = self.ident("recursion label")
            return Rec(label.lexeme, self.block("to open rec body"), tok.span)
        if tok.is_("do"):
            return self.do_interrupt()
        if tok.kind == "identifier":
            nxt = self.peek()
            if nxt is not None and nxt.is_(";"):
                self.advance()
                self.advance()
                return Continue(tok.lexeme, tok.span)
            if nxt is not None and nxt.is_("("):
                return self.interaction()
            self.advance()
            raise self.error(f"expected '(' or ';' after {tok.lexeme!r}")
        raise self.error("expected an interaction, choice, rec, do or recursion label")

    def interaction(self) -> Interaction:
        name = self.ident("endpoint name")
        self.expect("(", "after endpoint name")
        params: list[BaseType] = []
        if not self.at(")"):
            params.append(self.base_type())
            while self.at(","):
                self.advance()
                params.append(self.base_type())
        if not self.at(")"):
            raise self.error("expected ')' or ',' in parameter list")
        self.advance()
        self.expect("from", "after parameter list")
        role = self.role_name()
        triggers: list[TriggerDecl] = []
        if self.at("{"):
            self.advance()
            while not self.at("}"):
                if self.tok is None:
                    raise self.error("expected '}' to close trigger block")
                triggers.append(self.trigger())
            self.advance()
        self.expect(";", "after interaction")
        return Interaction(name.lexeme, tuple(params), role.lexeme, tuple(triggers), name.span)

    def trigger(self) -> TriggerDecl:
        tok = self.tok
        if tok is None or not (tok.is_("funds") or tok.is_("slot")):
            raise self.error("expected 'funds' or 'slot' trigger")
        self.advance()
        kind = TriggerKind(tok.lexeme)
        self.expect("trigger", f"after {tok.lexeme!r}")
        condition = None
        if self.at("("):
            self.advance()
            condition = self.condition()
            self.expect(",", "after trigger condition")
            target = self.ident("interrupt endpoint name")
            self.expect(")", "after trigger target")
        else:
            target = self.ident("interrupt endpoint name")
        self.expect(";", "after trigger")
        return TriggerDecl(kind, target.lexeme, condition, tok.span)

    def condition(self) -> Condition:
        subject = self.tok
        if subject is None or not (subject.is_("slot") or subject.is_("funds")):
            raise self.error("expected 'slot' or 'funds' in trigger condition")
        self.advance()
        op = self.tok
        if op is None or op.kind != "punctuation" or op.lexeme not in COMPARISONS:
            raise self.error("expected a comparison operator")
        self.advance()
        lit = self.tok
        if lit is None or lit.kind != "integer":
            raise self.error("expected an integer literal")
        self.advance()
        return Condition(subject.lexeme, op.lexeme, int(lit.lexeme), subject.span)

    def choice(self) -> Choice:
        start = self.advance()
        self.expect("at", "after 'choice'")
        role = self.role_name()
        self.expect("{", "to open choice")
        branches: list[Branch] = []
        while not self.at("}"):
            if self.tok is None:
                raise self.error("expected '}' to close choice")
            try:
                label = self.ident("branch label")
                self.expect(":", "after branch label")
                branches.append(Branch(label.lexeme, self.block("to open branch body"), label.span))
            except _Sync:
                self.recover()
        self.advance()
        return Choice(role.lexeme, tuple(branches), start.span)

    def do_interrupt(self) -> DoInterrupt:
        start = self.advance()
        body = self.block("to open do body")
        self.expect("interrupt", "after do body")
        self.expect("{", "to open interrupt block")
        if self.tok is None or self.tok.kind != "identifier":
            raise self.error("expected the interrupt handler interaction")
        handler = self.interaction()
        self.expect("}", "to close interrupt block")
        return DoInterrupt(body, handler, start.span)


def parse_protocol(source: str) -> ProtocolDecl:
    """Parse one protocol; raise :class:`DiagnosticError` on syntax errors."""
    parser = _Parser(source, tokenize(source))
    decl = parser.protocol()
    if parser.diags or decl is None:
        raise DiagnosticError(parser.diags)
    return decl


def load_protocol(source: str) -> ProtocolDecl:
    """Parse and validate; any diagnostic from either stage is raised."""
    decl = parse_protocol(source)
    diags = validate(decl)
    if diags:
        raise DiagnosticError(diags)
    return decl


# ---------------------------------------------------------------------------
# pretty printing


def _params(params: tuple[BaseType, ...]) -> str:
    return "(" + ", ".join(p.value for p in params) + ")"


def _trigger(t: TriggerDecl) -> str:
    if t.condition is None:
        return f"{t.kind.value} trigger {t.target};"
    c = t.condition
    return f"{t.kind.value} trigger ({c.subject} {c.op} {c.value}, {t.target});"


def _interaction(item: Interaction, pad: str) -> list[str]:
    head = f"{pad}{item.endpoint} {_params(item.params)} from {item.role}"
    if not item.triggers:
        return [head + ";"]
    return [head + " {", *(f"{pad}  {_trigger(t)}" for t in item.triggers), pad + "};"]


def _block(items: tuple[ProtocolItem, ...], depth: int) -> list[str]:
    pad = "  " * depth
    lines: list[str] = []
    for item in items:
        if isinstance(item, Interaction):
            lines += _interaction(item, pad)
        elif isinstance(item, Continue):
            lines.append(f"{pad}{item.label};")
        elif isinstance(item, Rec):
            lines += [f"{pad}rec {item.label} {{", *_block(item.body, depth + 1), pad + "}"]
        elif isinstance(item, Choice):
            lines.append(f"{pad}choice at {item.role} {{")
            for branch in item.branches:
                if branch.body:
                    lines += [f"{pad}  {branch.label}: {{", *_block(branch.body, depth + 2), pad + "  }"]
                else:
                    lines.append(f"{pad}  {branch.label}: {{}}")
            lines.append(pad + "}")
        elif isinstance(item, DoInterrupt):
            lines += [f"{pad}do {{", *_block(item.body, depth + 1), pad + "}"]
            lines += [f"{pad}interrupt {{", *_interaction(item.handler, pad + "  "), pad + "}"]
    return lines


def pretty_print(decl: ProtocolDecl) -> str:
    roles = ", ".join(f"role {r}" for r in decl.roles)
    lines = [f"protocol {decl.name} ({roles}) {{"]
    if decl.fields:
        lines.append("  field " + ", ".join(f.value for f in decl.fields) + ";")
    lines += _block(decl.body, 1)
    lines.append("}")
    return "\n".join(lines) + "\n"
