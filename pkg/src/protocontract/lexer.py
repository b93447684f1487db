from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Diagnostic, DiagnosticError, Span

KEYWORDS = frozenset({
    "protocol", "role", "field", "choice", "at", "rec", "do", "interrupt",
    "from", "trigger", "funds", "slot",
    "String", "HashedString", "PubKeyHash", "Value", "Token",
    "Contract",
})

# longest match first
PUNCTUATION = ("==", "<=", ">=", "(", ")", "{", "}", ",", ";", ":", "<", ">")


@dataclass(frozen=True)
class Token:
    kind: str  # "keyword" | "identifier" | "punctuation" | "integer"
    lexeme: str
    span: Span

    def is_(self, lexeme: str) -> bool:
        return self.kind in ("keyword", "punctuation") and self.lexeme == lexeme


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens, skipping whitespace and ``//`` comments.

    Raises :class:`DiagnosticError` listing every character outside the
    lexical alphabet.
    """
    tokens: list[Token] = []
    errors: list[Diagnostic] = []
    i, line, line_start = 0, 1, 0
    n = len(source)

    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            line_start = i
            continue
        if c in " \t\r\f\v":
            i += 1
            continue
        if source.startswith("//", i):
            end = source.find("\n", i)
            i = n if end < 0 else end
            continue

        col = i - line_start + 1
        if c.isascii() and c.isalpha():
            j = i + 1
            while j < n and source[j].isascii() and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = "keyword" if word in KEYWORDS else "identifier"
            tokens.append(Token(kind, word, Span(line, col, i, j - i)))
            i = j
            continue
        if c.isascii() and c.isdigit():
            j = i + 1
            while j < n and source[j].isascii() and source[j].isdigit():
                j += 1
            tokens.append(Token("integer", source[i:j], Span(line, col, i, j - i)))
            i = j
            continue
        for punct in PUNCTUATION:
            if source.startswith(punct, i):
                tokens.append(Token("punctuation", punct, Span(line, col, i, len(punct))))
                i += len(punct)
                break
        else:
            errors.append(Diagnostic("E-LEX-CHAR", f"unexpected character {c!r}", Span(line, col, i, 1)))
            i += 1

    if errors:
        raise DiagnosticError(errors)
    return tokens
