"""Shared recursive-descent machinery: cursor, recovery, nesting guard."""

from __future__ import annotations

from ..diagnostics import DiagnosticSink, SourcePos
from .lexer import Token, tokenize

#: hard bound on grammar nesting so hostile input cannot blow the stack
MAX_DEPTH = 120


class ParseAbort(Exception):
    """Internal signal: unwind to the nearest recovery point."""


class Parser:
    def __init__(self, text: str, file: str):
        self.sink = DiagnosticSink()
        self.tokens = tokenize(text, file, self.sink)
        self.index = 0
        self.file = file
        self.depth = 0

    # -- cursor ------------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.index]

    def peek(self, ahead: int = 1) -> Token:
        return self.tokens[min(self.index + ahead, len(self.tokens) - 1)]

    def at(self, kind: str) -> bool:
        return self.tok.kind == kind

    def at_kw(self, word: str) -> bool:
        return self.tok.is_kw(word)

    def advance(self) -> Token:
        tok = self.tok
        if tok.kind != "EOF":
            self.index += 1
        return tok

    def accept(self, kind: str) -> Token | None:
        if self.at(kind):
            return self.advance()
        return None

    def accept_kw(self, word: str) -> Token | None:
        if self.at_kw(word):
            return self.advance()
        return None

    # -- errors ------------------------------------------------------------

    def error_here(self, code: str, message: str) -> None:
        self.sink.error(code, message, self.tok.pos)

    def expect(self, kind: str, what: str) -> Token:
        tok = self.accept(kind)
        if tok is None:
            self.error_here("parse-expected", f"expected {what}, found {self._describe()}")
            raise ParseAbort()
        return tok

    def expect_kw(self, word: str) -> Token:
        tok = self.accept_kw(word)
        if tok is None:
            self.error_here("parse-expected", f"expected '{word}', found {self._describe()}")
            raise ParseAbort()
        return tok

    def expect_ident(self, what: str) -> Token:
        tok = self.accept("IDENT")
        if tok is None:
            self.error_here("parse-expected", f"expected {what}, found {self._describe()}")
            raise ParseAbort()
        return tok

    def _describe(self) -> str:
        tok = self.tok
        if tok.kind == "EOF":
            return "end of file"
        return f"'{tok.text}'"

    # -- nesting guard -----------------------------------------------------

    def enter(self) -> None:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.error_here("parse-depth", "nesting too deep")
            raise ParseAbort()

    def leave(self) -> None:
        self.depth -= 1

    # -- recovery ----------------------------------------------------------

    def sync_to_top_level(self, keywords: tuple[str, ...]) -> None:
        """Skip tokens until a top-level declaration keyword at brace depth 0."""
        depth = 0
        while not self.at("EOF"):
            tok = self.tok
            if tok.kind == "LBRACE":
                depth += 1
            elif tok.kind == "RBRACE":
                if depth == 0:
                    self.advance()
                    return
                depth -= 1
            elif depth == 0 and tok.kind == "IDENT" and tok.text in keywords:
                return
            self.advance()

    def skip_balanced_until(self, *stop_kinds: str) -> None:
        """Skip tokens (balancing braces/parens) until one of ``stop_kinds``
        at the current nesting level."""
        depth = 0
        while not self.at("EOF"):
            kind = self.tok.kind
            if depth == 0 and kind in stop_kinds:
                return
            if kind in ("LBRACE", "LPAREN", "LBRACKET"):
                depth += 1
            elif kind in ("RBRACE", "RPAREN", "RBRACKET"):
                if depth == 0:
                    return
                depth -= 1
            self.advance()

    def eof_pos(self) -> SourcePos:
        return self.tokens[-1].pos
