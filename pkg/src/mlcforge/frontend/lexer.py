"""Hand-written lexer shared by the three brace-style sub-languages."""

from __future__ import annotations

from dataclasses import dataclass

from ..diagnostics import DiagnosticSink, SourcePos

# Token kinds. Multi-char operators listed longest-first for the scanner.
PUNCT = [
    ("->", "ARROW"),
    (":=", "DEFINE"),
    ("==", "EQEQ"),
    ("!=", "NEQ"),
    ("<=", "LE"),
    (">=", "GE"),
    ("&&", "AND"),
    ("||", "OR"),
    ("{", "LBRACE"),
    ("}", "RBRACE"),
    ("(", "LPAREN"),
    (")", "RPAREN"),
    ("[", "LBRACKET"),
    ("]", "RBRACKET"),
    (":", "COLON"),
    (",", "COMMA"),
    (";", "SEMI"),
    ("!", "BANG"),
    ("?", "QUESTION"),
    ("/", "SLASH"),
    (".", "DOT"),
    ("<", "LT"),
    (">", "GT"),
    ("+", "PLUS"),
    ("-", "MINUS"),
    ("*", "STAR"),
    ("^", "CARET"),
    ("=", "EQUALS"),
    ("@", "AT"),
]

_STRING_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\", "r": "\r"}

_DIGITS = "0123456789"


def _is_digit(ch: str) -> bool:
    # ASCII only: str.isdigit() accepts Unicode digits int() rejects
    return ch in _DIGITS


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | INT | REAL | STRING | punct kind | EOF
    text: str
    value: object
    pos: SourcePos

    def is_kw(self, word: str) -> bool:
        return self.kind == "IDENT" and self.text == word


def tokenize(text: str, file: str, sink: DiagnosticSink) -> list[Token]:
    """Tokenize ``text``; lexical problems become diagnostics, never raises.

    CRLF is normalized to LF before scanning so every span refers to the
    normalized text.
    """
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def pos() -> SourcePos:
        return SourcePos(file, line, col, i)

    def advance(count: int) -> None:
        nonlocal i, line, col
        for _ in range(count):
            if i < n and text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\n":
            advance(1)
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                advance(1)
            continue
        if text.startswith("/*", i):
            start = pos()
            advance(2)
            while i < n and not text.startswith("*/", i):
                advance(1)
            if i >= n:
                sink.error("lex-comment", "unterminated block comment", start)
            else:
                advance(2)
            continue
        if ch == '"':
            start = pos()
            advance(1)
            buf: list[str] = []
            terminated = False
            while i < n:
                c = text[i]
                if c == '"':
                    advance(1)
                    terminated = True
                    break
                if c == "\n":
                    break
                if c == "\\" and i + 1 < n:
                    esc = text[i + 1]
                    buf.append(_STRING_ESCAPES.get(esc, esc))
                    advance(2)
                    continue
                buf.append(c)
                advance(1)
            if not terminated:
                sink.error("lex-string", "unterminated string literal", start)
            tokens.append(Token("STRING", "".join(buf), "".join(buf), start))
            continue
        if _is_digit(ch):
            start = pos()
            j = i
            while j < n and _is_digit(text[j]):
                j += 1
            is_real = False
            if j < n and text[j] == "." and j + 1 < n and _is_digit(text[j + 1]):
                is_real = True
                j += 1
                while j < n and _is_digit(text[j]):
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and _is_digit(text[k]):
                    is_real = True
                    j = k
                    while j < n and _is_digit(text[j]):
                        j += 1
            lexeme = text[i:j]
            advance(j - i)
            if is_real:
                tokens.append(Token("REAL", lexeme, float(lexeme), start))
            else:
                tokens.append(Token("INT", lexeme, int(lexeme), start))
            continue
        if ch.isascii() and (ch.isalpha() or ch == "_"):
            start = pos()
            j = i
            while j < n and text[j].isascii() and (text[j].isalnum() or text[j] == "_"):
                j += 1
            lexeme = text[i:j]
            advance(j - i)
            tokens.append(Token("IDENT", lexeme, lexeme, start))
            continue
        matched = False
        for lexeme, kind in PUNCT:
            if text.startswith(lexeme, i):
                tokens.append(Token(kind, lexeme, lexeme, pos()))
                advance(len(lexeme))
                matched = True
                break
        if not matched:
            sink.error("lex-char", f"unexpected character {ch!r}", pos())
            advance(1)

    tokens.append(Token("EOF", "", None, pos()))
    return tokens
