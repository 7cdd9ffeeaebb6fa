"""Parser for the JSON-like training-configuration language.

The same nested ``key: value`` / ``key { ... }`` document syntax is reused
for scenario files, bridge payloads, and machine-readable reports, so this
module exposes both the `.tcl` entry point and a generic value-document
parser.
"""

from __future__ import annotations

from ..diagnostics import Diagnostic, SourcePos
from ..model import ConfigTree, ConfigValue, EnumToken
from .base import ParseAbort, Parser


class _ConfigParser(Parser):
    def parse_document(self, braced: bool = False) -> ConfigTree:
        """Parse entries until EOF (or the closing brace when ``braced``)."""
        if braced and self.accept("LBRACE") is None:
            # bare document fallback
            braced = False
        tree = self._entries(stop="RBRACE" if braced else "EOF")
        if braced:
            self.expect("RBRACE", "'}'")
        if not self.at("EOF"):
            self.error_here("parse-trailing", f"unexpected {self._describe()} after document")
        return tree

    def _entries(self, stop: str) -> ConfigTree:
        entries: list[tuple[str, ConfigValue]] = []
        first_pos = self.tok.pos
        seen: dict[str, SourcePos] = {}
        while not self.at("EOF") and not self.at(stop):
            if not self.at("IDENT"):
                self.error_here("parse-expected", f"expected a key, found {self._describe()}")
                self.advance()
                continue
            key_tok = self.advance()
            try:
                value = self._entry_value()
            except ParseAbort:
                self.skip_balanced_until("IDENT", stop)
                continue
            if key_tok.text in seen:
                prev = seen[key_tok.text]
                self.sink.error(
                    "cfg-duplicate-key",
                    f"duplicate key '{key_tok.text}' (first defined at "
                    f"{prev.line}:{prev.column})",
                    key_tok.pos,
                    related=(prev,),
                )
                continue
            seen[key_tok.text] = key_tok.pos
            entries.append((key_tok.text, value))
        return ConfigTree(tuple(entries), first_pos)

    def _entry_value(self) -> ConfigValue:
        if self.at("LBRACE"):
            self.enter()
            open_tok = self.advance()
            tree = self._entries(stop="RBRACE")
            tree = ConfigTree(tree.entries, open_tok.pos)
            self.expect("RBRACE", "'}'")
            self.leave()
            return tree
        self.expect("COLON", "':' or '{' after key")
        return self._value()

    def _value(self) -> ConfigValue:
        if self.at("LPAREN"):
            self.enter()
            self.advance()
            items: list[ConfigValue] = []
            if not self.at("RPAREN"):
                items.append(self._scalar())
                while self.accept("COMMA"):
                    items.append(self._scalar())
            self.expect("RPAREN", "')'")
            self.leave()
            return tuple(items)
        return self._scalar()

    def _scalar(self) -> ConfigValue:
        tok = self.tok
        if tok.kind == "MINUS":
            self.advance()
            num = self.tok
            if num.kind == "INT":
                self.advance()
                return -num.value  # type: ignore[operator]
            if num.kind == "REAL":
                self.advance()
                return -num.value  # type: ignore[operator]
            self.error_here("parse-expected", "expected a number after '-'")
            raise ParseAbort()
        if tok.kind in ("INT", "REAL"):
            self.advance()
            return tok.value  # type: ignore[return-value]
        if tok.kind == "STRING":
            self.advance()
            return tok.value  # type: ignore[return-value]
        if tok.kind == "IDENT":
            self.advance()
            if tok.text == "true":
                return True
            if tok.text == "false":
                return False
            return EnumToken(tok.text)
        self.error_here("parse-expected", f"expected a value, found {self._describe()}")
        raise ParseAbort()


def parse_entries_from_tokens(tokens, file: str, sink) -> ConfigTree:
    """Parse a token slice (ending in EOF) as a bare entries document.

    Used by the system-language parser to hand hyperparameter blocks to this
    grammar; diagnostics go to the caller's sink.
    """
    sub = _ConfigParser.__new__(_ConfigParser)
    sub.sink = sink
    sub.tokens = tokens
    sub.index = 0
    sub.file = file
    sub.depth = 0
    try:
        return sub._entries(stop="EOF")
    except ParseAbort:
        return ConfigTree()


def parse_config(text: str, file: str) -> tuple[ConfigTree | None, list[Diagnostic]]:
    """Parse a bare `.tcl` document into a ConfigTree.

    Recovers from malformed entries; duplicate keys at the same level are
    reported with both spans and the later occurrence dropped.
    """
    parser = _ConfigParser(text, file)
    try:
        tree = parser.parse_document(braced=False)
    except ParseAbort:
        tree = None
    return tree, parser.sink.sorted()


def parse_value_document(text: str, file: str = "<payload>") -> tuple[ConfigTree | None, list[Diagnostic]]:
    """Parse a value document that may be wrapped in one outer brace pair.

    Used for bridge payloads and scenario fragments.
    """
    parser = _ConfigParser(text, file)
    try:
        tree = parser.parse_document(braced=True)
    except ParseAbort:
        tree = None
    if parser.sink.has_errors:
        tree = None
    return tree, parser.sink.sorted()
