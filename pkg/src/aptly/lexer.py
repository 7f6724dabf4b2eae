"""Tokenizer for Aptly source text.

Indentation is significant and computed Python-style from leading spaces;
tabs are rejected. Newlines inside open brackets do not end the logical
line, so long literals may wrap. String tokens carry their decoded value.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import (
    Diagnostic,
    E_BAD_CHAR,
    E_SYNTAX,
    E_TAB_INDENT,
    E_UNTERMINATED_STRING,
    ParseError,
    SourceSpan,
)

KIND_IDENT = "identifier"
KIND_KEYWORD = "keyword"
KIND_NUMBER = "number"
KIND_STRING = "string"
KIND_PUNCT = "punctuation"
KIND_NEWLINE = "newline"
KIND_INDENT = "indent"
KIND_DEDENT = "dedent"
KIND_EOF = "eof"

KEYWORDS = frozenset(
    (
        "initialize", "to", "when", "set", "call", "return",
        "if", "elif", "else", "for", "each", "in", "while",
        "global", "and", "or", "not", "True", "False",
    )
)

_TWO_CHAR = ("==", "!=", "<=", ">=")
_ONE_CHAR = frozenset("=(){}[],:.+-*/<>")
_UNICODE_OPS = {"≠": "!=", "≤": "<=", "≥": ">="}
_OPENERS = frozenset("([{")
_CLOSERS = frozenset(")]}")
_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"', "'": "'"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r})"


def _fail(code: str, message: str, line: int, column: int, length: int = 1):
    raise ParseError([Diagnostic(code, message, SourceSpan(line, column, length))])


def tokenize(source: str) -> list[Token]:
    """Lex ``source`` into tokens; raises ParseError on the first bad input."""
    tokens: list[Token] = []
    indents = [0]
    depth = 0
    lines = source.split("\n")

    for lineno, raw in enumerate(lines, start=1):
        i = 0
        n = len(raw)

        if depth == 0:
            while i < n and raw[i] in " \t":
                if raw[i] == "\t":
                    _fail(E_TAB_INDENT, "tab character in indentation", lineno, i + 1)
                i += 1
            if i == n:
                continue
            indent = i
            if indent > indents[-1]:
                indents.append(indent)
                tokens.append(Token(KIND_INDENT, "", SourceSpan(lineno, 1, indent)))
            else:
                while indent < indents[-1]:
                    indents.pop()
                    tokens.append(Token(KIND_DEDENT, "", SourceSpan(lineno, 1, indent)))
                if indent != indents[-1]:
                    _fail(
                        E_SYNTAX,
                        "unindent does not match any outer indentation level",
                        lineno,
                        1,
                        indent,
                    )

        while i < n:
            ch = raw[i]
            col = i + 1
            if ch == " ":
                i += 1
                continue
            if ch == "\t":
                _fail(E_BAD_CHAR, "tab character outside a string", lineno, col)
            if ch.isalpha() or ch == "_":
                j = i + 1
                while j < n and (raw[j].isalnum() or raw[j] == "_"):
                    j += 1
                text = raw[i:j]
                kind = KIND_KEYWORD if text in KEYWORDS else KIND_IDENT
                tokens.append(Token(kind, text, SourceSpan(lineno, col, j - i)))
                i = j
                continue
            if ch.isdigit():
                j = i + 1
                while j < n and raw[j].isdigit():
                    j += 1
                if j < n and raw[j] == "." and j + 1 < n and raw[j + 1].isdigit():
                    j += 1
                    while j < n and raw[j].isdigit():
                        j += 1
                tokens.append(Token(KIND_NUMBER, raw[i:j], SourceSpan(lineno, col, j - i)))
                i = j
                continue
            if ch in ('"', "'"):
                value, j = _lex_string(raw, i, lineno)
                tokens.append(Token(KIND_STRING, value, SourceSpan(lineno, col, j - i)))
                i = j
                continue
            if raw[i : i + 2] in _TWO_CHAR:
                tokens.append(Token(KIND_PUNCT, raw[i : i + 2], SourceSpan(lineno, col, 2)))
                i += 2
                continue
            if ch in _UNICODE_OPS:
                tokens.append(Token(KIND_PUNCT, _UNICODE_OPS[ch], SourceSpan(lineno, col, 1)))
                i += 1
                continue
            if ch in _ONE_CHAR:
                if ch in _OPENERS:
                    depth += 1
                elif ch in _CLOSERS:
                    depth = max(0, depth - 1)
                tokens.append(Token(KIND_PUNCT, ch, SourceSpan(lineno, col, 1)))
                i += 1
                continue
            if ch == "#":
                _fail(E_BAD_CHAR, "comments are not supported", lineno, col)
            _fail(E_BAD_CHAR, f"unexpected character {ch!r}", lineno, col)

        if depth == 0 and tokens and tokens[-1].kind not in (
            KIND_NEWLINE,
            KIND_INDENT,
            KIND_DEDENT,
        ):
            tokens.append(Token(KIND_NEWLINE, "", SourceSpan(lineno, n + 1, 0)))

    last_line = max(1, len(lines))
    if depth > 0:
        _fail(E_SYNTAX, "unexpected end of input inside brackets", last_line, max(1, len(lines[-1]) + 1), 0)
    while len(indents) > 1:
        indents.pop()
        tokens.append(Token(KIND_DEDENT, "", SourceSpan(last_line, 1, 0)))
    tokens.append(Token(KIND_EOF, "", SourceSpan(last_line, len(lines[-1]) + 1, 0)))
    return tokens


def _lex_string(raw: str, start: int, lineno: int) -> tuple[str, int]:
    quote = raw[start]
    out: list[str] = []
    i = start + 1
    n = len(raw)
    while i < n:
        ch = raw[i]
        if ch == quote:
            return "".join(out), i + 1
        if ch == "\\":
            if i + 1 >= n:
                break
            esc = raw[i + 1]
            if esc not in _ESCAPES:
                _fail(E_BAD_CHAR, f"unsupported escape sequence \\{esc}", lineno, i + 2)
            out.append(_ESCAPES[esc])
            i += 2
            continue
        out.append(ch)
        i += 1
    _fail(
        E_UNTERMINATED_STRING,
        "string literal is not terminated",
        lineno,
        start + 1,
        n - start,
    )
    raise AssertionError("unreachable")
