"""Tokenizer for FaaSChal source text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .syntax import ChorSyntaxError, Span

KEYWORDS = frozenset(
    {
        "def", "do", "end", "with", "for", "in", "if", "then", "else",
        "import", "as", "stateful", "stateless", "services",
    }
)

# Longest operators first; both spellings of the forward operator map to FWD.
_OPERATORS = [
    ("<->", "RR"),
    ("<-", "LARROW"),
    ("->", "RARROW"),
    ("|>", "FWD"),
    ("▶", "FWD"),
    ("::", "DCOLON"),
    ("-", "DASH"),
    ("@", "AT"),
    (":", "COLON"),
    (",", "COMMA"),
    ("(", "LPAREN"),
    (")", "RPAREN"),
    ("{", "LBRACE"),
    ("}", "RBRACE"),
    ("|", "BAR"),
    (".", "DOT"),
]

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_NUMBER = re.compile(r"[0-9]+(?:\.[0-9]+)?")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: Span
    value: object = None

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.span})"


def normalize_newlines(source: str) -> str:
    return source.replace("\r\n", "\n")


def tokenize(source: str) -> list[Token]:
    source = normalize_newlines(source)
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch in " \t\r\f\v﻿":
            i, col = i + 1, col + 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i, col = i + 1, col + 1
            continue
        span = Span(line, col)
        if ch == '"':
            j = i + 1
            chars: list[str] = []
            while True:
                if j >= n or source[j] == "\n":
                    raise ChorSyntaxError("unterminated string literal", span)
                c = source[j]
                if c == "\\":
                    if j + 1 >= n or source[j + 1] not in '"\\':
                        raise ChorSyntaxError("invalid escape in string literal", Span(line, col + j - i))
                    chars.append(source[j + 1])
                    j += 2
                    continue
                if c == '"':
                    break
                chars.append(c)
                j += 1
            text = source[i : j + 1]
            tokens.append(Token("STRING", text, span, "".join(chars)))
            col += j + 1 - i
            i = j + 1
            continue
        m = _IDENT.match(source, i)
        if m:
            text = m.group()
            kind = text if text in KEYWORDS else "IDENT"
            tokens.append(Token(kind, text, span, text))
            col += len(text)
            i = m.end()
            continue
        m = _NUMBER.match(source, i)
        if m:
            text = m.group()
            value = float(text) if "." in text else int(text)
            tokens.append(Token("NUMBER", text, span, value))
            col += len(text)
            i = m.end()
            continue
        for op, kind in _OPERATORS:
            if source.startswith(op, i):
                tokens.append(Token(kind, op, span))
                col += len(op)
                i += len(op)
                break
        else:
            raise ChorSyntaxError(f"unexpected character {ch!r}", span)
    tokens.append(Token("EOF", "", Span(line, col)))
    return tokens
