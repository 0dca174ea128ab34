"""Tokenizer for the CUT-lang class subset.

Comments (``//``, ``/* */``) and preprocessor-style ``#`` lines are skipped
as trivia. Numbers are unsigned here; the parser folds a leading ``-`` into
negative literals where the grammar allows it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from ..errors import ParseError

KEYWORDS = frozenset(
    [
        "class",
        "extern",
        "public",
        "private",
        "protected",
        "virtual",
        "if",
        "else",
        "while",
        "return",
        "assert",
        "true",
        "false",
        "int",
        "bool",
        "float",
        "void",
    ]
)

# Longest first so "<=" wins over "<" and "->" over "-".
PUNCT = [
    "->",
    "::",
    "&&",
    "||",
    "==",
    "!=",
    "<=",
    ">=",
    "<",
    ">",
    "+",
    "-",
    "*",
    "/",
    "%",
    "!",
    "=",
    "{",
    "}",
    "(",
    ")",
    ";",
    ",",
    ":",
]


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "keyword", "int", "float", "punct", "eof"
    text: str
    pos: int
    line: int
    column: int
    value: Optional[Union[int, float]] = None

    def is_punct(self, text: str) -> bool:
        return self.kind == "punct" and self.text == text

    def is_keyword(self, text: str) -> bool:
        return self.kind == "keyword" and self.text == text


def tokenize(source: str, path: str = "<string>") -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def err(message: str, at_line: int, at_col: int) -> ParseError:
        return ParseError(message, line=at_line, column=at_col, path=path)

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#" and col == 1:
            while i < n and source[i] != "\n":
                i += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if source.startswith("/*", i):
            start_line, start_col = line, col
            end = source.find("*/", i + 2)
            if end < 0:
                raise err("unterminated block comment", start_line, start_col)
            for c in source[i : end + 2]:
                if c == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
            i = end + 2
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            text = source[start:i]
            kind = "keyword" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, start, line, col))
            col += i - start
            continue
        if ch.isdigit():
            start = i
            start_col = col
            while i < n and source[i].isdigit():
                i += 1
            is_float = False
            if i < n and source[i] == "." and i + 1 < n and source[i + 1].isdigit():
                is_float = True
                i += 1
                while i < n and source[i].isdigit():
                    i += 1
            if i < n and source[i] in "eE":
                j = i + 1
                if j < n and source[j] in "+-":
                    j += 1
                if j < n and source[j].isdigit():
                    is_float = True
                    i = j
                    while i < n and source[i].isdigit():
                        i += 1
            text = source[start:i]
            if i < n and (source[i].isalpha() or source[i] == "_" or source[i] == "."):
                raise err(f"malformed number {text + source[i]!r}", line, start_col)
            if is_float:
                tokens.append(Token("float", text, start, line, start_col, float(text)))
            else:
                tokens.append(Token("int", text, start, line, start_col, int(text)))
            col = start_col + (i - start)
            continue
        for p in PUNCT:
            if source.startswith(p, i):
                tokens.append(Token("punct", p, i, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise err(f"unexpected character {ch!r}", line, col)

    tokens.append(Token("eof", "", n, line, col))
    return tokens
