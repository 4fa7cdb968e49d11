"""Parser for the polynomial expression language of problem files.

Grammar, whitespace insensitive:

    expr  := term (('+' | '-') term)*
    term  := unary ('*' unary)*
    unary := '-' unary | '+' unary | power
    power := atom ('^' INT)?
    atom  := INT ('/' INT)? | NAME | '(' expr ')'

Multiplication is always explicit (`2*x`, never `2x`).  `/` forms exact
rational constants and is allowed only between two integer literals.
Exponents are nonnegative integer literals.  Floats do not exist in this
language; a `.` anywhere is a tokenizer error.  Every error carries the
offending position.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .poly import EvenPoly, Rat


class ParseError(ValueError):
    """Malformed expression; `position` is a 0-based index into the text."""

    def __init__(self, position: int, message: str):
        super().__init__(f"position {position}: {message}")
        self.position = position


@dataclass(frozen=True)
class _Token:
    kind: str  # "int" | "name" | "op" | "end"
    text: str
    position: int


_INT_RE = re.compile(r"\d+")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_OPS = set("+-*/^()")


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch.isdigit():
            match = _INT_RE.match(text, pos)
            assert match is not None
            tokens.append(_Token("int", match.group(), pos))
            pos = match.end()
            continue
        if ch.isalpha() or ch == "_":
            match = _NAME_RE.match(text, pos)
            assert match is not None
            tokens.append(_Token("name", match.group(), pos))
            pos = match.end()
            continue
        if ch in _OPS:
            tokens.append(_Token("op", ch, pos))
            pos += 1
            continue
        raise ParseError(pos, f"unexpected character {ch!r}")
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], coords: tuple[str, ...]):
        self.tokens = tokens
        self.coords = coords
        self.index = 0

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def at_op(self, *symbols: str) -> bool:
        token = self.peek()
        return token.kind == "op" and token.text in symbols

    def parse(self) -> EvenPoly:
        if self.peek().kind == "end":
            raise ParseError(self.peek().position, "empty expression")
        result = self.expr()
        trailing = self.peek()
        if trailing.kind != "end":
            raise ParseError(trailing.position, f"unexpected {trailing.text!r}")
        return result

    def expr(self) -> EvenPoly:
        result = self.term()
        while self.at_op("+", "-"):
            op = self.advance().text
            rhs = self.term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def term(self) -> EvenPoly:
        result = self.unary()
        while True:
            if self.at_op("*"):
                self.advance()
                result = result * self.unary()
            elif self.at_op("/"):
                # rational literals are consumed whole inside atom()
                raise ParseError(
                    self.peek().position,
                    "'/' is only allowed between integer literals",
                )
            else:
                return result

    def unary(self) -> EvenPoly:
        if self.at_op("-"):
            self.advance()
            return -self.unary()
        if self.at_op("+"):
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> EvenPoly:
        base = self.atom()
        if self.at_op("^"):
            self.advance()
            exponent = self.peek()
            if exponent.kind != "int":
                raise ParseError(
                    exponent.position, "exponent must be a nonnegative integer literal"
                )
            self.advance()
            return base ** int(exponent.text)
        return base

    def atom(self) -> EvenPoly:
        token = self.advance()
        if token.kind == "int":
            numerator = int(token.text)
            if self.at_op("/"):
                self.advance()
                denom = self.peek()
                if denom.kind != "int":
                    raise ParseError(denom.position, "expected an integer after '/'")
                self.advance()
                if int(denom.text) == 0:
                    raise ParseError(denom.position, "zero denominator")
                return EvenPoly.const(
                    self.coords, Fraction(numerator, int(denom.text))
                )
            return EvenPoly.const(self.coords, numerator)
        if token.kind == "name":
            if token.text not in self.coords:
                raise ParseError(token.position, f"unknown coordinate {token.text!r}")
            return EvenPoly.variable(self.coords, token.text)
        if token.kind == "op" and token.text == "(":
            inner = self.expr()
            closing = self.peek()
            if not (closing.kind == "op" and closing.text == ")"):
                raise ParseError(closing.position, "expected ')'")
            self.advance()
            return inner
        if token.kind == "end":
            raise ParseError(token.position, "unexpected end of expression")
        raise ParseError(token.position, f"unexpected {token.text!r}")


def parse_poly(text: str, coords: tuple[str, ...] | list[str]) -> EvenPoly:
    """Parse `text` into an EvenPoly over the given coordinates."""
    return _Parser(_tokenize(text), tuple(coords)).parse()


_RATIONAL_RE = re.compile(r"^[+-]?(\d+)(?:/(\d+))?$")


def rational_from_string(text: str) -> Rat:
    """Exact scalar from 'a' or 'a/b' with integer a and positive integer b."""
    stripped = text.strip()
    match = _RATIONAL_RE.match(stripped)
    if match is None:
        raise ParseError(0, f"not an exact rational literal: {text!r}")
    if match.group(2) is not None and int(match.group(2)) == 0:
        raise ParseError(0, f"zero denominator in {text!r}")
    return Fraction(stripped)
