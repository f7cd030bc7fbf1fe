"""Recursive-descent parser and canonical printer for polynomial expressions.

Grammar (whitespace is insignificant, implicit multiplication is rejected)::

    expr  := term (('+' | '-') term)*
    term  := unary ('*' unary)*
    unary := '-'* atom
    atom  := ('x' | 'y' | rational | '(' expr ')') ('^' integer)?

``rational`` is an integer or ``integer/positive-integer``.  Since the
exponent belongs to the atom, ``-x^2`` parses as ``-(x^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .poly import DegreeBoundExceeded, Polynomial


@dataclass
class ParseError(ValueError):
    position: int
    message: str
    expected: list = field(default_factory=list)
    text: str = ""

    def __post_init__(self):
        super().__init__(self.position, self.message)

    def __str__(self):
        exp = f" (expected {', '.join(self.expected)})" if self.expected else ""
        return f"at offset {self.position}: {self.message}{exp}"

    def caret(self) -> str:
        """The input with a caret under the failing byte."""
        prefix = self.text.encode("utf-8")[: self.position].decode("utf-8", "replace")
        return f"{self.text}\n{' ' * len(prefix)}^"


@dataclass(frozen=True)
class _Token:
    kind: str  # 'int', 'x', 'y', '+', '-', '*', '/', '^', '(', ')', 'end'
    text: str
    pos: int  # byte offset


_SINGLE = set("xy+-*/^()")


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i = 0
    offset = 0  # byte offset of text[i]
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            pass
        elif ch in _SINGLE:
            tokens.append(_Token(ch, ch, offset))
        elif ch.isascii() and ch.isdigit():
            j = i
            while j < len(text) and text[j].isascii() and text[j].isdigit():
                j += 1
            tokens.append(_Token("int", text[i:j], offset))
            offset += j - i
            i = j
            continue
        else:
            raise ParseError(offset, f"unexpected character {ch!r}",
                             ["'x'", "'y'", "number", "operator", "'('", "')'"], text)
        offset += len(ch.encode("utf-8"))
        i += 1
    tokens.append(_Token("end", "", offset))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def fail(self, message, expected=()):
        raise ParseError(self.tok.pos, message, list(expected), self.text)

    def take(self, kind) -> _Token:
        tok = self.tok
        if tok.kind != kind:
            self.fail(f"unexpected {_describe(tok)}", [_quote(kind)])
        self.i += 1
        return tok

    def parse(self) -> Polynomial:
        if self.tok.kind == "end":
            self.fail("empty input", ["expression"])
        p = self.expr()
        if self.tok.kind != "end":
            if self.tok.kind == "/":
                self.fail("division is only allowed inside a rational literal")
            if self.tok.kind == ")":
                self.fail("unbalanced ')'", ["operator", "end of input"])
            self.fail(f"unexpected {_describe(self.tok)} (implicit multiplication "
                      "is not supported)" if self.tok.kind in ("x", "y", "int", "(")
                      else f"unexpected {_describe(self.tok)}",
                      ["'+'", "'-'", "'*'", "end of input"])
        return p

    def expr(self) -> Polynomial:
        acc = self.term()
        while self.tok.kind in ("+", "-"):
            op = self.take(self.tok.kind).kind
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self) -> Polynomial:
        acc = self.unary()
        while self.tok.kind == "*":
            self.take("*")
            acc = self._checked(lambda: acc * self.unary())
        return acc

    def unary(self) -> Polynomial:
        negate = False
        while self.tok.kind == "-":
            self.take("-")
            negate = not negate
        p = self.atom()
        return -p if negate else p

    def atom(self) -> Polynomial:
        tok = self.tok
        if tok.kind == "x":
            self.i += 1
            base = Polynomial.x()
        elif tok.kind == "y":
            self.i += 1
            base = Polynomial.y()
        elif tok.kind == "int":
            self.i += 1
            value = Fraction(int(tok.text))
            if self.tok.kind == "/":
                self.i += 1
                if self.tok.kind != "int":
                    self.fail("a rational literal needs an integer denominator",
                              ["positive integer"])
                den = int(self.take("int").text)
                if den == 0:
                    raise ParseError(self.tokens[self.i - 1].pos,
                                     "zero denominator in rational literal",
                                     ["positive integer"], self.text)
                value /= den
            base = Polynomial.constant(value)
        elif tok.kind == "(":
            self.i += 1
            base = self.expr()
            if self.tok.kind != ")":
                self.fail("unbalanced '('", ["')'"])
            self.i += 1
        elif tok.kind == "end":
            self.fail("unexpected end of input", ["'x'", "'y'", "number", "'('"])
        else:
            self.fail(f"unexpected {_describe(tok)}", ["'x'", "'y'", "number", "'('"])
        if self.tok.kind == "^":
            self.i += 1
            if self.tok.kind != "int":
                self.fail("exponent must be a nonnegative integer", ["nonnegative integer"])
            exp_tok = self.take("int")
            if self.tok.kind == "/":
                self.fail("exponent must be a nonnegative integer", ["'*'", "'+'", "'-'"])
            n = int(exp_tok.text)
            if n > 64:
                raise ParseError(exp_tok.pos, "exponent exceeds the degree bound",
                                 [], self.text)
            base = self._checked(lambda: base ** n, exp_tok.pos)
        return base

    def _checked(self, thunk, pos=None):
        try:
            return thunk()
        except DegreeBoundExceeded as exc:
            raise ParseError(self.tok.pos if pos is None else pos, str(exc), [],
                             self.text) from None


def _quote(kind):
    return "number" if kind == "int" else f"'{kind}'"


def _describe(tok: _Token) -> str:
    if tok.kind == "end":
        return "end of input"
    if tok.kind == "int":
        return f"number {tok.text}"
    return f"'{tok.text}'"


def parse(text: str) -> Polynomial:
    return _Parser(text).parse()


def _format_coeff(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def _format_monomial(i: int, j: int) -> str:
    parts = []
    if i:
        parts.append("x" if i == 1 else f"x^{i}")
    if j:
        parts.append("y" if j == 1 else f"y^{j}")
    return "*".join(parts)


def format_poly(p: Polynomial) -> str:
    """Canonical text: graded-lex descending, explicit ``*`` and ``^``."""
    if p.is_zero():
        return "0"
    out = []
    for (i, j), c in p.items():
        mono = _format_monomial(i, j)
        if not mono:
            term = _format_coeff(c)
        elif c == 1:
            term = mono
        else:
            term = f"{_format_coeff(c)}*{mono}"
        if not out:
            out.append(term)
        elif term.startswith("-"):
            out.append(f" - {term[1:]}")
        else:
            out.append(f" + {term}")
    return "".join(out)


# alias matching the operation name
format = format_poly  # noqa: A001
