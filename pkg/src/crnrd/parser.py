"""Reader and writer for the line-oriented ``.crn`` reaction format.

One reaction per line, ``#`` starts a comment::

    A + 2 B -> C ; k=2.5
    C <-> 0      ; k=1, kr=0.3

``<->`` expands into a forward reaction (rate ``k``) followed by the
backward one (rate ``kr``). Species are numbered by first appearance unless
an optional header line ``species: S1, S2, ...`` (before any reaction)
fixes the order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .network import ReactionNetwork

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<arrow><->|->)
  | (?P<number>-?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[+;,=:])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    col: int  # 1-based


def _tokenize(line: str, lineno: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None:
            raise ParseError("SyntaxError", lineno, pos + 1, f"unexpected character {line[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            text = m.group()
            toks.append(_Tok(text if kind == "punct" else kind, text, pos + 1))
        pos = m.end()
    return toks


class _LineParser:
    def __init__(self, toks: list[_Tok], lineno: int, end_col: int, species: dict[str, int]):
        self.toks = toks
        self.i = 0
        self.lineno = lineno
        self.end_col = end_col
        self.species = species

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self) -> _Tok | None:
        tok = self.peek()
        self.i += 1
        return tok

    def error(self, kind: str, tok: _Tok | None, detail: str) -> ParseError:
        col = tok.col if tok is not None else self.end_col
        return ParseError(kind, self.lineno, col, detail)

    def complex(self) -> dict[int, float]:
        tok = self.peek()
        if tok is None:
            raise self.error("SyntaxError", tok, "expected a complex")
        nxt = self.toks[self.i + 1] if self.i + 1 < len(self.toks) else None
        if tok.kind == "number" and tok.text == "0" and (nxt is None or nxt.kind != "ident"):
            self.i += 1
            return {}
        terms: dict[int, float] = {}
        while True:
            self.term(terms)
            tok = self.peek()
            if tok is None or tok.kind != "+":
                return terms
            self.i += 1

    def term(self, terms: dict[int, float]) -> None:
        tok = self.next()
        coeff = 1.0
        if tok is not None and tok.kind == "number":
            coeff = float(tok.text)
            if not (coeff >= 1.0 and np.isfinite(coeff)):
                raise self.error("CoefficientOutOfRange", tok, tok.text)
            tok = self.next()
        if tok is None or tok.kind != "ident":
            raise self.error("SyntaxError", tok, "expected a species name")
        idx = self.species.setdefault(tok.text, len(self.species))
        if idx in terms:
            raise self.error("DuplicateSpeciesInTerm", tok, f"{tok.text} (write e.g. '2 {tok.text}')")
        terms[idx] = coeff

    def rate(self, name: str) -> float:
        tok = self.next()
        if tok is None or tok.kind != "ident" or tok.text != name:
            raise self.error("MissingRate" if tok is None else "SyntaxError", tok, f"expected '{name}='")
        tok = self.next()
        if tok is None or tok.kind != "=":
            raise self.error("SyntaxError", tok, "expected '='")
        tok = self.next()
        if tok is None or tok.kind != "number":
            raise self.error("MissingRate" if tok is None else "SyntaxError", tok, f"value for {name}")
        value = float(tok.text)
        if not (value > 0 and np.isfinite(value)):
            raise self.error("NonpositiveRate", tok, f"{name}={tok.text}")
        return value

    def statement(self):
        lhs = self.complex()
        arrow = self.next()
        if arrow is None or arrow.kind != "arrow":
            raise self.error("SyntaxError", arrow, "expected '->' or '<->'")
        rhs = self.complex()
        if lhs == rhs:
            raise self.error("TrivialReaction", arrow, "reactant equals product")
        semi = self.next()
        if semi is None:
            raise self.error("MissingRate", None, "expected '; k=...'")
        if semi.kind != ";":
            raise self.error("SyntaxError", semi, "expected ';'")
        if self.peek() is None:
            raise self.error("MissingRate", None, "expected 'k=...'")
        k = self.rate("k")
        kr = None
        tok = self.next()
        if arrow.text == "<->":
            if tok is None:
                raise self.error("MissingRate", None, "'<->' needs ', kr=...'")
            if tok.kind != ",":
                raise self.error("SyntaxError", tok, "expected ','")
            kr = self.rate("kr")
            tok = self.next()
        if tok is not None:
            raise self.error("SyntaxError", tok, f"unexpected {tok.text!r}")
        return lhs, rhs, k, kr


def _species_header(toks: list[_Tok], lineno: int, species: dict[str, int]) -> None:
    # toks[0] is 'species', toks[1] is ':'
    expect_name = True
    for tok in toks[2:]:
        if expect_name:
            if tok.kind != "ident":
                raise ParseError("SyntaxError", lineno, tok.col, "expected a species name")
            if tok.text in species:
                raise ParseError("SyntaxError", lineno, tok.col, f"species {tok.text} declared twice")
            species[tok.text] = len(species)
        elif tok.kind != ",":
            raise ParseError("SyntaxError", lineno, tok.col, "expected ','")
        expect_name = not expect_name
    if expect_name:
        col = toks[-1].col
        raise ParseError("SyntaxError", lineno, col, "species list must end with a name")


def parse_network(text: str) -> ReactionNetwork:
    """Parse ``.crn`` text. Raises :class:`ParseError` on the first problem."""
    species: dict[str, int] = {}
    raw = []  # (lhs, rhs, k)
    lines = text.splitlines()
    for lineno, line in enumerate(lines, start=1):
        content = line.split("#", 1)[0].rstrip()
        toks = _tokenize(content, lineno)
        if not toks:
            continue
        if len(toks) >= 2 and toks[0].text == "species" and toks[1].kind == ":":
            if raw or species:
                raise ParseError("SyntaxError", lineno, 1, "species header must come first")
            _species_header(toks, lineno, species)
            continue
        end_col = min(len(content) + 1, len(line)) or 1
        lhs, rhs, k, kr = _LineParser(toks, lineno, end_col, species).statement()
        raw.append((lhs, rhs, k))
        if kr is not None:
            raw.append((rhs, lhs, kr))
    if not raw:
        raise ParseError("SyntaxError", 1, 1, "no reactions found")

    N = len(species)
    Y = np.zeros((len(raw), N))
    Yp = np.zeros((len(raw), N))
    for r, (lhs, rhs, _) in enumerate(raw):
        for i, c in lhs.items():
            Y[r, i] = c
        for i, c in rhs.items():
            Yp[r, i] = c
    names = sorted(species, key=species.get)
    return ReactionNetwork(tuple(names), Y, Yp, [k for _, _, k in raw])


def _fmt(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _render_complex(net: ReactionNetwork, row: np.ndarray) -> str:
    terms = []
    for name, c in zip(net.species, row):
        if c == 0:
            continue
        terms.append(name if c == 1 else f"{_fmt(c)} {name}")
    return " + ".join(terms) if terms else "0"


def render_network(net: ReactionNetwork) -> str:
    """Canonical text for ``net``; ``parse_network`` inverts it exactly.

    Adjacent reaction pairs that are exact reverses are written as ``<->``.
    A ``species:`` header is emitted only when first appearance in the
    reaction lines would not reproduce the species order.
    """
    out = []
    seen: list[int] = []
    for r in range(net.n_reactions):
        for part in (net.reactants[r], net.products[r]):
            for i in np.flatnonzero(part):
                if i not in seen:
                    seen.append(int(i))
    if seen != list(range(net.n_species)):
        out.append("species: " + ", ".join(net.species))
    Y, Yp, k = net.reactants, net.products, net.rates
    r = 0
    while r < net.n_reactions:
        lhs = _render_complex(net, Y[r])
        rhs = _render_complex(net, Yp[r])
        if (
            r + 1 < net.n_reactions
            and np.array_equal(Y[r + 1], Yp[r])
            and np.array_equal(Yp[r + 1], Y[r])
        ):
            out.append(f"{lhs} <-> {rhs} ; k={_fmt(k[r])}, kr={_fmt(k[r + 1])}")
            r += 2
        else:
            out.append(f"{lhs} -> {rhs} ; k={_fmt(k[r])}")
            r += 1
    return "\n".join(out) + "\n"


def load_network(path) -> ReactionNetwork:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())
