"""LTL formulas: syntax tree, parser, normal forms and lasso evaluation.

The evaluator :func:`eval_lasso` works directly on ultimately periodic words
and serves as ground truth for every automaton built downstream.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence


class LtlSyntaxError(ValueError):
    """Raised on malformed formula text; carries a 1-based line and column."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} at line {line}, column {column}")
        self.message = message
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# Syntax tree


@dataclass(frozen=True)
class Formula:
    def __str__(self) -> str:
        return to_string(self)

    def __and__(self, other: Formula) -> Formula:
        return And(self, other)

    def __or__(self, other: Formula) -> Formula:
        return Or(self, other)

    def __invert__(self) -> Formula:
        return Not(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    operand: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Release(Formula):
    """Dual of Until; only produced internally by :func:`to_nnf`."""

    left: Formula
    right: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    operand: Formula


@dataclass(frozen=True)
class Always(Formula):
    operand: Formula


TRUE = Const(True)
FALSE = Const(False)

_UNARY = (Not, Next, Eventually, Always)
_BINARY = (And, Or, Implies, Until, Release)
_TEMPORAL = (Next, Until, Release, Eventually, Always)


def conjunction(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    if not parts:
        return TRUE
    out = parts[-1]
    for f in reversed(parts[:-1]):
        out = And(f, out)
    return out


def disjunction(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    if not parts:
        return FALSE
    out = parts[-1]
    for f in reversed(parts[:-1]):
        out = Or(f, out)
    return out


def iff(a: Formula, b: Formula) -> Formula:
    return And(Implies(a, b), Implies(b, a))


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, _UNARY):
        return (f.operand,)
    if isinstance(f, _BINARY):
        return (f.left, f.right)
    return ()


def subformulas(f: Formula) -> Iterator[Formula]:
    """All subformulas, children before parents (each occurrence once)."""
    seen: set[Formula] = set()
    stack: list[tuple[Formula, bool]] = [(f, False)]
    while stack:
        g, expanded = stack.pop()
        if expanded:
            if g not in seen:
                seen.add(g)
                yield g
            continue
        if g in seen:
            continue
        stack.append((g, True))
        for c in children(g):
            stack.append((c, False))


def atoms(f: Formula) -> frozenset[str]:
    return frozenset(g.name for g in subformulas(f) if isinstance(g, Atom))


@lru_cache(maxsize=None)
def is_propositional(f: Formula) -> bool:
    if isinstance(f, _TEMPORAL):
        return False
    return all(is_propositional(c) for c in children(f))


def size(f: Formula) -> int:
    """Number of operator nodes (atoms and constants do not count)."""
    n = 0 if isinstance(f, (Atom, Const)) else 1
    return n + sum(size(c) for c in children(f))


_PREC = {Implies: 1, Or: 2, And: 3, Until: 4, Release: 4}
_SYMBOL = {And: "&", Or: "|", Implies: "->", Until: "U", Release: "R"}
_USYMBOL = {Not: "~", Next: "X ", Eventually: "F ", Always: "G "}


def to_string(f: Formula) -> str:
    """Render in the surface syntax; the output re-parses to ``f``.

    ``Release`` has no surface syntax and is printed as ``R`` for display only.
    """

    def render(g: Formula, parent: int, right: bool) -> str:
        if isinstance(g, Const):
            return "true" if g.value else "false"
        if isinstance(g, Atom):
            return g.name
        if isinstance(g, _UNARY):
            return _USYMBOL[type(g)] + render(g.operand, 5, False)
        prec = _PREC[type(g)]
        # U and -> associate to the right, & and | are flattened either way
        right_assoc = isinstance(g, (Until, Release, Implies))
        lhs = render(g.left, prec + (1 if right_assoc else 0), False)
        rhs = render(g.right, prec + (0 if right_assoc else 1), True)
        text = f"{lhs} {_SYMBOL[type(g)]} {rhs}"
        if prec < parent:
            return f"({text})"
        return text

    return render(f, 0, False)


# ---------------------------------------------------------------------------
# Tokenizer and parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>(//|\#)[^\n]*)
  | (?P<op><->|->|~>|::|:=|&&|\|\||[()~!&|;,:*])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*'*)
    """,
    re.VERBOSE,
)

_FUSED_UNARY = re.compile(r"[XFG]+")

KEYWORDS = frozenset({"X", "F", "G", "U", "true", "false"})


@dataclass(frozen=True)
class Token:
    kind: str  # "op", "ident" or "eof"
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise LtlSyntaxError(f"unknown token {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind == "op" or kind == "ident":
            if value == "&&":
                value = "&"
            elif value == "||":
                value = "|"
            elif value == "!":
                value = "~"
            col = pos - line_start + 1
            if kind == "ident" and len(value) > 1 and _FUSED_UNARY.fullmatch(value):
                # "GF p" is read as "G F p"
                tokens.extend(Token(kind, ch, line, col + k) for k, ch in enumerate(value))
            else:
                tokens.append(Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class TokenStream:
    """Cursor over tokens, shared by the LTL and SRML parsers."""

    def __init__(self, tokens: Sequence[Token], error=LtlSyntaxError):
        self.tokens = tokens
        self.pos = 0
        self.error = error

    @property
    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        return self.peek.text == text and self.peek.kind != "eof"

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.peek
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise self.error(f"{message}, found {found}", tok.line, tok.column)


def parse_formula(ts: TokenStream) -> Formula:
    """Parse one formula from ``ts``, stopping before any unexpected token."""
    return _parse_iff(ts)


def _parse_iff(ts: TokenStream) -> Formula:
    left = _parse_implies(ts)
    while ts.accept("<->"):
        left = iff(left, _parse_implies(ts))
    return left


def _parse_implies(ts: TokenStream) -> Formula:
    left = _parse_or(ts)
    if ts.accept("->"):
        return Implies(left, _parse_implies(ts))
    return left


def _parse_or(ts: TokenStream) -> Formula:
    left = _parse_and(ts)
    while ts.accept("|"):
        left = Or(left, _parse_and(ts))
    return left


def _parse_and(ts: TokenStream) -> Formula:
    left = _parse_until(ts)
    while ts.accept("&"):
        left = And(left, _parse_until(ts))
    return left


def _parse_until(ts: TokenStream) -> Formula:
    left = _parse_unary(ts)
    if ts.peek.kind == "ident" and ts.peek.text == "U":
        ts.advance()
        return Until(left, _parse_until(ts))
    return left


def _parse_unary(ts: TokenStream) -> Formula:
    tok = ts.peek
    if tok.kind == "op" and tok.text == "~":
        ts.advance()
        return Not(_parse_unary(ts))
    if tok.kind == "op" and tok.text == "(":
        ts.advance()
        inner = _parse_iff(ts)
        ts.expect(")")
        return inner
    if tok.kind == "ident":
        if tok.text in ("X", "F", "G"):
            ts.advance()
            operand = _parse_unary(ts)
            return {"X": Next, "F": Eventually, "G": Always}[tok.text](operand)
        if tok.text == "true":
            ts.advance()
            return TRUE
        if tok.text == "false":
            ts.advance()
            return FALSE
        if tok.text == "U" or tok.text.endswith("'"):
            ts.fail("expected a formula")
        ts.advance()
        return Atom(tok.text)
    ts.fail("expected a formula")


def parse_ltl(text: str) -> Formula:
    """Parse ``text`` in the surface grammar.

    Precedence, tightest first: ``~ X F G``, ``U`` (right associative), ``&``,
    ``|``, ``->`` (right associative), ``<->``.

    >>> parse_ltl("G F ~s1")
    Always(operand=Eventually(operand=Not(operand=Atom(name='s1'))))
    """
    ts = TokenStream(tokenize(text))
    f = parse_formula(ts)
    if ts.peek.kind != "eof":
        ts.fail("unexpected token")
    return f


# ---------------------------------------------------------------------------
# Normal forms


def to_core(f: Formula) -> Formula:
    """Rewrite into ``true, atom, ~, |, X, U`` only."""
    if isinstance(f, (Const, Atom)):
        return Not(TRUE) if f == FALSE else f
    if isinstance(f, Not):
        return Not(to_core(f.operand))
    if isinstance(f, Next):
        return Next(to_core(f.operand))
    if isinstance(f, Eventually):
        return Until(TRUE, to_core(f.operand))
    if isinstance(f, Always):
        return Not(Until(TRUE, Not(to_core(f.operand))))
    left, right = to_core(f.left), to_core(f.right)
    if isinstance(f, Or):
        return Or(left, right)
    if isinstance(f, And):
        return Not(Or(Not(left), Not(right)))
    if isinstance(f, Implies):
        return Or(Not(left), right)
    if isinstance(f, Until):
        return Until(left, right)
    if isinstance(f, Release):
        return Not(Until(Not(left), Not(right)))
    raise TypeError(f"not a formula: {f!r}")


def to_nnf(f: Formula) -> Formula:
    """Negation normal form; ``Implies`` is eliminated, ``F``/``G`` are kept."""
    return _nnf(f, False)


@lru_cache(maxsize=None)
def _nnf(f: Formula, neg: bool) -> Formula:
    if isinstance(f, Const):
        return Const(f.value != neg)
    if isinstance(f, Atom):
        return Not(f) if neg else f
    if isinstance(f, Not):
        return _nnf(f.operand, not neg)
    if isinstance(f, Next):
        return Next(_nnf(f.operand, neg))
    if isinstance(f, Eventually):
        return Always(_nnf(f.operand, True)) if neg else Eventually(_nnf(f.operand, False))
    if isinstance(f, Always):
        return Eventually(_nnf(f.operand, True)) if neg else Always(_nnf(f.operand, False))
    if isinstance(f, Implies):
        return _nnf(Or(Not(f.left), f.right), neg)
    left, right = _nnf(f.left, neg), _nnf(f.right, neg)
    if isinstance(f, And):
        return Or(left, right) if neg else And(left, right)
    if isinstance(f, Or):
        return And(left, right) if neg else Or(left, right)
    if isinstance(f, Until):
        return Release(left, right) if neg else Until(left, right)
    if isinstance(f, Release):
        return Until(left, right) if neg else Release(left, right)
    raise TypeError(f"not a formula: {f!r}")


def _flatten(f: Formula, kind: type) -> list[Formula]:
    if isinstance(f, kind):
        return _flatten(f.left, kind) + _flatten(f.right, kind)
    return [f]


def simplify(f: Formula) -> Formula:
    """Language-preserving rewrites on an NNF formula.

    Merges ``GF a | GF b`` into ``GF (a | b)``, ``FG a & FG b`` into
    ``FG (a & b)``, ``G a & G b`` into ``G (a & b)`` and ``F a | F b`` into
    ``F (a | b)``, and folds constants.  Smaller input keeps the tableau and
    the determinised automaton small.
    """
    return _simplify(f)


@lru_cache(maxsize=None)
def _simplify(f: Formula) -> Formula:
    if isinstance(f, (Const, Atom)):
        return f
    if isinstance(f, Not):
        inner = _simplify(f.operand)
        if isinstance(inner, Const):
            return Const(not inner.value)
        return Not(inner)
    if isinstance(f, (Next, Eventually, Always)):
        inner = _simplify(f.operand)
        if isinstance(inner, Const):
            return inner
        if isinstance(f, Eventually) and isinstance(inner, Eventually):
            return inner
        if isinstance(f, Always) and isinstance(inner, Always):
            return inner
        return type(f)(inner)
    if isinstance(f, (And, Or)):
        kind = type(f)
        parts: list[Formula] = []
        for p in _flatten(f, kind):
            p = _simplify(p)
            parts.extend(_flatten(p, kind))
        unit, zero = (TRUE, FALSE) if kind is And else (FALSE, TRUE)
        if zero in parts:
            return zero
        parts = [p for p in dict.fromkeys(parts) if p != unit]
        parts = _merge_temporal(parts, kind)
        if not parts:
            return unit
        if len(parts) == 1:
            return parts[0]
        return conjunction(parts) if kind is And else disjunction(parts)
    left, right = _simplify(f.left), _simplify(f.right)
    if isinstance(f, Until):
        if left == FALSE:
            return right
        if left == TRUE:
            return _simplify(Eventually(right))
        if isinstance(right, Const):
            return right
        return Until(left, right)
    if isinstance(f, Release):
        if left == TRUE:
            return right
        if left == FALSE:
            return _simplify(Always(right))
        if isinstance(right, Const):
            return right
        return Release(left, right)
    if isinstance(f, Implies):
        return Implies(left, right)
    raise TypeError(f"not a formula: {f!r}")


def _merge_temporal(parts: list[Formula], kind: type) -> list[Formula]:
    # kind And: G a & G b -> G(a&b), FG a & FG b -> FG(a&b)
    # kind Or:  F a | F b -> F(a|b), GF a | GF b -> GF(a|b)
    outer, inner = (Always, Eventually) if kind is And else (Eventually, Always)
    simple: list[Formula] = []
    nested: list[Formula] = []
    rest: list[Formula] = []
    for p in parts:
        if isinstance(p, inner) and isinstance(p.operand, outer):
            nested.append(p.operand.operand)
        elif isinstance(p, outer) and not isinstance(p.operand, inner):
            simple.append(p.operand)
        else:
            rest.append(p)
    join = conjunction if kind is And else disjunction
    if len(simple) > 1:
        rest.append(outer(_simplify(join(simple))))
    elif simple:
        rest.append(outer(simple[0]))
    if len(nested) > 1:
        rest.append(inner(outer(_simplify(join(nested)))))
    elif nested:
        rest.append(inner(outer(nested[0])))
    return rest


# ---------------------------------------------------------------------------
# Ultimately periodic words and evaluation


@dataclass(frozen=True)
class UltimatelyPeriodicWord:
    """The omega-word ``prefix . cycle^omega`` over label sets."""

    prefix: tuple[frozenset[str], ...]
    cycle: tuple[frozenset[str], ...]

    def __init__(self, prefix: Iterable[Iterable[str]], cycle: Iterable[Iterable[str]]):
        object.__setattr__(self, "prefix", tuple(frozenset(x) for x in prefix))
        object.__setattr__(self, "cycle", tuple(frozenset(x) for x in cycle))
        if not self.cycle:
            raise ValueError("cycle must be nonempty")

    def __len__(self) -> int:
        return len(self.prefix) + len(self.cycle)

    def letter(self, i: int) -> frozenset[str]:
        if i < len(self.prefix):
            return self.prefix[i]
        return self.cycle[(i - len(self.prefix)) % len(self.cycle)]

    def successor(self, i: int) -> int:
        """Position following ``i`` in the finite lasso representation."""
        return i + 1 if i + 1 < len(self) else len(self.prefix)

    def unroll(self, times: int = 1) -> UltimatelyPeriodicWord:
        return UltimatelyPeriodicWord(self.prefix + self.cycle * times, self.cycle)

    def same_word(self, other: UltimatelyPeriodicWord) -> bool:
        """Equality of the denoted omega-words, not of representations."""
        n = max(len(self.prefix), len(other.prefix)) + len(self.cycle) * len(other.cycle)
        return all(self.letter(i) == other.letter(i) for i in range(n))


def eval_lasso(f: Formula, w: UltimatelyPeriodicWord) -> bool:
    """Whether ``w`` satisfies ``f`` at position 0.

    Every subformula is evaluated on the finite lasso positions; ``U`` and
    ``F`` are least fixpoints and ``R`` and ``G`` greatest fixpoints over the
    successor function, iterated until stable.
    """
    n = len(w)
    succ = [w.successor(i) for i in range(n)]
    val: dict[Formula, list[bool]] = {}
    for g in subformulas(f):
        if isinstance(g, Const):
            v = [g.value] * n
        elif isinstance(g, Atom):
            v = [g.name in w.letter(i) for i in range(n)]
        elif isinstance(g, Not):
            v = [not x for x in val[g.operand]]
        elif isinstance(g, And):
            a, b = val[g.left], val[g.right]
            v = [x and y for x, y in zip(a, b)]
        elif isinstance(g, Or):
            a, b = val[g.left], val[g.right]
            v = [x or y for x, y in zip(a, b)]
        elif isinstance(g, Implies):
            a, b = val[g.left], val[g.right]
            v = [(not x) or y for x, y in zip(a, b)]
        elif isinstance(g, Next):
            a = val[g.operand]
            v = [a[succ[i]] for i in range(n)]
        elif isinstance(g, (Until, Eventually)):
            if isinstance(g, Until):
                a, b = val[g.left], val[g.right]
            else:
                a, b = [True] * n, val[g.operand]
            v = list(b)
            changed = True
            while changed:
                changed = False
                for i in range(n - 1, -1, -1):
                    if not v[i] and a[i] and v[succ[i]]:
                        v[i] = True
                        changed = True
        elif isinstance(g, (Release, Always)):
            if isinstance(g, Release):
                a, b = val[g.left], val[g.right]
            else:
                a, b = [False] * n, val[g.operand]
            v = list(b)
            changed = True
            while changed:
                changed = False
                for i in range(n - 1, -1, -1):
                    if v[i] and not a[i] and not v[succ[i]]:
                        v[i] = False
                        changed = True
        else:
            raise TypeError(f"not a formula: {g!r}")
        val[g] = v
    return val[f][0]


def eval_propositional(f: Formula, label: frozenset[str] | set[str]) -> bool:
    """Evaluate a formula without temporal operators on one label set."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        return f.name in label
    if isinstance(f, Not):
        return not eval_propositional(f.operand, label)
    if isinstance(f, And):
        return eval_propositional(f.left, label) and eval_propositional(f.right, label)
    if isinstance(f, Or):
        return eval_propositional(f.left, label) or eval_propositional(f.right, label)
    if isinstance(f, Implies):
        return (not eval_propositional(f.left, label)) or eval_propositional(f.right, label)
    raise ValueError(f"temporal operator in propositional context: {f}")
