"""LTL to nondeterministic Buchi automata by tableau expansion.

States are sets of NNF obligations.  Expanding a state yields covers: a
propositional guard on the current letter, the obligations for the next
step, and the eventualities postponed on this transition.  The resulting
transition-based generalized Buchi automaton is degeneralized with a level
counter into a state-based one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

import networkx as nx

from ..ltl import (
    FALSE,
    TRUE,
    Always,
    And,
    Atom,
    Const,
    Eventually,
    Formula,
    Next,
    Not,
    Or,
    Release,
    UltimatelyPeriodicWord,
    Until,
    atoms,
    eval_propositional,
    is_propositional,
    simplify,
    subformulas,
    to_nnf,
)

MAX_ATOMS = 16


def letter_mask(label: Iterable[str], ap: tuple[str, ...]) -> int:
    """Encode the projection of ``label`` onto ``ap`` as a bit mask."""
    label = set(label)
    return sum(1 << i for i, a in enumerate(ap) if a in label)


def mask_letter(mask: int, ap: tuple[str, ...]) -> frozenset[str]:
    return frozenset(a for i, a in enumerate(ap) if mask >> i & 1)


@dataclass
class NondeterministicBuchiAutomaton:
    """State-based NBW over letters ``2^atoms``.

    ``edges[q]`` lists ``(letters, q')`` pairs where ``letters`` is a bit set
    over letter masks (bit ``m`` set iff letter ``m`` enables the edge).
    """

    atoms: tuple[str, ...]
    initial: frozenset[int]
    edges: list[list[tuple[int, int]]]
    accepting: frozenset[int]
    names: list[str] = field(default_factory=list)

    @property
    def n_states(self) -> int:
        return len(self.edges)

    @property
    def n_letters(self) -> int:
        return 1 << len(self.atoms)

    def successors(self, q: int, letter: int) -> frozenset[int]:
        return frozenset(t for bits, t in self.edges[q] if bits >> letter & 1)

    def successor_table(self) -> list[list[frozenset[int]]]:
        return [[self.successors(q, m) for m in range(self.n_letters)] for q in range(self.n_states)]

    def accepts(self, word: UltimatelyPeriodicWord) -> bool:
        return nbw_accepts_lasso(self, word)


def nbw_accepts_lasso(nbw: NondeterministicBuchiAutomaton, word: UltimatelyPeriodicWord) -> bool:
    """Membership by cycle search in the product of ``nbw`` with the lasso."""
    n = len(word)
    masks = [letter_mask(word.letter(i), nbw.atoms) for i in range(n)]
    graph = nx.DiGraph()
    start = [(q, 0) for q in nbw.initial]
    graph.add_nodes_from(start)
    stack = list(start)
    seen = set(start)
    while stack:
        q, i = stack.pop()
        j = word.successor(i)
        for t in nbw.successors(q, masks[i]):
            node = (t, j)
            graph.add_edge((q, i), node)
            if node not in seen:
                seen.add(node)
                stack.append(node)
    for scc in nx.strongly_connected_components(graph):
        if len(scc) == 1:
            (v,) = scc
            if not graph.has_edge(v, v):
                continue
        if any(q in nbw.accepting for q, _ in scc):
            return True
    return False


# ---------------------------------------------------------------------------
# Tableau


@dataclass(frozen=True)
class _Cover:
    guard: frozenset[Formula]
    nexts: frozenset[Formula]
    postponed: frozenset[Formula]


def _expand(obligations: frozenset[Formula]) -> list[_Cover]:
    covers: list[_Cover] = []

    def go(todo: list[Formula], done: frozenset, guard: frozenset, nexts: frozenset, post: frozenset):
        while todo:
            f = todo.pop()
            if f in done:
                continue
            done = done | {f}
            if isinstance(f, Const):
                if not f.value:
                    return
                continue
            if is_propositional(f):
                guard = guard | {f}
                continue
            if isinstance(f, And):
                todo.extend((f.right, f.left))
            elif isinstance(f, Or):
                go(todo + [f.right], done, guard, nexts, post)
                todo.append(f.left)
            elif isinstance(f, Next):
                nexts = nexts | {f.operand}
            elif isinstance(f, Always):
                todo.append(f.operand)
                nexts = nexts | {f}
            elif isinstance(f, Eventually):
                go(todo + [f.operand], done, guard, nexts, post)
                nexts = nexts | {f}
                post = post | {f}
            elif isinstance(f, Until):
                go(todo + [f.right], done, guard, nexts, post)
                todo.append(f.left)
                nexts = nexts | {f}
                post = post | {f}
            elif isinstance(f, Release):
                go(todo + [f.right, f.left], done, guard, nexts, post)
                todo.append(f.right)
                nexts = nexts | {f}
            else:
                raise TypeError(f"formula not in NNF: {f}")
        covers.append(_Cover(guard, nexts, post))

    go(sorted(obligations, key=repr), frozenset(), frozenset(), frozenset(), frozenset())
    return covers


def _prune_dominated(covers: list[tuple[int, _Cover]]) -> list[tuple[int, _Cover]]:
    # (letters, cover) is redundant if another cover allows a superset of
    # letters with fewer obligations and fewer postponed eventualities
    kept: list[tuple[int, _Cover]] = []
    for i, (bits, c) in enumerate(covers):
        dominated = False
        for j, (obits, o) in enumerate(covers):
            if i == j:
                continue
            if bits & ~obits == 0 and o.nexts <= c.nexts and o.postponed <= c.postponed:
                strict = (obits, o.nexts, o.postponed) != (bits, c.nexts, c.postponed)
                if strict or j < i:
                    dominated = True
                    break
        if not dominated:
            kept.append((bits, c))
    return kept


def ltl_to_nbw(f: Formula) -> NondeterministicBuchiAutomaton:
    """Build an NBW accepting exactly the models of ``f``.

    The alphabet is ``2^atoms(f)``; atoms outside ``f`` are ignored by
    projecting labels.
    """
    return _ltl_to_nbw(simplify(to_nnf(f)))


@lru_cache(maxsize=256)
def _ltl_to_nbw(f: Formula) -> NondeterministicBuchiAutomaton:
    ap = tuple(sorted(atoms(f)))
    if len(ap) > MAX_ATOMS:
        raise ValueError(f"too many atoms in formula ({len(ap)} > {MAX_ATOMS})")
    n_letters = 1 << len(ap)
    all_letters = (1 << n_letters) - 1

    guard_bits: dict[Formula, int] = {}

    def bits_of(g: Formula) -> int:
        if g not in guard_bits:
            out = 0
            for m in range(n_letters):
                if eval_propositional(g, mask_letter(m, ap)):
                    out |= 1 << m
            guard_bits[g] = out
        return guard_bits[g]

    eventualities = sorted(
        (g for g in subformulas(f) if isinstance(g, (Until, Eventually))), key=repr
    )
    k = len(eventualities)

    # transition-based generalized automaton over obligation sets
    init = frozenset([f]) if f != TRUE else frozenset()
    index: dict[frozenset, int] = {init: 0}
    order = [init]
    tgba: list[list[tuple[int, int, frozenset[int]]]] = []
    i = 0
    while i < len(order):
        state = order[i]
        i += 1
        raw = []
        for c in _expand(state):
            bits = all_letters
            for g in c.guard:
                bits &= bits_of(g)
            if bits:
                raw.append((bits, c))
        row = []
        for bits, c in _prune_dominated(raw):
            if c.nexts not in index:
                index[c.nexts] = len(order)
                order.append(c.nexts)
            acc = frozenset(n for n, u in enumerate(eventualities) if u not in c.postponed)
            row.append((bits, index[c.nexts], acc))
        tgba.append(row)

    # degeneralize: state (s, level), accepting iff level == k
    def step_level(level: int, acc: frozenset[int]) -> int:
        level = 0 if level == k else level
        while level < k and level in acc:
            level += 1
        return level

    start_level = k  # so the first transition starts counting at 0
    dindex: dict[tuple[int, int], int] = {}
    dorder: list[tuple[int, int]] = []

    def intern(node: tuple[int, int]) -> int:
        if node not in dindex:
            dindex[node] = len(dorder)
            dorder.append(node)
        return dindex[node]

    intern((0, start_level))
    dedges: list[list[tuple[int, int]]] = []
    j = 0
    while j < len(dorder):
        s, level = dorder[j]
        j += 1
        row = []
        for bits, t, acc in tgba[s]:
            row.append((bits, intern((t, step_level(level, acc)))))
        dedges.append(row)
    accepting = {q for q, (_, level) in enumerate(dorder) if level == k}
    names = [
        "{" + ", ".join(sorted(str(g) for g in order[s])) + f"}}/{level}" for s, level in dorder
    ]
    nbw = NondeterministicBuchiAutomaton(ap, frozenset([0]), dedges, frozenset(accepting), names)
    return _trim(nbw)


def _trim(nbw: NondeterministicBuchiAutomaton) -> NondeterministicBuchiAutomaton:
    """Drop states that cannot reach an accepting cycle."""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(nbw.n_states))
    for q, row in enumerate(nbw.edges):
        for bits, t in row:
            if bits:
                graph.add_edge(q, t)
    good: set[int] = set()
    for scc in nx.strongly_connected_components(graph):
        nontrivial = len(scc) > 1 or any(graph.has_edge(v, v) for v in scc)
        if nontrivial and scc & nbw.accepting:
            good |= scc
    live: set[int] = set(good)
    for v in good:
        live |= nx.ancestors(graph, v)
    reach = set(nbw.initial)
    for q in nbw.initial:
        reach |= nx.descendants(graph, q)
    keep = sorted(live & reach)
    remap = {q: n for n, q in enumerate(keep)}
    edges = [[(bits, remap[t]) for bits, t in nbw.edges[q] if t in remap] for q in keep]
    return NondeterministicBuchiAutomaton(
        nbw.atoms,
        frozenset(remap[q] for q in nbw.initial if q in remap),
        edges,
        frozenset(remap[q] for q in nbw.accepting if q in remap),
        [nbw.names[q] for q in keep] if nbw.names else [],
    )
