"""Deterministic parity automata and Safra-Piterman determinization.

Acceptance is min-parity: a run is accepting iff the least priority seen
infinitely often is even.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

import networkx as nx

from ..ltl import Formula, UltimatelyPeriodicWord, simplify, to_nnf
from .nbw import NondeterministicBuchiAutomaton, letter_mask, ltl_to_nbw

DEFAULT_MAX_STATES = 10**6


class AutomatonTooLarge(RuntimeError):
    pass


@dataclass
class DeterministicParityAutomaton:
    """Complete DPW; ``delta[q][m]`` is the successor of ``q`` on letter mask ``m``."""

    atoms: tuple[str, ...]
    initial: int
    delta: list[list[int]]
    priority: list[int]
    names: list[str] = field(default_factory=list)

    @property
    def n_states(self) -> int:
        return len(self.delta)

    def step(self, q: int, label: Iterable[str]) -> int:
        return self.delta[q][letter_mask(label, self.atoms)]

    def accepts(self, word: UltimatelyPeriodicWord) -> bool:
        return dpw_accepts_lasso(self, word)


def dpw_accepts_lasso(d: DeterministicParityAutomaton, w: UltimatelyPeriodicWord) -> bool:
    q = d.initial
    for letter in w.prefix:
        q = d.step(q, letter)
    # run over the cycle until (state, cycle position) repeats
    seen: dict[tuple[int, int], int] = {}
    trace: list[int] = []
    i = 0
    while (q, i) not in seen:
        seen[(q, i)] = len(trace)
        trace.append(q)
        q = d.step(q, w.cycle[i])
        i = (i + 1) % len(w.cycle)
    loop = trace[seen[(q, i)]:]
    return min(d.priority[s] for s in loop) % 2 == 0


# ---------------------------------------------------------------------------
# Safra trees with compact (age-ordered) names
#
# A tree is a nested tuple ``(name, label, children)``.  Names are 1..n and
# respect age: a node is older than every node with a larger name.


class _Node:
    __slots__ = ("name", "label", "children", "fresh")

    def __init__(self, name: int, label: frozenset, children: list, fresh: bool = False):
        self.name = name
        self.label = label
        self.children = children
        self.fresh = fresh


def _thaw(tree) -> _Node:
    name, label, kids = tree
    return _Node(name, label, [_thaw(k) for k in kids])


def _freeze(node: _Node, rename: dict[int, int]):
    return (rename[node.name], node.label, tuple(_freeze(k, rename) for k in node.children))


def _walk(node: _Node):
    yield node
    for k in node.children:
        yield from _walk(k)


def _safra_step(tree, letter: int, post, accepting: frozenset):
    """One transition on ``letter``; returns ``(tree', priority)``.

    ``tree'`` is None once every run has died.  Priorities: ``2i`` when the
    node named ``i`` turns green, ``2i-1`` when a pre-existing node named
    ``i`` is deleted; the minimum is reported (1 for the dead tree).
    """
    root = _thaw(tree)
    nodes = list(_walk(root))
    next_name = max(n.name for n in nodes) + 1

    # spawn children for accepting states
    for v in nodes:
        acc = v.label & accepting
        if acc:
            v.children.append(_Node(next_name, acc, [], fresh=True))
            next_name += 1

    # powerset step
    for v in _walk(root):
        v.label = post(v.label, letter)

    # horizontal merge: a state stays only in the oldest branch holding it
    def hmerge(v: _Node, allowed: frozenset):
        v.label = v.label & allowed
        claimed: frozenset = frozenset()
        for k in v.children:
            hmerge(k, v.label - claimed)
            claimed = claimed | k.label

    hmerge(root, root.label)

    removed: list[int] = []

    def drop(v: _Node):
        for u in _walk(v):
            if not u.fresh:
                removed.append(u.name)

    def prune(v: _Node):
        keep = []
        for k in v.children:
            if k.label:
                prune(k)
                keep.append(k)
            else:
                drop(k)
        v.children = keep

    if not root.label:
        return None, 1
    prune(root)

    green: list[int] = []

    def vmerge(v: _Node):
        if v.children:
            union = frozenset().union(*(k.label for k in v.children))
            if union == v.label:
                for k in v.children:
                    drop(k)
                v.children = []
                if not v.fresh:
                    green.append(v.name)
                return
            for k in v.children:
                vmerge(k)

    vmerge(root)

    candidates = [2 * g for g in green] + [2 * r - 1 for r in removed]
    priority = min(candidates) if candidates else None
    names = sorted(u.name for u in _walk(root))
    rename = {old: new for new, old in enumerate(names, start=1)}
    return _freeze(root, rename), priority


def nbw_to_dpw(
    nbw: NondeterministicBuchiAutomaton, max_states: int = DEFAULT_MAX_STATES
) -> DeterministicParityAutomaton:
    """Determinize with compact Safra trees (Piterman's construction).

    Transition priorities are moved into the target state, so a DPW state is
    a pair ``(tree, priority of the transition that entered it)``.
    """
    n_letters = nbw.n_letters
    table = nbw.successor_table()
    accepting = nbw.accepting
    neutral = 2 * (nbw.n_states + 1) + 1  # larger than any emitted priority

    post_cache: dict[tuple[frozenset, int], frozenset] = {}

    def post(label: frozenset, letter: int) -> frozenset:
        key = (label, letter)
        out = post_cache.get(key)
        if out is None:
            out = frozenset().union(*(table[q][letter] for q in label)) if label else frozenset()
            post_cache[key] = out
        return out

    if not nbw.initial or not accepting:
        return DeterministicParityAutomaton(nbw.atoms, 0, [[0] * n_letters], [1], ["dead"])

    start = ((1, nbw.initial, ()), neutral)
    index = {start: 0}
    order = [start]
    delta: list[list[int]] = []
    step_cache: dict = {}
    i = 0
    while i < len(order):
        tree, _ = order[i]
        i += 1
        row = []
        for m in range(n_letters):
            key = (tree, m)
            if key not in step_cache:
                step_cache[key] = _safra_step(tree, m, post, accepting) if tree else (None, 1)
            nxt, pr = step_cache[key]
            target = (nxt, neutral if pr is None else pr)
            if target not in index:
                if len(order) >= max_states:
                    raise AutomatonTooLarge(f"determinization exceeded {max_states} states")
                index[target] = len(order)
                order.append(target)
            row.append(index[target])
        delta.append(row)
    priority = [pr for _, pr in order]
    names = [f"{_tree_str(t)}:{pr}" for t, pr in order]
    dpw = DeterministicParityAutomaton(nbw.atoms, 0, delta, priority, names)
    return minimize(dpw)


def _tree_str(tree) -> str:
    if tree is None:
        return "()"
    name, label, kids = tree
    inner = "".join(_tree_str(k) for k in kids)
    return f"({name}:{sorted(label)}{inner})"


def normalize_priorities(priority: list[int]) -> list[int]:
    """Compress priorities to a contiguous range keeping order and parity."""
    values = sorted(set(priority))
    remap: dict[int, int] = {}
    cur = values[0] % 2
    prev_parity = values[0] % 2
    for v in values:
        if v % 2 != prev_parity:
            cur += 1
            prev_parity = v % 2
        remap[v] = cur
    return [remap[p] for p in priority]


def reduce_priorities(d: DeterministicParityAutomaton) -> list[int]:
    """Language-preserving priorities chosen to help minimization.

    Every cycle stays inside one SCC, so priorities are compressed per SCC.
    States on no cycle never matter and copy a successor's priority,
    filled in backwards from the SCCs they lead to.
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(range(d.n_states))
    graph.add_edges_from((q, t) for q, row in enumerate(d.delta) for t in row)
    cond = nx.condensation(graph)
    priority: list[int | None] = [None] * d.n_states
    for c in reversed(list(nx.topological_sort(cond))):
        members = sorted(cond.nodes[c]["members"])
        q = members[0]
        if len(members) == 1 and q not in d.delta[q]:
            priority[q] = priority[d.delta[q][0]]
            continue
        local = normalize_priorities([d.priority[v] for v in members])
        for v, p in zip(members, local):
            priority[v] = p
    return normalize_priorities(priority)


def minimize(d: DeterministicParityAutomaton) -> DeterministicParityAutomaton:
    """Quotient by the coarsest partition respecting priorities and successors.

    Repeats until stable, since merging states can expose new reductions.
    """
    while True:
        small = _moore(d)
        if small.n_states == d.n_states:
            return small
        d = small


def _moore(d: DeterministicParityAutomaton) -> DeterministicParityAutomaton:
    priority = reduce_priorities(d)
    n_letters = len(d.delta[0]) if d.delta else 0
    block = priority[:]
    n_blocks = len(set(block))
    while True:
        sigs: dict[tuple, int] = {}
        new_block = []
        for q in range(d.n_states):
            sig = (block[q],) + tuple(block[d.delta[q][m]] for m in range(n_letters))
            new_block.append(sigs.setdefault(sig, len(sigs)))
        if len(sigs) == n_blocks:
            block = new_block
            break
        block, n_blocks = new_block, len(sigs)
    # renumber blocks in BFS order from the initial state
    order: dict[int, int] = {}
    rep: dict[int, int] = {}
    for q in range(d.n_states):
        rep.setdefault(block[q], q)
    queue = [block[d.initial]]
    order[block[d.initial]] = 0
    while queue:
        b = queue.pop(0)
        q = rep[b]
        for m in range(n_letters):
            nb = block[d.delta[q][m]]
            if nb not in order:
                order[nb] = len(order)
                queue.append(nb)
    inv = sorted(order, key=order.get)
    delta = [[order[block[d.delta[rep[b]][m]]] for m in range(n_letters)] for b in inv]
    new_priority = normalize_priorities([priority[rep[b]] for b in inv])
    names = [d.names[rep[b]] for b in inv] if d.names else []
    return DeterministicParityAutomaton(d.atoms, 0, delta, new_priority, names)


def ltl_to_dpw(f: Formula, max_states: int = DEFAULT_MAX_STATES) -> DeterministicParityAutomaton:
    """DPW whose language is the set of models of ``f``."""
    return _ltl_to_dpw(simplify(to_nnf(f)), max_states)


@lru_cache(maxsize=256)
def _ltl_to_dpw(f: Formula, max_states: int) -> DeterministicParityAutomaton:
    return nbw_to_dpw(ltl_to_nbw(f), max_states)


def complement(d: DeterministicParityAutomaton) -> DeterministicParityAutomaton:
    return DeterministicParityAutomaton(
        d.atoms, d.initial, [row[:] for row in d.delta], [p + 1 for p in d.priority], list(d.names)
    )
