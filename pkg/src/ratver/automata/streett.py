"""Streett conditions and emptiness checking on explicit graphs."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import networkx as nx


@dataclass(frozen=True)
class StreettCondition:
    """Pairs ``(E, C)``: a cycle is good iff for each pair it avoids E or meets C."""

    pairs: tuple[tuple[frozenset, frozenset], ...] = ()

    def __add__(self, other: "StreettCondition") -> "StreettCondition":
        return StreettCondition(self.pairs + other.pairs)

    def holds_on(self, inf: Iterable[Hashable]) -> bool:
        inf = set(inf)
        return all(not (inf & e) or bool(inf & c) for e, c in self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)


def parity_to_streett(priorities: Mapping[Hashable, int]) -> StreettCondition:
    """Streett pairs equivalent to min-even parity acceptance.

    One pair per odd priority ``p`` that occurs: E = states of priority ``p``,
    C = states of smaller even priority.
    """
    by_priority: dict[int, set] = {}
    for v, p in priorities.items():
        by_priority.setdefault(p, set()).add(v)
    pairs = []
    for p in sorted(by_priority):
        if p % 2 == 1:
            good = frozenset(v for q, vs in by_priority.items() if q % 2 == 0 and q < p for v in vs)
            pairs.append((frozenset(by_priority[p]), good))
    return StreettCondition(tuple(pairs))


@dataclass
class GraphLasso:
    """Vertex lasso: ``prefix`` then ``cycle`` repeated forever."""

    prefix: list = field(default_factory=list)
    cycle: list = field(default_factory=list)

    def vertices(self) -> list:
        return self.prefix + self.cycle


def _bfs_path(succ, sources: Iterable, targets: set, allowed: set | None = None) -> list | None:
    """Shortest path from any source to any target; inclusive at both ends."""
    parent: dict = {}
    queue = deque()
    for s in sources:
        if s not in parent:
            parent[s] = None
            queue.append(s)
    while queue:
        v = queue.popleft()
        if v in targets:
            path = [v]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return path[::-1]
        for w in succ(v):
            if allowed is not None and w not in allowed:
                continue
            if w not in parent:
                parent[w] = v
                queue.append(w)
    return None


def _good_component(graph: nx.DiGraph, nodes: set, cond: StreettCondition):
    """Find a strongly connected subset of ``nodes`` satisfying ``cond``."""
    sub = graph.subgraph(nodes)
    for scc in sorted(nx.strongly_connected_components(sub), key=min):
        if len(scc) == 1:
            (v,) = scc
            if not sub.has_edge(v, v):
                continue
        bad = set()
        for e, c in cond.pairs:
            if scc & e and not scc & c:
                bad |= scc & e
        if not bad:
            return scc
        found = _good_component(graph, scc - bad, cond)
        if found is not None:
            return found
    return None


def streett_emptiness(
    successors: Mapping[Hashable, Sequence[Hashable]],
    initial: Hashable,
    cond: StreettCondition,
) -> GraphLasso | None:
    """Return a lasso from ``initial`` whose cycle satisfies ``cond``, or None.

    ``successors`` maps each vertex to its successor list.  Vertices must be
    sortable so that witnesses are reproducible.
    """
    graph = nx.DiGraph()
    graph.add_node(initial)
    seen = {initial}
    stack = [initial]
    while stack:
        v = stack.pop()
        for w in successors.get(v, ()):
            graph.add_edge(v, w)
            if w not in seen:
                seen.add(w)
                stack.append(w)
    comp = _good_component(graph, seen, cond)
    if comp is None:
        return None

    def succ(v):
        return sorted(graph.successors(v))

    anchor = min(comp)
    prefix = _bfs_path(succ, [initial], {anchor})
    assert prefix is not None
    targets = []
    for e, c in cond.pairs:
        hit = comp & c
        if hit and not any(t in c for t in targets):
            targets.append(min(hit))
    cycle = [anchor]
    cur = anchor
    for t in targets:
        if t == cur:
            continue
        path = _bfs_path(lambda v: [w for w in succ(v) if w in comp], [cur], {t})
        cycle.extend(path[1:])
        cur = t
    # close the cycle back at the anchor with at least one step
    back = _bfs_path(
        lambda v: [w for w in succ(v) if w in comp],
        [w for w in succ(cur) if w in comp],
        {anchor},
    )
    cycle.extend(back[:-1])
    return GraphLasso(prefix[:-1], cycle)
