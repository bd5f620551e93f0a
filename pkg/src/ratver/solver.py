"""Two-player turn-based parity games: Zielonka's algorithm and punishment.

Priorities follow the min-parity convention: Player 0 wins a play iff the
least priority visited infinitely often is even.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Iterable

from .game import Joint, ParityGame

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


@dataclass
class TurnBasedParityGame:
    owner: list[int]
    successors: list[list[int]]
    priority: list[int]
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.predecessors: list[list[int]] = [[] for _ in self.owner]
        for v, succ in enumerate(self.successors):
            if not succ:
                raise ValueError(f"vertex {v} has no successor")
            for w in succ:
                self.predecessors[w].append(v)

    @property
    def n_vertices(self) -> int:
        return len(self.owner)

    def to_pgsolver(self) -> str:
        lines = [f"parity {self.n_vertices - 1};"]
        for v in range(self.n_vertices):
            name = self.names[v] if self.names else str(v)
            succ = ",".join(map(str, self.successors[v]))
            lines.append(f'{v} {self.priority[v]} {self.owner[v]} {succ} "{name}";')
        return "\n".join(lines) + "\n"


@dataclass
class WinningRegions:
    win0: frozenset[int]
    win1: frozenset[int]
    strat0: dict[int, int]
    strat1: dict[int, int]

    def winner(self, v: int) -> int:
        return 0 if v in self.win0 else 1

    def strategy(self, player: int) -> dict[int, int]:
        return self.strat0 if player == 0 else self.strat1


def attractor(
    g: TurnBasedParityGame,
    player: int,
    target: Iterable[int],
    within: set[int] | frozenset[int] | None = None,
) -> tuple[set[int], dict[int, int]]:
    """Vertices from which ``player`` forces a visit to ``target``.

    Returns the attractor and an attracting move for each of ``player``'s
    vertices outside the target.
    """
    arena = set(range(g.n_vertices)) if within is None else within
    attr = {v for v in target if v in arena}
    strategy: dict[int, int] = {}
    remaining = {}
    queue = sorted(attr)
    while queue:
        w = queue.pop()
        for v in g.predecessors[w]:
            if v not in arena or v in attr:
                continue
            if g.owner[v] == player:
                attr.add(v)
                strategy[v] = w
                queue.append(v)
            else:
                if v not in remaining:
                    remaining[v] = sum(1 for u in g.successors[v] if u in arena)
                remaining[v] -= 1
                if remaining[v] == 0:
                    attr.add(v)
                    queue.append(v)
    return attr, strategy


def zielonka(g: TurnBasedParityGame) -> WinningRegions:
    """Solve ``g``; strategies are memoryless, ties broken by lowest vertex id."""
    wins, strats = _solve(g, frozenset(range(g.n_vertices)))
    return WinningRegions(frozenset(wins[0]), frozenset(wins[1]), strats[0], strats[1])


def _solve(g: TurnBasedParityGame, arena: frozenset[int]):
    """Return ``([win0, win1], [strat0, strat1])`` for the subgame on ``arena``."""
    if not arena:
        return [set(), set()], [{}, {}]
    p = min(g.priority[v] for v in arena)
    me, opp = p % 2, 1 - p % 2
    top = {v for v in arena if g.priority[v] == p}
    a, a_strat = attractor(g, me, top, arena)
    wins, strats = _solve(g, frozenset(arena - a))
    if not wins[opp]:
        strat = dict(strats[me])
        strat.update(a_strat)
        for v in sorted(top):
            if g.owner[v] == me:
                strat[v] = min(w for w in g.successors[v] if w in arena)
        out_w, out_s = [set(), set()], [{}, {}]
        out_w[me], out_s[me] = set(arena), strat
        return out_w, out_s
    b, b_strat = attractor(g, opp, wins[opp], arena)
    wins2, strats2 = _solve(g, frozenset(arena - b))
    opp_strat = dict(strats2[opp])
    opp_strat.update(strats[opp])
    opp_strat.update(b_strat)
    wins2[opp] = wins2[opp] | b
    strats2[opp] = opp_strat
    return wins2, strats2


def one_player_winner(
    g: TurnBasedParityGame, strategy: dict[int, int], fixed_player: int
) -> set[int]:
    """Vertices from which the opponent of ``fixed_player`` can win against ``strategy``.

    Fixing ``strategy`` leaves a graph; the opponent wins from a vertex iff it
    reaches a cycle whose least priority has the opponent's parity.
    """
    import networkx as nx

    graph = nx.DiGraph()
    graph.add_nodes_from(range(g.n_vertices))
    for v in range(g.n_vertices):
        if g.owner[v] == fixed_player and v in strategy:
            graph.add_edge(v, strategy[v])
        else:
            for w in g.successors[v]:
                graph.add_edge(v, w)
    opp = 1 - fixed_player
    good: set[int] = set()
    # for each priority d of the opponent's parity, look for cycles with min d
    for d in sorted({p for p in g.priority if p % 2 == opp}):
        allowed = [v for v in range(g.n_vertices) if g.priority[v] >= d]
        sub = graph.subgraph(allowed)
        for scc in nx.strongly_connected_components(sub):
            nontrivial = len(scc) > 1 or any(sub.has_edge(v, v) for v in scc)
            if nontrivial and any(g.priority[v] == d for v in scc):
                good |= scc
    result = set(good)
    for v in good:
        result |= nx.ancestors(graph, v)
    return result


def certify(g: TurnBasedParityGame, regions: WinningRegions) -> bool:
    """Check both strategies: the opponent cannot escape or win inside a region."""
    for player, region, strat in ((0, regions.win0, regions.strat0), (1, regions.win1, regions.strat1)):
        for v in region:
            if g.owner[v] == player:
                if v not in strat or strat[v] not in region or strat[v] not in g.successors[v]:
                    return False
            elif any(w not in region for w in g.successors[v]):
                return False
        counter = one_player_winner(g, strat, player)
        if counter & region:
            return False
    return True


# ---------------------------------------------------------------------------
# Sequentialisation and punishment


@dataclass
class Sequentialisation:
    """Turn-based game for player ``j``: Player 0 is the coalition, Player 1 is ``j``.

    Vertices ``0..n-1`` are the parity-game states; the rest are pairs
    ``(state, partial profile of the others)`` listed in ``choices``.
    """

    game: TurnBasedParityGame
    player: int
    n_states: int
    choices: list[tuple[int, Joint]]


def sequentialise(pg: ParityGame, j: int) -> Sequentialisation:
    m = pg.structure
    n = m.n_states
    others = [i for i in range(m.n_players) if i != j]
    owner = [0] * n
    successors: list[list[int]] = [[] for _ in range(n)]
    priority = [pg.priorities[j][s] + 1 for s in range(n)]
    names = list(m.state_names)
    choices: list[tuple[int, Joint]] = []
    for s in range(n):
        partials = sorted({tuple(joint[i] for i in others) for joint in m.joint_actions(s)})
        for partial in partials:
            v = n + len(choices)
            choices.append((s, partial))
            owner.append(1)
            priority.append(pg.priorities[j][s] + 1)
            names.append(f"{m.state_names[s]}/{','.join(map(str, partial))}")
            successors[s].append(v)
            targets = []
            for a in m.available[s][j]:
                targets.append(m.transitions[s][_insert(partial, j, a)])
            successors.append(sorted(set(targets)))
    game = TurnBasedParityGame(owner, successors, priority, names)
    return Sequentialisation(game, j, n, choices)


def _insert(partial: Joint, j: int, a: int) -> Joint:
    return partial[:j] + (a,) + partial[j:]


@dataclass
class PunishmentResult:
    """States where the others can keep ``player`` from winning, and how."""

    player: int
    region: frozenset[int]
    strategy: dict[int, Joint]

    def action_for(self, s: int, i: int) -> int:
        """Action of coalition member ``i`` at ``s`` under the punishment."""
        partial = self.strategy[s]
        return partial[i if i < self.player else i - 1]


def punishment_region(pg: ParityGame, j: int) -> PunishmentResult:
    seq = sequentialise(pg, j)
    regions = zielonka(seq.game)
    n = seq.n_states
    region = frozenset(v for v in regions.win0 if v < n)
    strategy = {s: seq.choices[regions.strat0[s] - n][1] for s in region}
    return PunishmentResult(j, region, strategy)
