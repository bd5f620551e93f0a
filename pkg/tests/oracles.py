"""Independent reference procedures used to check the library.

None of these share code with the algorithms they check beyond the data
types; they favour obviousness over speed.
"""
from __future__ import annotations

import itertools
from collections import deque

import networkx as nx

from ratver.automata.streett import StreettCondition
from ratver.game import ParityGame
from ratver.solver import TurnBasedParityGame

# ---------------------------------------------------------------------------
# Parity games


def nested_fixpoint_win0(g: TurnBasedParityGame) -> set[int]:
    """Player 0's winning region via the alternating fixpoint formula.

    For min-parity with priorities 0..d:
    W0 = nu Z0. mu Z1. nu Z2 ... (union over i of P_i & cpre0(Z_i)).
    """
    n = g.n_vertices
    top = max(g.priority) if n else 0
    layers = [{v for v in range(n) if g.priority[v] == i} for i in range(top + 1)]

    def cpre0(z: set[int]) -> set[int]:
        out = set()
        for v in range(n):
            succ = g.successors[v]
            if g.owner[v] == 0 and any(w in z for w in succ):
                out.add(v)
            if g.owner[v] == 1 and all(w in z for w in succ):
                out.add(v)
        return out

    def level(i: int, env: list[set[int]]) -> set[int]:
        if i > top:
            result = set()
            for k in range(top + 1):
                result |= layers[k] & cpre0(env[k])
            return result
        z = set(range(n)) if i % 2 == 0 else set()
        while True:
            nz = level(i + 1, env + [z])
            if nz == z:
                return z
            z = nz

    return level(0, [])


def memoryless_win0(g: TurnBasedParityGame) -> set[int]:
    """Brute force over memoryless strategy pairs (memoryless determinacy)."""
    n = g.n_vertices
    v0 = [v for v in range(n) if g.owner[v] == 0]
    v1 = [v for v in range(n) if g.owner[v] == 1]
    win = set()
    for c0 in itertools.product(*[g.successors[v] for v in v0]):
        ok = [True] * n
        for c1 in itertools.product(*[g.successors[v] for v in v1]):
            nxt = dict(zip(v0, c0))
            nxt.update(zip(v1, c1))
            for v in range(n):
                seen = []
                x = v
                while x not in seen:
                    seen.append(x)
                    x = nxt[x]
                loop = seen[seen.index(x):]
                if min(g.priority[y] for y in loop) % 2:
                    ok[v] = False
        win |= {v for v in range(n) if ok[v]}
    return win


# ---------------------------------------------------------------------------
# Graphs with Streett conditions


def strongly_connected_subsets(succ: dict, vertices) -> list[frozenset]:
    """Every nonempty vertex set that some closed walk visits exactly."""
    vertices = sorted(vertices)
    out = []
    for r in range(1, len(vertices) + 1):
        for subset in itertools.combinations(vertices, r):
            s = set(subset)
            g = nx.DiGraph()
            g.add_nodes_from(s)
            g.add_edges_from((v, w) for v in s for w in succ.get(v, ()) if w in s)
            if g.number_of_edges() and nx.is_strongly_connected(g):
                out.append(frozenset(s))
    return out


def streett_nonempty_bruteforce(succ: dict, initial, cond: StreettCondition) -> bool:
    reach = {initial}
    queue = deque([initial])
    while queue:
        v = queue.popleft()
        for w in succ.get(v, ()):
            if w not in reach:
                reach.add(w)
                queue.append(w)
    return any(cond.holds_on(s) for s in strongly_connected_subsets(succ, reach))


def replay_lasso(succ: dict, initial, lasso, cond: StreettCondition) -> bool:
    walk = lasso.prefix + lasso.cycle
    if not walk or walk[0] != initial:
        return False
    for k, v in enumerate(walk):
        nxt = walk[k + 1] if k + 1 < len(walk) else lasso.cycle[0]
        if nxt not in succ.get(v, ()):
            return False
    return cond.holds_on(lasso.cycle)


# ---------------------------------------------------------------------------
# Nash equilibria on a product parity game


def local_sequentialisation(pg: ParityGame, j: int) -> tuple[TurnBasedParityGame, int]:
    """Coalition picks the others' actions, then ``j`` answers."""
    m = pg.structure
    n = m.n_states
    owner, succ, prio = [0] * n, [[] for _ in range(n)], [pg.priorities[j][s] + 1 for s in range(n)]
    for s in range(n):
        others = [m.available[s][i] if i != j else (None,) for i in range(m.n_players)]
        for partial in itertools.product(*others):
            v = len(owner)
            owner.append(1)
            prio.append(pg.priorities[j][s] + 1)
            succ[s].append(v)
            targets = set()
            for a in m.available[s][j]:
                joint = tuple(a if i == j else partial[i] for i in range(m.n_players))
                targets.add(m.transitions[s][joint])
            succ.append(sorted(targets))
    return TurnBasedParityGame(owner, succ, prio), n


def local_punishment(pg: ParityGame, j: int) -> set[int]:
    game, n = local_sequentialisation(pg, j)
    return {v for v in nested_fixpoint_win0(game) if v < n}


def allowed_graph(pg: ParityGame, losers, pun: dict[int, set[int]]) -> dict[int, list[int]]:
    """Edges of joint actions where every loser deviation stays punishable."""
    m = pg.structure
    region = set(range(m.n_states))
    for j in losers:
        region &= pun[j]
    succ = {}
    for s in region:
        out = set()
        for joint, t in m.transitions[s].items():
            ok = True
            for j in losers:
                for a in m.available[s][j]:
                    dev = joint[:j] + (a,) + joint[j + 1 :]
                    if m.transitions[s][dev] not in pun[j]:
                        ok = False
            if ok:
                out.add(t)
        succ[s] = sorted(out)
    return succ


def good_cycle_by_minima(succ: dict, initial, priority_lists) -> list[int] | None:
    """A vertex set of a closed walk whose minimum under each list is even.

    Guess the minimum ``e_i`` for each list, keep vertices with all
    priorities at least their guess, and look for a nontrivial SCC hitting
    every guessed minimum.
    """
    if initial not in succ:
        return None
    reach = {initial}
    queue = deque([initial])
    while queue:
        v = queue.popleft()
        for w in succ.get(v, ()):
            if w not in reach and w in succ:
                reach.add(w)
                queue.append(w)
    evens = [sorted({p[v] for v in reach if p[v] % 2 == 0}) for p in priority_lists]
    for guess in itertools.product(*evens) if priority_lists else [()]:
        keep = [v for v in reach if all(p[v] >= e for p, e in zip(priority_lists, guess))]
        g = nx.DiGraph()
        g.add_nodes_from(keep)
        g.add_edges_from((v, w) for v in keep for w in succ[v] if w in keep)
        for scc in nx.strongly_connected_components(g):
            if len(scc) == 1 and not g.has_edge(next(iter(scc)), next(iter(scc))):
                continue
            if all(any(p[v] == e for v in scc) for p, e in zip(priority_lists, guess)):
                return sorted(scc)
    return None


def ne_exists_oracle(pg: ParityGame) -> tuple[bool, tuple[int, ...] | None]:
    m = pg.structure
    pun = {j: local_punishment(pg, j) for j in range(m.n_players)}
    for r in range(m.n_players, -1, -1):
        for winners in itertools.combinations(range(m.n_players), r):
            losers = [j for j in range(m.n_players) if j not in winners]
            succ = allowed_graph(pg, losers, pun)
            if good_cycle_by_minima(succ, m.initial, [pg.priorities[i] for i in winners]) is not None:
                return True, winners
    return False, None


def e_nash_oracle(pg: ParityGame, query) -> bool:
    """Like ``ne_exists_oracle`` but the cycle must also be accepted by ``query``."""
    from ratver.automata.nbw import letter_mask

    m = pg.structure
    pun = {j: local_punishment(pg, j) for j in range(m.n_players)}
    masks = [letter_mask(pg.labels[s], query.atoms) for s in range(m.n_states)]
    for r in range(m.n_players, -1, -1):
        for winners in itertools.combinations(range(m.n_players), r):
            losers = [j for j in range(m.n_players) if j not in winners]
            base = allowed_graph(pg, losers, pun)
            vertices = [(s, q) for s in base for q in range(query.n_states)]
            ids = {v: k for k, v in enumerate(vertices)}
            succ = {
                ids[(s, q)]: sorted({ids[(t, query.delta[q][masks[s]])] for t in base[s]})
                for s, q in vertices
            }
            lists = [[pg.priorities[i][s] for s, _ in vertices] for i in winners]
            lists.append([query.priority[q] for _, q in vertices])
            start = ids.get((m.initial, query.initial))
            if start is not None and good_cycle_by_minima(succ, start, lists) is not None:
                return True
    return False


# ---------------------------------------------------------------------------
# Grid world


def grid_safe_run_exists(layout, start_a=(0, 0), start_b=(3, 3)) -> bool:
    """Is there an infinite collision-free joint walk in which A visits B's
    start and B visits A's start, each at least once after moving?

    Neither agent can block the other, so losers are never punishable and
    every equilibrium must let both agents win; this search is therefore an
    exact answer to E-Nash with the safety query.
    """
    from ratver.cases import grid_moves

    moves = grid_moves(layout)
    goal_a, goal_b = start_b, start_a
    start = (start_a, start_b, False, False)
    graph = nx.DiGraph()
    graph.add_node(start)
    queue = deque([start])
    while queue:
        v = queue.popleft()
        a, b, done_a, done_b = v
        # an agent with no free neighbour stays put (its module idles)
        for na in moves[a] or [a]:
            for nb in moves[b] or [b]:
                if na == nb:
                    continue
                w = (na, nb, done_a or na == goal_a, done_b or nb == goal_b)
                if w not in graph:
                    queue.append(w)
                graph.add_edge(v, w)
    for scc in nx.strongly_connected_components(graph):
        v = next(iter(scc))
        if v[2] and v[3] and (len(scc) > 1 or graph.has_edge(v, v)):
            return True
    return False
