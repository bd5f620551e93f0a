"""Nash equilibrium existence, E-Nash and A-Nash via parity games.

For each candidate set W of winners (losers L = N \\ W) the parity game is
cut down to the states and joint actions that keep every loser inside its
punishment region; a Nash equilibrium with winners W exists iff some
reachable cycle of what remains satisfies every winner's parity condition.
"""
from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .automata.dpw import DEFAULT_MAX_STATES, DeterministicParityAutomaton, ltl_to_dpw
from .automata.nbw import letter_mask
from .automata.streett import StreettCondition, parity_to_streett, streett_emptiness
from .game import (
    ConcurrentGameStructure,
    Joint,
    Lasso,
    LtlGame,
    ParityGame,
    product_game,
)
from .ltl import (
    TRUE,
    Atom,
    Formula,
    Next,
    Not,
    Or,
    atoms,
    iff,
)
from .solver import PunishmentResult, punishment_region

log = logging.getLogger(__name__)


class InitialStateEliminated(Exception):
    """The initial state lies outside some loser's punishment region."""


@dataclass
class RestrictedArena:
    """Surviving states and, per state, the surviving joint actions."""

    initial: int
    actions: dict[int, list[Joint]]

    @property
    def states(self) -> frozenset[int]:
        return frozenset(self.actions)


def restrict_game(
    pg: ParityGame, losers: Sequence[int], pun: dict[int, PunishmentResult]
) -> RestrictedArena:
    m = pg.structure
    region = set(range(m.n_states))
    for j in losers:
        region &= pun[j].region
    if m.initial not in region:
        raise InitialStateEliminated(m.state_names[m.initial])
    actions: dict[int, list[Joint]] = {}
    stack = [m.initial]
    seen = {m.initial}
    while stack:
        s = stack.pop()
        kept = [joint for joint in m.transitions[s] if _secure(m, s, joint, losers, pun)]
        kept.sort()
        actions[s] = kept
        for joint in kept:
            t = m.transitions[s][joint]
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return RestrictedArena(m.initial, actions)


def _secure(m: ConcurrentGameStructure, s: int, joint: Joint, losers, pun) -> bool:
    for j in losers:
        region = pun[j].region
        for a in m.available[s][j]:
            dev = joint[:j] + (a,) + joint[j + 1 :]
            if m.transitions[s][dev] not in region:
                return False
    return True


def check_punishing_secure(pg: ParityGame, lasso: Lasso, j: int, pun: PunishmentResult) -> bool:
    """Every unilateral deviation by ``j`` along ``lasso`` lands in ``j``'s punishment region."""
    m = pg.structure
    for s, joint in lasso.steps:
        for a in m.available[s][j]:
            dev = joint[:j] + (a,) + joint[j + 1 :]
            if m.transitions[s][dev] not in pun.region:
                return False
    return True


@dataclass
class Stats:
    """Search effort; independent of ``jobs`` so output is reproducible.

    ``punishment_regions`` counts the losers whose regions the checked
    winner sets needed, not how many were computed speculatively.
    """

    product_states: int = 0
    subsets_checked: int = 0
    punishment_regions: int = 0

    def as_dict(self) -> dict:
        return {
            "product_states": self.product_states,
            "subsets_checked": self.subsets_checked,
            "punishment_regions": self.punishment_regions,
        }


def find_ne_for_winners(
    pg: ParityGame,
    winners: Sequence[int],
    pun: dict[int, PunishmentResult],
    query: DeterministicParityAutomaton | None = None,
) -> Lasso | None:
    """A punishing-secure lasso satisfying every winner (and ``query``), if any."""
    m = pg.structure
    losers = [j for j in range(m.n_players) if j not in winners]
    try:
        arena = restrict_game(pg, losers, pun)
    except InitialStateEliminated:
        return None

    if query is None:
        succ = {s: sorted({m.transitions[s][a] for a in acts}) for s, acts in arena.actions.items()}
        cond = StreettCondition()
        for i in winners:
            cond = cond + parity_to_streett({s: pg.priorities[i][s] for s in arena.actions})
        found = streett_emptiness(succ, arena.initial, cond)
        if found is None:
            return None
        return _attach_actions(m, arena, found.prefix, found.cycle)

    if pg.labels is None:
        raise ValueError("query automata need a labelled parity game")
    masks = {s: letter_mask(pg.labels[s], query.atoms) for s in arena.actions}
    start = (arena.initial, query.initial)
    succ: dict = {}
    stack = [start]
    seen = {start}
    while stack:
        s, q = stack.pop()
        nq = query.delta[q][masks[s]]
        out = sorted({(m.transitions[s][a], nq) for a in arena.actions[s]})
        succ[(s, q)] = out
        for v in out:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    cond = StreettCondition()
    for i in winners:
        cond = cond + parity_to_streett({v: pg.priorities[i][v[0]] for v in seen})
    cond = cond + parity_to_streett({v: query.priority[v[1]] for v in seen})
    found = streett_emptiness(succ, start, cond)
    if found is None:
        return None
    return _attach_actions(m, arena, [v[0] for v in found.prefix], [v[0] for v in found.cycle])


def _attach_actions(m, arena: RestrictedArena, prefix: list[int], cycle: list[int]) -> Lasso:
    states = prefix + cycle
    steps = []
    for k, s in enumerate(states):
        nxt = states[k + 1] if k + 1 < len(states) else cycle[0]
        joint = next(a for a in arena.actions[s] if m.transitions[s][a] == nxt)
        steps.append((s, joint))
    return Lasso(steps[: len(prefix)], steps[len(prefix) :])


# ---------------------------------------------------------------------------
# Verdicts


@dataclass
class Verdict:
    """Outcome of a decision procedure.

    ``prefix``/``cycle`` describe the witness on the input game as
    ``(state name, action names)`` pairs; ``witness`` is the same run on the
    parity game (not serialised).
    """

    answer: bool
    winners: tuple[str, ...] = ()
    prefix: tuple[tuple[str, tuple[str, ...]], ...] = ()
    cycle: tuple[tuple[str, tuple[str, ...]], ...] = ()
    stats: dict = field(default_factory=dict)
    witness: Lasso | None = field(default=None, compare=False, repr=False)
    winner_ids: tuple[int, ...] = field(default=(), compare=False, repr=False)
    parity_game: ParityGame | None = field(default=None, compare=False, repr=False)
    punishments: dict | None = field(default=None, compare=False, repr=False)

    def to_json(self) -> dict:
        lasso = None
        if self.cycle:
            lasso = {
                "prefix": [{"state": s, "actions": list(a)} for s, a in self.prefix],
                "cycle": [{"state": s, "actions": list(a)} for s, a in self.cycle],
            }
        return {
            "answer": "yes" if self.answer else "no",
            "winners": list(self.winners),
            "lasso": lasso,
            "stats": dict(self.stats),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Verdict":
        lasso = doc.get("lasso") or {"prefix": [], "cycle": []}

        def steps(key):
            return tuple((e["state"], tuple(e["actions"])) for e in lasso[key])

        return cls(
            answer=doc["answer"] == "yes",
            winners=tuple(doc.get("winners", ())),
            prefix=steps("prefix"),
            cycle=steps("cycle"),
            stats=dict(doc.get("stats", {})),
        )


def winner_sets(n: int):
    """Candidate winner sets: larger sets first, then lexicographic."""
    for size in range(n, -1, -1):
        yield from itertools.combinations(range(n), size)


class Engine:
    """Shared state for one game: goal automata, product, and cached punishments."""

    def __init__(
        self,
        g: LtlGame,
        max_states: int = DEFAULT_MAX_STATES,
        max_automaton: int = DEFAULT_MAX_STATES,
        jobs: int = 1,
    ):
        self.game = g
        self.jobs = max(1, jobs)
        self.max_automaton = max_automaton
        self.stats = Stats()
        dpws = [ltl_to_dpw(goal, max_automaton) for goal in g.goals]
        self.pg = product_game(g, dpws, max_states)
        self.stats.product_states = self.pg.structure.n_states
        self._pun: dict[int, PunishmentResult] = {}
        log.info("product game has %d states", self.pg.structure.n_states)

    def punishment(self, j: int) -> PunishmentResult:
        if j not in self._pun:
            self._pun[j] = punishment_region(self.pg, j)
        return self._pun[j]

    def _prepare(self, chunk) -> None:
        n = self.pg.structure.n_players
        missing = sorted({j for w in chunk for j in range(n) if j not in w} - set(self._pun))
        if self.jobs > 1 and len(missing) > 1:
            with ThreadPoolExecutor(self.jobs) as pool:
                for j, res in zip(missing, pool.map(lambda j: punishment_region(self.pg, j), missing)):
                    self._pun[j] = res
        for j in missing:
            self.punishment(j)

    def search(self, query: DeterministicParityAutomaton | None = None) -> Verdict:
        n = self.pg.structure.n_players
        candidates = list(winner_sets(n))
        needed: set[int] = set()
        for start in range(0, len(candidates), self.jobs):
            chunk = candidates[start : start + self.jobs]
            self._prepare(chunk)
            if len(chunk) > 1:
                with ThreadPoolExecutor(len(chunk)) as pool:
                    results = list(pool.map(lambda w: find_ne_for_winners(self.pg, w, self._pun, query), chunk))
            else:
                results = [find_ne_for_winners(self.pg, chunk[0], self._pun, query)]
            for winners, lasso in zip(chunk, results):
                self.stats.subsets_checked += 1
                needed |= {j for j in range(n) if j not in winners}
                self.stats.punishment_regions = len(needed)
                if lasso is not None:
                    return self._verdict(winners, lasso)
        return Verdict(False, stats=self.stats.as_dict(), parity_game=self.pg, punishments=self._pun)

    def _verdict(self, winners: tuple[int, ...], lasso: Lasso) -> Verdict:
        m = self.game.structure

        def project(steps):
            return tuple(
                (m.state_names[self.pg.base_state(s)], m.joint_names(joint)) for s, joint in steps
            )

        return Verdict(
            True,
            tuple(m.players[i] for i in winners),
            project(lasso.prefix),
            project(lasso.cycle),
            self.stats.as_dict(),
            witness=lasso,
            winner_ids=tuple(winners),
            parity_game=self.pg,
            punishments=self._pun,
        )


def non_emptiness(g: LtlGame, **options) -> Verdict:
    """Does ``g`` have a Nash equilibrium?"""
    return Engine(g, **options).search()


def e_nash(g: LtlGame, phi: Formula, **options) -> Verdict:
    """Is there a Nash equilibrium whose run satisfies ``phi``?"""
    engine = Engine(g, **options)
    if phi == TRUE:
        return engine.search()
    return engine.search(ltl_to_dpw(phi, engine.max_automaton))


def a_nash(g: LtlGame, phi: Formula, **options) -> Verdict:
    """Do all Nash equilibrium runs satisfy ``phi``?  A No carries a counterexample."""
    v = e_nash(g, Not(phi), **options)
    return Verdict(
        not v.answer,
        v.winners,
        v.prefix,
        v.cycle,
        v.stats,
        witness=v.witness,
        winner_ids=v.winner_ids,
        parity_game=v.parity_game,
        punishments=v.punishments,
    )


# ---------------------------------------------------------------------------
# Reduction of E-Nash to Non-Emptiness with two extra players


def _fresh(name: str, taken: set[str]) -> str:
    if name not in taken:
        return name
    for k in itertools.count(1):
        cand = f"{name}_{k}"
        if cand not in taken:
            return cand
    raise AssertionError


def gadget_game(g: LtlGame, phi: Formula) -> LtlGame:
    """Add two players who choose fresh bits p and q at every step.

    Their goals are ``phi | X(p <-> q)`` and ``phi | X ~(p <-> q)``: when
    ``phi`` fails one of them can always profit by changing its first bit,
    so the extended game has an equilibrium iff some equilibrium run of
    ``g`` satisfies ``phi``.
    """
    m = g.structure
    names = set().union(*g.labels, atoms(phi), *(atoms(x) for x in g.goals))
    p = _fresh("p", names)
    q = _fresh("q", names | {p})
    players = set(m.players)
    pp = _fresh("matcher", players)
    pq = _fresh("mismatcher", players | {pp})
    bit_actions = ("lo", "hi")
    n = m.n_players

    index: dict[tuple[int, bool, bool], int] = {}
    order: list[tuple[int, bool, bool]] = []

    def intern(node):
        if node not in index:
            index[node] = len(order)
            order.append(node)
        return index[node]

    intern((m.initial, False, False))
    transitions: list[dict[Joint, int]] = []
    k = 0
    while k < len(order):
        s, _, _ = order[k]
        k += 1
        row = {}
        for joint, t in m.transitions[s].items():
            for bp in (0, 1):
                for bq in (0, 1):
                    row[joint + (bp, bq)] = intern((t, bool(bp), bool(bq)))
        transitions.append(row)
    structure = ConcurrentGameStructure(
        m.players + (pp, pq),
        m.actions + (bit_actions, bit_actions),
        [f"{m.state_names[s]}{'+' + p if vp else ''}{'+' + q if vq else ''}" for s, vp, vq in order],
        0,
        [m.available[s] + ((0, 1), (0, 1)) for s, _, _ in order],
        transitions,
    )
    labels = [
        g.labels[s] | ({p} if vp else set()) | ({q} if vq else set()) for s, vp, vq in order
    ]
    same = iff(Atom(p), Atom(q))
    goals = list(g.goals) + [Or(phi, Next(same)), Or(phi, Next(Not(same)))]
    assert len(goals) == n + 2
    return LtlGame(structure, labels, goals)
