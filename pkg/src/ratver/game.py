"""Concurrent game structures, LTL and parity games, and strategy profiles."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

from .automata.dpw import DEFAULT_MAX_STATES, DeterministicParityAutomaton
from .automata.nbw import letter_mask
from .ltl import Formula, LtlSyntaxError, parse_ltl

Joint = tuple[int, ...]


class StateSpaceTooLarge(RuntimeError):
    pass


class InvalidStrategy(RuntimeError):
    pass


class ArenaSyntaxError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class ConcurrentGameStructure:
    """Players, per-state available actions and a deterministic transition map.

    States and actions are integers.  ``available[s][i]`` lists the action ids
    player ``i`` may use in ``s``; ``transitions[s]`` maps every available
    joint action to its successor.
    """

    players: tuple[str, ...]
    actions: tuple[tuple[str, ...], ...]
    state_names: list[str]
    initial: int
    available: list[tuple[tuple[int, ...], ...]]
    transitions: list[dict[Joint, int]]

    @property
    def n_players(self) -> int:
        return len(self.players)

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    def joint_actions(self, s: int) -> Iterable[Joint]:
        return itertools.product(*self.available[s])

    def successor(self, s: int, joint: Joint) -> int:
        try:
            return self.transitions[s][joint]
        except KeyError:
            raise InvalidStrategy(
                f"joint action {self.joint_names(joint)} not available at {self.state_names[s]}"
            ) from None

    def joint_names(self, joint: Joint) -> tuple[str, ...]:
        return tuple(self.actions[i][a] for i, a in enumerate(joint))

    def successors(self, s: int) -> list[int]:
        return sorted(set(self.transitions[s].values()))

    def validate(self) -> None:
        for s in range(self.n_states):
            if len(self.available[s]) != self.n_players:
                raise ValueError(f"state {self.state_names[s]}: wrong number of action sets")
            for i, acts in enumerate(self.available[s]):
                if not acts:
                    raise ValueError(f"player {self.players[i]} has no action at {self.state_names[s]}")
            expected = set(self.joint_actions(s))
            if set(self.transitions[s]) != expected:
                raise ValueError(f"transition map at {self.state_names[s]} is not total on available actions")
            for t in self.transitions[s].values():
                if not 0 <= t < self.n_states:
                    raise ValueError(f"state {self.state_names[s]}: successor {t} out of range")


@dataclass
class LtlGame:
    structure: ConcurrentGameStructure
    labels: list[frozenset[str]]
    goals: list[Formula]

    def __post_init__(self):
        if len(self.labels) != self.structure.n_states:
            raise ValueError("labelling must cover every state")
        if len(self.goals) != self.structure.n_players:
            raise ValueError("one goal per player required")

    @property
    def players(self) -> tuple[str, ...]:
        return self.structure.players


@dataclass
class ParityGame:
    """Concurrent game with one min-parity priority function per player.

    When built by ``product_game``, ``origin[v] = (s, automaton states)`` and
    ``labels[v]`` is the label of the underlying structure state ``s``.
    """

    structure: ConcurrentGameStructure
    priorities: list[list[int]]
    labels: list[frozenset[str]] | None = None
    origin: list[tuple[int, tuple[int, ...]]] | None = None
    base: LtlGame | None = None

    @property
    def players(self) -> tuple[str, ...]:
        return self.structure.players

    def base_state(self, v: int) -> int:
        return self.origin[v][0] if self.origin is not None else v


@dataclass
class Lasso:
    """Ultimately periodic run: ``(state, joint action)`` steps, cycle repeated."""

    prefix: list[tuple[int, Joint]]
    cycle: list[tuple[int, Joint]]

    def __post_init__(self):
        if not self.cycle:
            raise ValueError("lasso cycle must be nonempty")

    @property
    def steps(self) -> list[tuple[int, Joint]]:
        return self.prefix + self.cycle

    @property
    def states(self) -> list[int]:
        return [s for s, _ in self.steps]

    def cycle_states(self) -> list[int]:
        return [s for s, _ in self.cycle]

    def check(self, m: ConcurrentGameStructure) -> None:
        steps = self.steps
        if steps[0][0] != m.initial:
            raise ValueError("lasso does not start at the initial state")
        for k, (s, joint) in enumerate(steps):
            nxt = steps[k + 1][0] if k + 1 < len(steps) else self.cycle[0][0]
            if m.successor(s, joint) != nxt:
                raise ValueError(f"lasso step {k} inconsistent with transitions")

    def map_states(self, f: Callable[[int], int]) -> "Lasso":
        return Lasso([(f(s), a) for s, a in self.prefix], [(f(s), a) for s, a in self.cycle])

    def word(self, labels: Sequence[frozenset[str]]):
        from .ltl import UltimatelyPeriodicWord

        return UltimatelyPeriodicWord(
            [labels[s] for s, _ in self.prefix], [labels[s] for s, _ in self.cycle]
        )


@dataclass
class StrategyTransducer:
    """Finite-state strategy: ``output(q)`` is the action, ``update(q, joint)`` the next state.

    Internal states are opaque hashable values.
    """

    player: int
    initial: Hashable
    update: Callable[[Hashable, Joint], Hashable]
    output: Callable[[Hashable], int]
    name: str = ""

    @classmethod
    def from_tables(
        cls, player: int, initial, delta: dict, output: dict, name: str = ""
    ) -> "StrategyTransducer":
        return cls(player, initial, lambda q, a: delta[(q, a)], lambda q: output[q], name)


def run_profile(m: ConcurrentGameStructure, profile: Sequence[StrategyTransducer]) -> Lasso:
    """The unique lasso induced by a strategy profile."""
    if len(profile) != m.n_players:
        raise ValueError("one transducer per player required")
    s = m.initial
    qs = tuple(t.initial for t in profile)
    seen: dict[tuple, int] = {}
    steps: list[tuple[int, Joint]] = []
    while (s, qs) not in seen:
        seen[(s, qs)] = len(steps)
        joint = []
        for i, t in enumerate(profile):
            a = t.output(qs[i])
            if a not in m.available[s][i]:
                raise InvalidStrategy(
                    f"player {m.players[i]} chose unavailable action {a!r} at {m.state_names[s]}"
                )
            joint.append(a)
        joint_t = tuple(joint)
        steps.append((s, joint_t))
        qs = tuple(t.update(q, joint_t) for t, q in zip(profile, qs))
        s = m.successor(s, joint_t)
    k = seen[(s, qs)]
    return Lasso(steps[:k], steps[k:])


def memoryless_on(m: ConcurrentGameStructure, player: int, choice: Sequence[int]) -> StrategyTransducer:
    """Strategy that tracks the structure state and plays ``choice[s]``."""
    return StrategyTransducer(
        player,
        m.initial,
        lambda s, joint: m.successor(s, joint),
        lambda s: choice[s],
        name=f"memoryless-{m.players[player]}",
    )


# ---------------------------------------------------------------------------
# Product with goal automata


def product_game(
    g: LtlGame,
    dpws: Sequence[DeterministicParityAutomaton],
    max_states: int = DEFAULT_MAX_STATES,
) -> ParityGame:
    """Reachable product of the arena with one DPW per player.

    From ``(s, q)`` the joint action ``a`` leads to
    ``(tr(s, a), rho_i(q_i, lambda(s)))``; player ``i``'s priority at
    ``(s, q)`` is the priority of ``q_i``.
    """
    m = g.structure
    if len(dpws) != m.n_players:
        raise ValueError("one automaton per player required")
    masks = [[letter_mask(g.labels[s], d.atoms) for s in range(m.n_states)] for d in dpws]
    start = (m.initial, tuple(d.initial for d in dpws))
    index = {start: 0}
    order = [start]
    transitions: list[dict[Joint, int]] = []
    i = 0
    while i < len(order):
        s, qs = order[i]
        i += 1
        nq = tuple(d.delta[q][mk[s]] for d, q, mk in zip(dpws, qs, masks))
        row = {}
        for joint, t in m.transitions[s].items():
            node = (t, nq)
            v = index.get(node)
            if v is None:
                if len(order) >= max_states:
                    raise StateSpaceTooLarge(f"product exceeded {max_states} states")
                v = index[node] = len(order)
                order.append(node)
            row[joint] = v
        transitions.append(row)
    structure = ConcurrentGameStructure(
        m.players,
        m.actions,
        [f"{m.state_names[s]}|{','.join(map(str, qs))}" for s, qs in order],
        0,
        [m.available[s] for s, _ in order],
        transitions,
    )
    priorities = [[d.priority[qs[k]] for _, qs in order] for k, d in enumerate(dpws)]
    return ParityGame(structure, priorities, [g.labels[s] for s, _ in order], order, g)


def parity_satisfied(priorities: Sequence[int], cycle_states: Iterable[int]) -> bool:
    return min(priorities[s] for s in cycle_states) % 2 == 0


# ---------------------------------------------------------------------------
# Bisimulation


def check_bisimilar(a: LtlGame, b: LtlGame) -> bool:
    """Whether the initial states are related by the largest bisimulation.

    Directions are matched by action names, so both games must use the same
    players and action alphabets.
    """
    ma, mb = a.structure, b.structure
    if ma.players != mb.players:
        return False
    n = ma.n_states
    nodes = [(ma, a.labels, s) for s in range(ma.n_states)] + [
        (mb, b.labels, s) for s in range(mb.n_states)
    ]

    def moves(k: int):
        m, _, s = nodes[k]
        off = 0 if k < n else n
        return [(m.joint_names(j), off + t) for j, t in m.transitions[s].items()]

    succ = [moves(k) for k in range(len(nodes))]
    label_ids: dict[frozenset, int] = {}
    block = [label_ids.setdefault(lab[s], len(label_ids)) for _, lab, s in nodes]
    count = len(label_ids)
    while True:
        sigs: dict = {}
        new = [
            sigs.setdefault((block[k], frozenset((d, block[t]) for d, t in succ[k])), len(sigs))
            for k in range(len(nodes))
        ]
        if len(sigs) == count:
            break
        block, count = new, len(sigs)
    return block[ma.initial] == block[n + mb.initial]


# ---------------------------------------------------------------------------
# Explicit arena text format
#
#   players x y z
#   actions x: a b
#   state s2: p q          (label set; state lines optional for unlabelled states)
#   initial s0
#   goal x: F p
#   avail s0 x: a          (optional restriction of available actions)
#   trans s0 b a * -> s1   (* ranges over the available actions)

_COMMENT = re.compile(r"(#|//).*$")


def parse_arena(text: str) -> LtlGame:
    players: list[str] = []
    actions: dict[str, list[str]] = {}
    state_order: list[str] = []
    labels: dict[str, frozenset[str]] = {}
    initial: str | None = None
    goals: dict[str, Formula] = {}
    avail: dict[tuple[str, str], tuple[str, ...]] = {}
    rows: list[tuple[int, str, list[str], str]] = []

    def declare(name: str):
        if name not in labels:
            labels[name] = frozenset()
            state_order.append(name)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _COMMENT.sub("", raw).strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "players":
            players = rest.split()
            if not players or len(set(players)) != len(players):
                raise ArenaSyntaxError("players must be distinct and nonempty", lineno)
        elif head == "actions":
            who, sep, names = rest.partition(":")
            who = who.strip()
            if not sep or who not in players:
                raise ArenaSyntaxError(f"unknown player in actions line: {who!r}", lineno)
            acts = names.split()
            if not acts or len(set(acts)) != len(acts) or "*" in acts:
                raise ArenaSyntaxError("actions must be distinct and nonempty", lineno)
            actions[who] = acts
        elif head == "state":
            name, _, labs = rest.partition(":")
            name = name.strip()
            if not name:
                raise ArenaSyntaxError("missing state name", lineno)
            if name in labels and labels[name]:
                raise ArenaSyntaxError(f"state {name} declared twice", lineno)
            declare(name)
            labels[name] = frozenset(labs.split())
        elif head == "initial":
            initial = rest
            declare(rest)
        elif head == "goal":
            who, sep, formula = rest.partition(":")
            who = who.strip()
            if not sep or who not in players:
                raise ArenaSyntaxError(f"unknown player in goal line: {who!r}", lineno)
            try:
                goals[who] = parse_ltl(formula)
            except LtlSyntaxError as exc:
                raise ArenaSyntaxError(f"goal of {who}: {exc}", lineno) from None
        elif head == "avail":
            lhs, sep, names = rest.partition(":")
            parts = lhs.split()
            if not sep or len(parts) != 2 or parts[1] not in players:
                raise ArenaSyntaxError("expected 'avail <state> <player>: <actions>'", lineno)
            declare(parts[0])
            avail[(parts[0], parts[1])] = tuple(names.split())
        elif head == "trans":
            lhs, sep, target = rest.partition("->")
            parts = lhs.split()
            if not sep or len(parts) != len(players) + 1 or not target.strip():
                raise ArenaSyntaxError(
                    f"expected 'trans <state> <{len(players)} actions> -> <state>'", lineno
                )
            declare(parts[0])
            declare(target.strip())
            rows.append((lineno, parts[0], parts[1:], target.strip()))
        else:
            raise ArenaSyntaxError(f"unknown directive {head!r}", lineno)

    if not players:
        raise ArenaSyntaxError("missing players line", 1)
    for p in players:
        if p not in actions:
            raise ArenaSyntaxError(f"no actions declared for player {p}", 1)
        if p not in goals:
            raise ArenaSyntaxError(f"no goal declared for player {p}", 1)
    if initial is None:
        raise ArenaSyntaxError("missing initial line", 1)

    sid = {name: k for k, name in enumerate(state_order)}
    aid = [{a: k for k, a in enumerate(actions[p])} for p in players]
    available = []
    for name in state_order:
        per = []
        for i, p in enumerate(players):
            names = avail.get((name, p), tuple(actions[p]))
            for a in names:
                if a not in aid[i]:
                    raise ArenaSyntaxError(f"unknown action {a!r} for {p} at {name}", 1)
            per.append(tuple(sorted(aid[i][a] for a in names)))
        available.append(tuple(per))

    transitions: list[dict[Joint, int]] = [{} for _ in state_order]
    source_line: list[dict[Joint, int]] = [{} for _ in state_order]
    for lineno, src, acts, dst in rows:
        s = sid[src]
        choices = []
        for i, a in enumerate(acts):
            if a == "*":
                choices.append(available[s][i])
            elif a in aid[i] and aid[i][a] in available[s][i]:
                choices.append((aid[i][a],))
            else:
                raise ArenaSyntaxError(
                    f"action {a!r} not available to {players[i]} at {src}", lineno
                )
        for joint in itertools.product(*choices):
            prev = transitions[s].get(joint)
            if prev is not None and prev != sid[dst]:
                raise ArenaSyntaxError(
                    f"nondeterministic transition at {src} on {' '.join(acts)} "
                    f"(also line {source_line[s][joint]})",
                    lineno,
                )
            transitions[s][joint] = sid[dst]
            source_line[s][joint] = lineno
    for name in state_order:
        s = sid[name]
        for joint in itertools.product(*available[s]):
            if joint not in transitions[s]:
                shown = " ".join(actions[p][a] for p, a in zip(players, joint))
                raise ArenaSyntaxError(f"no transition from {name} on {shown}", rows[-1][0] if rows else 1)

    m = ConcurrentGameStructure(
        tuple(players),
        tuple(tuple(actions[p]) for p in players),
        list(state_order),
        sid[initial],
        available,
        transitions,
    )
    return LtlGame(m, [labels[name] for name in state_order], [goals[p] for p in players])


def format_arena(g: LtlGame) -> str:
    """Render ``g`` in the arena text format (one explicit row per joint action)."""
    m = g.structure
    out = ["players " + " ".join(m.players)]
    for p, acts in zip(m.players, m.actions):
        out.append(f"actions {p}: " + " ".join(acts))
    for s, name in enumerate(m.state_names):
        out.append(f"state {name}: " + " ".join(sorted(g.labels[s])) if g.labels[s] else f"state {name}")
    out.append(f"initial {m.state_names[m.initial]}")
    for p, goal in zip(m.players, g.goals):
        out.append(f"goal {p}: {goal}")
    for s, name in enumerate(m.state_names):
        for i, p in enumerate(m.players):
            if m.available[s][i] != tuple(range(len(m.actions[i]))):
                out.append(f"avail {name} {p}: " + " ".join(m.actions[i][a] for a in m.available[s][i]))
    for s, name in enumerate(m.state_names):
        for joint, t in sorted(m.transitions[s].items()):
            out.append(f"trans {name} {' '.join(m.joint_names(joint))} -> {m.state_names[t]}")
    return "\n".join(out) + "\n"
