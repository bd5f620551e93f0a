"""Equilibrium strategy synthesis and Nash equilibrium validation."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .automata.dpw import DEFAULT_MAX_STATES, ltl_to_dpw
from .automata.nbw import letter_mask
from .automata.streett import parity_to_streett, streett_emptiness
from .equilibrium import check_punishing_secure
from .game import (
    InvalidStrategy,
    Joint,
    Lasso,
    LtlGame,
    ParityGame,
    StrategyTransducer,
    run_profile,
)
from .ltl import eval_lasso
from .solver import PunishmentResult

ON_PATH = "T"
ASTRAY = "?"  # a winner left the path while no loser can be blamed


class SynthesisError(RuntimeError):
    pass


@dataclass(frozen=True)
class WitnessTransducer:
    """Generates the witness joint actions: position ``k`` outputs ``steps[k]``."""

    lasso: Lasso

    @property
    def size(self) -> int:
        return len(self.lasso.steps)

    def next(self, k: int) -> int:
        return k + 1 if k + 1 < self.size else len(self.lasso.prefix)

    def state(self, k: int) -> int:
        return self.lasso.steps[k][0]

    def output(self, k: int) -> Joint:
        return self.lasso.steps[k][1]


def synthesize_profile(
    pg: ParityGame,
    winners: Sequence[int],
    witness: Lasso,
    pun: dict[int, PunishmentResult],
) -> list[StrategyTransducer]:
    """One transducer per player following ``witness`` and punishing deviators.

    Internal states are ``(game state, witness position, flag)`` where the
    flag is ``"T"`` while on the path, or the id of the loser being punished.
    """
    m = pg.structure
    losers = [j for j in range(m.n_players) if j not in winners]
    for j in losers:
        if not check_punishing_secure(pg, witness, j, pun[j]):
            raise SynthesisError(f"witness is not punishing-secure for {m.players[j]}")
    eta = WitnessTransducer(witness)

    def update(q, joint: Joint):
        s, k, flag = q
        t = m.successor(s, joint)
        if flag != ON_PATH:
            return (t, k, flag)
        expected = eta.output(k)
        deviators = [i for i in range(m.n_players) if joint[i] != expected[i]]
        if not deviators:
            return (t, eta.next(k), ON_PATH)
        blamed = [i for i in deviators if i in losers]
        if blamed:
            return (t, k, min(blamed))
        return (t, k, min(losers) if losers else ASTRAY)

    def make_output(i: int):
        def output(q) -> int:
            s, k, flag = q
            avail = m.available[s][i]
            if flag == ON_PATH:
                a = eta.output(k)[i]
            elif flag == ASTRAY or flag == i or s not in pun[flag].region:
                a = avail[0]
            else:
                a = pun[flag].action_for(s, i)
            return a if a in avail else avail[0]

        return output

    initial = (m.initial, 0, ON_PATH)
    return [
        StrategyTransducer(i, initial, update, make_output(i), name=f"sigma-{m.players[i]}")
        for i in range(m.n_players)
    ]


def _goal_holds(game, lasso: Lasso, i: int) -> bool:
    if isinstance(game, ParityGame):
        return min(game.priorities[i][s] for s in lasso.cycle_states()) % 2 == 0
    return eval_lasso(game.goals[i], lasso.word(game.labels))


def beneficial_deviation(
    game: LtlGame | ParityGame,
    profile: Sequence[StrategyTransducer],
    j: int,
    max_automaton: int = DEFAULT_MAX_STATES,
) -> bool:
    """Can player ``j`` win against the fixed strategies of the others?"""
    m = game.structure
    if isinstance(game, ParityGame):
        dpw = None
    else:
        dpw = ltl_to_dpw(game.goals[j], max_automaton)
        masks = [letter_mask(lab, dpw.atoms) for lab in game.labels]
    others = [i for i in range(m.n_players) if i != j]
    start = (m.initial, tuple(profile[i].initial for i in others), dpw.initial if dpw else 0)
    # transducer states are opaque, so product vertices are numbered on discovery
    index = {start: 0}
    order = [start]
    succ: dict[int, list[int]] = {}
    k = 0
    while k < len(order):
        s, qs, q = order[k]
        fixed = {}
        for i, qi in zip(others, qs):
            a = profile[i].output(qi)
            if a not in m.available[s][i]:
                raise InvalidStrategy(
                    f"player {m.players[i]} chose unavailable action at {m.state_names[s]}"
                )
            fixed[i] = a
        nq = dpw.delta[q][masks[s]] if dpw else 0
        out = []
        for a in m.available[s][j]:
            joint = tuple(fixed[i] if i != j else a for i in range(m.n_players))
            w = (m.successor(s, joint), tuple(profile[i].update(qi, joint) for i, qi in zip(others, qs)), nq)
            if w not in index:
                index[w] = len(order)
                order.append(w)
            out.append(index[w])
        succ[k] = sorted(set(out))
        k += 1
    if dpw:
        prio = {v: dpw.priority[q] for v, (_, _, q) in enumerate(order)}
    else:
        prio = {v: game.priorities[j][s] for v, (s, _, _) in enumerate(order)}
    return streett_emptiness(succ, 0, parity_to_streett(prio)) is not None


def validate_equilibrium(
    game: LtlGame | ParityGame,
    profile: Sequence[StrategyTransducer],
    max_automaton: int = DEFAULT_MAX_STATES,
) -> bool:
    """Whether ``profile`` is a Nash equilibrium of ``game``."""
    outcome = run_profile(game.structure, profile)
    for j in range(game.structure.n_players):
        if _goal_holds(game, outcome, j):
            continue
        if beneficial_deviation(game, profile, j, max_automaton):
            return False
    return True


# ---------------------------------------------------------------------------
# Export


def explore_transducer(m, t: StrategyTransducer) -> tuple[list, list[tuple]]:
    """Internal states reachable under any joint actions, with the edges taken.

    Works for transducers whose internal state starts with the game state,
    as produced by ``synthesize_profile``.
    """
    start = t.initial
    states = [start]
    seen = {start}
    edges = []
    k = 0
    while k < len(states):
        q = states[k]
        k += 1
        for joint in m.joint_actions(q[0]):
            nq = t.update(q, joint)
            edges.append((q, joint, nq))
            if nq not in seen:
                seen.add(nq)
                states.append(nq)
    return states, edges


def _state_label(m, q) -> str:
    s, k, flag = q
    name = m.state_names[s]
    return f"{name}/{k}/{flag if flag in (ON_PATH, ASTRAY) else m.players[flag]}"


def transducer_to_json(pg: ParityGame, t: StrategyTransducer) -> dict:
    m = pg.structure
    states, edges = explore_transducer(m, t)
    ids = {q: _state_label(m, q) for q in states}
    return {
        "player": m.players[t.player],
        "states": [ids[q] for q in states],
        "initial": ids[t.initial],
        "transitions": [
            {"from": ids[q], "on": list(m.joint_names(joint)), "to": ids[nq]} for q, joint, nq in edges
        ],
        "output": {ids[q]: m.actions[t.player][t.output(q)] for q in states},
    }


def transducer_to_dot(pg: ParityGame, t: StrategyTransducer) -> str:
    doc = transducer_to_json(pg, t)
    index = {name: k for k, name in enumerate(doc["states"])}
    lines = [f'digraph "{doc["player"]}" {{', "  rankdir=LR;"]
    for name, k in index.items():
        lines.append(f'  n{k} [label="{name}\\n{doc["output"][name]}"];')
    lines.append(f'  init [shape=point]; init -> n{index[doc["initial"]]};')
    grouped: dict[tuple[int, int], list[str]] = {}
    for e in doc["transitions"]:
        grouped.setdefault((index[e["from"]], index[e["to"]]), []).append(",".join(e["on"]))
    for (a, b), labels in sorted(grouped.items()):
        shown = " ".join(labels[:4]) + (" ..." if len(labels) > 4 else "")
        lines.append(f'  n{a} -> n{b} [label="{shown}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def dump_transducer(pg: ParityGame, t: StrategyTransducer) -> str:
    return json.dumps(transducer_to_json(pg, t), indent=2, sort_keys=True) + "\n"
