import json

import pytest

from ratver import cases
from ratver.equilibrium import non_emptiness
from ratver.game import StrategyTransducer, memoryless_on, parse_arena, run_profile
from ratver.solver import PunishmentResult
from ratver.srml import load_srml
from ratver.synthesis import (
    SynthesisError,
    beneficial_deviation,
    dump_transducer,
    explore_transducer,
    synthesize_profile,
    transducer_to_dot,
    transducer_to_json,
    validate_equilibrium,
)
from test_equilibrium import _instances
from test_game import _toggle


def _fixture_games():
    yield "bisim1", parse_arena(cases.bisim_arena(True))
    yield "bisim2", parse_arena(cases.bisim_arena(False))
    for n in (2, 3):
        yield f"gossip{n}", load_srml(cases.gossip(n))[0]
    yield "replica2", load_srml(cases.replica(2))[0]
    yield "grid_safe_ne", load_srml(cases.grid(cases.GRID_SAFE_NE))[0]


@pytest.mark.parametrize("name, game", list(_fixture_games()), ids=lambda x: x if isinstance(x, str) else "")
def test_synthesized_profile_is_an_equilibrium(name, game):
    v = non_emptiness(game)
    assert v.answer
    profile = synthesize_profile(v.parity_game, v.winner_ids, v.witness, v.punishments)
    assert run_profile(v.parity_game.structure, profile) == v.witness
    assert validate_equilibrium(v.parity_game, profile)
    assert validate_equilibrium(game, profile)


def test_transducer_size_bound():
    for _, game in _fixture_games():
        v = non_emptiness(game)
        pg = v.parity_game
        profile = synthesize_profile(pg, v.winner_ids, v.witness, v.punishments)
        losers = game.structure.n_players - len(v.winner_ids)
        bound = pg.structure.n_states * len(v.witness.steps) * (losers + 2)
        for t in profile:
            states, _ = explore_transducer(pg.structure, t)
            assert len(states) <= bound
            for q in states:
                assert t.output(q) in pg.structure.available[q[0]][t.player]


def test_random_equilibria_validate():
    checked = 0
    for g in _instances(61, 30):
        v = non_emptiness(g)
        if not v.answer:
            continue
        profile = synthesize_profile(v.parity_game, v.winner_ids, v.witness, v.punishments)
        assert run_profile(v.parity_game.structure, profile) == v.witness
        assert validate_equilibrium(g, profile)
        checked += 1
    assert checked >= 10


def test_profile_with_a_profitable_deviation_is_rejected():
    g = _toggle()
    m = g.structure
    keep = 0
    # both always keep: the run stays off, so x (G F p) loses but could flip
    profile = [memoryless_on(m, 0, [keep, keep]), memoryless_on(m, 1, [keep, keep])]
    assert beneficial_deviation(g, profile, 0)
    assert not validate_equilibrium(g, profile)


def test_profile_where_the_loser_cannot_escape_is_accepted():
    g = _toggle()
    m = g.structure
    keep, flip = 0, 1
    # x flips every round so p holds infinitely often; y wants F G ~p but cannot stop x
    profile = [memoryless_on(m, 0, [flip, flip]), memoryless_on(m, 1, [keep, keep])]
    assert not beneficial_deviation(g, profile, 1)
    assert validate_equilibrium(g, profile)


def test_insecure_witness_is_refused():
    g = parse_arena(cases.bisim_arena(False))
    v = non_emptiness(g)
    empty = {j: PunishmentResult(j, frozenset(), {}) for j in range(3)}
    with pytest.raises(SynthesisError):
        synthesize_profile(v.parity_game, v.winner_ids, v.witness, empty)


def test_exports():
    g = parse_arena(cases.bisim_arena(False))
    v = non_emptiness(g)
    profile = synthesize_profile(v.parity_game, v.winner_ids, v.witness, v.punishments)
    doc = transducer_to_json(v.parity_game, profile[0])
    assert set(doc) == {"player", "states", "initial", "transitions", "output"}
    assert doc["player"] == "x"
    assert doc["initial"] in doc["states"]
    assert set(doc["output"]) == set(doc["states"])
    for e in doc["transitions"]:
        assert e["from"] in doc["states"] and e["to"] in doc["states"]
        assert len(e["on"]) == 3
    assert json.loads(dump_transducer(v.parity_game, profile[0])) == doc
    assert transducer_to_dot(v.parity_game, profile[0]).startswith('digraph "x"')


def test_custom_transducer_runs():
    g = _toggle()
    m = g.structure
    # x alternates using one bit of memory, y copies x's last action
    x = StrategyTransducer.from_tables(0, 0, {(q, j): 1 - q for q in (0, 1) for j in [(0, 0), (0, 1), (1, 0), (1, 1)]}, {0: 1, 1: 0})
    y = StrategyTransducer(1, 0, lambda q, joint: joint[0], lambda q: q)
    run = run_profile(m, [x, y])
    assert run.prefix == [] and run.states == [0, 1]
    # x flips from off whatever y does, so y cannot make p stop recurring
    assert validate_equilibrium(g, [x, y])
