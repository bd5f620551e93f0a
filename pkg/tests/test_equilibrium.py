import random

import pytest

from oracles import e_nash_oracle, ne_exists_oracle
from randgen import random_formula, random_game, random_pennies_game
from ratver.automata.dpw import ltl_to_dpw
from ratver.cases import bisim_arena
from ratver.equilibrium import (
    Engine,
    InitialStateEliminated,
    Verdict,
    a_nash,
    check_punishing_secure,
    e_nash,
    gadget_game,
    non_emptiness,
    restrict_game,
    winner_sets,
)
from ratver.game import LtlGame, parity_satisfied, parse_arena, product_game
from ratver.ltl import FALSE, TRUE, Not, eval_lasso, parse_ltl
from ratver.solver import punishment_region
from test_game import _duplicate_state


def _instances(seed, count):
    """Mix of random games and matching-pennies games (the latter often lack equilibria)."""
    rng = random.Random(seed)
    out = []
    for k in range(count):
        if k % 2:
            out.append(random_pennies_game(rng, rng.randint(3, 4)))
        else:
            n = rng.choice([2, 3])
            out.append(random_game(rng, n, rng.randint(2, 4), 2, goal_ops=3, restrict=rng.random() < 0.5))
    return out


def _with_goals(g: LtlGame, goals) -> LtlGame:
    return LtlGame(g.structure, g.labels, list(goals))


# ---------------------------------------------------------------------------
# Restricted arena


def test_restricted_arena_keeps_only_secure_moves():
    for g in _instances(51, 30):
        pg = product_game(g, [ltl_to_dpw(f) for f in g.goals])
        m = pg.structure
        pun = {j: punishment_region(pg, j) for j in range(m.n_players)}
        for winners in winner_sets(m.n_players):
            losers = [j for j in range(m.n_players) if j not in winners]
            try:
                arena = restrict_game(pg, losers, pun)
            except InitialStateEliminated:
                assert any(m.initial not in pun[j].region for j in losers)
                continue
            for s, acts in arena.actions.items():
                assert all(s in pun[j].region for j in losers)
                for joint in acts:
                    assert m.transitions[s][joint] in arena.states
                    for j in losers:
                        for a in m.available[s][j]:
                            dev = joint[:j] + (a,) + joint[j + 1 :]
                            assert m.transitions[s][dev] in pun[j].region


def test_winner_set_order():
    assert list(winner_sets(2)) == [(0, 1), (0,), (1,), ()]
    assert len(list(winner_sets(4))) == 16


# ---------------------------------------------------------------------------
# Degenerate goals


def test_everyone_loses_gives_empty_winner_set():
    g = parse_arena(bisim_arena(split=False))
    v = non_emptiness(_with_goals(g, [FALSE] * 3))
    assert v.answer and v.winners == ()


def test_everyone_wins_gives_full_winner_set():
    g = parse_arena(bisim_arena(split=False))
    v = non_emptiness(_with_goals(g, [TRUE] * 3))
    assert v.answer and v.winners == ("x", "y", "z")


def test_bisim_example_has_z_as_sole_winner():
    for split in (True, False):
        v = non_emptiness(parse_arena(bisim_arena(split)))
        assert v.answer and v.winners == ("z",)
        states = [s for s, _ in v.prefix + v.cycle]
        assert states[0] == "s0" and states[-1] == "s4"


# ---------------------------------------------------------------------------
# Agreement with the independent equilibrium oracle


def test_non_emptiness_matches_oracle():
    answers = []
    for g in _instances(52, 60):
        pg = product_game(g, [ltl_to_dpw(f) for f in g.goals])
        expected, _ = ne_exists_oracle(pg)
        v = non_emptiness(g)
        assert v.answer == expected
        answers.append(expected)
    assert answers.count(False) >= 5 and answers.count(True) >= 5


def test_e_nash_matches_oracle():
    rng = random.Random(53)
    answers = []
    for g in _instances(53, 50):
        phi = random_formula(rng, rng.randint(1, 3), ("a", "b"))
        pg = product_game(g, [ltl_to_dpw(f) for f in g.goals])
        expected = e_nash_oracle(pg, ltl_to_dpw(phi))
        assert e_nash(g, phi).answer == expected
        answers.append(expected)
    assert answers.count(False) >= 5 and answers.count(True) >= 5


def test_witnesses_are_equilibrium_runs():
    for g in _instances(54, 40):
        v = non_emptiness(g)
        if not v.answer:
            continue
        pg, lasso = v.parity_game, v.witness
        lasso.check(pg.structure)
        base = lasso.map_states(pg.base_state)
        base.check(g.structure)
        word = base.word(g.labels)
        for i in v.winner_ids:
            assert parity_satisfied(pg.priorities[i], lasso.cycle_states())
            assert eval_lasso(g.goals[i], word)
        for j in range(len(g.goals)):
            if j not in v.winner_ids:
                assert check_punishing_secure(pg, lasso, j, v.punishments[j])
        names = g.structure.state_names
        assert [s for s, _ in v.prefix + v.cycle] == [names[s] for s in base.states]


def test_e_nash_witness_satisfies_query():
    rng = random.Random(55)
    for g in _instances(55, 30):
        phi = random_formula(rng, 2, ("a", "b"))
        v = e_nash(g, phi)
        if v.answer:
            word = v.witness.map_states(v.parity_game.base_state).word(g.labels)
            assert eval_lasso(phi, word)


# ---------------------------------------------------------------------------
# E-Nash through the two-player gadget, and A-Nash duality


def test_gadget_reduction_and_duality():
    rng = random.Random(56)
    agree = 0
    for g in _instances(56, 50):
        phi = random_formula(rng, rng.randint(1, 3), ("a", "b"))
        direct = e_nash(g, phi).answer
        via_gadget = non_emptiness(gadget_game(g, phi)).answer
        assert direct == via_gadget
        assert a_nash(g, phi).answer == (not e_nash(g, Not(phi)).answer)
        agree += 1
    assert agree == 50


def test_gadget_shape():
    g = parse_arena(bisim_arena(split=False))
    h = gadget_game(g, parse_ltl("F p"))
    assert h.players == ("x", "y", "z", "matcher", "mismatcher")
    assert h.structure.n_states == 1 + 4 * 4
    assert h.goals[3] == parse_ltl("F p | X (p_1 <-> q_1)")
    h.structure.validate()


def test_a_nash_counterexample_violates_the_property():
    g = parse_arena(bisim_arena(split=False))
    phi = parse_ltl("F p")
    v = a_nash(g, phi)
    assert not v.answer
    word = v.witness.map_states(v.parity_game.base_state).word(g.labels)
    assert not eval_lasso(phi, word)
    assert a_nash(g, parse_ltl("G ~q -> G ~q")).answer


# ---------------------------------------------------------------------------
# Invariance and output


def test_verdicts_are_invariant_under_state_duplication():
    rng = random.Random(57)
    for g in _instances(57, 30):
        h = _duplicate_state(g, rng.randrange(g.structure.n_states))
        assert non_emptiness(g).answer == non_emptiness(h).answer
        phi = random_formula(rng, 2, ("a", "b"))
        assert e_nash(g, phi).answer == e_nash(h, phi).answer


def test_parallel_search_is_deterministic():
    for g in _instances(58, 16):
        one = non_emptiness(g)
        many = non_emptiness(g, jobs=3)
        assert one == many


def test_verdict_json_round_trip():
    v = non_emptiness(parse_arena(bisim_arena(split=True)))
    doc = v.to_json()
    assert doc["answer"] == "yes" and doc["winners"] == ["z"]
    assert doc["lasso"]["prefix"][0]["state"] == "s0"
    assert set(doc["stats"]) == {"product_states", "subsets_checked", "punishment_regions"}
    assert Verdict.from_json(doc) == v
    no = Verdict(False, stats={"product_states": 3})
    assert no.to_json()["lasso"] is None
    assert Verdict.from_json(no.to_json()) == no


def test_engine_caches_punishments():
    g = parse_arena(bisim_arena(split=False))
    engine = Engine(g)
    first = engine.punishment(0)
    assert engine.punishment(0) is first
    v = engine.search()
    # larger winner sets are tried first, so every player has been a loser
    assert v.stats["punishment_regions"] == 3


@pytest.mark.parametrize("phi", ["G ~p", "F (p | q)"])
def test_bisimilar_inputs_give_the_same_answers(phi):
    a = parse_arena(bisim_arena(split=True))
    b = parse_arena(bisim_arena(split=False))
    f = parse_ltl(phi)
    assert e_nash(a, f).answer == e_nash(b, f).answer
    assert a_nash(a, f).answer == a_nash(b, f).answer
