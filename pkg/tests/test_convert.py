import numpy as np
import pytest

from maimkit import (
    DECISION, UTILITY, ModelError, MirrorCpd, expected_utilities, pure_nash, validate,
)
from maimkit.convert import (
    AbsentmindednessError, InterventionSetError, absentminded_transform, check_equivalence,
    efg_to_maim, maim_to_efg, maim_to_efgs, natural_mapping, splitting_set,
)
from maimkit.efg import Efg, chance, efg_expected_utilities, leaf, move
from maimkit.games import absentminded_driver, chance_chain, cyber_war, make_maim, taxi_efg
from maimkit.inference import INFEASIBLE, LIVE, NULL_CONTEXT, context_status
from maimkit.model import Cpd


def _counts(game):
    kinds = [v.kind for v in game.nodes]
    return {k: kinds.count(k) for k in set(kinds)}


def test_taxi_minimal_tree(taxi):
    game = maim_to_efg(taxi, "minimal")
    assert _counts(game) == {"player": 3, "leaf": 4}
    assert all(len(m) == 1 for m in game.infosets().values())
    assert [v.label for v in game.nodes if v.kind == "player"] == ["D1", "D2", "D2"]


def test_job_hiring_full_tree(jobs):
    game = maim_to_efg(jobs, "full")
    assert _counts(game) == {"chance": 1, "player": 6, "leaf": 8}
    sets = game.infosets()
    p1 = [k for k in sets if k[0] == 1]
    p2 = [k for k in sets if k[0] == 2]
    assert len(p1) == 2 and all(len(sets[k]) == 1 for k in p1)
    assert len(p2) == 2 and all(len(sets[k]) == 2 for k in p2)


def test_decision_only_star():
    m = make_maim("star", (1,), [("D", DECISION, 1, ()), ("U", UTILITY, 1, ("D",))],
                  utility={"U": lambda d: d}, domains={"D": (0, 1, 2, 3, 4)})
    game = maim_to_efg(m)
    assert _counts(game) == {"player": 1, "leaf": 5}


def test_splitting_sets(jobs):
    assert splitting_set(jobs, "full") == ["X", "D1", "D2"]
    assert splitting_set(jobs, "minimal") == ["X", "D1", "D2"]
    assert splitting_set(chance_chain(3), "minimal") == ["X0", "D"]
    with pytest.raises(ModelError):
        splitting_set(jobs, "huge")


def test_all_orders_agree(seven):
    games = maim_to_efgs(seven)
    assert len(games) >= 1
    for g in games:
        assert check_equivalence(g, seven, trials=5, rng=0).ok


def test_bad_order_rejected(taxi):
    with pytest.raises(ModelError):
        maim_to_efg(taxi, order=["D2", "D1"])
    with pytest.raises(ModelError):
        maim_to_efg(taxi, order=["D1"])


def test_taxi_tree_merged_gives_reference_model():
    m = efg_to_maim(taxi_efg())
    assert validate(m) == []
    assert m.graph.decisions == ("D1", "D2")
    assert m.graph.parents == {"D1": (), "D2": ("D1",), "U1": ("D1", "D2"), "U2": ("D1", "D2")}
    u1 = {("e", "e"): 2, ("c", "e"): 3, ("e", "c"): 5, ("c", "c"): 1}
    for (a, b), v in u1.items():
        row = m.cpds["U1"].values[m.value_index("D1", a), m.value_index("D2", b)]
        assert m.domains["U1"][int(np.argmax(row))] == v and row.max() == 1.0
    assert len(pure_nash(m)) == 3


def test_taxi_tree_singletons_keep_three_decisions():
    m = efg_to_maim(taxi_efg(merged=False))
    assert len(m.graph.decisions) == 3
    assert len(m.graph.decisions_of(2)) == 2
    assert check_equivalence(taxi_efg(merged=False), m, trials=10, rng=1).ok


def test_single_chance_node():
    game = Efg((1, 2), chance([("h", 0.5, leaf(1, 2)), ("t", 0.5, leaf(0, 0))]))
    m = efg_to_maim(game)
    assert m.graph.chances == ("X1",) and m.graph.decisions == ()
    assert len(m.graph.utilities) == 2
    assert expected_utilities(m, {}) == {1: 0.5, 2: 1.0}


def test_single_leaf_is_vacuous():
    game = Efg((1,), leaf(3))
    rep = check_equivalence(game, efg_to_maim(game))
    assert rep.ok and rep.max_error == 0.0


def test_driver_needs_transform():
    game = absentminded_driver()
    assert game.absentminded_infosets() == [(1, "I")]
    with pytest.raises(AbsentmindednessError):
        efg_to_maim(game)
    with pytest.raises(ModelError):
        absentminded_transform(taxi_efg())


def test_driver_topology_and_values():
    game = absentminded_driver()
    m = absentminded_transform(game)
    g = m.graph
    assert set(g.names) == {"D", "X^D_1", "X^D_2", "U"}
    assert set(g.edges) == {("D", "X^D_1"), ("D", "X^D_2"), ("X^D_1", "X^D_2"), ("X^D_1", "U"), ("X^D_2", "U")}
    assert isinstance(m.cpds["X^D_1"], MirrorCpd)
    for q in np.linspace(0, 1, 7):
        rules = {"D": Cpd("D", (), [q, 1 - q])}
        ref = 4 * (1 - q) * q + (1 - q) ** 2
        assert expected_utilities(m, rules)[1] == pytest.approx(ref)
        assert efg_expected_utilities(game, {(1, "I"): np.array([q, 1 - q])})[0] == pytest.approx(ref)
    # the planning optimum: exit with probability 1/3 for 4/3
    vals = [expected_utilities(m, {"D": Cpd("D", (), [q, 1 - q])})[1] for q in np.linspace(0, 1, 13)]
    assert max(vals) <= 4 / 3 + 1e-12
    assert expected_utilities(m, {"D": Cpd("D", (), [1 / 3, 2 / 3])})[1] == pytest.approx(4 / 3)
    assert check_equivalence(game, m, trials=20, rng=2).ok


def test_round_trips_exact(taxi):
    game = maim_to_efg(taxi)
    rep = check_equivalence(game, taxi, trials=0)
    assert rep.ok and rep.pure_checked == 8
    cyber = cyber_war()
    rep = check_equivalence(maim_to_efg(cyber), cyber, trials=100, rng=3)
    assert rep.ok and rep.mixed_checked == 100


def test_natural_mapping_policies(taxi):
    game = maim_to_efg(taxi)
    mp = natural_mapping(game, taxi)
    assert len(mp.entries) == 3
    assert {d for _, d, _ in mp.entries} == {"D1", "D2"}
    choice = {k: game.actions(k)[0] for k in game.infosets()}
    sigma = game.pure_strategy(choice)
    rules = mp.to_policy(taxi, game, sigma)
    assert expected_utilities(taxi, rules) == pytest.approx(dict(zip(game.agents, efg_expected_utilities(game, sigma))))
    other = Efg((1,), leaf(0))
    with pytest.raises(ModelError):
        natural_mapping(other, taxi)


def test_padding_contexts_are_null(rng):
    # a tree whose second mover sits under only one of two chance branches
    inner = move(1, "B", [("l", leaf(1)), ("r", leaf(0))], label="B")
    game = Efg((1,), move(1, "A", [("x", chance([("h", 0.5, inner), ("t", 0.5, leaf(2))], label="C")),
                                  ("y", leaf(0))], label="A"))
    m = efg_to_maim(game)
    b, ctx = m.mapping.decision_of((1, "B"))
    assert ctx == ("x", "h")
    assert m.graph.parents[b] == ("D1", "X1")
    status = {c: context_status(m, b)[m.context_indices(c, b)] for c in m.contexts(b)}
    # only (x, h) reaches the tree node; (x, t) is feasible yet cannot change any payoff
    assert status[("x", "h")] == LIVE
    assert status[("x", "t")] == NULL_CONTEXT and status[("y", None)] == NULL_CONTEXT
    assert status[("y", "h")] == INFEASIBLE
    assert check_equivalence(game, m, trials=10, rng=rng).ok


def _two_player_crossing():
    # player 2's set mixes two different players' intervention ids: invalid
    a = move(2, "J", [("u", leaf(1, 0)), ("v", leaf(0, 1))], intervention="S")
    b = move(1, "K", [("u", leaf(0, 0)), ("v", leaf(1, 1))], intervention="S")
    return Efg((1, 2), move(1, "R", [("p", a), ("q", b)]))


def test_intervention_set_errors():
    with pytest.raises(InterventionSetError):
        efg_to_maim(_two_player_crossing())
    split = Efg((1, 2), move(1, "R", [
        ("p", move(2, "J", [("u", leaf(1, 0)), ("v", leaf(0, 1))], intervention="S1")),
        ("q", move(2, "J", [("u", leaf(0, 0)), ("v", leaf(1, 1))], intervention="S2")),
    ]))
    with pytest.raises(InterventionSetError):
        efg_to_maim(split)
