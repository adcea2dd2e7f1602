"""Self-checks of the reference oracles on cases small enough to work out by hand."""
from fractions import Fraction

import numpy as np
import pytest

from maimkit import games, validate

from oracles import (
    EfgSyntaxError, brute_force_eu, conditionally_independent, dsep_paths, joint_table, parse_efg,
    proper_subgame_roots, random_dag, random_efg, random_maim, state_space, tree_infosets, tree_payoff,
    tree_pure_nash,
)

TAXI_EFG = """EFG 2 R "taxi" { "1" "2" }
p "D1" 1 1 "" { "e" "c" } 0
p "D2" 2 1 "" { "e" "c" } 0
t "" 1 "" { 2, 2 }
t "" 2 "" { 5, 3 }
p "D2" 2 2 "" { "e" "c" } 0
t "" 3 "" { 3, 5 }
t "" 4 "" { 1, 1 }
"""


def test_brute_force_by_hand(taxi):
    rules = {"D1": taxi.constant_rule("D1", "c"), "D2": taxi.uniform_rule("D2")}
    # D1=c, then D2 uniform: U1 (3+1)/2, U2 (5+1)/2
    assert brute_force_eu(taxi, rules) == pytest.approx({1: 2.0, 2: 3.0})
    assert state_space(taxi) == 2 * 2 * 4 * 4


def test_brute_force_chance(jobs):
    rules = {"D1": jobs.constant_rule("D1", "g"), "D2": jobs.constant_rule("D2", "j")}
    assert brute_force_eu(jobs, rules) == pytest.approx({1: (4 + 2) / 2, 2: (3 - 2) / 2})


def test_dsep_textbook_cases():
    chain = {"A": [], "B": ["A"], "C": ["B"]}
    assert not dsep_paths(chain, {"A"}, {"C"}, set())
    assert dsep_paths(chain, {"A"}, {"C"}, {"B"})
    fork = {"B": [], "A": ["B"], "C": ["B"]}
    assert not dsep_paths(fork, {"A"}, {"C"}, set())
    assert dsep_paths(fork, {"A"}, {"C"}, {"B"})
    collider = {"A": [], "C": [], "B": ["A", "C"], "E": ["B"]}
    assert dsep_paths(collider, {"A"}, {"C"}, set())
    assert not dsep_paths(collider, {"A"}, {"C"}, {"B"})
    assert not dsep_paths(collider, {"A"}, {"C"}, {"E"})


def test_joint_table_is_a_distribution(rng):
    for _ in range(5):
        dag = random_dag(rng, 5)
        names, joint = joint_table(dag, rng)
        assert joint.shape == (2,) * 5 and joint.sum() == pytest.approx(1.0)
        # a node is independent of its non-descendants given its parents
        last = names[-1]
        others = [v for v in names[:-1] if v not in dag[last]]
        if others:
            assert conditionally_independent(names, joint, [last], others, dag[last])


def test_conditional_independence_detects_dependence():
    names = ["A", "B"]
    joint = np.array([[0.5, 0.0], [0.0, 0.5]])
    assert not conditionally_independent(names, joint, ["A"], ["B"], [])
    assert conditionally_independent(names, np.full((2, 2), 0.25), ["A"], ["B"], [])


def test_parse_known_tree():
    tree = parse_efg(TAXI_EFG)
    assert tree["title"] == "taxi" and tree["players"] == ["1", "2"]
    assert len(tree["nodes"]) == 7
    assert tree_infosets(tree) == {(1, 1): ["e", "c"], (2, 1): ["e", "c"], (2, 2): ["e", "c"]}
    assert proper_subgame_roots(tree) == [1, 4]
    assert tree_payoff(tree, {(1, 1): "c", (2, 1): "e", (2, 2): "e"}) == [3, 5]
    assert tree_payoff(tree, {(2, 2): "c"}, start=4) == [1, 1]


def test_tree_nash_of_taxi():
    ne = tree_pure_nash(parse_efg(TAXI_EFG))
    as_tuples = sorted(tuple(p[k] for k in [(1, 1), (2, 1), (2, 2)]) for p in ne)
    assert as_tuples == sorted([("e", "c", "e"), ("c", "e", "e"), ("e", "c", "c")])


def test_parse_fractions_and_chance():
    text = ('EFG 2 R "c" { "1" }\n'
            'c "" 1 "" { "h" 1/3 "t" 2/3 } 0\n'
            't "" 1 "" { 3 }\n'
            't "" 2 "" { 3/2 }\n')
    tree = parse_efg(text)
    assert tree_payoff(tree, {}) == [Fraction(2)]


@pytest.mark.parametrize("text", [
    'EFG 2 R "x" { "1" }',
    'EFG 2 R "x" { "1" }\nc "" 1 "" { "h" 1/2 "t" 1/3 } 0\nt "" 1 "" { 0 }\nt "" 2 "" { 0 }\n',
    'EFG 2 R "x" { "1" }\np "" 1 1 "" { "a" "b" } 0\nt "" 1 "" { 0 }\n',
    'EFG 2 R "x" { "1" }\nt "" 1 "" { 0, 1 }\n',
    'EFG 2 R "x" { "1" }\np "" 1 1 "" { "a" } 0\np "" 1 1 "" { "a" "b" } 0\n'
    't "" 1 "" { 0 }\nt "" 2 "" { 0 }\n',
])
def test_parse_rejects(text):
    with pytest.raises(EfgSyntaxError):
        parse_efg(text)


def test_generators_are_valid(rng):
    for k in range(10):
        assert validate(random_maim(rng, name=f"g{k}")) == []
        game = random_efg(rng, title=f"g{k}")
        assert len(game.leaves) >= 1


def test_reference_games_load():
    for make in games.MODELS.values():
        assert make().graph.decisions
