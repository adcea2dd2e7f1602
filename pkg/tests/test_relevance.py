import networkx as nx
import pytest

from maimkit import (
    CHANCE, DECISION, UTILITY, MaidGraph, ModelError, condensed_relevance_graph, d_separated,
    r_reachable, relevance_graph, relevant_nodes, strategically_relevant_semantic,
)
from maimkit.games import make_maim
from maimkit.relevance import strongly_connected_components

from oracles import dsep_paths, random_maim


def test_dsep_job_hiring(jobs):
    g = jobs.graph
    assert not d_separated(g, {"U2"}, {"U1"})
    assert d_separated(g, {"U2"}, {"U1"}, {"X", "D2"})


def test_dsep_isolated_nodes():
    g = MaidGraph.build((1,), [("A", CHANCE), ("B", CHANCE), ("C", CHANCE)], [])
    assert d_separated(g, "A", "B")
    assert d_separated(g, "A", "B", {"C"})


def test_dsep_rejects_unknown_node(taxi):
    with pytest.raises(ModelError):
        d_separated(taxi.graph, "D1", "nope")


def test_r_reachable_examples(taxi, jobs):
    assert r_reachable(jobs.graph, "D1", "D2") and r_reachable(jobs.graph, "D2", "D1")
    assert r_reachable(taxi.graph, "D1", "D2")
    assert not r_reachable(taxi.graph, "D2", "D1")


def test_no_own_utility_below_means_nothing_reachable():
    g = MaidGraph.build((1, 2), [("X", CHANCE), ("D", DECISION, 1), ("U1", UTILITY, 1), ("U2", UTILITY, 2)],
                        [("X", "D"), ("X", "U1"), ("D", "U2")])
    assert all(not r_reachable(g, "D", v) for v in g.names if v != "D")
    assert relevant_nodes(g, "D") == set()


def _hand_relevant(graph, d):
    """r-reachability recomputed with the path-enumeration d-separation oracle."""
    parents = {v: set(graph.parents[v]) for v in graph.names}
    targets = set(graph.utilities_of(graph.owner(d))) & graph.descendants(d)
    fam = {d} | parents[d]
    out = set()
    for v in graph.names:
        if v == d:
            continue
        aux = dict(parents)
        aux["__aux"] = set()
        aux[v] = parents[v] | {"__aux"}
        if targets and not dsep_paths(aux, {"__aux"}, targets, fam):
            out.add(v)
    return out


def test_relevant_nodes_taxi(taxi):
    assert relevant_nodes(taxi.graph, "D1") == {"D2", "U1"} == _hand_relevant(taxi.graph, "D1")
    assert not relevant_nodes(taxi.graph, "D2") & set(taxi.graph.decisions)


def test_relevant_nodes_match_oracle_on_random_graphs(rng):
    for k in range(40):
        g = random_maim(rng, name=f"r{k}").graph
        for d in g.decisions:
            assert relevant_nodes(g, d) == _hand_relevant(g, d), (k, d)


def test_relevance_graph_examples(taxi, jobs):
    rj = relevance_graph(jobs)
    assert rj.nodes == ("D1", "D2") and set(rj.edges) == {("D1", "D2"), ("D2", "D1")}
    rt = relevance_graph(taxi)
    assert rt.edges == (("D1", "D2"),)
    single = make_maim("s", (1,), [("D", DECISION, 1, ()), ("U", UTILITY, 1, ("D",))],
                       utility={"U": lambda d: d}, domains={"D": (0, 1)})
    rs = relevance_graph(single)
    assert rs.nodes == ("D",) and rs.edges == ()


def test_condensation_examples(taxi, jobs):
    cj = condensed_relevance_graph(relevance_graph(jobs))
    assert cj.components == (("D1", "D2"),) and cj.edges == ()
    ct = condensed_relevance_graph(relevance_graph(taxi))
    # sinks first: D2 relies on nothing, so it comes before D1
    assert ct.components == (("D2",), ("D1",))
    assert ct.edges == ((1, 0),)
    assert ct.component_of("D1") == 1 and ct.descendants(1) == {0}
    empty = MaidGraph.build((1,), [("X", CHANCE)], [])
    ce = condensed_relevance_graph(relevance_graph(empty))
    assert ce.components == () and ce.edges == ()


def test_scc_matches_networkx(rng):
    for _ in range(30):
        n = int(rng.integers(1, 9))
        edges = [(a, b) for a in range(n) for b in range(n) if a != b and rng.random() < 0.25]
        succ = {v: [b for a, b in edges if a == v] for v in range(n)}
        comps = strongly_connected_components(list(range(n)), lambda v: succ[v])
        G = nx.DiGraph()
        G.add_nodes_from(range(n))
        G.add_edges_from(edges)
        assert {frozenset(c) for c in comps} == {frozenset(c) for c in nx.strongly_connected_components(G)}
        # sinks first: no edge points from an earlier component to a later one
        where = {v: i for i, c in enumerate(comps) for v in c}
        assert all(where[a] >= where[b] for a, b in edges)


def test_dot_output(taxi):
    dot = relevance_graph(taxi).to_dot()
    assert '"D1" -> "D2";' in dot
    assert "cluster_0" in condensed_relevance_graph(relevance_graph(taxi)).to_dot()


def test_semantic_oracle_taxi(taxi):
    verdict, witness = strategically_relevant_semantic(taxi, "D1", "D2")
    assert verdict == "yes" and witness is not None
    assert strategically_relevant_semantic(taxi, "D2", "D1") == ("no-witness-found", None)
    with pytest.raises(ModelError):
        strategically_relevant_semantic(taxi, "D1", "D1")


def test_graphical_criterion_is_sound_for_semantic_witnesses(rng):
    # a decision never relies on one it cannot r-reach: every witness found needs an edge
    found = 0
    for k in range(80):
        m = random_maim(rng, max_nodes=5, max_decisions=2, name=f"s{k}")
        ds = m.graph.decisions
        for a in ds:
            for b in ds:
                if a == b:
                    continue
                try:
                    verdict, _ = strategically_relevant_semantic(m, a, b, bound=4096)
                except ModelError:
                    continue
                if verdict == "yes":
                    found += 1
                    assert r_reachable(m.graph, a, b), (k, a, b)
    assert found >= 3
