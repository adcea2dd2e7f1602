"""Subgame bases, MAID subgames and MAIM subgames."""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping


from .model import CHANCE, DECISION, UTILITY, Cpd, MaidGraph, Maim, MirrorCpd, ModelError, Node, induce
from .relevance import condensed_relevance_graph, r_reachable, relevance_graph


@dataclass(frozen=True)
class SubgameBase:
    nodes: tuple[str, ...]
    decisions: tuple[str, ...]
    proper: bool

    def __contains__(self, v) -> bool:
        return v in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)


def _base(graph: MaidGraph, nodes: Iterable[str]) -> SubgameBase:
    nodes = graph.sort(nodes)
    ds = tuple(v for v in nodes if graph.kind(v) == DECISION)
    return SubgameBase(tuple(nodes), ds, len(nodes) < len(graph.nodes))


def closure(graph: MaidGraph, nodes: Iterable[str]) -> set[str]:
    """Smallest superset closed under directed paths and r-reachability."""
    out = set(nodes)
    while True:
        new = set(out)
        for d in out:
            if graph.kind(d) == DECISION:
                new |= {v for v in graph.names if v not in new and r_reachable(graph, d, v)}
        new |= graph.descendants(new) & graph.ancestors(new)
        if new == out:
            return out
        out = new


def base_violations(graph: MaidGraph, nodes: Iterable[str]) -> list[str]:
    """Why ``nodes`` is not a subgame base (empty if it is)."""
    nodes = set(nodes)
    out = []
    for v in graph.names:
        if v in nodes:
            continue
        up = graph.ancestors(v) & nodes
        down = graph.descendants(v) & nodes
        if up and down:
            a, b = graph.sort(up)[0], graph.sort(down)[0]
            out.append(f"not closed under directed paths: {v} lies on a path {a} -> ... -> {b}")
    for d in graph.sort(nodes):
        if graph.kind(d) != DECISION:
            continue
        for v in graph.names:
            if v not in nodes and r_reachable(graph, d, v):
                out.append(f"not closed under r-reachability: {v} is r-reachable from {d}")
    return out


def subgame_bases(graph: MaidGraph | Maim) -> list[SubgameBase]:
    """Subgame bases induced by descendant-closed sets of relevance components.

    Each descendant-closed set of components gives the closure of its
    decisions; we then also add chance ancestors one at a time as long as the
    decision set stays the same.  Sorted by size, then by node declaration.
    """
    if isinstance(graph, Maim):
        cache = graph._cache
        graph = graph.graph
    else:
        cache = {}
    if "bases" in cache:
        return cache["bases"]
    con = condensed_relevance_graph(relevance_graph(graph))
    n = len(con.components)
    desc = [con.descendants(i) for i in range(n)]
    found: set[frozenset] = set()
    seeds = []
    for mask in range(1, 2 ** n):
        sel = {i for i in range(n) if mask >> i & 1}
        if any(not desc[i] <= sel for i in sel):
            continue
        ds = {d for i in sel for d in con.components[i]}
        seeds.append(frozenset(closure(graph, ds)))
    queue = deque(seeds)
    while queue:
        b = queue.popleft()
        if b in found:
            continue
        found.add(b)
        decs = {v for v in b if graph.kind(v) == DECISION}
        for x in graph.sort(graph.ancestors(b) - b):
            if graph.kind(x) != CHANCE:
                continue
            ext = frozenset(closure(graph, b | {x}))
            if {v for v in ext if graph.kind(v) == DECISION} == decs and ext not in found:
                queue.append(ext)
    found.add(frozenset(graph.names))
    key = lambda s: (len(s), sorted(graph.index(v) for v in s))
    out = [_base(graph, s) for s in sorted(found, key=key)]
    cache["bases"] = out
    return out


def minimal_for_decisions(bases: Iterable[SubgameBase], decisions: Iterable[str]) -> SubgameBase:
    """Fewest-node base whose decision set is exactly ``decisions``.

    Falls back to the smallest base containing them when no base matches
    exactly (the full node set always qualifies).
    """
    want = set(decisions)
    bases = list(bases)
    exact = [b for b in bases if set(b.decisions) == want]
    pool = exact or [b for b in bases if want <= set(b.decisions)]
    if not pool:
        raise ModelError(f"no subgame base contains {sorted(want)}")
    return min(pool, key=len)


@dataclass(frozen=True)
class MaidSubgame:
    base: SubgameBase
    graph: MaidGraph
    players: tuple
    dropped_utilities: tuple[str, ...] = ()

    @property
    def decisions(self) -> tuple[str, ...]:
        return self.graph.decisions

    @property
    def utilities(self) -> tuple[str, ...]:
        return self.graph.utilities


def maid_subgame(graph: MaidGraph | Maim, base: SubgameBase | Iterable[str], check: bool = True) -> MaidSubgame:
    """The induced diagram on ``base``.

    Utility nodes of the base that are not descendants of one of its
    decisions are demoted to chance nodes and listed in
    ``dropped_utilities``.
    """
    if isinstance(graph, Maim):
        graph = graph.graph
    if not isinstance(base, SubgameBase):
        base = _base(graph, base)
    if check:
        bad = base_violations(graph, base.nodes)
        if bad:
            raise ModelError("; ".join(bad))
    keep = set(base.nodes)
    ds = [v for v in base.nodes if graph.kind(v) == DECISION]
    below = graph.descendants(ds)
    utils = {v for v in base.nodes if graph.kind(v) == UTILITY and v in below}
    dropped = tuple(v for v in base.nodes if graph.kind(v) == UTILITY and v not in utils)
    players = tuple(a for a in graph.agents if any(graph.owner(d) == a for d in ds))
    owners = {graph.owner(u) for u in utils}
    agents = tuple(a for a in graph.agents if a in players or a in owners)
    nodes = tuple(Node(n.name, CHANCE) if n.name in dropped else n for n in graph.nodes if n.name in keep)
    parents = {n.name: tuple(p for p in graph.parents[n.name] if p in keep) for n in nodes}
    return MaidSubgame(base, MaidGraph(agents, nodes, parents), players, dropped)


def material_boundary(graph: MaidGraph, nodes: Iterable[str]) -> list[str]:
    keep = set(nodes)
    return [v for v in graph.names if v not in keep and any(c in keep for c in graph.children(v))]


def restrict_model(model: Maim, graph: MaidGraph, boundary: Mapping[str, object], name=None) -> Maim:
    """Restrict ``model`` to the nodes of ``graph`` with outside parents set to ``boundary``.

    CPD rows are sliced at the boundary values and never renormalized.
    """
    cpds = {}
    for n in graph.nodes:
        if n.kind == DECISION:
            continue
        cpd = model.cpds[n.name]
        if isinstance(cpd, MirrorCpd):
            raise ModelError("cannot restrict a model with mirrored decision instances")
        idx = []
        for p in cpd.parents:
            if p in boundary:
                idx.append(model.value_index(p, boundary[p]))
            else:
                idx.append(slice(None))
        kept = tuple(p for p in cpd.parents if p not in boundary)
        if kept != graph.parents[n.name]:
            raise ModelError(f"{n.name}: parents outside the subgame must all be fixed by the boundary")
        cpds[n.name] = Cpd(n.name, kept, cpd.values[tuple(idx)])
    domains = {n.name: model.domains[n.name] for n in graph.nodes}
    return Maim(graph, domains, cpds, name or model.name)


@dataclass(frozen=True)
class MaimSubgame:
    subgame: MaidSubgame
    boundary: tuple[tuple[str, object], ...]
    model: Maim = field(compare=False)

    @property
    def assignment(self) -> dict:
        return dict(self.boundary)


def boundary_assignments(model: Maim, nodes: Iterable[str]) -> list[dict]:
    ys = material_boundary(model.graph, nodes)
    return [dict(zip(ys, vals)) for vals in itertools.product(*(model.domains[y] for y in ys))]


def maim_subgames(model: Maim, sub: MaidSubgame) -> list[MaimSubgame]:
    """One MAIM subgame per setting of the material boundary, lexicographically."""
    out = []
    for y in boundary_assignments(model, sub.base.nodes):
        label = model.name + ("" if not y else "|" + ",".join(f"{k}={v}" for k, v in y.items()))
        out.append(MaimSubgame(sub, tuple(y.items()), restrict_model(model, sub.graph, y, label)))
    return out


def is_feasible_subgame(model: Maim, msub: MaimSubgame | Mapping) -> bool:
    """Whether the boundary setting has positive probability under some profile."""
    from .inference import Unconditioned, marginal

    y = msub.assignment if isinstance(msub, MaimSubgame) else dict(msub)
    if not y:
        return True
    if "uniform" not in model._cache:
        model._cache["uniform"] = induce(model, model.uniform_profile())
    res = marginal(model._cache["uniform"], [], y)
    return not isinstance(res, Unconditioned)
