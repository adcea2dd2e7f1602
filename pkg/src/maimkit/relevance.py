"""d-separation, r-reachability and (condensed) relevance graphs."""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np

from .model import ATOL, DECISION, MaidGraph, Maim, ModelError, Node, induce


def _as_set(g: MaidGraph, names) -> set[str]:
    names = {names} if isinstance(names, str) else set(names)
    for n in names:
        if n not in g:
            raise ModelError(f"unknown node {n!r}")
    return names


def d_separated(graph: MaidGraph, X, Y, W=()) -> bool:
    """True iff ``W`` blocks every trail between ``X`` and ``Y``.

    Ball-passing traversal: a node is entered either from a child (moving
    up) or from a parent (moving down); colliders pass the ball only when
    they or one of their descendants is observed.
    """
    X, Y, W = _as_set(graph, X), _as_set(graph, Y), _as_set(graph, W)
    if X & Y or X & W or Y & W:
        raise ModelError("X, Y and W must be disjoint")
    if not X or not Y:
        return True
    observed_anc = W | graph.ancestors(W)
    UP, DOWN = 0, 1
    queue = deque((x, UP) for x in X)
    seen: set = set()
    while queue:
        v, d = queue.popleft()
        if (v, d) in seen:
            continue
        seen.add((v, d))
        if v not in W and v in Y:
            return False
        if d == UP and v not in W:
            queue.extend((p, UP) for p in graph.parents[v])
            queue.extend((c, DOWN) for c in graph.children(v))
        elif d == DOWN:
            if v not in W:
                queue.extend((c, DOWN) for c in graph.children(v))
            if v in observed_anc:
                queue.extend((p, UP) for p in graph.parents[v])
    return True


def _aux_name(graph: MaidGraph, v: str) -> str:
    name = f"{v}^"
    while name in graph:
        name += "^"
    return name


def augment(graph: MaidGraph, v: str) -> tuple[MaidGraph, str]:
    """Copy of ``graph`` with a fresh parentless chance node feeding ``v``."""
    aux = _aux_name(graph, v)
    nodes = graph.nodes + (Node(aux, "chance"),)
    parents = dict(graph.parents)
    parents[aux] = ()
    parents[v] = parents[v] + (aux,)
    return MaidGraph(graph.agents, nodes, parents), aux


def r_reachable(graph: MaidGraph, decision: str, v: str) -> bool:
    """Whether a new parent of ``v`` is d-connected to the decision-maker's
    downstream utilities given the decision's family."""
    if graph.kind(decision) != DECISION:
        raise ModelError(f"{decision!r} is not a decision node")
    if v not in graph:
        raise ModelError(f"unknown node {v!r}")
    owner = graph.owner(decision)
    targets = set(graph.utilities_of(owner)) & graph.descendants(decision)
    if not targets:
        return False
    aug, aux = augment(graph, v)
    return not d_separated(aug, {aux}, targets, set(graph.family(decision)))


def relevant_nodes(graph: MaidGraph, decision: str) -> set[str]:
    return {v for v in graph.names if v != decision and r_reachable(graph, decision, v)}


@dataclass(frozen=True)
class RelevanceGraph:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def successors(self, d: str) -> list[str]:
        return [b for a, b in self.edges if a == d]

    def to_dot(self) -> str:
        lines = ["digraph {"]
        lines += [f"  {_q(n)};" for n in self.nodes]
        lines += [f"  {_q(a)} -> {_q(b)};" for a, b in self.edges]
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CondensedRelevanceGraph:
    """SCCs of a relevance graph, sinks first; ``edges`` index into ``components``."""

    components: tuple[tuple[str, ...], ...]
    edges: tuple[tuple[int, int], ...]

    def component_of(self, d: str) -> int:
        for i, c in enumerate(self.components):
            if d in c:
                return i
        raise KeyError(d)

    def descendants(self, i: int) -> set[int]:
        out, stack = set(), [i]
        while stack:
            k = stack.pop()
            for a, b in self.edges:
                if a == k and b not in out:
                    out.add(b)
                    stack.append(b)
        return out

    def to_dot(self) -> str:
        lines = ["digraph {"]
        for i, comp in enumerate(self.components):
            lines.append(f"  subgraph cluster_{i} {{")
            lines.append(f'    label="C{i}";')
            lines += [f"    {_q(n)};" for n in comp]
            lines.append("  }")
        for a, b in self.edges:
            # edge between representatives, tagged with the component ids
            lines.append(f"  {_q(self.components[a][0])} -> {_q(self.components[b][0])}"
                         f" [ltail=cluster_{a}, lhead=cluster_{b}];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _q(s) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def relevance_graph(graph: MaidGraph | Maim) -> RelevanceGraph:
    if isinstance(graph, Maim):
        graph = graph.graph
    ds = graph.decisions
    edges = tuple((a, b) for a in ds for b in ds if a != b and r_reachable(graph, a, b))
    return RelevanceGraph(ds, edges)


def strongly_connected_components(nodes, succ) -> list[list]:
    """Tarjan's algorithm, iterative; components come out in reverse topological order."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    comps: list[list] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def condensed_relevance_graph(rel: RelevanceGraph, order=None) -> CondensedRelevanceGraph:
    """Contract SCCs of ``rel``.

    Components are listed in reverse topological order (a component comes
    after everything it points to); ties go to the component whose smallest
    member name sorts first.  Members keep ``order`` (default: ``rel.nodes``).
    """
    order = list(rel.nodes if order is None else order)
    pos = {d: i for i, d in enumerate(order)}
    succ = {d: [] for d in rel.nodes}
    for a, b in rel.edges:
        succ[a].append(b)
    raw = strongly_connected_components(rel.nodes, succ.__getitem__)
    raw = [tuple(sorted(c, key=pos.__getitem__)) for c in raw]
    comp_of = {d: i for i, c in enumerate(raw) for d in c}
    cedges = {(comp_of[a], comp_of[b]) for a, b in rel.edges if comp_of[a] != comp_of[b]}
    # Kahn on the reversed condensation: repeatedly emit a sink
    out_deg = {i: 0 for i in range(len(raw))}
    preds = {i: [] for i in range(len(raw))}
    for a, b in cedges:
        out_deg[a] += 1
        preds[b].append(a)
    ready = [i for i in out_deg if out_deg[i] == 0]
    ordered = []
    while ready:
        ready.sort(key=lambda i: min(map(str, raw[i])))
        i = ready.pop(0)
        ordered.append(i)
        for p in preds[i]:
            out_deg[p] -= 1
            if out_deg[p] == 0:
                ready.append(p)
    new = {old: k for k, old in enumerate(ordered)}
    comps = tuple(raw[i] for i in ordered)
    edges = tuple(sorted((new[a], new[b]) for a, b in cedges))
    return CondensedRelevanceGraph(comps, edges)


# ---------------------------------------------------------------------------
# semantic oracle


def strategically_relevant_semantic(model: Maim, dk: str, dl: str, bound: int = 10_000):
    """Search pure profiles for a witness that ``dk`` strategically relies on ``dl``.

    Returns ``("yes", witness)`` or ``("no-witness-found", None)``.  A pure
    search can confirm relevance but never refute it.
    """
    from .inference import UtilityGrid, marginal, option_profile, rule_options

    g = model.graph
    if dk == dl:
        raise ModelError("strategic relevance query needs two distinct decisions")
    for d in (dk, dl):
        if g.kind(d) != DECISION:
            raise ModelError(f"{d!r} is not a decision node")
    agent = g.owner(dk)
    ds = list(g.decisions)
    opts = {d: rule_options(model, d) for d in ds}
    total = int(np.prod([opts[d].size for d in ds]))
    if total > bound:
        raise ModelError(f"{total} pure profiles exceed the oracle bound {bound}")
    grid = UtilityGrid(model, {d: opts[d].tables for d in ds}, agents=[agent])
    vals = grid.values[agent]
    ik = ds.index(dk)
    pars = list(g.parents[dk])
    others = [d for d in ds if d != dk]
    other_ranges = [range(opts[d].size) for d in others]

    def best_of(cell):
        sl = list(cell)
        sl[ik] = slice(None)
        return vals[tuple(sl)]

    for combo in itertools.product(*other_ranges):
        cell = dict(zip(others, combo))
        base = best_of([cell.get(d, 0) for d in ds])
        winners = np.flatnonzero(base >= base.max() - ATOL)
        for alt in range(opts[dl].size):
            if alt == cell[dl]:
                continue
            cell2 = dict(cell, **{dl: alt})
            row2 = best_of([cell2.get(d, 0) for d in ds])
            top2 = row2.max()
            for r in winners:
                # patches are allowed wherever the original profile never reaches
                prof = {d: opts[d].tables[cell[d]] for d in others}
                prof[dk] = opts[dk].tables[r]
                rules = {d: model.rule(d, prof[d]) for d in ds}
                dist = induce(model, rules)
                pos = marginal(dist, pars).values > 0 if pars else np.array(True)
                agree = [
                    k for k in range(opts[dk].size)
                    if np.allclose(opts[dk].tables[k][pos], opts[dk].tables[r][pos])
                ]
                if all(row2[k] < top2 - ATOL for k in agree):
                    pi = option_profile(model, [opts[d] for d in ds], [cell.get(d, r) if d != dk else r for d in ds])
                    pi2 = option_profile(model, [opts[d] for d in ds], [cell2.get(d, r) if d != dk else r for d in ds])
                    return "yes", {"pi": pi, "pi_prime": pi2, "rule": pi[dk]}
    return "no-witness-found", None
