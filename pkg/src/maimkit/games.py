"""Small reference games used by the demos, the CLI examples and the tests."""
from __future__ import annotations

import itertools
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .efg import Efg, leaf, move
from .model import CHANCE, DECISION, UTILITY, Cpd, MaidGraph, Maim, Node, check


def table_cpd(child: str, parents: Sequence[str], domains: Mapping[str, Sequence],
              fn: Callable[..., Any]) -> Cpd:
    """CPD from ``fn(*parent_values)`` returning a ``{value: prob}`` dict or a single value."""
    parents = tuple(parents)
    dom = list(domains[child])
    shape = tuple(len(domains[p]) for p in parents) + (len(dom),)
    arr = np.zeros(shape)
    for idx in itertools.product(*(range(s) for s in shape[:-1])):
        vals = [domains[p][i] for p, i in zip(parents, idx)]
        out = fn(*vals)
        if isinstance(out, Mapping):
            for v, p in out.items():
                arr[idx + (dom.index(v),)] = p
        else:
            arr[idx + (dom.index(out),)] = 1.0
    return Cpd(child, parents, arr)


def make_maim(name: str, agents, nodes: Sequence[tuple], chance: Mapping[str, Callable] | None = None,
              utility: Mapping[str, Callable] | None = None, domains: Mapping[str, Sequence] | None = None) -> Maim:
    """Assemble a model from ``(name, kind, owner, parents)`` tuples.

    Chance nodes take a domain from ``domains`` and a function returning a
    distribution; utility nodes take a function returning a number and get
    the sorted set of attained values as their domain.
    """
    chance = dict(chance or {})
    utility = dict(utility or {})
    doms = {k: tuple(v) for k, v in (domains or {}).items()}
    node_objs, edges = [], []
    for name_, kind, owner, parents in nodes:
        node_objs.append(Node(name_, kind, owner))
        edges += [(p, name_) for p in parents]
    graph = MaidGraph.build(agents, node_objs, edges)
    for u, fn in utility.items():
        pars = graph.parents[u]
        vals = {fn(*c) for c in itertools.product(*(doms[p] for p in pars))}
        doms[u] = tuple(sorted(vals))
    cpds = {}
    for n in graph.nodes:
        if n.kind == CHANCE:
            cpds[n.name] = table_cpd(n.name, graph.parents[n.name], doms, chance[n.name])
        elif n.kind == UTILITY:
            cpds[n.name] = table_cpd(n.name, graph.parents[n.name], doms, utility[n.name])
    return check(Maim(graph, doms, cpds, name))


def taxi() -> Maim:
    """Two taxis choose between an expensive (e) and a cheap (c) hotel; taxi 2 sees taxi 1."""
    u1 = {("e", "e"): 2, ("c", "e"): 3, ("e", "c"): 5, ("c", "c"): 1}
    u2 = {("e", "e"): 2, ("c", "e"): 5, ("e", "c"): 3, ("c", "c"): 1}
    return make_maim(
        "taxi", (1, 2),
        [("D1", DECISION, 1, ()), ("D2", DECISION, 2, ("D1",)),
         ("U1", UTILITY, 1, ("D1", "D2")), ("U2", UTILITY, 2, ("D1", "D2"))],
        utility={"U1": lambda a, b: u1[a, b], "U2": lambda a, b: u2[a, b]},
        domains={"D1": ("e", "c"), "D2": ("e", "c")},
    )


def cyber_war() -> Maim:
    """Simultaneous attack (a) / not attack (n) game between two states."""
    u1 = {("a", "a"): -2, ("n", "a"): -4, ("a", "n"): 0, ("n", "n"): 0}
    u2 = {("a", "a"): -2, ("a", "n"): -4, ("n", "a"): 0, ("n", "n"): 0}
    return make_maim(
        "cyber-war", (1, 2),
        [("D1", DECISION, 1, ()), ("D2", DECISION, 2, ()),
         ("U1", UTILITY, 1, ("D1", "D2")), ("U2", UTILITY, 2, ("D1", "D2"))],
        utility={"U1": lambda a, b: u1[a, b], "U2": lambda a, b: u2[a, b]},
        domains={"D1": ("a", "n"), "D2": ("a", "n")},
    )


def job_hiring(p_hard: float = 0.5) -> Maim:
    """A worker (hard-working h or lazy l) picks a degree (g) or not (a); the firm hires (j) or rejects (r)."""
    u1 = {("h", "g", "j"): 4, ("h", "g", "r"): -1, ("h", "a", "j"): 5, ("h", "a", "r"): 0,
          ("l", "a", "j"): 3, ("l", "a", "r"): 0, ("l", "g", "j"): 2, ("l", "g", "r"): -2}
    u2 = {("h", "j"): 3, ("h", "r"): -1, ("l", "j"): -2, ("l", "r"): 0}
    return make_maim(
        "job-hiring", (1, 2),
        [("X", CHANCE, None, ()), ("D1", DECISION, 1, ("X",)), ("D2", DECISION, 2, ("D1",)),
         ("U1", UTILITY, 1, ("X", "D1", "D2")), ("U2", UTILITY, 2, ("X", "D2"))],
        chance={"X": lambda: {"h": p_hard, "l": 1 - p_hard}},
        utility={"U1": lambda x, a, b: u1[x, a, b], "U2": lambda x, b: u2[x, b]},
        domains={"X": ("h", "l"), "D1": ("g", "a"), "D2": ("j", "r")},
    )


def extra_subgames() -> Maim:
    """Two-stage game with four proper MAID subgames that the tree form hides.

    Agent 1 sees a fair coin X and is paid for matching it (a with c, b with
    d); agent 2 sees D1 and is paid for coordinating (c with e, d with f).
    """
    return make_maim(
        "extra-subgames", (1, 2),
        [("X", CHANCE, None, ()), ("D1", DECISION, 1, ("X",)), ("D2", DECISION, 2, ("D1",)),
         ("U1", UTILITY, 1, ("X", "D1")), ("U2", UTILITY, 2, ("D1", "D2"))],
        chance={"X": lambda: {"a": 0.5, "b": 0.5}},
        utility={"U1": lambda x, d: int((x, d) in {("a", "c"), ("b", "d")}),
                 "U2": lambda d1, d2: int((d1, d2) in {("c", "e"), ("d", "f")})},
        domains={"X": ("a", "b"), "D1": ("c", "d"), "D2": ("e", "f")},
    )


def chance_chain(k: int) -> Maim:
    """One-decision game with ``k`` extra chance nodes that nobody observes.

    X0 is observed by D; X1..Xk form a chain hanging off X0 and feed U only
    through the last link, so they are neither decisions nor informational
    parents.
    """
    nodes = [("X0", CHANCE, None, ())]
    chance = {"X0": lambda: {0: 0.5, 1: 0.5}}
    prev = "X0"
    for i in range(1, k + 1):
        nodes.append((f"X{i}", CHANCE, None, (prev,)))
        chance[f"X{i}"] = lambda v: {v: 0.9, 1 - v: 0.1}
        prev = f"X{i}"
    nodes += [("D", DECISION, 1, ("X0",)), ("U", UTILITY, 1, ("D", prev))]
    doms = {f"X{i}": (0, 1) for i in range(k + 1)}
    doms["D"] = (0, 1)
    return make_maim(f"chance-chain-{k}", (1,), nodes, chance=chance,
                     utility={"U": lambda d, x: int(d == x)}, domains=doms)


def absentminded_driver() -> Efg:
    """A driver passes two identical exits: exiting at the first pays 0, at the second 4, never 1."""
    second = move(1, "I", [("e", leaf(4)), ("c", leaf(1))], label="D", intervention="D")
    root = move(1, "I", [("e", leaf(0)), ("c", second)], label="D", intervention="D")
    return Efg((1,), root, "absentminded-driver")


def taxi_efg(merged: bool = True) -> Efg:
    """Tree form of :func:`taxi`; ``merged`` puts both of taxi 2's nodes in one intervention set."""
    u = {("e", "e"): (2, 2), ("c", "e"): (3, 5), ("e", "c"): (5, 3), ("c", "c"): (1, 1)}
    kids = []
    for a in ("e", "c"):
        iv = "D2" if merged else None
        kids.append((a, move(2, f"D2|{a}", [(b, leaf(*u[(a, b)])) for b in ("e", "c")],
                             label="D2", intervention=iv)))
    return Efg((1, 2), move(1, "D1", kids, label="D1", intervention="D1"), "taxi")


MODELS = {
    "taxi": taxi,
    "cyber-war": cyber_war,
    "job-hiring": job_hiring,
    "extra-subgames": extra_subgames,
}
