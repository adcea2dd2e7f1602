"""Extensive-form games: trees with chance moves, information sets and payoffs.

Trees are built bottom-up from :func:`leaf`, :func:`chance` and
:func:`move` and frozen into an :class:`Efg`, which numbers nodes in prefix
order (root first, children left to right).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Hashable, Iterator, Mapping, Sequence

import numpy as np

from .model import ATOL, ModelError

CHANCE_NODE, PLAYER_NODE, LEAF = "chance", "player", "leaf"


@dataclass
class TreeNode:
    kind: str
    actions: tuple = ()
    children: tuple = ()
    probs: tuple | None = None
    player: Hashable | None = None
    infoset: Hashable | None = None
    payoffs: tuple | None = None
    label: str = ""
    intervention: Hashable | None = None


def leaf(*payoffs, label: str = "") -> TreeNode:
    if len(payoffs) == 1 and isinstance(payoffs[0], (tuple, list)):
        payoffs = tuple(payoffs[0])
    return TreeNode(LEAF, payoffs=tuple(payoffs), label=label)


def chance(branches: Mapping[Any, tuple[float, TreeNode]] | Sequence[tuple[Any, float, TreeNode]],
           label: str = "", intervention=None) -> TreeNode:
    """Chance move from ``{action: (prob, child)}`` or ``[(action, prob, child), ...]``."""
    items = [(a, p, c) for a, (p, c) in branches.items()] if isinstance(branches, Mapping) else list(branches)
    return TreeNode(CHANCE_NODE, tuple(a for a, _, _ in items), tuple(c for _, _, c in items),
                    tuple(float(p) for _, p, _ in items), label=label, intervention=intervention)


def move(player, infoset, branches: Mapping[Any, TreeNode] | Sequence[tuple[Any, TreeNode]],
         label: str = "", intervention=None) -> TreeNode:
    """Decision of ``player`` at information set ``infoset``."""
    items = list(branches.items()) if isinstance(branches, Mapping) else list(branches)
    return TreeNode(PLAYER_NODE, tuple(a for a, _ in items), tuple(c for _, c in items),
                    player=player, infoset=infoset, label=label, intervention=intervention)


class Efg:
    """A finite game tree.

    ``nodes`` lists the tree in prefix order; ``parent[i]`` and
    ``children[i]`` are node indices.  Information sets are keyed by
    ``(player, infoset)``.
    """

    def __init__(self, agents: Sequence, root: TreeNode, title: str = "game", mapping=None):
        self.agents = tuple(agents)
        self.title = title
        self.root = root
        self.mapping = mapping
        nodes: list[TreeNode] = []
        parent: list[int | None] = []
        children: list[list[int]] = []
        depth: list[int] = []
        stack = [(root, None, 0)]
        while stack:
            node, par, dep = stack.pop()
            i = len(nodes)
            nodes.append(node)
            parent.append(par)
            children.append([])
            depth.append(dep)
            if par is not None:
                children[par].append(i)
            for c in reversed(node.children):
                stack.append((c, i, dep + 1))
        self.nodes = nodes
        self.parent = parent
        self.children = [tuple(c) for c in children]
        self.depth = depth
        self._check()
        sets: dict = {}
        for i, v in enumerate(nodes):
            if v.kind == PLAYER_NODE:
                sets.setdefault((v.player, v.infoset), []).append(i)
        self._infosets = {k: tuple(m) for k, m in sets.items()}

    # -- structure ---------------------------------------------------------
    def _check(self):
        n = len(self.agents)
        sets: dict = {}
        for i, v in enumerate(self.nodes):
            if v.kind == LEAF:
                if v.children:
                    raise ModelError(f"node {i}: leaf with children")
                if v.payoffs is None or len(v.payoffs) != n:
                    raise ModelError(f"node {i}: leaf needs {n} payoffs")
                continue
            if not v.children or len(v.children) != len(v.actions):
                raise ModelError(f"node {i}: needs one child per action")
            if len(set(v.actions)) != len(v.actions):
                raise ModelError(f"node {i}: repeated action labels")
            if v.kind == CHANCE_NODE:
                if v.probs is None or len(v.probs) != len(v.actions):
                    raise ModelError(f"node {i}: chance node needs one probability per action")
                if any(p < -ATOL for p in v.probs) or abs(sum(v.probs) - 1) > ATOL:
                    raise ModelError(f"node {i}: chance probabilities must sum to 1")
            elif v.kind == PLAYER_NODE:
                if v.player not in self.agents:
                    raise ModelError(f"node {i}: unknown player {v.player!r}")
                key = (v.player, v.infoset)
                if key in sets and sets[key] != v.actions:
                    raise ModelError(f"information set {key}: members offer different actions")
                sets[key] = v.actions
            else:
                raise ModelError(f"node {i}: unknown kind {v.kind!r}")

    def __len__(self):
        return len(self.nodes)

    @property
    def leaves(self) -> list[int]:
        return [i for i, v in enumerate(self.nodes) if v.kind == LEAF]

    def infosets(self) -> dict[tuple, list[int]]:
        """``(player, infoset) -> member nodes``, in first-encounter order."""
        return {k: list(m) for k, m in self._infosets.items()}

    def actions(self, key) -> tuple:
        return self.nodes[self._infosets[key][0]].actions

    def path(self, i: int) -> list[tuple[int, int]]:
        """``(node, child position)`` pairs from the root down to node ``i``."""
        out = []
        while self.parent[i] is not None:
            p = self.parent[i]
            out.append((p, self.children[p].index(i)))
            i = p
        return out[::-1]

    def subtree(self, i: int) -> list[int]:
        out, stack = [], [i]
        while stack:
            k = stack.pop()
            out.append(k)
            stack.extend(self.children[k])
        return sorted(out)

    def absentminded_infosets(self) -> list[tuple]:
        """Information sets that some root-to-leaf path crosses more than once."""
        bad = []
        for key, members in self.infosets().items():
            mem = set(members)
            if any(any(p in mem for p, _ in self.path(m)) for m in members):
                bad.append(key)
        return bad

    # -- strategies --------------------------------------------------------
    def uniform_strategy(self) -> dict:
        return {k: np.full(len(self.actions(k)), 1.0 / len(self.actions(k))) for k in self.infosets()}

    def pure_strategy(self, choice: Mapping) -> dict:
        """Behavioural profile from ``{infoset key: action label}``."""
        out = {}
        for k in self.infosets():
            acts = self.actions(k)
            vec = np.zeros(len(acts))
            vec[acts.index(choice[k])] = 1.0
            out[k] = vec
        return out

    def pure_strategies(self) -> Iterator[dict]:
        keys = list(self.infosets())
        for combo in itertools.product(*(self.actions(k) for k in keys)):
            yield dict(zip(keys, combo))


def efg_expected_utilities(game: Efg, sigma: Mapping) -> np.ndarray:
    """Expected payoff vector under a behavioural profile ``{infoset key: probs}``."""
    for k in game.infosets():
        if k not in sigma:
            raise ModelError(f"strategy profile misses information set {k}")
    total = np.zeros(len(game.agents))
    stack = [(0, 1.0)]
    while stack:
        i, p = stack.pop()
        v = game.nodes[i]
        if v.kind == LEAF:
            total += p * np.asarray(v.payoffs, dtype=float)
            continue
        probs = v.probs if v.kind == CHANCE_NODE else sigma[(v.player, v.infoset)]
        for c, q in zip(game.children[i], probs):
            if q > 0:
                stack.append((c, p * q))
    return total


def efg_expected_utility(game: Efg, sigma: Mapping, agent) -> float:
    if agent not in game.agents:
        raise ModelError(f"unknown agent {agent!r}")
    return float(efg_expected_utilities(game, sigma)[game.agents.index(agent)])


def pure_payoff_tensor(game: Efg) -> tuple[list, np.ndarray]:
    """Payoffs of every pure profile: array with one axis per information set plus agents.

    Each leaf adds its chance-weighted payoff to the block of profiles that
    choose the actions on its path.
    """
    keys = list(game.infosets())
    pos = {k: j for j, k in enumerate(keys)}
    shape = tuple(len(game.actions(k)) for k in keys)
    out = np.zeros(shape + (len(game.agents),))
    for lf in game.leaves:
        weight = 1.0
        idx: list[Any] = [slice(None)] * len(keys)
        consistent = True
        for node, j in game.path(lf):
            v = game.nodes[node]
            if v.kind == CHANCE_NODE:
                weight *= v.probs[j]
            else:
                k = pos[(v.player, v.infoset)]
                if idx[k] != slice(None) and idx[k] != j:
                    consistent = False  # absentminded path needs two different actions
                idx[k] = j
        if consistent and weight > 0:
            out[tuple(idx)] += weight * np.asarray(game.nodes[lf].payoffs, dtype=float)
    return keys, out


# ---------------------------------------------------------------------------
# .efg text export


def _quote(s) -> str:
    return '"' + str(s).replace('"', '""') + '"'


def format_number(x) -> str:
    """Integers as integers, short rationals as ``p/q``, otherwise 17 significant digits."""
    if isinstance(x, Fraction):
        fr = x
    else:
        x = float(x)
        if x == 0:
            return "0"
        if x.is_integer():
            return str(int(x))
        fr = Fraction(x).limit_denominator(10**6)
        if float(fr) != x:
            return f"{x:.17g}"
    if fr.denominator == 1:
        return str(fr.numerator)
    return f"{fr.numerator}/{fr.denominator}"


def export_efg_text(game: Efg) -> str:
    """Serialize in the version-2 ``.efg`` outcome format, nodes in prefix order."""
    lines = [f"EFG 2 R {_quote(game.title)} {{ " + " ".join(_quote(a) for a in game.agents) + " }"]
    player_no = {a: k + 1 for k, a in enumerate(game.agents)}
    iset_no: dict = {}
    per_player: dict = {}
    chance_count = 0
    outcome = 0
    for i, v in enumerate(game.nodes):
        if v.kind == CHANCE_NODE:
            chance_count += 1
            acts = " ".join(f"{_quote(a)} {format_number(p)}" for a, p in zip(v.actions, v.probs))
            lines.append(f"c {_quote(v.label)} {chance_count} \"\" {{ {acts} }} 0")
        elif v.kind == PLAYER_NODE:
            key = (v.player, v.infoset)
            if key not in iset_no:
                per_player[v.player] = per_player.get(v.player, 0) + 1
                iset_no[key] = per_player[v.player]
            acts = " ".join(_quote(a) for a in v.actions)
            lines.append(f"p {_quote(v.label)} {player_no[v.player]} {iset_no[key]} \"\" {{ {acts} }} 0")
        else:
            outcome += 1
            pay = ", ".join(format_number(u) for u in v.payoffs)
            lines.append(f"t {_quote(v.label)} {outcome} \"\" {{ {pay} }}")
    return "\n".join(lines) + "\n"
