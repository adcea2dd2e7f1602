"""Conversions between models and game trees.

``maim_to_efg`` unrolls a model into a symmetric tree split on a
topologically ordered set of variables.  ``efg_to_maim`` builds the
canonical model of a tree: one variable per intervention set, one utility
node per (player, parent set), and a null value wherever a parent setting
does not correspond to a path of the tree.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .efg import (
    CHANCE_NODE,
    LEAF,
    PLAYER_NODE,
    Efg,
    TreeNode,
    efg_expected_utilities,
    pure_payoff_tensor,
)
from .inference import UtilityGrid, expected_utilities, marginal
from .model import (
    CHANCE,
    DECISION,
    NULL,
    UTILITY,
    Cpd,
    DecisionRule,
    MaidGraph,
    Maim,
    MirrorCpd,
    ModelError,
    Node,
    PureProfile,
    check,
    induce,
)


class InterventionSetError(ModelError):
    """An intervention set violates one of its defining conditions."""


class AbsentmindednessError(ModelError):
    """The tree revisits an information set on some path."""


@dataclass(frozen=True)
class NaturalMapping:
    """Information sets of a tree paired with decision contexts of a model.

    ``entries`` holds ``(infoset key, decision, context)`` triples; contexts
    are value tuples in the decision's parent order.  Contexts of a decision
    that no information set maps to are irrelevant to every payoff.
    """

    entries: tuple[tuple[Hashable, str, tuple], ...]

    def infosets_of(self, decision: str) -> list[tuple[Hashable, tuple]]:
        return [(k, c) for k, d, c in self.entries if d == decision]

    def decision_of(self, key) -> tuple[str, tuple]:
        for k, d, c in self.entries:
            if k == key:
                return d, c
        raise KeyError(key)

    def to_policy(self, model: Maim, game: Efg, sigma: Mapping) -> dict[str, DecisionRule]:
        """Decision rules playing ``sigma`` at mapped contexts and the first action elsewhere."""
        rules = {d: model.constant_rule(d, model.domains[d][0]) for d in model.graph.decisions}
        for key, d, ctx in self.entries:
            idx = model.context_indices(ctx, d)
            row = np.zeros(model.card(d))
            for a, p in zip(game.actions(key), sigma[key]):
                row[model.value_index(d, a)] += p
            rules[d].values[idx] = row
        return rules

    def to_strategy(self, model: Maim, game: Efg, rules: Mapping[str, DecisionRule]) -> dict:
        out = {}
        for key, d, ctx in self.entries:
            row = rules[d].values[model.context_indices(ctx, d)]
            out[key] = np.array([row[model.value_index(d, a)] for a in game.actions(key)])
        return out

    def pure_profile(self, model: Maim, choice: Mapping, contexts: Iterable | None = None) -> PureProfile:
        """PureProfile over mapped contexts (optionally only those in ``contexts``)."""
        keep = None if contexts is None else set(contexts)
        table: dict[str, dict] = {d: {} for d in model.graph.decisions}
        for key, d, ctx in self.entries:
            if keep is None or (d, ctx) in keep:
                table[d][ctx] = choice[key]
        return PureProfile.from_dict({d: dict(sorted(t.items(), key=lambda kv: model.context_indices(kv[0], d)))
                                      for d, t in table.items()})


# ---------------------------------------------------------------------------
# model -> tree


def splitting_set(model: Maim, mode: str = "full") -> list[str]:
    g = model.graph
    if mode == "full":
        s = set(g.chances) | set(g.decisions)
    elif mode == "minimal":
        s = set(g.decisions) | {p for d in g.decisions for p in g.parents[d]}
    else:
        raise ModelError(f"unknown conversion mode {mode!r}")
    return [v for v in g.topological_order() if v in s]


def topological_orders(model: Maim, nodes: Sequence[str], limit: int = 100) -> list[list[str]]:
    """Orders of ``nodes`` compatible with ancestry, lexicographic by declaration, at most ``limit``."""
    g = model.graph
    nodes = g.sort(nodes)
    before = {v: g.ancestors(v) & set(nodes) for v in nodes}
    out: list[list[str]] = []

    def rec(prefix, rest):
        if len(out) >= limit:
            return
        if not rest:
            out.append(list(prefix))
            return
        placed = set(prefix)
        for v in rest:
            if before[v] <= placed:
                rec(prefix + [v], [r for r in rest if r != v])

    rec([], nodes)
    return out


def maim_to_efg(model: Maim, mode: str = "full", order: Sequence[str] | None = None,
                title: str | None = None) -> Efg:
    """Unroll ``model`` into a tree splitting on chance nodes and decisions (``full``)
    or on decisions and their observations only (``minimal``).

    Chance branches carry ``Pr(S = s | path so far)``; zero-probability
    branches are dropped.  Decision nodes with the same decision and the same
    observed parent values share an information set keyed ``(D, context)``.
    Leaves pay each agent the expected sum of its utilities given the path.
    The natural mapping is attached as ``.mapping``.
    """
    g = model.graph
    s = splitting_set(model, mode)
    if order is None:
        order = s
    else:
        order = list(order)
        if sorted(order) != sorted(s):
            raise ModelError(f"order must list exactly {s}")
        pos = {v: i for i, v in enumerate(order)}
        for v in order:
            if any(pos[a] > pos[v] for a in g.ancestors(v) if a in pos):
                raise ModelError(f"order is not topological at {v}")
    dist = induce(model, model.uniform_profile())
    agents = g.agents
    utils = [(agents.index(g.owner(u)), u, np.asarray(model.domains[u], dtype=float)) for u in g.utilities]
    entries: dict = {}

    def build(t: int, mu: dict) -> TreeNode:
        if t == len(order):
            pay = np.zeros(len(agents))
            for k, u, vals in utils:
                res = marginal(dist, [u], mu)
                pay[k] += float(res.values @ vals)
            return TreeNode(LEAF, payoffs=tuple(float(x) for x in pay))
        y = order[t]
        if g.kind(y) == DECISION:
            ctx = tuple(mu[p] for p in g.parents[y])
            key = (y, ctx)
            entries.setdefault((g.owner(y), key), (y, ctx))
            kids = [build(t + 1, {**mu, y: a}) for a in model.domains[y]]
            return TreeNode(PLAYER_NODE, tuple(model.domains[y]), tuple(kids), player=g.owner(y),
                            infoset=key, label=str(y))
        res = marginal(dist, [y], mu)
        acts, probs, kids = [], [], []
        for a, p in zip(model.domains[y], res.values):
            if p > 0:
                acts.append(a)
                probs.append(float(p))
                kids.append(build(t + 1, {**mu, y: a}))
        return TreeNode(CHANCE_NODE, tuple(acts), tuple(kids), tuple(probs), label=str(y))

    root = build(0, {})
    mapping = NaturalMapping(tuple((k, d, c) for k, (d, c) in entries.items()))
    return Efg(agents, root, title or model.name, mapping)


def maim_to_efgs(model: Maim, mode: str = "full", limit: int = 100) -> list[Efg]:
    """One tree per admissible splitting order (at most ``limit``)."""
    return [maim_to_efg(model, mode, o) for o in topological_orders(model, splitting_set(model, mode), limit)]


# ---------------------------------------------------------------------------
# tree -> model


@dataclass
class _Var:
    name: str
    kind: str
    owner: Any = None
    members: list = field(default_factory=list)  # tree nodes (chance / instance) or infoset keys
    nodes: list = field(default_factory=list)  # tree nodes setting this variable
    decision: str | None = None  # for decision instances
    parents: list = field(default_factory=list)
    domain: list = field(default_factory=list)


def _names(game: Efg, allow_absent: bool):
    """Assign a variable to every non-leaf node; returns (vars by id, node -> var id, infoset -> var id)."""
    absent = set(game.absentminded_infosets())
    if absent and not allow_absent:
        raise AbsentmindednessError(
            f"information sets {sorted(map(str, absent))} are revisited on some path; use absentminded_transform")
    if allow_absent and not absent:
        raise ModelError("game has no absentmindedness; use efg_to_maim")
    iset_int: dict = {}
    for key, members in game.infosets().items():
        ids = {game.nodes[m].intervention for m in members}
        if len(ids) > 1:
            raise InterventionSetError(f"information set {key} is split across intervention sets {sorted(map(str, ids))}")
        i = ids.pop()
        iset_int[key] = ("i", key) if i is None else i
    vars_: dict = {}
    node_var: dict[int, Hashable] = {}
    counters = {CHANCE: 0, DECISION: 0}
    taken: set = set()

    def fresh(kind, ident):
        if isinstance(ident, str):
            name = ident
        else:
            while True:
                counters[kind] += 1
                name = f"{'X' if kind == CHANCE else 'D'}{counters[kind]}"
                if name not in taken and not any(
                        game.nodes[i].intervention == name for i in range(len(game))):
                    break
        if name in taken:
            raise InterventionSetError(f"variable name {name!r} used twice")
        taken.add(name)
        return name

    for i, v in enumerate(game.nodes):
        if v.kind == CHANCE_NODE:
            ident = ("c", i) if v.intervention is None else v.intervention
            if ident not in vars_:
                vars_[ident] = _Var(fresh(CHANCE, ident), CHANCE)
            var = vars_[ident]
            if var.kind != CHANCE:
                raise InterventionSetError(f"intervention set {ident!r} mixes chance and decision nodes")
            var.nodes.append(i)
            node_var[i] = ident
        elif v.kind == PLAYER_NODE:
            key = (v.player, v.infoset)
            ident = iset_int[key]
            if ident not in vars_:
                vars_[ident] = _Var(fresh(DECISION, ident), DECISION, v.player)
            var = vars_[ident]
            if var.kind != DECISION or var.owner != v.player:
                raise InterventionSetError(f"intervention set {ident!r} mixes players or node kinds")
            if key not in var.members:
                var.members.append(key)
            var.nodes.append(i)
            node_var[i] = ident
    # decision instances for absentminded information sets
    if allow_absent:
        for key in game.absentminded_infosets():
            ident = iset_int[key]
            dvar = vars_[ident]
            visits: dict[int, list[int]] = {}
            mem = set(game.infosets()[key])
            for m in game.infosets()[key]:
                k = 1 + sum(1 for p, _ in game.path(m) if p in mem)
                visits.setdefault(k, []).append(m)
            for k in sorted(visits):
                inst = ("inst", ident, k)
                name = f"X^{dvar.name}_{k}"
                if name in taken:
                    raise InterventionSetError(f"variable name {name!r} used twice")
                taken.add(name)
                vars_[inst] = _Var(name, CHANCE, decision=ident, nodes=list(visits[k]))
                for m in visits[k]:
                    node_var[m] = inst
    return vars_, node_var, iset_int


def _path_assign(game: Efg, node_var, i: int) -> dict:
    return {node_var[p]: game.nodes[p].actions[j] for p, j in game.path(i)}


def _efg_to_maim(game: Efg, allow_absent: bool, name: str | None) -> Maim:
    vars_, node_var, iset_int = _names(game, allow_absent)
    order = list(vars_)  # first encounter in prefix order (instances last)
    # place instance variables right after their decision for readable ordering
    order.sort(key=lambda ident: min(vars_[ident].nodes) if vars_[ident].nodes else 0)
    paths = {i: _path_assign(game, node_var, i) for i in range(len(game))}
    infosets = game.infosets()

    # domains: ordered union of outgoing labels
    for ident in order:
        var = vars_[ident]
        src = var.nodes if var.decision is None else vars_[var.decision].nodes
        for i in src:
            for a in game.nodes[i].actions:
                if a not in var.domain:
                    var.domain.append(a)

    # Def. checks on intervention sets: equal child counts, one crossing per path
    for ident in order:
        var = vars_[ident]
        if var.decision is not None:
            continue
        counts = {len(game.nodes[i].actions) for i in var.nodes}
        if len(counts) > 1:
            raise InterventionSetError(f"intervention set {var.name}: members have different numbers of children")
        mem = set(var.nodes)
        absent_ok = allow_absent and var.kind == DECISION and any(
            node_var[m] != ident for m in var.nodes)
        if not absent_ok:
            for m in var.nodes:
                if any(p in mem for p, _ in game.path(m)):
                    raise InterventionSetError(f"intervention set {var.name}: a path crosses it twice")

    # decision parents: variables with the same label on every path into the information set
    mapping = []
    for ident in order:
        var = vars_[ident]
        if var.kind != DECISION:
            continue
        mus, contexts = [], []
        for key in var.members:
            common = None
            for m in infosets[key]:
                pa = paths[m]
                common = dict(pa) if common is None else {k: v for k, v in common.items() if k in pa and pa[k] == v}
            mus.append(common)
        varsets = [set(mu) for mu in mus]
        if any(s != varsets[0] for s in varsets):
            raise InterventionSetError(
                f"intervention set {var.name}: information sets have different knowledge of the path")
        var.parents = [p for p in order if p in varsets[0]]
        for key, mu in zip(var.members, mus):
            ctx = tuple(mu[p] for p in var.parents)
            if ctx in contexts:
                raise InterventionSetError(
                    f"intervention set {var.name}: two information sets share the context {ctx}")
            contexts.append(ctx)
            mapping.append((key, ident, ctx))

    # chance parents: every variable on some path into a member
    for ident in order:
        var = vars_[ident]
        if var.kind != CHANCE:
            continue
        anc = set()
        for i in var.nodes:
            anc |= set(paths[i])
        if var.decision is not None:
            anc.add(var.decision)
        var.parents = [p for p in order if p in anc]

    # utility nodes: one per player and set of ancestor variables (instances of
    # one absentminded decision count as one ancestor)
    def group_key(v):
        return ("inst", vars_[v].decision) if vars_[v].decision is not None else v

    groups: dict = {}
    for lf in game.leaves:
        anc = set(paths[lf])
        gk = frozenset(group_key(v) for v in anc)
        for k, a in enumerate(game.agents):
            groups.setdefault((a, gk), {"leaves": [], "parents": set()})
            groups[(a, gk)]["leaves"].append((lf, k))
            groups[(a, gk)]["parents"] |= anc
    per_player: dict = {}
    for a, _ in groups:
        per_player[a] = per_player.get(a, 0) + 1
    util_vars = []
    seen: dict = {}
    for (a, gk), info in groups.items():
        seen[a] = seen.get(a, 0) + 1
        stem = "U" if len(game.agents) == 1 else f"U{a}"
        uname = stem if per_player[a] == 1 else f"{stem}_{seen[a]}"
        if any(vars_[v].name == uname for v in vars_):
            uname = "_" + uname
        util_vars.append((uname, a, [p for p in order if p in info["parents"]], info["leaves"]))

    # graph
    nodes = []
    parents = {}
    for ident in order:
        var = vars_[ident]
        nodes.append(Node(var.name, var.kind, var.owner if var.kind == DECISION else None))
        parents[var.name] = tuple(vars_[p].name for p in var.parents)
    for uname, a, pars, _ in util_vars:
        nodes.append(Node(uname, UTILITY, a))
        parents[uname] = tuple(vars_[p].name for p in pars)
    graph = MaidGraph(tuple(game.agents), tuple(nodes), parents)
    if not graph.is_acyclic():
        raise InterventionSetError("merging intervention sets creates a cycle")

    domains: dict[str, tuple] = {}
    cpds: dict = {}
    for ident in order:
        var = vars_[ident]
        domains[var.name] = tuple(var.domain)
    for ident in order:
        var = vars_[ident]
        if var.kind != CHANCE:
            continue
        pshape = tuple(len(domains[vars_[p].name]) for p in var.parents)
        if var.decision is not None:
            mask = np.zeros(pshape, dtype=bool)
            for i in var.nodes:
                mask[_index(vars_, var.parents, paths[i])] = True
            dom = tuple(var.domain) + ((NULL,) if not mask.all() else ())
            domains[var.name] = dom
            cpds[var.name] = MirrorCpd(var.name, tuple(vars_[p].name for p in var.parents),
                                       vars_[var.decision].name, mask)
            continue
        card = len(var.domain)
        table = np.zeros(pshape + (card + 1,))
        for i in var.nodes:
            v = game.nodes[i]
            idx = _index(vars_, var.parents, paths[i])
            for a, p in zip(v.actions, v.probs):
                table[idx + (var.domain.index(a),)] += p
        empty = table.sum(axis=-1) == 0
        if empty.any():
            table[..., card][empty] = 1.0
            domains[var.name] = tuple(var.domain) + (NULL,)
        else:
            table = table[..., :card]
        cpds[var.name] = Cpd(var.name, tuple(vars_[p].name for p in var.parents), table)
    for uname, a, pars, leaves in util_vars:
        pay = {float(game.nodes[lf].payoffs[k]) for lf, k in leaves}
        pshape = tuple(len(domains[vars_[p].name]) for p in pars)
        covered = np.zeros(pshape, dtype=bool)
        for lf, _ in leaves:
            covered[_index(vars_, pars, paths[lf])] = True
        dom_vals = sorted(pay | ({0.0} if not covered.all() else set()))
        dom = tuple(_tidy(x) for x in dom_vals)
        table = np.zeros(pshape + (len(dom),))
        zero = dom_vals.index(0.0) if 0.0 in dom_vals else None
        if zero is not None:
            table[..., zero] = 1.0
        for lf, k in leaves:
            idx = _index(vars_, pars, paths[lf])
            table[idx] = 0.0
            table[idx + (dom_vals.index(float(game.nodes[lf].payoffs[k])),)] = 1.0
        domains[uname] = dom
        cpds[uname] = Cpd(uname, tuple(vars_[p].name for p in pars), table)
    nm = NaturalMapping(tuple((key, vars_[ident].name, ctx) for key, ident, ctx in mapping))
    model = Maim(graph, domains, cpds, name or game.title, mapping=nm)
    try:
        return check(model)
    except ModelError as e:
        raise InterventionSetError(f"intervention sets do not describe a single variable each: {e}") from None


def _tidy(x: float):
    return int(x) if float(x).is_integer() else x


def _index(vars_, parents, assign) -> tuple:
    """Index into a table over ``parents``: path labels where known, wildcards elsewhere."""
    out = []
    for p in parents:
        if p in assign:
            out.append(vars_[p].domain.index(assign[p]))
        else:
            out.append(slice(None))
    return tuple(out)


def efg_to_maim(game: Efg, name: str | None = None) -> Maim:
    """Canonical model of a tree without absentmindedness.

    Intervention sets default to single chance nodes and single information
    sets; set ``TreeNode.intervention`` to merge nodes that represent one
    variable.  The natural mapping is attached as ``.mapping``.
    """
    return _efg_to_maim(game, False, name)


def absentminded_transform(game: Efg, name: str | None = None) -> Maim:
    """Model of a tree that revisits information sets.

    Each revisited information set becomes a decision ``D`` carrying the
    behavioural rule plus chance nodes ``X^D_k``, one per visit number, that
    replay ``D``'s rule whenever the path actually reaches the k-th visit and
    take the null value otherwise.
    """
    return _efg_to_maim(game, True, name)


# ---------------------------------------------------------------------------
# equivalence checks


@dataclass
class EquivalenceReport:
    pure_checked: int = 0
    mixed_checked: int = 0
    null_checked: int = 0
    max_error: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and self.max_error <= 1e-9


def _fits(mapping, game: Efg, model: Maim) -> bool:
    if not isinstance(mapping, NaturalMapping):
        return False
    if {k for k, _, _ in mapping.entries} != set(game.infosets()):
        return False
    g = model.graph
    return all(d in g.decisions and len(c) == len(g.parents[d]) and
               all(c_i in model.domains[p] for c_i, p in zip(c, g.parents[d]))
               for _, d, c in mapping.entries)


def natural_mapping(game: Efg, model: Maim) -> NaturalMapping:
    """The mapping recorded by whichever conversion produced this pair."""
    for m in (model.mapping, game.mapping):
        if _fits(m, game, model):
            return m
    raise ModelError("no natural mapping recorded for this pair")


def pure_utility_tensors(game: Efg, model: Maim, mapping: NaturalMapping | None = None):
    """Payoff tensors of all pure profiles on both sides, aligned on the tree's information sets."""
    mapping = mapping or natural_mapping(game, model)
    keys, efg_t = pure_payoff_tensor(game)
    g = model.graph
    opts = {}
    axes_of = {}
    for d in g.decisions:
        sets = [k for k in keys if mapping.decision_of(k)[0] == d]
        axes_of[d] = sets
        tabs = []
        for combo in itertools.product(*(game.actions(k) for k in sets)):
            r = model.constant_rule(d, model.domains[d][0]).values
            for k, a in zip(sets, combo):
                idx = model.context_indices(mapping.decision_of(k)[1], d)
                r[idx] = 0.0
                r[idx + (model.value_index(d, a),)] = 1.0
            tabs.append(r)
        opts[d] = np.stack(tabs)
    grid = UtilityGrid(model, opts)
    shape = []
    order = []
    for d in g.decisions:
        shape += [len(game.actions(k)) for k in axes_of[d]]
        order += axes_of[d]
    perm = [order.index(k) for k in keys]
    maim_t = np.stack([np.transpose(grid.values[a].reshape(shape), perm) for a in game.agents], axis=-1)
    return keys, efg_t, maim_t


def check_equivalence(game: Efg, model: Maim, trials: int = 100, rng=None,
                      exhaustive_limit: int = 10_000) -> EquivalenceReport:
    """Compare expected utilities across the natural mapping.

    All pure profiles are compared when there are at most
    ``exhaustive_limit``; ``trials`` random behavioural profiles are compared
    in any case, and each is re-checked after scrambling the model's rules on
    contexts no information set maps to.
    """
    mapping = natural_mapping(game, model)
    rng = np.random.default_rng(rng)
    rep = EquivalenceReport()
    keys = list(game.infosets())
    n_pure = int(np.prod([len(game.actions(k)) for k in keys], dtype=float))
    mirrored = any(isinstance(c, MirrorCpd) for c in model.cpds.values())
    if n_pure <= exhaustive_limit:
        if mirrored:
            for choice in game.pure_strategies():
                sigma = game.pure_strategy(choice)
                _compare(game, model, mapping, sigma, rep, "pure", choice)
                rep.pure_checked += 1
        else:
            _, et, mt = pure_utility_tensors(game, model, mapping)
            err = float(np.abs(et - mt).max()) if et.size else 0.0
            rep.max_error = max(rep.max_error, err)
            rep.pure_checked += n_pure
            if err > 1e-9:
                bad = np.unravel_index(int(np.abs(et - mt).max(axis=-1).argmax()), et.shape[:-1])
                rep.failures.append(("pure", {k: game.actions(k)[i] for k, i in zip(keys, bad)}, err))
    mapped = {(d, c) for _, d, c in mapping.entries}
    for _ in range(trials):
        sigma = {k: rng.dirichlet(np.ones(len(game.actions(k)))) for k in keys}
        rules = _compare(game, model, mapping, sigma, rep, "mixed", None)
        rep.mixed_checked += 1
        # scramble unmapped contexts: equivalent profiles must agree
        scrambled = {}
        for d, r in rules.items():
            vals = r.values.copy()
            for ctx in model.contexts(d):
                if (d, ctx) not in mapped:
                    vals[model.context_indices(ctx, d)] = rng.dirichlet(np.ones(model.card(d)))
            scrambled[d] = DecisionRule(d, r.parents, vals)
        a = expected_utilities(model, rules)
        b = expected_utilities(model, scrambled)
        err = max((abs(a[x] - b[x]) for x in a), default=0.0)
        rep.max_error = max(rep.max_error, err)
        rep.null_checked += 1
        if err > 1e-9:
            rep.failures.append(("null", None, err))
    return rep


def _compare(game, model, mapping, sigma, rep, kind, tag):
    rules = mapping.to_policy(model, game, sigma)
    eg = efg_expected_utilities(game, sigma)
    em = expected_utilities(model, rules)
    err = max((abs(eg[i] - em[a]) for i, a in enumerate(game.agents)), default=0.0)
    rep.max_error = max(rep.max_error, err)
    if err > 1e-9:
        rep.failures.append((kind, tag, err))
    return rules
