"""MAID / MAIM representation.

A :class:`MaidGraph` holds the structure (agents, typed nodes, parent lists),
a :class:`Maim` adds finite domains and CPDs for every chance and utility
node.  Decision nodes never carry a CPD in a :class:`Maim`; a full
:data:`PolicyProfile` turns the model into a :class:`JointDistribution`
(a Bayesian network) via :func:`induce`.

Tables are numpy arrays with one axis per parent (in parent order) and a
final axis over the child's domain.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Iterator, Mapping, Sequence

import numpy as np

CHANCE = "chance"
DECISION = "decision"
UTILITY = "utility"
KINDS = (CHANCE, DECISION, UTILITY)

# Null value installed on off-tree contexts by efg -> maim conversion.
NULL = None

ATOL = 1e-9


class ModelError(ValueError):
    """Raised when a model or profile is structurally unusable."""


@dataclass(frozen=True)
class Node:
    name: str
    kind: str
    owner: Hashable | None = None


@dataclass(frozen=True)
class MaidGraph:
    """Agents plus a DAG over chance, decision and utility nodes.

    ``parents`` maps each node name to its ordered parent tuple; node order is
    declaration order and is the tie-breaker for every enumeration.
    """

    agents: tuple
    nodes: tuple[Node, ...]
    parents: Mapping[str, tuple[str, ...]]

    @classmethod
    def build(cls, agents: Iterable, nodes: Iterable[Node | tuple],
              edges: Iterable[tuple[str, str]] = ()) -> "MaidGraph":
        nodes = tuple(n if isinstance(n, Node) else Node(*n) for n in nodes)
        parents: dict[str, list[str]] = {n.name: [] for n in nodes}
        for u, v in edges:
            if v not in parents:
                raise ModelError(f"edge {u}->{v}: unknown node {v!r}")
            if u not in parents:
                raise ModelError(f"edge {u}->{v}: unknown node {u!r}")
            if u not in parents[v]:
                parents[v].append(u)
        return cls(tuple(agents), nodes, {k: tuple(v) for k, v in parents.items()})

    def __post_init__(self):
        object.__setattr__(self, "_index", {n.name: i for i, n in enumerate(self.nodes)})
        object.__setattr__(self, "_by_name", {n.name: n for n in self.nodes})
        children: dict[str, list[str]] = {n.name: [] for n in self.nodes}
        for v in self.names:
            for u in self.parents.get(v, ()):
                if u in children:
                    children[u].append(v)
        object.__setattr__(self, "_children", {k: tuple(v) for k, v in children.items()})

    # -- basic accessors -------------------------------------------------
    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n.name for n in self.nodes)

    def __contains__(self, name) -> bool:
        return name in self._by_name

    def node(self, name: str) -> Node:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown node {name!r}") from None

    def index(self, name: str) -> int:
        return self._index[name]

    def kind(self, name: str) -> str:
        return self.node(name).kind

    def owner(self, name: str):
        return self.node(name).owner

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return tuple((u, v) for v in self.names for u in self.parents[v])

    @property
    def decisions(self) -> tuple[str, ...]:
        return tuple(n.name for n in self.nodes if n.kind == DECISION)

    @property
    def utilities(self) -> tuple[str, ...]:
        return tuple(n.name for n in self.nodes if n.kind == UTILITY)

    @property
    def chances(self) -> tuple[str, ...]:
        return tuple(n.name for n in self.nodes if n.kind == CHANCE)

    def decisions_of(self, agent) -> tuple[str, ...]:
        return tuple(n.name for n in self.nodes if n.kind == DECISION and n.owner == agent)

    def utilities_of(self, agent) -> tuple[str, ...]:
        return tuple(n.name for n in self.nodes if n.kind == UTILITY and n.owner == agent)

    def children(self, name: str) -> tuple[str, ...]:
        return self._children[name]

    def family(self, name: str) -> tuple[str, ...]:
        return self.parents[name] + (name,)

    def descendants(self, names: str | Iterable[str]) -> set[str]:
        stack = [names] if isinstance(names, str) else list(names)
        seen: set[str] = set()
        while stack:
            for c in self._children[stack.pop()]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen

    def ancestors(self, names: str | Iterable[str]) -> set[str]:
        stack = [names] if isinstance(names, str) else list(names)
        seen: set[str] = set()
        while stack:
            for p in self.parents[stack.pop()]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    def sort(self, names: Iterable[str]) -> list[str]:
        """Order ``names`` by declaration."""
        return sorted(set(names), key=self._index.__getitem__)

    def topological_order(self) -> list[str]:
        """Kahn's algorithm; ties resolved by declaration order."""
        indeg = {v: sum(u in self._index for u in self.parents[v]) for v in self.names}
        ready = [v for v in self.names if indeg[v] == 0]
        out = []
        while ready:
            ready.sort(key=self._index.__getitem__)
            v = ready.pop(0)
            out.append(v)
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(out) != len(self.nodes):
            raise ModelError("graph cyclic")
        return out

    def is_acyclic(self) -> bool:
        try:
            self.topological_order()
        except ModelError:
            return False
        return True

    def with_nodes(self, keep: Iterable[str]) -> "MaidGraph":
        """Induced subgraph on ``keep`` (declaration order preserved)."""
        keep = set(keep)
        nodes = tuple(n for n in self.nodes if n.name in keep)
        parents = {n.name: tuple(p for p in self.parents[n.name] if p in keep) for n in nodes}
        return MaidGraph(self.agents, nodes, parents)


@dataclass(frozen=True, eq=False)
class Cpd:
    """Conditional table ``Pr(child | parents)``.

    ``values`` has shape ``parent_card + (child_card,)``.
    """

    child: str
    parents: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def parent_shape(self) -> tuple[int, ...]:
        return self.values.shape[:-1]

    def row(self, context: Sequence[int]) -> np.ndarray:
        """Distribution for a context given as parent *value indices*."""
        return self.values[tuple(context)]

    def rows(self) -> Iterator[tuple[tuple[int, ...], np.ndarray]]:
        for idx in itertools.product(*map(range, self.parent_shape)):
            yield idx, self.values[idx]


class DecisionRule(Cpd):
    """A CPD attached to a decision node by a policy."""


@dataclass(frozen=True, eq=False)
class MirrorCpd:
    """Chance node whose mechanism copies a decision's rule.

    Used for decision *instances* in absentminded games: on rows flagged in
    ``on_path`` the node is distributed as ``decision``'s rule evaluated at the
    decision's own context (read from this node's parents); elsewhere it takes
    the null value, which must be the last entry of the node's domain.
    """

    child: str
    parents: tuple[str, ...]
    decision: str
    on_path: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "on_path", np.asarray(self.on_path, dtype=bool))


PolicyProfile = Mapping[str, DecisionRule]


@dataclass(frozen=True, eq=False)
class Maim:
    """A MAID plus domains and CPDs for all non-decision nodes."""

    graph: MaidGraph
    domains: Mapping[str, tuple]
    cpds: Mapping[str, Cpd | MirrorCpd]
    name: str = "maim"
    mapping: Any = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "domains", {k: tuple(v) for k, v in self.domains.items()})
        object.__setattr__(self, "cpds", dict(self.cpds))
        # memo for derived quantities (context status, subgame bases, ...)
        object.__setattr__(self, "_cache", {})

    # convenience passthroughs
    @property
    def agents(self) -> tuple:
        return self.graph.agents

    @property
    def decisions(self) -> tuple[str, ...]:
        return self.graph.decisions

    def card(self, name: str) -> int:
        return len(self.domains[name])

    def value_index(self, name: str, value) -> int:
        key = _domain_key(value)
        for i, v in enumerate(self.domains[name]):
            if _domain_key(v) == key:
                return i
        raise ModelError(f"value {value!r} not in domain of {name!r}")

    def contexts(self, decision: str) -> list[tuple]:
        """All parent instantiations of ``decision`` (as value tuples), lexicographic."""
        doms = [self.domains[p] for p in self.graph.parents[decision]]
        return list(itertools.product(*doms))

    def context_indices(self, context: Mapping[str, Any] | Sequence, node: str) -> tuple[int, ...]:
        pars = self.graph.parents[node]
        if isinstance(context, Mapping):
            missing = [p for p in pars if p not in context]
            if missing:
                raise ModelError(f"context for {node!r} misses parents {missing}")
            context = [context[p] for p in pars]
        if len(context) != len(pars):
            raise ModelError(f"context for {node!r} must assign {pars}")
        return tuple(self.value_index(p, v) for p, v in zip(pars, context))

    # -- policies ------------------------------------------------------------
    def rule(self, decision: str, table) -> DecisionRule:
        """Build a decision rule from an array or a ``{context: action|dist}`` mapping."""
        pars = self.graph.parents[decision]
        shape = tuple(self.card(p) for p in pars) + (self.card(decision),)
        if isinstance(table, Mapping):
            arr = np.zeros(shape)
            for ctx, spec in table.items():
                if not isinstance(ctx, tuple):
                    ctx = (ctx,)
                idx = self.context_indices(ctx, decision)
                if isinstance(spec, Mapping):
                    for v, p in spec.items():
                        arr[idx + (self.value_index(decision, v),)] = p
                else:
                    arr[idx + (self.value_index(decision, spec),)] = 1.0
            return DecisionRule(decision, pars, arr)
        arr = np.broadcast_to(np.asarray(table, dtype=float), shape).copy()
        return DecisionRule(decision, pars, arr)

    def uniform_rule(self, decision: str) -> DecisionRule:
        pars = self.graph.parents[decision]
        shape = tuple(self.card(p) for p in pars) + (self.card(decision),)
        return DecisionRule(decision, pars, np.full(shape, 1.0 / shape[-1]))

    def constant_rule(self, decision: str, action) -> DecisionRule:
        pars = self.graph.parents[decision]
        shape = tuple(self.card(p) for p in pars) + (self.card(decision),)
        arr = np.zeros(shape)
        arr[..., self.value_index(decision, action)] = 1.0
        return DecisionRule(decision, pars, arr)

    def uniform_profile(self) -> dict[str, DecisionRule]:
        return {d: self.uniform_rule(d) for d in self.decisions}


def _numeric(v) -> bool:
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)


# ---------------------------------------------------------------------------
# validation


def validate(model: Maim) -> list[str]:
    """Return human-readable invariant violations; empty iff the model is valid."""
    out: list[str] = []
    g = model.graph
    seen = set()
    for n in g.nodes:
        if n.name in seen:
            out.append(f"{n.name}: duplicate node name")
        seen.add(n.name)
        if n.kind not in KINDS:
            out.append(f"{n.name}: unknown kind {n.kind!r}")
        if n.kind in (DECISION, UTILITY) and n.owner not in g.agents:
            out.append(f"{n.name}: {n.kind} node needs an owner among agents {list(g.agents)}")
        if n.kind == CHANCE and n.owner is not None:
            out.append(f"{n.name}: chance node must not have an owner")
    for v, ps in g.parents.items():
        for p in ps:
            if p not in g:
                out.append(f"{v}: parent {p!r} is not a node")
    if not g.is_acyclic():
        out.append("graph cyclic")
    for u in g.utilities:
        if g.children(u):
            out.append(f"{u}: utility node has children {list(g.children(u))}")
    for n in g.nodes:
        dom = model.domains.get(n.name)
        if dom is None or len(dom) == 0:
            out.append(f"{n.name}: missing or empty domain")
            continue
        if len(set(map(_domain_key, dom))) != len(dom):
            out.append(f"{n.name}: domain has repeated values")
        if n.kind == UTILITY and not all(_numeric(x) for x in dom):
            out.append(f"{n.name}: utility domain must be real numbers")
    if out:
        return out
    for n in g.nodes:
        cpd = model.cpds.get(n.name)
        if n.kind == DECISION:
            if cpd is not None:
                out.append(f"{n.name}: decision node must not carry a CPD")
            continue
        if cpd is None:
            out.append(f"{n.name}: missing CPD")
            continue
        if tuple(cpd.parents) != tuple(g.parents[n.name]):
            out.append(f"{n.name}: CPD parents {list(cpd.parents)} != graph parents {list(g.parents[n.name])}")
            continue
        pshape = tuple(model.card(p) for p in g.parents[n.name])
        if isinstance(cpd, MirrorCpd):
            if n.kind != CHANCE:
                out.append(f"{n.name}: only chance nodes may mirror a decision rule")
            elif cpd.decision not in g.decisions:
                out.append(f"{n.name}: mirrored node {cpd.decision!r} is not a decision")
            else:
                missing = set(g.parents[cpd.decision]) - set(cpd.parents)
                if missing:
                    out.append(f"{n.name}: mirror needs the decision context {sorted(missing)} among its parents")
                if model.domains[n.name][: model.card(cpd.decision)] != model.domains[cpd.decision]:
                    out.append(f"{n.name}: mirror domain must start with dom({cpd.decision})")
            if cpd.on_path.shape != pshape:
                out.append(f"{n.name}: mirror path mask has shape {cpd.on_path.shape}, expected {pshape}")
            continue
        shape = pshape + (model.card(n.name),)
        if cpd.values.shape != shape:
            out.append(f"{n.name}: CPD table shape {cpd.values.shape}, expected {shape}")
            continue
        vals = cpd.values
        if np.any(vals < -ATOL) or np.any(vals > 1 + ATOL):
            out.append(f"{n.name}: probabilities outside [0, 1]")
        sums = vals.sum(axis=-1)
        if np.any(np.abs(sums - 1) > ATOL):
            bad = np.argwhere(np.abs(sums - 1) > ATOL)[0]
            out.append(f"{n.name}: CPD row {_ctx_str(model, n.name, bad)} sums to {sums[tuple(bad)]:.12g}")
        if n.kind == UTILITY:
            det = np.isclose(vals, 1.0, atol=ATOL, rtol=0).sum(axis=-1) == 1
            if not np.all(det):
                bad = np.argwhere(~det)[0]
                out.append(f"{n.name}: utility not deterministic at row {_ctx_str(model, n.name, bad)}")
    return out


def _domain_key(v):
    if _numeric(v):
        return ("num", float(v))
    if v is None:
        return ("null",)
    return (type(v).__name__, v)


def _ctx_str(model: Maim, node: str, idx) -> str:
    pars = model.graph.parents[node]
    if not pars:
        return "()"
    return "{" + ", ".join(f"{p}={model.domains[p][i]!r}" for p, i in zip(pars, idx)) + "}"


def check(model: Maim) -> Maim:
    problems = validate(model)
    if problems:
        raise ModelError("; ".join(problems))
    return model


def check_rule(model: Maim, rule: Cpd, decision: str) -> None:
    g = model.graph
    if decision not in g.decisions:
        raise ModelError(f"{decision!r} is not a decision node")
    if tuple(rule.parents) != tuple(g.parents[decision]):
        raise ModelError(f"rule for {decision}: parents {list(rule.parents)} != {list(g.parents[decision])}")
    shape = tuple(model.card(p) for p in g.parents[decision]) + (model.card(decision),)
    if rule.values.shape != shape:
        raise ModelError(f"rule for {decision}: table shape {rule.values.shape}, expected {shape}")
    if np.any(rule.values < -ATOL) or np.any(np.abs(rule.values.sum(-1) - 1) > ATOL):
        raise ModelError(f"rule for {decision}: rows must be distributions")


# ---------------------------------------------------------------------------
# induced network


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """The Bayesian network ``M(pi)``: every node carries a plain :class:`Cpd`."""

    graph: MaidGraph
    domains: Mapping[str, tuple]
    cpds: Mapping[str, Cpd]

    def card(self, name: str) -> int:
        return len(self.domains[name])

    value_index = Maim.value_index


def induce(model: Maim, profile: PolicyProfile, partial: bool = False) -> JointDistribution:
    """Attach the profile's rules as CPDs of the decision nodes.

    With ``partial=True`` decisions missing from ``profile`` are left without
    a factor (their value acts as a free argument of the joint table); the
    result is then only meaningful to the inference helpers that expect it.
    """
    g = model.graph
    for d, rule in profile.items():
        check_rule(model, rule, d)
    missing = [d for d in g.decisions if d not in profile]
    if missing and not partial:
        raise ModelError(f"profile has no rule for {missing}")
    cpds: dict[str, Cpd] = {}
    for n in g.nodes:
        if n.kind == DECISION:
            if n.name in profile:
                cpds[n.name] = profile[n.name]
            continue
        cpd = model.cpds[n.name]
        if isinstance(cpd, MirrorCpd):
            rule = profile.get(cpd.decision)
            if rule is None:
                if partial:
                    continue
                raise ModelError(f"profile has no rule for {cpd.decision}")
            cpd = _expand_mirror(model, cpd, rule)
        cpds[n.name] = cpd
    return JointDistribution(g, model.domains, cpds)


def _expand_mirror(model: Maim, cpd: MirrorCpd, rule: Cpd) -> Cpd:
    pars = cpd.parents
    shape = tuple(model.card(p) for p in pars) + (model.card(cpd.child),)
    arr = np.zeros(shape)
    dpars = model.graph.parents[cpd.decision]
    pos = [pars.index(p) for p in dpars]
    k = model.card(cpd.decision)
    for idx in itertools.product(*map(range, shape[:-1])):
        if cpd.on_path[idx]:
            arr[idx + (slice(0, k),)] = rule.values[tuple(idx[i] for i in pos)]
        else:
            arr[idx + (shape[-1] - 1,)] = 1.0
    return Cpd(cpd.child, pars, arr)


def fix_decisions(model: Maim, rules: PolicyProfile) -> Maim:
    """Turn the decisions in ``rules`` into chance nodes governed by those rules."""
    for d, r in rules.items():
        check_rule(model, r, d)
    nodes = tuple(Node(n.name, CHANCE) if n.name in rules else n for n in model.graph.nodes)
    g = MaidGraph(model.graph.agents, nodes, model.graph.parents)
    cpds = dict(model.cpds)
    for d, r in rules.items():
        cpds[d] = Cpd(d, r.parents, r.values)
    for n, c in model.cpds.items():
        if isinstance(c, MirrorCpd) and c.decision in rules:
            cpds[n] = _expand_mirror(model, c, rules[c.decision])
    return Maim(g, model.domains, cpds, model.name)


# ---------------------------------------------------------------------------
# pure profiles


@dataclass(frozen=True)
class PureProfile:
    """Deterministic choice per decision and decision context.

    ``choices`` is ``((decision, ((context, action), ...)), ...)`` with
    contexts given as value tuples in parent order.  Only feasible contexts are
    stored; null ones carry the first domain element.
    """

    choices: tuple

    @classmethod
    def from_dict(cls, d: Mapping[str, Mapping[tuple, Any]]) -> "PureProfile":
        return cls(tuple((k, tuple(v.items())) for k, v in d.items()))

    def as_dict(self) -> dict[str, dict[tuple, Any]]:
        return {k: dict(v) for k, v in self.choices}

    @property
    def decisions(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.choices)

    def __getitem__(self, decision: str) -> dict[tuple, Any]:
        for k, v in self.choices:
            if k == decision:
                return dict(v)
        raise KeyError(decision)

    def __contains__(self, decision) -> bool:
        return decision in self.decisions

    def action(self, decision: str, context=()):
        if not isinstance(context, tuple):
            context = (context,)
        return self[decision][context]

    def merge(self, other: "PureProfile") -> "PureProfile":
        d = self.as_dict()
        d.update(other.as_dict())
        return PureProfile.from_dict(d)

    def restrict(self, decisions: Iterable[str]) -> "PureProfile":
        keep = set(decisions)
        return PureProfile(tuple(c for c in self.choices if c[0] in keep))

    def ordered(self, model: Maim) -> "PureProfile":
        return PureProfile(tuple(sorted(self.choices, key=lambda c: model.graph.index(c[0]))))

    def to_rules(self, model: Maim) -> dict[str, DecisionRule]:
        """Deterministic decision rules; unstored contexts take the first action."""
        out = {}
        for d, table in self.choices:
            rule = model.constant_rule(d, model.domains[d][0])
            vals = rule.values
            for ctx, a in table:
                idx = model.context_indices(ctx, d)
                vals[idx] = 0.0
                vals[idx + (model.value_index(d, a),)] = 1.0
            out[d] = rule
        return out

    def rows(self):
        for d, table in self.choices:
            for ctx, a in table:
                yield d, ctx, a

    def format(self, model: Maim | None = None) -> str:
        """``decision / context / action`` table, one row per stored context."""
        lines = []
        for d, ctx, a in self.rows():
            if model is not None and model.graph.parents[d]:
                c = ", ".join(f"{p}={v}" for p, v in zip(model.graph.parents[d], ctx))
            else:
                c = ", ".join(map(str, ctx)) if ctx else "-"
            lines.append(f"{d}\t{c}\t{a}")
        return "\n".join(lines)
