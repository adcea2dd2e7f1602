"""Exact inference on induced networks, expected utilities and best responses.

Everything goes through variable elimination over numpy factors with the
elimination order fixed to reverse topological order, after pruning nodes
that are not ancestors of the query.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .model import (
    ATOL,
    Cpd,
    JointDistribution,
    Maim,
    MirrorCpd,
    ModelError,
    PolicyProfile,
    PureProfile,
    fix_decisions,
    induce,
)


class ZeroProbabilityError(ModelError):
    """Conditioning event has probability zero under the profile."""


class Factor:
    """A non-negative table over named discrete variables."""

    __slots__ = ("vars", "values")

    def __init__(self, vars: Sequence[str], values):
        self.vars = tuple(vars)
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != len(self.vars):
            raise ValueError(f"factor over {self.vars} got array of shape {self.values.shape}")

    @classmethod
    def from_cpd(cls, cpd: Cpd) -> "Factor":
        return cls(cpd.parents + (cpd.child,), cpd.values)

    def reduce(self, evidence: Mapping[str, int]) -> "Factor":
        if not any(v in evidence for v in self.vars):
            return self
        idx = tuple(evidence[v] if v in evidence else slice(None) for v in self.vars)
        return Factor([v for v in self.vars if v not in evidence], self.values[idx])

    def __mul__(self, other: "Factor") -> "Factor":
        return product([self, other], keep=None)

    def sum_out(self, names: Iterable[str]) -> "Factor":
        names = set(names)
        axes = tuple(i for i, v in enumerate(self.vars) if v in names)
        if not axes:
            return self
        return Factor([v for v in self.vars if v not in names], self.values.sum(axis=axes))

    def aligned(self, order: Sequence[str], cards: Mapping[str, int] | None = None) -> np.ndarray:
        """Array with axes in ``order``; variables missing from the factor are broadcast."""
        missing = [v for v in order if v not in self.vars]
        vals = self.values
        if missing:
            if cards is None:
                raise ValueError(f"need cardinalities to broadcast {missing}")
            vals = vals.reshape(vals.shape + (1,) * len(missing))
            vals = np.broadcast_to(vals, vals.shape[: len(self.vars)] + tuple(cards[m] for m in missing))
        src = list(self.vars) + missing
        return np.transpose(vals, [src.index(v) for v in order])

    def __repr__(self):
        return f"Factor({self.vars}, shape={self.values.shape})"


def product(factors: Sequence[Factor], keep: Iterable[str] | None) -> Factor:
    """Multiply factors and sum out everything not in ``keep`` (None keeps all)."""
    factors = list(factors)
    if not factors:
        return Factor((), 1.0)
    if len(factors) == 1 and keep is None:
        return factors[0]
    ids: dict[str, int] = {}
    for f in factors:
        for v in f.vars:
            ids.setdefault(v, len(ids))
    if len(ids) > 52:
        raise ModelError("factor product touches more than 52 variables")
    if keep is None:
        out = list(ids)
    else:
        keep = set(keep)
        out = [v for v in ids if v in keep]
    args: list[Any] = []
    for f in factors:
        args += [f.values, [ids[v] for v in f.vars]]
    vals = np.einsum(*args, [ids[v] for v in out], optimize=len(factors) > 2)
    return Factor(out, vals)


def eliminate(factors: Sequence[Factor], keep: Sequence[str], order: Sequence[str],
              cards: Mapping[str, int]) -> np.ndarray:
    """Sum-product variable elimination; returns an array over ``keep``."""
    keep_set = set(keep)
    pool = list(factors)
    for v in order:
        if v in keep_set:
            continue
        touching = [f for f in pool if v in f.vars]
        if not touching:
            continue
        pool = [f for f in pool if v not in f.vars]
        union = {u for f in touching for u in f.vars}
        pool.append(product(touching, keep=union - {v}))
    res = product(pool, keep=keep_set) if pool else Factor((), 1.0)
    res = res.sum_out([v for v in res.vars if v not in keep_set])
    return res.aligned(list(keep), cards)


# ---------------------------------------------------------------------------
# queries on a JointDistribution


@dataclass(frozen=True, eq=False)
class Table:
    """Normalized conditional distribution over ``vars``."""

    vars: tuple[str, ...]
    domains: tuple[tuple, ...]
    values: np.ndarray
    evidence_mass: float = 1.0

    def prob(self, *assignment) -> float:
        idx = tuple(_index(dom, a) for dom, a in zip(self.domains, assignment))
        return float(self.values[idx])

    def as_dict(self) -> dict:
        out = {}
        for idx in itertools.product(*map(range, self.values.shape)):
            key = tuple(d[i] for d, i in zip(self.domains, idx))
            out[key[0] if len(key) == 1 else key] = float(self.values[idx])
        return out

    @property
    def total(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True)
class Unconditioned:
    """Result of conditioning on an event of probability zero."""

    vars: tuple[str, ...]
    evidence: tuple

    evidence_mass = 0.0


def _index(dom, value) -> int:
    for i, v in enumerate(dom):
        if v == value and (v is None) == (value is None):
            return i
    raise ModelError(f"value {value!r} not in domain {dom}")


def _net_cards(dist) -> dict[str, int]:
    return {n: len(d) for n, d in dist.domains.items()}


def _relevant(graph, names: Iterable[str]) -> list[str]:
    names = set(names)
    keep = names | graph.ancestors(names)
    return graph.sort(keep)


def _joint(dist, targets: Sequence[str], evidence_idx: Mapping[str, int]) -> np.ndarray:
    """Unnormalized ``Pr(targets, evidence)`` as an array over ``targets``."""
    g = dist.graph
    nodes = _relevant(g, list(targets) + list(evidence_idx))
    facs = []
    for v in nodes:
        cpd = dist.cpds.get(v)
        if cpd is None:
            continue  # free variable of a partially induced network
        facs.append(Factor.from_cpd(cpd).reduce(evidence_idx))
    order = list(reversed(g.topological_order()))
    return eliminate(facs, targets, order, _net_cards(dist))


def _check_nodes(dist, names):
    for n in names:
        if n not in dist.graph:
            raise ModelError(f"unknown node {n!r}")


def marginal(dist: JointDistribution, targets: Iterable[str] = (),
             evidence: Mapping[str, Any] | None = None) -> Table | Unconditioned:
    """``Pr(targets | evidence)``; :class:`Unconditioned` if the evidence has mass 0."""
    evidence = dict(evidence or {})
    targets = list(dict.fromkeys(targets))
    _check_nodes(dist, targets + list(evidence))
    ev_idx = {k: _index(dist.domains[k], v) for k, v in evidence.items()}
    free = [t for t in targets if t not in ev_idx]
    joint = _joint(dist, free, ev_idx)
    mass = float(joint.sum())
    if mass <= 0.0:
        return Unconditioned(tuple(targets), tuple(sorted(evidence.items(), key=lambda kv: kv[0])))
    vals = joint / mass
    if len(free) != len(targets):
        # observed targets are point masses at their evidence value
        shape = tuple(len(dist.domains[t]) for t in targets)
        full = np.zeros(shape)
        idx = tuple(ev_idx[t] if t in ev_idx else slice(None) for t in targets)
        full[idx] = vals
        vals = full
    doms = tuple(dist.domains[t] for t in targets)
    return Table(tuple(targets), doms, vals, mass)


def _utility_values(dist, u: str) -> np.ndarray:
    return np.asarray(dist.domains[u], dtype=float)


def _check_agent(model, agent):
    if agent not in model.graph.agents:
        raise ModelError(f"unknown agent {agent!r}")


def expected_utility(model: Maim, profile: PolicyProfile, agent) -> float:
    """Sum over the agent's utility nodes of their expected values."""
    _check_agent(model, agent)
    dist = induce(model, profile)
    total = 0.0
    for u in model.graph.utilities_of(agent):
        total += float(_joint(dist, [u], {}) @ _utility_values(dist, u))
    return total


def expected_utilities(model: Maim, profile: PolicyProfile) -> dict:
    dist = induce(model, profile)
    out = {a: 0.0 for a in model.graph.agents}
    for u in model.graph.utilities:
        out[model.graph.owner(u)] += float(_joint(dist, [u], {}) @ _utility_values(dist, u))
    return out


def conditional_expected_utility(model: Maim, profile: PolicyProfile, agent,
                                 context: Mapping[str, Any], decision: str | None = None) -> float:
    """``E[U^agent | context]``; raises :class:`ZeroProbabilityError` on a null event."""
    _check_agent(model, agent)
    if decision is not None:
        missing = set(model.graph.parents[decision]) - set(context)
        if missing:
            raise ModelError(f"context must assign the parents of {decision}: missing {sorted(missing)}")
    dist = induce(model, profile)
    total = 0.0
    for u in model.graph.utilities_of(agent):
        t = marginal(dist, [u], context)
        if isinstance(t, Unconditioned):
            raise ZeroProbabilityError(f"context {dict(context)} has probability 0 under the profile")
        total += float(t.values @ _utility_values(dist, u))
    if not model.graph.utilities_of(agent):
        t = marginal(dist, [], context)
        if isinstance(t, Unconditioned):
            raise ZeroProbabilityError(f"context {dict(context)} has probability 0 under the profile")
    return total


# ---------------------------------------------------------------------------
# feasibility and nullity of decision contexts

INFEASIBLE, NULL_CONTEXT, LIVE = 0, 1, 2


def context_status(model: Maim, decision: str) -> np.ndarray:
    """Status of every context of ``decision``: INFEASIBLE, NULL_CONTEXT or LIVE.

    A context reachable under some profile is reachable under the uniform one,
    so a single uniform-policy inference settles feasibility.  Nullity asks
    whether any nonzero utility value keeps positive mass given the context.
    Models built from a tree carry a natural mapping; their contexts that
    match no information set are null as well.
    """
    key = ("status", decision)
    if key in model._cache:
        return model._cache[key]
    if decision not in model.graph.decisions:
        raise ModelError(f"{decision!r} is not a decision node")
    dist = induce(model, model.uniform_profile())
    pars = list(model.graph.parents[decision])
    feasible = _joint(dist, pars, {}) > 0
    live = np.zeros(feasible.shape, dtype=bool)
    for u in model.graph.utilities:
        j = _joint(dist, pars + [u], {})
        nz = _utility_values(dist, u) != 0
        live |= j[..., nz].sum(axis=-1) > 0
    status = np.where(~feasible, INFEASIBLE, np.where(live, LIVE, NULL_CONTEXT)).astype(int)
    entries = getattr(model.mapping, "entries", None)
    if entries is not None:
        # built from a tree: contexts matching no information set cannot affect any payoff
        mapped = np.zeros(status.shape, dtype=bool)
        for _, d, ctx in entries:
            if d == decision:
                mapped[model.context_indices(ctx, d)] = True
        status = np.where(~mapped & (status == LIVE), NULL_CONTEXT, status)
    model._cache[key] = status
    return status


def is_feasible_context(model: Maim, decision: str, context) -> bool:
    idx = model.context_indices(context, decision)
    return bool(context_status(model, decision)[idx] != INFEASIBLE)


def is_null_context(model: Maim, decision: str, context) -> bool:
    idx = model.context_indices(context, decision)
    return bool(context_status(model, decision)[idx] != LIVE)


def contexts_with_status(model: Maim, decision: str, statuses) -> list[tuple[int, ...]]:
    st = context_status(model, decision)
    return [idx for idx in itertools.product(*map(range, st.shape)) if st[idx] in statuses]


# ---------------------------------------------------------------------------
# pure rules and batched evaluation


@dataclass(frozen=True, eq=False)
class RuleOptions:
    """The pure rules of one decision that vary only on ``slots``.

    ``tables[k]`` is the rule for option ``k``; options enumerate the slot
    actions lexicographically (first slot most significant).  Contexts outside
    the slots are pinned to ``pinned`` (first action unless given).
    """

    decision: str
    slots: tuple[tuple[int, ...], ...]
    card: int
    tables: np.ndarray

    @property
    def size(self) -> int:
        return self.tables.shape[0]

    def digits(self, k: int) -> tuple[int, ...]:
        out = []
        for _ in self.slots:
            k, r = divmod(k, self.card)
            out.append(r)
        return tuple(reversed(out))


def rule_options(model: Maim, decision: str, slots=None, base=None, bound: float = 1e6) -> RuleOptions:
    """Enumerate pure rules of ``decision`` over its live contexts (or ``slots``)."""
    if slots is None:
        slots = contexts_with_status(model, decision, (LIVE,))
    slots = tuple(slots)
    card = model.card(decision)
    n = card ** len(slots)
    if n > bound:
        raise ModelError(f"{decision}: {n} pure rules exceed the enumeration bound {int(bound)}")
    pshape = tuple(model.card(p) for p in model.graph.parents[decision])
    if base is None:
        base = model.constant_rule(decision, model.domains[decision][0]).values
    tables = np.broadcast_to(base, (n,) + pshape + (card,)).copy()
    if slots:
        digits = np.array(list(itertools.product(range(card), repeat=len(slots))), dtype=int)
        onehot = np.eye(card)[digits]  # (n, slots, card)
        for j, ctx in enumerate(slots):
            tables[(slice(None),) + ctx] = onehot[:, j]
    return RuleOptions(decision, slots, card, tables)


def option_profile(model: Maim, options: Sequence[RuleOptions], picks: Sequence[int]) -> PureProfile:
    """PureProfile of the chosen options, listing every feasible context."""
    choices = []
    for opt, k in zip(options, picks):
        d = opt.decision
        dom = model.domains[d]
        pars = model.graph.parents[d]
        rows = []
        for idx in contexts_with_status(model, d, (NULL_CONTEXT, LIVE)):
            a = int(np.argmax(opt.tables[(k,) + idx]))
            ctx = tuple(model.domains[p][i] for p, i in zip(pars, idx))
            rows.append((ctx, dom[a]))
        choices.append((d, tuple(rows)))
    return PureProfile(tuple(choices))


def utility_weights(model: Maim, agent, z: Sequence[str], utilities: Iterable[str] | None = None,
                    clamp: Mapping[str, int] | None = None) -> np.ndarray:
    """``sum_{v \\ z} prod CPDs * U^agent`` as an array over ``z``.

    Decisions must all be in ``z`` and carry no factor, so the result is the
    agent's expected utility as a function of the decisions' families,
    before any decision rule is applied.  Clamped nodes lose their factor and
    are fixed at the given value index wherever they appear as parents.
    """
    g = model.graph
    clamp = dict(clamp or {})
    cards = {n: model.card(n) for n in g.names}
    order = list(reversed(g.topological_order()))
    if utilities is None:
        utilities = g.utilities
    z = list(z)
    w = np.zeros(tuple(cards[v] for v in z))
    for u in utilities:
        if u in clamp or g.owner(u) != agent or g.kind(u) != "utility":
            continue
        facs = []
        for v in _relevant(g, z + [u]):
            if g.kind(v) == "decision" or v in clamp:
                continue
            cpd = model.cpds[v]
            if v == u:
                ev = cpd.values @ np.asarray(model.domains[u], dtype=float)
                facs.append(Factor(cpd.parents, ev).reduce(clamp))
            else:
                facs.append(Factor.from_cpd(cpd).reduce(clamp))
        w = w + eliminate(facs, z, order, cards)
    return w


class UtilityGrid:
    """Expected utility of every combination of supplied decision rules.

    ``model`` must have exactly the decisions in ``options`` (fix the rest
    with :func:`fix_decisions` first).  Each agent's expected utility is
    multilinear in the rules, so it is an einsum of a per-agent weight tensor
    over the decisions' families with the rule tables.  ``values[agent]`` has
    one axis per decision in ``decisions`` order.
    """

    def __init__(self, model: Maim, options: Mapping[str, np.ndarray], agents=None,
                 utilities: Iterable[str] | None = None, clamp: Mapping[str, int] | None = None):
        g = model.graph
        decisions = [d for d in g.decisions]
        if set(decisions) != set(options):
            raise ModelError(f"options must cover exactly the decisions {decisions}")
        for n, c in model.cpds.items():
            if isinstance(c, MirrorCpd):
                raise ModelError("batched evaluation does not support mirrored decision instances")
        self.decisions = decisions
        self.shape = tuple(np.asarray(options[d]).shape[0] for d in decisions)
        clamp = dict(clamp or {})
        z = g.sort({v for d in decisions for v in g.family(d)} - set(clamp))
        if utilities is None:
            utilities = g.utilities
        utilities = [u for u in utilities if u not in clamp]
        agents = g.agents if agents is None else agents
        ids = {v: i for i, v in enumerate(z)}
        axis_ids = [len(ids) + i for i in range(len(decisions))]
        if len(ids) + len(axis_ids) > 52:
            raise ModelError("too many variables for batched evaluation")
        rule_args = []
        for d, ax in zip(decisions, axis_ids):
            arr = np.asarray(options[d], dtype=float)
            fam = g.family(d)
            sl = (slice(None),) + tuple(clamp[v] if v in clamp else slice(None) for v in fam)
            rule_args += [arr[sl], [ax] + [ids[v] for v in fam if v not in clamp]]
        self.values = {}
        for a in agents:
            w = utility_weights(model, a, z, utilities, clamp)
            self.values[a] = np.einsum(w, list(range(len(z))), *rule_args, axis_ids, optimize="greedy")

    def agent_axes(self, model: Maim, agent) -> tuple[int, ...]:
        return tuple(i for i, d in enumerate(self.decisions) if model.graph.owner(d) == agent)

    def nash_mask(self, model: Maim, tol: float = ATOL) -> np.ndarray:
        """Cells where no agent gains more than ``tol`` by changing its own rules."""
        mask = np.ones(self.shape, dtype=bool)
        for a, vals in self.values.items():
            axes = self.agent_axes(model, a)
            if not axes:
                continue
            best = vals.max(axis=axes, keepdims=True)
            mask &= vals >= best - tol
        return mask


def best_response(model: Maim, agent, others: PolicyProfile) -> list[PureProfile]:
    """All pure policies of ``agent`` maximizing its expected utility against ``others``.

    Policies are enumerated over the agent's live contexts; infeasible and
    null contexts are pinned, so ties there are collapsed.
    """
    _check_agent(model, agent)
    own = model.graph.decisions_of(agent)
    rest = set(model.graph.decisions) - set(own)
    if set(others) != rest:
        raise ModelError(f"others must cover exactly {sorted(rest)}")
    fixed = fix_decisions(model, others)
    options = [rule_options(model, d) for d in own]
    grid = UtilityGrid(fixed, {o.decision: o.tables for o in options}, agents=[agent])
    vals = grid.values[agent]
    best = vals.max() if vals.size else 0.0
    picks = np.argwhere(vals >= best - ATOL) if own else [()]
    return [option_profile(model, options, tuple(p)) for p in picks]
