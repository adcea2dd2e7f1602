"""Pure Nash equilibria, subgame-perfect equilibria and trembling-hand checks."""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .inference import (
    LIVE,
    RuleOptions,
    UtilityGrid,
    contexts_with_status,
    option_profile,
    rule_options,
    utility_weights,
)
from .model import ATOL, DecisionRule, Maim, ModelError, PureProfile, fix_decisions
from .relevance import condensed_relevance_graph, relevance_graph
from .subgames import (
    boundary_assignments,
    is_feasible_subgame,
    maid_subgame,
    minimal_for_decisions,
    restrict_model,
    subgame_bases,
)

DEFAULT_BOUND = 10**6


def _options(model: Maim, decisions: Sequence[str], bound=DEFAULT_BOUND) -> list[RuleOptions]:
    opts = [rule_options(model, d, bound=bound) for d in decisions]
    total = int(np.prod([o.size for o in opts], dtype=float)) if opts else 1
    if total > bound:
        raise ModelError(f"{total} pure profiles exceed the enumeration bound {int(bound)}")
    return opts


def pure_nash(model: Maim, bound: float = DEFAULT_BOUND) -> list[PureProfile]:
    """All pure NEs, one representative per class of profiles equal off null contexts.

    Order: lexicographic over decisions in declaration order, each decision's
    rules enumerated lexicographically over its live contexts.
    """
    ds = model.graph.decisions
    if not ds:
        return [PureProfile(())]
    opts = _options(model, ds, bound)
    grid = UtilityGrid(model, {o.decision: o.tables for o in opts})
    mask = grid.nash_mask(model)
    return [option_profile(model, opts, tuple(p)) for p in np.argwhere(mask)]


def is_nash(model: Maim, profile: PureProfile | Mapping[str, DecisionRule], tol: float = ATOL) -> bool:
    """No agent gains more than ``tol`` by a pure deviation of all its decisions."""
    rules = profile.to_rules(model) if isinstance(profile, PureProfile) else dict(profile)
    for a in model.graph.agents:
        own = model.graph.decisions_of(a)
        if not own:
            continue
        fixed = fix_decisions(model, {d: r for d, r in rules.items() if d not in own})
        opts = [rule_options(model, d) for d in own]
        grid = UtilityGrid(fixed, {o.decision: o.tables for o in opts}, agents=[a])
        cur = UtilityGrid(fixed, {d: rules[d].values[None] for d in own}, agents=[a]).values[a].item()
        if grid.values[a].max() > cur + tol:
            return False
    return True


# ---------------------------------------------------------------------------
# subgame perfection


@dataclass
class SpeResult:
    profiles: list[PureProfile]
    diagnostics: list[str] = field(default_factory=list)
    forks: int = 0

    def __iter__(self):
        return iter(self.profiles)

    def __len__(self):
        return len(self.profiles)


def _component_solutions(model: Maim, base, comp: Sequence[str], fixed: Mapping[str, np.ndarray],
                         bound) -> tuple[list[dict[str, int]], list[RuleOptions]]:
    """Pure joint rules of ``comp`` that are NEs of every feasible MAIM subgame on ``base``.

    Decisions outside ``comp`` become chance nodes first, so the subgame's
    utility set is recomputed on the reduced graph; utilities that do not
    descend from ``comp`` are constant in its rules and cannot change the
    answer.
    """
    g = model.graph
    rules = {}
    for d in g.decisions:
        if d in comp:
            continue
        rules[d] = model.rule(d, fixed[d]) if d in fixed else model.uniform_rule(d)
    reduced = fix_decisions(model, rules)
    sub = maid_subgame(reduced.graph, base.nodes, check=False)
    opts = _options(model, comp, bound)
    ok = None
    for y in boundary_assignments(model, base.nodes):
        if not is_feasible_subgame(model, y):
            continue
        local = restrict_model(reduced, sub.graph, y)
        yidx = {k: model.value_index(k, v) for k, v in y.items()}
        if len(comp) == 1:
            mask = _single_mask(local, opts[0], g, yidx)
        else:
            tabs = {}
            for o in opts:
                sl = (slice(None),) + tuple(yidx.get(v, slice(None)) for v in g.family(o.decision))
                tabs[o.decision] = o.tables[sl]
            mask = UtilityGrid(local, tabs).nash_mask(local)
        ok = mask if ok is None else ok & mask
    if ok is None:
        ok = np.ones(tuple(o.size for o in opts), dtype=bool)
    sols = [dict(zip(comp, map(int, p))) for p in np.argwhere(ok)]
    return sols, opts


def _single_mask(local: Maim, opt: RuleOptions, g, yidx) -> np.ndarray:
    """Optimal rules of a lone decision: argmax per context, then product."""
    d = opt.decision
    agent = g.owner(d)
    fam = list(local.graph.family(d))
    w = utility_weights(local, agent, fam)  # axes: local parents..., d
    full_pars = g.parents[d]
    mask = np.ones(opt.size, dtype=bool)
    for j, ctx in enumerate(opt.slots):
        if any(p in yidx and yidx[p] != i for p, i in zip(full_pars, ctx)):
            continue  # context contradicts the boundary: not part of this subgame
        local_ctx = tuple(i for p, i in zip(full_pars, ctx) if p not in yidx)
        row = w[local_ctx]
        allowed = row >= row.max() - ATOL
        digit = (np.arange(opt.size) // opt.card ** (len(opt.slots) - 1 - j)) % opt.card
        mask &= allowed[digit]
    return mask


def spe_solve(model: Maim, bound: float = DEFAULT_BOUND, with_diagnostics: bool = False):
    """All pure subgame-perfect equilibria by backward induction over relevance components.

    Components of the condensed relevance graph are solved sinks first, each
    in the smallest subgame containing it and everything it relies on.
    Already solved decisions act as chance nodes; decisions not solved yet
    are held at the uniform rule, which cannot matter by construction.  Every
    tie forks the partial solution; forks are processed first in, first out.
    """
    g = model.graph
    result = SpeResult([])
    if not g.decisions:
        result.profiles = [PureProfile(())]
        return result if with_diagnostics else result.profiles
    con = condensed_relevance_graph(relevance_graph(g))
    bases = subgame_bases(model)
    queue: deque = deque([({}, {})])  # (rule tables, option picks per decision)
    all_opts: dict[str, RuleOptions] = {}
    for k, comp in enumerate(con.components):
        members = set(comp) | {d for i in con.descendants(k) for d in con.components[i]}
        base = minimal_for_decisions(bases, members)
        nxt: deque = deque()
        while queue:
            tables, picks = queue.popleft()
            sols, opts = _component_solutions(model, base, comp, tables, bound)
            for o in opts:
                all_opts[o.decision] = o
            if not sols:
                result.diagnostics.append(
                    f"no pure SPE through this branch: component {list(comp)} has no pure local "
                    f"equilibrium given {_describe(model, all_opts, picks)}")
            if len(sols) > 1:
                result.forks += len(sols) - 1
            for s in sols:
                t2, p2 = dict(tables), dict(picks)
                for d, i in s.items():
                    t2[d] = all_opts[d].tables[i]
                    p2[d] = i
                nxt.append((t2, p2))
        queue = nxt
    ds = g.decisions
    for tables, picks in queue:
        result.profiles.append(option_profile(model, [all_opts[d] for d in ds], [picks[d] for d in ds]))
    if not result.profiles and not result.diagnostics:
        result.diagnostics.append("no pure SPE")
    return result if with_diagnostics else result.profiles


def _describe(model, opts, picks) -> str:
    if not picks:
        return "no earlier choices"
    prof = option_profile(model, [opts[d] for d in picks], list(picks.values()))
    return "; ".join(f"{d}|{ctx}={a}" for d, ctx, a in prof.rows())


# ---------------------------------------------------------------------------
# perturbed games and trembling-hand perfection


@dataclass(frozen=True)
class PerturbedMaim:
    """A model whose decision rules must put at least ``eps[(D, ctx, d)]`` on every action."""

    base: Maim
    eps: Mapping[tuple, float]

    def floor(self, decision: str) -> np.ndarray:
        m = self.base
        pars = m.graph.parents[decision]
        shape = tuple(m.card(p) for p in pars) + (m.card(decision),)
        out = np.zeros(shape)
        for idx in itertools.product(*map(range, shape[:-1])):
            ctx = tuple(m.domains[p][i] for p, i in zip(pars, idx))
            for k, a in enumerate(m.domains[decision]):
                out[idx + (k,)] = self.eps.get((decision, ctx, a), 0.0)
        return out

    def admissible(self, decision: str, table: np.ndarray) -> np.ndarray:
        """Map pure intents (one-hot rows) to the nearest admissible rule."""
        fl = self.floor(decision)
        slack = 1.0 - fl.sum(axis=-1, keepdims=True)
        return fl + slack * np.asarray(table)

    def intent_rules(self, profile: PureProfile) -> dict[str, DecisionRule]:
        rules = profile.to_rules(self.base)
        return {d: DecisionRule(d, r.parents, self.admissible(d, r.values)) for d, r in rules.items()}


def uniform_perturbation(model: Maim, eps: float, decisions: Iterable[str] | None = None) -> dict:
    out = {}
    for d in (model.graph.decisions if decisions is None else decisions):
        for ctx in model.contexts(d):
            for a in model.domains[d]:
                out[(d, ctx, a)] = eps
    return out


def perturb(model: Maim, delta: Mapping[tuple, float]) -> PerturbedMaim:
    sums: dict = {}
    for (d, ctx, a), e in delta.items():
        if d not in model.graph.decisions:
            raise ModelError(f"{d!r} is not a decision node")
        if not 0 < e < 1:
            raise ModelError(f"perturbation for {d}|{ctx}={a} must lie in (0, 1)")
        sums[(d, ctx)] = sums.get((d, ctx), 0.0) + e
    for (d, ctx), s in sums.items():
        if s > 1 + ATOL:
            raise ModelError(f"perturbations at {d}|{ctx} sum to {s} > 1")
    return PerturbedMaim(model, dict(delta))


@dataclass
class ThpeVerdict:
    verdict: str  # "yes", "no" or "inconclusive"
    evidence: list = field(default_factory=list)
    witness: dict | None = None

    def __str__(self):
        return self.verdict


def _perturbed_nash(pm: PerturbedMaim, profile: PureProfile, tol=ATOL) -> tuple[bool, float]:
    """Is the admissible image of ``profile`` an NE of the perturbed game?

    Each agent's utility is multilinear in its admissible rules, so checking
    pure intents is enough.  Returns the verdict and the largest gain found.
    """
    model = pm.base
    target = pm.intent_rules(profile)
    worst = 0.0
    for a in model.graph.agents:
        own = model.graph.decisions_of(a)
        if not own:
            continue
        fixed = fix_decisions(model, {d: r for d, r in target.items() if d not in own})
        opts = [rule_options(model, d, base=profile.to_rules(model)[d].values) for d in own]
        tabs = {o.decision: pm.admissible(o.decision, o.tables) for o in opts}
        grid = UtilityGrid(fixed, tabs, agents=[a])
        cur = UtilityGrid(fixed, {d: target[d].values[None] for d in own}, agents=[a]).values[a].item()
        worst = max(worst, grid.values[a].max() - cur)
    return bool(worst <= tol), float(worst)


def _dominance_witness(model: Maim, profile: PureProfile, tol=ATOL):
    """An action that weakly dominates the profile's choice at some live context.

    Dominance is checked against every pure rule of every other decision, so
    it survives any full-support mixing by the others.
    """
    g = model.graph
    rules = profile.to_rules(model)
    for d in g.decisions:
        agent = g.owner(d)
        others = [x for x in g.decisions if x != d]
        other_opts = [rule_options(model, x) for x in others]
        for ctx in contexts_with_status(model, d, (LIVE,)):
            cur = int(np.argmax(rules[d].values[ctx]))
            for alt in range(model.card(d)):
                if alt == cur:
                    continue
                t_alt = rules[d].values.copy()
                t_alt[ctx] = np.eye(model.card(d))[alt]
                tabs = {o.decision: o.tables for o in other_opts}
                tabs[d] = np.stack([rules[d].values, t_alt])
                w = UtilityGrid(model, tabs, agents=[agent]).values[agent]
                gap = np.take(w, 1, axis=g.decisions.index(d)) - np.take(w, 0, axis=g.decisions.index(d))
                if np.all(gap >= -tol) and np.any(gap > tol):
                    pars = g.parents[d]
                    return {
                        "agent": agent,
                        "decision": d,
                        "context": tuple(model.domains[p][i] for p, i in zip(pars, ctx)),
                        "action": model.domains[d][alt],
                        "instead_of": model.domains[d][cur],
                    }
    return None


def _context_payoffs(model: Maim, rules, witness, eps) -> tuple[float, float]:
    """E[U^i 1(ctx)] for the witness action and the profile's action, others perturbed."""
    d = witness["decision"]
    agent = witness["agent"]
    pm = perturb(model, uniform_perturbation(model, eps, [x for x in model.graph.decisions if x != d]))
    others = {x: DecisionRule(x, r.parents, pm.admissible(x, r.values)) for x, r in rules.items() if x != d}
    fixed = fix_decisions(model, others)
    ctx_idx = model.context_indices(witness["context"], d)
    w = utility_weights(fixed, agent, list(model.graph.family(d)))
    row = w[ctx_idx]
    return float(row[model.value_index(d, witness["action"])]), float(row[model.value_index(d, witness["instead_of"])])


def is_thpe(model: Maim, profile: PureProfile, schedule: Iterable[float] | None = None) -> ThpeVerdict:
    """Semi-decision procedure for trembling-hand perfection of a pure NE.

    ``yes``: for each epsilon in the schedule the admissible image of the
    profile (intended action 1-(m-1)eps, every other action eps) is an NE of
    the uniformly perturbed game, so the profile is the limit of perturbed
    equilibria.  ``no``: some live context has an action that weakly
    dominates the profile's choice against every pure rule of the others,
    which makes it strictly better against any fully mixed play.
    """
    if not is_nash(model, profile):
        raise ModelError("profile is not a Nash equilibrium")
    if schedule is None:
        schedule = [2.0 ** -k for k in range(3, 13)]
    schedule = list(schedule)
    n_entries = sum(model.card(d) * len(model.contexts(d)) for d in model.graph.decisions)
    rules = profile.to_rules(model)
    witness = _dominance_witness(model, profile)
    verdict = ThpeVerdict("inconclusive")
    all_ok = True
    for eps in schedule:
        pm = perturb(model, uniform_perturbation(model, eps)) if n_entries else PerturbedMaim(model, {})
        ok, gain = _perturbed_nash(pm, profile)
        dist = max((np.abs(pm.admissible(d, r.values) - r.values).max() for d, r in rules.items()), default=0.0)
        item = {"eps": eps, "perturbed_nash": ok, "max_gain": gain, "distance": float(dist),
                "bound": eps * max(n_entries, 1)}
        if witness is not None:
            alt, cur = _context_payoffs(model, rules, witness, eps)
            item["witness_payoffs"] = (alt, cur)
        verdict.evidence.append(item)
        all_ok &= ok and dist <= eps * max(n_entries, 1) + ATOL
    if witness is not None:
        verdict.verdict, verdict.witness = "no", witness
    elif all_ok:
        verdict.verdict = "yes"
    return verdict


def undominated_check_2p(model: Maim, profile: PureProfile, tol: float = ATOL) -> bool:
    """True iff neither agent's pure policy in ``profile`` is weakly dominated."""
    g = model.graph
    if len(g.agents) != 2:
        raise ModelError("undominated check needs exactly two agents")
    rules = profile.to_rules(model)
    for a in g.agents:
        own = g.decisions_of(a)
        if not own:
            continue
        opts = {d: rule_options(model, d).tables for d in g.decisions}
        for d in own:
            opts[d] = np.concatenate([rules[d].values[None], opts[d]])
        vals = UtilityGrid(model, opts, agents=[a]).values[a]
        axes = [g.decisions.index(d) for d in own]
        other_axes = [i for i in range(vals.ndim) if i not in axes]
        # rows: own joint policy (index 0 along every own axis is the profile's)
        m = np.moveaxis(vals, axes + other_axes, list(range(vals.ndim)))
        own_shape = m.shape[: len(axes)]
        m = m.reshape(int(np.prod(own_shape)), -1)
        mine = m[0]
        diff = m - mine
        if np.any(np.all(diff >= -tol, axis=1) & np.any(diff > tol, axis=1)):
            return False
    return True
