"""Independent reference implementations used to check the library.

Nothing here calls into maimkit's inference, relevance or tree code; the
oracles read models and trees through their plain data fields only.
"""
from __future__ import annotations

import itertools
import re
from fractions import Fraction

import numpy as np

from maimkit.efg import Efg, chance, leaf, move
from maimkit.games import make_maim
from maimkit.model import CHANCE, DECISION, UTILITY, MirrorCpd


# ---------------------------------------------------------------------------
# expected utility by joint enumeration


def state_space(model) -> int:
    return int(np.prod([len(model.domains[v]) for v in model.graph.names], dtype=float))


def _spread(table, axes, shape):
    """Broadcast ``table`` (axes listed in ``axes``) to the full joint ``shape``."""
    order = sorted(range(len(axes)), key=lambda k: axes[k])
    t = np.transpose(table, order)
    full = [1] * len(shape)
    for a in axes:
        full[a] = shape[a]
    return t.reshape(full)


def _mirror_table(model, v, rules):
    """Explicit table of a node that replays a decision rule on its flagged rows."""
    g = model.graph
    cpd = model.cpds[v]
    d = cpd.decision
    pars = list(g.parents[v])
    shape = [len(model.domains[p]) for p in pars] + [len(model.domains[v])]
    out = np.zeros(shape)
    for ctx in itertools.product(*map(range, shape[:-1])):
        if cpd.on_path[ctx]:
            dctx = tuple(ctx[pars.index(p)] for p in g.parents[d])
            out[ctx][: len(model.domains[d])] = rules[d].values[dctx]
        else:
            out[ctx][-1] = 1.0
    return out


def brute_force_eu(model, rules) -> dict:
    """Dense joint over every assignment (product of broadcast tables), then utility sums."""
    g = model.graph
    names = list(g.names)
    pos = {v: i for i, v in enumerate(names)}
    shape = [len(model.domains[v]) for v in names]
    joint = np.ones(shape)
    for v in names:
        if g.kind(v) == DECISION:
            table = rules[v].values
        elif isinstance(model.cpds[v], MirrorCpd):
            table = _mirror_table(model, v, rules)
        else:
            table = model.cpds[v].values
        joint = joint * _spread(table, [pos[p] for p in g.parents[v]] + [pos[v]], shape)
    out = {a: 0.0 for a in g.agents}
    for u in g.utilities:
        vals = _spread(np.asarray(model.domains[u], dtype=float), [pos[u]], shape)
        out[g.owner(u)] += float((joint * vals).sum())
    return out


def random_rules(model, rng, pure=False) -> dict:
    out = {}
    for d in model.graph.decisions:
        pshape = tuple(len(model.domains[p]) for p in model.graph.parents[d])
        k = len(model.domains[d])
        if pure:
            vals = np.eye(k)[rng.integers(0, k, size=pshape)]
        else:
            vals = rng.dirichlet(np.ones(k), size=pshape)
        out[d] = model.rule(d, vals)
    return out


# ---------------------------------------------------------------------------
# d-separation by enumerating simple undirected paths


def _descendants(children, v):
    out, stack = set(), [v]
    while stack:
        for c in children[stack.pop()]:
            if c not in out:
                out.add(c)
                stack.append(c)
    return out


def dsep_paths(parents: dict, X, Y, Z) -> bool:
    """True iff every simple path between X and Y is blocked by Z."""
    nodes = list(parents)
    children = {v: [c for c in nodes if v in parents[c]] for v in nodes}
    nbrs = {v: set(parents[v]) | set(children[v]) for v in nodes}
    Z = set(Z)
    desc = {v: _descendants(children, v) for v in nodes}

    def active(path):
        for a, b, c in zip(path, path[1:], path[2:]):
            collider = a in parents[b] and c in parents[b]
            if collider:
                if b not in Z and not (desc[b] & Z):
                    return False
            elif b in Z:
                return False
        return True

    def walk(path, target):
        v = path[-1]
        if v == target:
            return active(path)
        for w in nbrs[v]:
            if w not in path and walk(path + [w], target):
                return True
        return False

    return not any(walk([x], y) for x in X for y in Y)


def random_dag(rng, n, p=0.35) -> dict:
    names = [f"V{i}" for i in range(n)]
    return {v: [names[j] for j in range(i) if rng.random() < p] for i, v in enumerate(names)}


def joint_table(parents: dict, rng) -> tuple[list, np.ndarray]:
    """Random binary parametrization of a DAG and its full joint, axes in ``parents`` order."""
    names = list(parents)
    joint = np.ones([2] * len(names))
    for i, v in enumerate(names):
        pa = [names.index(p) for p in parents[v]]
        cpd = rng.dirichlet(np.ones(2), size=[2] * len(pa))
        shape = [1] * len(names)
        for j in pa:
            shape[j] = 2
        shape[i] = 2
        axes = sorted(pa + [i])
        # put the cpd axes (parents..., child) into sorted axis order
        order = [axes.index(j) for j in pa + [i]]
        full = np.moveaxis(cpd, list(range(len(order))), order) if order else cpd
        joint = joint * full.reshape(shape)
    return names, joint


def conditionally_independent(names, joint, X, Y, Z, tol=1e-9) -> bool:
    idx = {v: i for i, v in enumerate(names)}
    keep = sorted({idx[v] for v in list(X) + list(Y) + list(Z)})
    drop = tuple(i for i in range(len(names)) if i not in keep)
    m = joint.sum(axis=drop) if drop else joint
    pos = {k: j for j, k in enumerate(keep)}
    ax = lambda S: tuple(pos[idx[v]] for v in S)
    xa, ya = ax(X), ax(Y)
    pxz = m.sum(axis=ya, keepdims=True)
    pyz = m.sum(axis=xa, keepdims=True)
    pz = m.sum(axis=xa + ya, keepdims=True)
    return bool(np.all(np.abs(m * pz - pxz * pyz) <= tol))


# ---------------------------------------------------------------------------
# random models and trees


def random_maim(rng, max_nodes=6, max_decisions=3, name="random"):
    """Binary-domain model with at most ``max_nodes`` nodes, utilities last."""
    n = int(rng.integers(3, max_nodes + 1))
    n_dec = int(rng.integers(1, min(max_decisions, n - 1) + 1))
    n_util = int(rng.integers(1, n - n_dec + 1))
    n_chance = n - n_dec - n_util
    kinds = [DECISION] * n_dec + [CHANCE] * n_chance
    rng.shuffle(kinds)
    kinds += [UTILITY] * n_util
    counters = {CHANCE: 0, DECISION: 0, UTILITY: 0}
    names = []
    for k in kinds:
        counters[k] += 1
        names.append({CHANCE: "X", DECISION: "D", UTILITY: "U"}[k] + str(counters[k]))
    nodes, chance_fns, util_fns, domains = [], {}, {}, {}
    for i, (v, k) in enumerate(zip(names, kinds)):
        pool = [names[j] for j in range(i) if kinds[j] != UTILITY]
        pars = [p for p in pool if rng.random() < 0.45]
        if k == DECISION:
            pars = pars[:2]
        if k == UTILITY and not pars and pool:
            pars = [pool[int(rng.integers(len(pool)))]]
        owner = None if k == CHANCE else int(rng.integers(1, 3))
        nodes.append((v, k, owner, tuple(pars)))
        if k == CHANCE:
            domains[v] = (0, 1)
            table = {}
            for ctx in itertools.product((0, 1), repeat=len(pars)):
                if rng.random() < 0.2:
                    table[ctx] = int(rng.integers(2))
                else:
                    p = float(rng.dirichlet(np.ones(2))[0])
                    table[ctx] = {0: p, 1: 1 - p}
            chance_fns[v] = (lambda t: lambda *c: t[tuple(c)])(table)
        elif k == DECISION:
            domains[v] = (0, 1)
        else:
            vals = sorted(rng.choice(np.arange(-3, 4), size=2, replace=False).tolist())
            table = {ctx: vals[int(rng.integers(2))] for ctx in itertools.product((0, 1), repeat=len(pars))}
            util_fns[v] = (lambda t: lambda *c: t[tuple(c)])(table)
    return make_maim(name, (1, 2), nodes, chance=chance_fns, utility=util_fns, domains=domains)


def random_efg(rng, depth=3, players=(1, 2), title="random") -> Efg:
    """Binary tree of the given depth; same-depth nodes of a player may share information sets."""

    def build(d):
        if d == depth or (d > 0 and rng.random() < 0.15):
            return leaf(*[int(x) for x in rng.integers(-3, 4, size=len(players))])
        if rng.random() < 0.3:
            p = float(np.round(rng.uniform(0.1, 0.9), 3))
            return chance([("h", p, build(d + 1)), ("t", 1 - p, build(d + 1))])
        pl = players[int(rng.integers(len(players)))]
        return move(pl, f"{pl}-{d}-{int(rng.integers(2))}", [("l", build(d + 1)), ("r", build(d + 1))])

    return Efg(players, build(0), title)


# ---------------------------------------------------------------------------
# .efg reader (grammar check) and tree-side game theory on the parsed file


_TOKEN = re.compile(r'"(?:[^"]|"")*"|[{},]|[^\s{},"]+')
_INT = re.compile(r"^-?\d+$")
_NUM = re.compile(r"^-?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?$|^-?\d+/\d+$")


class EfgSyntaxError(ValueError):
    pass


def _tokens(line):
    toks, end = [], 0
    for m in _TOKEN.finditer(line):
        if line[end:m.start()].strip():
            raise EfgSyntaxError(f"unrecognised characters in {line!r}")
        toks.append(m.group())
        end = m.end()
    return toks


def _string(tok):
    if not (len(tok) >= 2 and tok[0] == tok[-1] == '"'):
        raise EfgSyntaxError(f"expected a quoted string, got {tok!r}")
    body = tok[1:-1]
    if re.search(r'(?<!")"(?!")', body.replace('""', "")):
        raise EfgSyntaxError(f"unescaped quote in {tok!r}")
    return body.replace('""', '"')


def _number(tok) -> Fraction:
    if not _NUM.match(tok):
        raise EfgSyntaxError(f"expected a number, got {tok!r}")
    return Fraction(tok)


def _braced(toks, i):
    if toks[i] != "{":
        raise EfgSyntaxError(f"expected '{{' at token {i}")
    j = toks.index("}", i)
    return toks[i + 1:j], j + 1


def parse_efg(text: str) -> dict:
    """Parse version-2 outcome-format text; raises EfgSyntaxError on any deviation."""
    if not text.endswith("\n"):
        raise EfgSyntaxError("file must end with a newline")
    lines = text[:-1].split("\n")
    head = _tokens(lines[0])
    if head[:3] != ["EFG", "2", "R"]:
        raise EfgSyntaxError("header must start with 'EFG 2 R'")
    title = _string(head[3])
    players, k = _braced(head, 4)
    players = [_string(p) for p in players]
    if k != len(head):
        raise EfgSyntaxError("trailing tokens in header")
    nodes = []
    for ln in lines[1:]:
        t = _tokens(ln)
        kind = t[0]
        if kind == "c":
            label, iset = _string(t[1]), t[2]
            _string(t[3])
            body, k = _braced(t, 4)
            if len(body) % 2:
                raise EfgSyntaxError(f"chance actions need probabilities: {ln!r}")
            acts = [_string(a) for a in body[0::2]]
            probs = [_number(p) for p in body[1::2]]
            if t[k:] != ["0"] or not _INT.match(iset):
                raise EfgSyntaxError(f"bad chance line {ln!r}")
            if abs(sum(probs) - 1) > Fraction(1, 10**9) or any(p < 0 for p in probs):
                raise EfgSyntaxError(f"chance probabilities do not sum to 1: {ln!r}")
            nodes.append({"kind": "c", "label": label, "iset": int(iset), "actions": acts, "probs": probs})
        elif kind == "p":
            label, pl, iset = _string(t[1]), t[2], t[3]
            _string(t[4])
            body, k = _braced(t, 5)
            if t[k:] != ["0"] or not _INT.match(pl) or not _INT.match(iset):
                raise EfgSyntaxError(f"bad player line {ln!r}")
            if not 1 <= int(pl) <= len(players):
                raise EfgSyntaxError(f"unknown player number in {ln!r}")
            nodes.append({"kind": "p", "label": label, "player": int(pl), "iset": int(iset),
                          "actions": [_string(a) for a in body]})
        elif kind == "t":
            label, oc = _string(t[1]), t[2]
            _string(t[3])
            body, k = _braced(t, 4)
            if k != len(t) or not _INT.match(oc):
                raise EfgSyntaxError(f"bad terminal line {ln!r}")
            pays = [b for b in body if b != ","]
            if body[1::2] != [","] * (len(pays) - 1) or len(pays) != len(players):
                raise EfgSyntaxError(f"payoffs must be {len(players)} comma-separated numbers: {ln!r}")
            nodes.append({"kind": "t", "label": label, "outcome": int(oc), "payoffs": [_number(p) for p in pays]})
        else:
            raise EfgSyntaxError(f"unknown node type in {ln!r}")
    # rebuild the tree from prefix order
    children = [[] for _ in nodes]
    parent = [None] * len(nodes)
    pos = 0

    def build():
        nonlocal pos
        if pos >= len(nodes):
            raise EfgSyntaxError("tree ends early")
        i = pos
        pos += 1
        if nodes[i]["kind"] != "t":
            for _ in nodes[i]["actions"]:
                c = build()
                children[i].append(c)
                parent[c] = i
        return i

    build()
    if pos != len(nodes):
        raise EfgSyntaxError("lines after the end of the tree")
    seen: dict = {}
    for v in nodes:
        if v["kind"] == "p":
            key = (v["player"], v["iset"])
            if seen.setdefault(key, v["actions"]) != v["actions"]:
                raise EfgSyntaxError(f"information set {key} offers different actions")
    outcomes: dict = {}
    for v in nodes:
        if v["kind"] == "t" and outcomes.setdefault(v["outcome"], v["payoffs"]) != v["payoffs"]:
            raise EfgSyntaxError(f"outcome {v['outcome']} has two payoff vectors")
    return {"title": title, "players": players, "nodes": nodes, "children": children, "parent": parent}


def proper_subgame_roots(tree: dict) -> list[int]:
    """Non-root decision or chance nodes whose subtree no information set leaves."""
    nodes, children = tree["nodes"], tree["children"]

    def subtree(i):
        out, stack = set(), [i]
        while stack:
            k = stack.pop()
            out.add(k)
            stack.extend(children[k])
        return out

    members: dict = {}
    for i, v in enumerate(nodes):
        if v["kind"] == "p":
            members.setdefault((v["player"], v["iset"]), set()).add(i)
    roots = []
    for i, v in enumerate(nodes):
        if i == 0 or v["kind"] == "t":
            continue
        sub = subtree(i)
        if all(m <= sub for m in members.values() if m & sub):
            roots.append(i)
    return roots


def tree_payoff(tree: dict, choice: dict, start: int = 0) -> list[Fraction]:
    """Expected payoffs below ``start`` when each information set plays ``choice[(player, iset)]``."""
    nodes, children = tree["nodes"], tree["children"]
    v = nodes[start]
    if v["kind"] == "t":
        return list(v["payoffs"])
    if v["kind"] == "p":
        j = v["actions"].index(choice[(v["player"], v["iset"])])
        return tree_payoff(tree, choice, children[start][j])
    total = [Fraction(0)] * len(tree["players"])
    for p, c in zip(v["probs"], children[start]):
        if p:
            total = [a + p * b for a, b in zip(total, tree_payoff(tree, choice, c))]
    return total


def tree_infosets(tree: dict) -> dict:
    out: dict = {}
    for v in tree["nodes"]:
        if v["kind"] == "p":
            out.setdefault((v["player"], v["iset"]), v["actions"])
    return out


def tree_pure_nash(tree: dict, tol=Fraction(1, 10**9)) -> list[dict]:
    """All pure NEs of the parsed tree: no unilateral pure deviation gains more than ``tol``."""
    sets = tree_infosets(tree)
    keys = list(sets)
    profiles = [dict(zip(keys, c)) for c in itertools.product(*(sets[k] for k in keys))]
    pay = {tuple(p[k] for k in keys): tree_payoff(tree, p) for p in profiles}
    by_player = {pl: [k for k in keys if k[0] == pl] for pl in range(1, len(tree["players"]) + 1)}
    out = []
    for p in profiles:
        base = pay[tuple(p[k] for k in keys)]
        ok = True
        for pl, own in by_player.items():
            for dev in itertools.product(*(sets[k] for k in own)):
                q = dict(p)
                q.update(zip(own, dev))
                if pay[tuple(q[k] for k in keys)][pl - 1] > base[pl - 1] + tol:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append(p)
    return out
