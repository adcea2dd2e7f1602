"""JSON documents for models and game trees.

Model document::

    {"name": "taxi", "agents": [1, 2],
     "nodes": [{"name": "D1", "kind": "decision", "owner": 1, "parents": [], "domain": ["e", "c"]}, ...],
     "cpds": [{"node": "U1", "rows": [{"context": {"D1": "e", "D2": "e"}, "dist": {"2": 1}}, ...]}, ...]}

``dist`` maps domain values (as JSON object keys) to probabilities; a list
aligned with the domain is accepted too.  Missing rows are left at zero and
reported by :func:`maimkit.model.validate`.  A chance node that replays a
decision rule is written ``{"node": X, "copies": D, "off_path": [context, ...]}``.

Tree document: ``{"title", "agents", "root"}`` where each node is
``{"kind": "chance"|"player"|"leaf", "label", "actions", "probs", "player",
"infoset", "intervention", "payoffs", "children"}``.
"""
from __future__ import annotations

import itertools
import json
from pathlib import Path
from typing import Any

import numpy as np

from .efg import CHANCE_NODE, LEAF, PLAYER_NODE, Efg, TreeNode
from .model import DECISION, KINDS, Cpd, MaidGraph, Maim, MirrorCpd, ModelError, Node, _domain_key


class FormatError(ModelError):
    """A document could not be read or does not follow the expected layout."""


def _freeze(v):
    return tuple(_freeze(x) for x in v) if isinstance(v, list) else v


def _thaw(v):
    if isinstance(v, tuple):
        return [_thaw(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def _key_index(domain, key, where) -> int:
    """Position of a JSON object key in ``domain`` (keys are strings, values need not be)."""
    for i, v in enumerate(domain):
        if isinstance(v, str) and v == key:
            return i
    for i, v in enumerate(domain):
        if not isinstance(v, str) and key in (json.dumps(v), str(v)):
            return i
    try:
        k = _domain_key(json.loads(key))
    except ValueError:
        k = None
    for i, v in enumerate(domain):
        if k is not None and _domain_key(v) == k:
            return i
    raise FormatError(f"{where}: value {key!r} not in domain {list(domain)}")


def _value_index(domain, value, where) -> int:
    k = _domain_key(_freeze(value))
    for i, v in enumerate(domain):
        if _domain_key(v) == k:
            return i
    raise FormatError(f"{where}: value {value!r} not in domain {list(domain)}")


# ---------------------------------------------------------------------------
# models


def model_from_dict(doc: dict, source: str = "<model>") -> Maim:
    try:
        agents = tuple(_freeze(a) for a in doc.get("agents", []))
        raw_nodes = doc.get("nodes", [])
        raw_cpds = doc.get("cpds", [])
    except AttributeError:
        raise FormatError(f"{source}: top level must be an object") from None
    nodes, parents, domains = [], {}, {}
    for k, n in enumerate(raw_nodes):
        try:
            name = n["name"]
            kind = n["kind"]
        except (KeyError, TypeError):
            raise FormatError(f"{source}: node #{k} needs 'name' and 'kind'") from None
        if kind not in KINDS:
            raise FormatError(f"{source}: node {name}: kind must be one of {list(KINDS)}, got {kind!r}")
        nodes.append(Node(name, kind, _freeze(n.get("owner"))))
        parents[name] = tuple(n.get("parents", []))
        domains[name] = tuple(_freeze(v) for v in n.get("domain", []))
    graph = MaidGraph(agents, tuple(nodes), parents)
    cpds: dict = {}
    for entry in raw_cpds:
        node = entry.get("node") if isinstance(entry, dict) else None
        if node not in domains:
            raise FormatError(f"{source}: CPD for unknown node {node!r}")
        where = f"{source}: node {node}"
        pars = parents[node]
        for p in pars:
            if p not in domains:
                raise FormatError(f"{where}: unknown parent {p!r}")
        pshape = tuple(len(domains[p]) for p in pars)
        if "copies" in entry:
            mask = np.ones(pshape, dtype=bool)
            for ctx in entry.get("off_path", []):
                mask[_context(ctx, pars, domains, where)] = False
            cpds[node] = MirrorCpd(node, pars, entry["copies"], mask)
            continue
        table = np.zeros(pshape + (len(domains[node]),))
        for row in entry.get("rows", []):
            idx = _context(row.get("context", {}), pars, domains, where)
            dist = row.get("dist")
            if isinstance(dist, list):
                if len(dist) != len(domains[node]):
                    raise FormatError(f"{where}: row {row.get('context')} lists {len(dist)} probabilities")
                table[idx] = dist
            elif isinstance(dist, dict):
                for key, p in dist.items():
                    table[idx + (_key_index(domains[node], key, where),)] = float(p)
            else:
                raise FormatError(f"{where}: row needs a 'dist' object")
        cpds[node] = Cpd(node, pars, table)
    return Maim(graph, domains, cpds, doc.get("name", Path(source).stem))


def _context(ctx, pars, domains, where) -> tuple:
    if not isinstance(ctx, dict):
        raise FormatError(f"{where}: context must be an object over {list(pars)}")
    extra = set(ctx) - set(pars)
    if extra:
        raise FormatError(f"{where}: context names non-parents {sorted(extra)}")
    return tuple(_value_index(domains[p], ctx[p], f"{where}, parent {p}") if p in ctx else slice(None)
                 for p in pars)


def model_to_dict(model: Maim) -> dict:
    g = model.graph
    nodes = []
    for n in g.nodes:
        d: dict[str, Any] = {"name": n.name, "kind": n.kind}
        if n.owner is not None:
            d["owner"] = _thaw(n.owner)
        d["parents"] = list(g.parents[n.name])
        d["domain"] = [_thaw(v) for v in model.domains[n.name]]
        nodes.append(d)
    cpds = []
    for n in g.nodes:
        if n.kind == DECISION or n.name not in model.cpds:
            continue
        cpd = model.cpds[n.name]
        pars = g.parents[n.name]
        ranges = [range(model.card(p)) for p in pars]
        if isinstance(cpd, MirrorCpd):
            off = [{p: _thaw(model.domains[p][i]) for p, i in zip(pars, idx)}
                   for idx in itertools.product(*ranges) if not cpd.on_path[idx]]
            cpds.append({"node": n.name, "copies": cpd.decision, "off_path": off})
            continue
        rows = []
        for idx in itertools.product(*ranges):
            dist = {_key(v): _num(p) for v, p in zip(model.domains[n.name], cpd.values[idx]) if p != 0}
            rows.append({"context": {p: _thaw(model.domains[p][i]) for p, i in zip(pars, idx)}, "dist": dist})
        cpds.append({"node": n.name, "rows": rows})
    return {"name": model.name, "agents": [_thaw(a) for a in g.agents], "nodes": nodes, "cpds": cpds}


def _key(v) -> str:
    return v if isinstance(v, str) else json.dumps(_thaw(v))


def _num(x):
    x = float(x)
    return int(x) if x.is_integer() else x


def dumps_model(model: Maim) -> str:
    return json.dumps(model_to_dict(model), indent=1) + "\n"


def load_model(path: str | Path) -> Maim:
    return model_from_dict(_read(path), str(path))


def save_model(model: Maim, path: str | Path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def _read(path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise FormatError(f"{path}: {e.strerror or e}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON ({e.msg} at line {e.lineno})") from None


# ---------------------------------------------------------------------------
# trees


def tree_from_dict(doc: dict, source: str = "<tree>") -> Efg:
    if not isinstance(doc, dict) or "root" not in doc:
        raise FormatError(f"{source}: tree document needs a 'root' node")

    def node(d, path):
        if not isinstance(d, dict) or d.get("kind") not in (CHANCE_NODE, PLAYER_NODE, LEAF):
            raise FormatError(f"{source}: node at {path or 'root'} needs kind chance|player|leaf")
        if d["kind"] == LEAF:
            return TreeNode(LEAF, payoffs=tuple(float(x) for x in d.get("payoffs", ())), label=d.get("label", ""))
        kids = d.get("children", [])
        acts = d.get("actions", list(range(len(kids))))
        children = tuple(node(c, f"{path}/{_thaw(a)}") for a, c in zip(acts, kids))
        probs = tuple(float(p) for p in d["probs"]) if d["kind"] == CHANCE_NODE and "probs" in d else None
        return TreeNode(d["kind"], tuple(_freeze(a) for a in acts), children, probs,
                        player=_freeze(d.get("player")), infoset=_freeze(d.get("infoset")),
                        label=d.get("label", ""), intervention=_freeze(d.get("intervention")))

    try:
        return Efg(tuple(_freeze(a) for a in doc.get("agents", [])), node(doc["root"], ""),
                   doc.get("title", Path(source).stem))
    except ModelError as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(f"{source}: {e}") from None


def tree_to_dict(game: Efg) -> dict:
    def node(v: TreeNode):
        d: dict[str, Any] = {"kind": v.kind}
        if v.label:
            d["label"] = v.label
        if v.kind == LEAF:
            d["payoffs"] = [_num(x) for x in v.payoffs]
            return d
        d["actions"] = [_thaw(a) for a in v.actions]
        if v.kind == CHANCE_NODE:
            d["probs"] = [float(p) for p in v.probs]
        else:
            d["player"] = _thaw(v.player)
            d["infoset"] = _thaw(v.infoset)
        if v.intervention is not None:
            d["intervention"] = _thaw(v.intervention)
        d["children"] = [node(c) for c in v.children]
        return d

    return {"title": game.title, "agents": [_thaw(a) for a in game.agents], "root": node(game.root)}


def load_tree(path: str | Path) -> Efg:
    return tree_from_dict(_read(path), str(path))


def save_tree(game: Efg, path: str | Path) -> None:
    Path(path).write_text(json.dumps(tree_to_dict(game), indent=1) + "\n", encoding="utf-8")


def load_document(path: str | Path) -> Maim | Efg:
    """A model or a tree, depending on the document's top-level keys."""
    doc = _read(path)
    if isinstance(doc, dict) and "root" in doc:
        return tree_from_dict(doc, str(path))
    return model_from_dict(doc, str(path))


# ---------------------------------------------------------------------------
# profile tables


def format_profiles(model: Maim, profiles, notes=None) -> str:
    """Profiles as ``decision<TAB>context<TAB>action`` rows, each block headed by ``# profile k``.

    ``notes`` optionally gives one comment string per profile.
    """
    blocks = []
    for k, prof in enumerate(profiles):
        head = f"# profile {k + 1}"
        if notes is not None and notes[k]:
            head += f": {notes[k]}"
        body = prof.ordered(model).format(model)
        blocks.append(head + ("\n" + body if body else ""))
    return "\n".join(blocks) + ("\n" if blocks else "")


def parse_profiles(model: Maim, text: str) -> list:
    """Read back the output of :func:`format_profiles`."""
    from .model import PureProfile

    g = model.graph
    out: list[dict] = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("#"):
            if line.startswith("# profile"):
                out.append({})
            continue
        parts = line.split("\t")
        if len(parts) != 3 or not out:
            raise FormatError(f"line {n}: expected 'decision<TAB>context<TAB>action' after a '# profile' header")
        d, ctx, a = parts
        if d not in g.decisions:
            raise FormatError(f"line {n}: {d!r} is not a decision")
        pars = g.parents[d]
        vals = {}
        if ctx != "-" and pars:
            for item in ctx.split(", "):
                p, _, v = item.partition("=")
                if p not in pars:
                    raise FormatError(f"line {n}: {p!r} is not a parent of {d}")
                vals[p] = _by_str(model, p, v, n)
        if set(vals) != set(pars):
            raise FormatError(f"line {n}: context must assign {list(pars)}")
        out[-1].setdefault(d, {})[tuple(vals[p] for p in pars)] = _by_str(model, d, a, n)
    return [PureProfile.from_dict(p) for p in out]


def _by_str(model: Maim, node: str, s: str, line: int):
    for v in model.domains[node]:
        if str(v) == s:
            return v
    raise FormatError(f"line {line}: {s!r} not in domain of {node}")
