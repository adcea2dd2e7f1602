"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 empty solution set, 3 I/O or
parse error.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .convert import absentminded_transform, check_equivalence, efg_to_maim, maim_to_efg
from .efg import Efg, export_efg_text
from .equilibria import is_thpe, pure_nash, spe_solve
from .inference import expected_utilities
from .io import FormatError, dumps_model, format_profiles, load_document, load_model, save_model
from .model import DECISION, UTILITY, Maim, ModelError, validate
from .relevance import _q, condensed_relevance_graph, relevance_graph
from .subgames import is_feasible_subgame, maid_subgame, maim_subgames, subgame_bases

OK, INVALID, EMPTY, IO_ERROR = 0, 1, 2, 3

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


class _Fail(Exception):
    def __init__(self, code, msg):
        super().__init__(msg)
        self.code = code


def _load_valid(path) -> Maim:
    model = load_model(path)
    problems = validate(model)
    if problems:
        raise _Fail(INVALID, "\n".join(f"{path}: {p}" for p in problems))
    return model


def _emit(args, text: str):
    if getattr(args, "output", None):
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------


def cmd_validate(args) -> int:
    model = load_model(args.model)
    problems = validate(model)
    if not model.graph.nodes:
        print(f"{args.model}: warning: model has no nodes", file=sys.stderr)
    for p in problems:
        print(f"{args.model}: {p}")
    if problems:
        return INVALID
    g = model.graph
    print(f"{args.model}: ok ({len(g.nodes)} nodes, {len(g.decisions)} decisions, {len(g.agents)} agents)")
    return OK


def cmd_analyze(args) -> int:
    model = _load_valid(args.model)
    rel = relevance_graph(model)
    con = condensed_relevance_graph(rel)
    if args.format == "dot":
        _emit(args, rel.to_dot() + con.to_dot())
        return OK
    lines = ["relevance edges:"]
    lines += [f"  {a} -> {b}" for a, b in rel.edges] or ["  (none)"]
    lines.append(f"components ({len(con.components)}, sinks first):")
    lines += [f"  C{i}: {' '.join(c)}" for i, c in enumerate(con.components)]
    lines.append("component edges:")
    lines += [f"  C{a} -> C{b}" for a, b in con.edges] or ["  (none)"]
    _emit(args, "\n".join(lines) + "\n")
    return OK


def cmd_subgames(args) -> int:
    model = _load_valid(args.model)
    lines = []
    for k, base in enumerate(subgame_bases(model)):
        sub = maid_subgame(model, base, check=False)
        msubs = maim_subgames(model, sub)
        feasible = [m for m in msubs if is_feasible_subgame(model, m)]
        tag = "proper" if base.proper else "full"
        lines.append(f"base {k + 1} [{tag}]: {{{', '.join(base.nodes)}}}  decisions: {', '.join(base.decisions) or '-'}"
                     f"  MAIM subgames: {len(msubs)} ({len(feasible)} feasible)")
        for m in msubs:
            y = ", ".join(f"{a}={v}" for a, v in m.boundary) or "-"
            flag = "feasible" if m in feasible else "infeasible"
            lines.append(f"  boundary {y}: {flag}")
            if args.emit:
                out = Path(args.emit)
                out.mkdir(parents=True, exist_ok=True)
                fname = f"{model.name}-base{k + 1}" + "".join(f"-{a}={v}" for a, v in m.boundary) + ".json"
                save_model(m.model, out / fname)
    _emit(args, "\n".join(lines) + "\n")
    return OK


def _utilities_note(model: Maim, prof) -> str:
    eu = expected_utilities(model, prof.to_rules(model))
    return "utilities " + ", ".join(f"{a}={_fmt(v)}" for a, v in eu.items())


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def cmd_solve(args) -> int:
    model = _load_valid(args.model)
    if args.refinement == "ne":
        profs = pure_nash(model)
        notes = [_utilities_note(model, p) for p in profs]
    elif args.refinement == "spe":
        res = spe_solve(model, with_diagnostics=True)
        profs = res.profiles
        notes = [_utilities_note(model, p) for p in profs]
        for d in res.diagnostics:
            print(f"{args.model}: {d}", file=sys.stderr)
    else:
        ne = pure_nash(model)
        with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
            verdicts = list(pool.map(lambda p: is_thpe(model, p), ne))
        profs, notes = [], []
        for p, v in zip(ne, verdicts):
            if v.verdict == "no":
                w = v.witness
                print(f"{args.model}: not THPE: {w['decision']}|{w['context']} plays {w['instead_of']}"
                      f" but {w['action']} weakly dominates it", file=sys.stderr)
            elif v.verdict == "inconclusive":
                print(f"{args.model}: THPE check inconclusive for one NE", file=sys.stderr)
            if v.verdict == "yes":
                profs.append(p)
                notes.append(_utilities_note(model, p) + "; thpe yes")
    _emit(args, format_profiles(model, profs, notes))
    if not profs:
        print(f"{args.model}: no pure {args.refinement.upper()} found", file=sys.stderr)
        return EMPTY
    return OK


def cmd_convert(args) -> int:
    doc = load_document(args.input)
    if args.to == "efg":
        if isinstance(doc, Efg):
            game = doc
        else:
            problems = validate(doc)
            if problems:
                raise _Fail(INVALID, "\n".join(f"{args.input}: {p}" for p in problems))
            game = maim_to_efg(doc, args.mode)
        _emit(args, export_efg_text(game))
        model = doc if isinstance(doc, Maim) else None
    else:
        if not isinstance(doc, Efg):
            raise _Fail(IO_ERROR, f"{args.input}: --to=maim needs a tree document (top-level 'root')")
        game = doc
        try:
            model = absentminded_transform(game) if game.absentminded_infosets() else efg_to_maim(game)
        except ModelError as e:
            raise _Fail(INVALID, f"{args.input}: {e}") from None
        _emit(args, dumps_model(model))
    if args.check and model is not None:
        rep = check_equivalence(game, model, trials=args.trials, rng=args.seed)
        status = "ok" if rep.ok else "FAILED"
        print(f"equivalence {status}: {rep.pure_checked} pure, {rep.mixed_checked} mixed, "
              f"{rep.null_checked} null-context checks, max error {rep.max_error:.3g}", file=sys.stderr)
        if not rep.ok:
            return INVALID
    return OK


def maid_to_dot(model: Maim) -> str:
    """MAID drawing: ellipses for chance, boxes for decisions, diamonds for utilities, coloured by agent."""
    g = model.graph
    colour = {a: PALETTE[i % len(PALETTE)] for i, a in enumerate(g.agents)}
    shape = {DECISION: "box", UTILITY: "diamond"}
    lines = [f"digraph {_q(model.name)} {{"]
    for n in g.nodes:
        attrs = [f"shape={shape.get(n.kind, 'ellipse')}", f"kind={_q(n.kind)}"]
        if n.owner is not None:
            attrs += [f"agent={_q(n.owner)}", f"color={_q(colour[n.owner])}",
                      "style=filled", f"fillcolor={_q(colour[n.owner] + '33')}"]
        lines.append(f"  {_q(n.name)} [{', '.join(attrs)}];")
    for a, b in g.edges:
        style = ", style=dashed" if g.kind(b) == DECISION else ""
        lines.append(f"  {_q(a)} -> {_q(b)}{' [' + style[2:] + ']' if style else ''};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_export_dot(args) -> int:
    model = _load_valid(args.model)
    _emit(args, maid_to_dot(model))
    return OK


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maimkit", description="Multi-agent influence models: analysis and equilibria.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized checks (solving is deterministic)")
    p.add_argument("--threads", type=int, default=1, help="worker threads; output order does not depend on it")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a model file")
    s.add_argument("model")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("analyze", help="relevance graph and its components")
    s.add_argument("model")
    s.add_argument("--format", choices=("table", "dot"), default="table")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("subgames", help="list subgame bases and MAIM subgames")
    s.add_argument("model")
    s.add_argument("--emit", metavar="DIR", help="write each MAIM subgame as a model file")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_subgames)

    s = sub.add_parser("solve", help="pure equilibria as decision/context/action tables")
    s.add_argument("model")
    s.add_argument("--refinement", choices=("ne", "spe", "thpe"), default="spe")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("convert", help="model to .efg text, or tree document to model")
    s.add_argument("input")
    s.add_argument("--to", choices=("efg", "maim"), required=True)
    s.add_argument("--mode", choices=("minimal", "full"), default="full")
    s.add_argument("--check", action="store_true", help="verify expected utilities across the conversion")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_convert)

    s = sub.add_parser("export-dot", help="MAID drawing in DOT")
    s.add_argument("model")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_export_dot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Fail as e:
        print(str(e), file=sys.stderr)
        return e.code
    except (FormatError, OSError) as e:
        print(str(e), file=sys.stderr)
        return IO_ERROR
    except ModelError as e:
        print(f"{getattr(args, 'model', None) or getattr(args, 'input', '')}: {e}", file=sys.stderr)
        return INVALID


if __name__ == "__main__":
    sys.exit(main())
