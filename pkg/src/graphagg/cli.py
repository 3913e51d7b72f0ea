"""Command-line entry point.

Exit codes: 0 pass or success, 1 property violated (witness in the report),
2 usage, parse or cap error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .errors import GraphAggError
from .graphs import CAPS, VertexUniverse, get_property

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _common(p):
    p.add_argument("--json", action="store_true", help="emit a JSON report")
    p.add_argument("--max-profiles", type=int, default=CAPS.max_profiles, help=f"profile scan budget (default {CAPS.max_profiles})")
    p.add_argument("--max-valuations", type=int, default=CAPS.max_valuations, help=f"valuation cap (default {CAPS.max_valuations})")
    p.add_argument("--threads", type=int, default=1, help="worker count; results do not depend on it")


def _scale(p, agents=True):
    p.add_argument("--vertices", type=int, required=True, help="number of vertices |V|")
    if agents:
        p.add_argument("--agents", type=int, required=True, help="number of agents n")


def _valuation_arg(p):
    p.add_argument("--val", action="append", default=[], metavar="ATOM=V1,V2",
                   help="atom extension, repeatable; unlisted atoms are false everywhere")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="graphagg", description="Graph aggregation rules, axioms and collective rationality.")
    ap.add_argument("--version", action="version", version=f"graphagg {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("aggregate", help="apply a rule to a profile file")
    p.add_argument("--rule", required=True)
    p.add_argument("--profile", required=True, help="profile file")
    p.add_argument("--format", choices=("text", "dot"), default="text")
    p.add_argument("--output", help="also write the collective graph to this file")
    p.add_argument("--property", help="report the property on inputs and output")
    p.add_argument("--formula", help="report the formula on inputs and output")
    p.add_argument("--atoms")
    p.add_argument("--check", default="frame", help="frame | global | world:<vertex>")
    _valuation_arg(p)
    _common(p)

    p = sub.add_parser("check-axiom", help="decide an axiom exhaustively")
    p.add_argument("--axiom", required=True)
    p.add_argument("--rule", required=True)
    _scale(p)
    p.add_argument("--restrict", help="quantify over profiles of graphs with this property")
    p.add_argument("--save-witness", help="write the witness profile(s) here")
    _common(p)

    p = sub.add_parser("check-cr", help="decide collective rationality")
    p.add_argument("--rule", required=True)
    _scale(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--property")
    g.add_argument("--formula")
    p.add_argument("--level", choices=("frame", "model", "world"), default="frame")
    p.add_argument("--atoms")
    p.add_argument("--sample", type=int, help="draw this many random profiles when the space exceeds the budget")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--save-witness", help="write the witness profile here")
    _common(p)

    p = sub.add_parser("check-meta", help="decide a meta-property of a graph property")
    p.add_argument("--meta", required=True, choices=("contagious", "implicative", "disjunctive", "table"))
    p.add_argument("--property")
    _scale(p, agents=False)
    _common(p)

    p = sub.add_parser("coalitions", help="winning coalitions and regime of an IIE rule")
    p.add_argument("--rule", required=True)
    _scale(p)
    p.add_argument("--validate", choices=("sample", "full", "none"), default="sample")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    _common(p)

    p = sub.add_parser("verify", help="enumerate neutral rules for a theorem instance")
    p.add_argument("--theorem", required=True)
    p.add_argument("--agents", type=int, default=3)
    p.add_argument("--vertices", type=int, default=3)
    _common(p)

    p = sub.add_parser("modal", help="evaluate a formula or property on a graph file")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--formula")
    g.add_argument("--property")
    p.add_argument("--graph", help="graph file; without it the formula is only analysed")
    p.add_argument("--atoms")
    p.add_argument("--check", default="frame", help="frame | global | world:<vertex>")
    _valuation_arg(p)
    _common(p)

    p = sub.add_parser("demo", help="worked examples")
    p.add_argument("name", choices=("condorcet", "seriality", "union-transitivity"))
    p.add_argument("--format", choices=("text", "dot"), default="text")
    _common(p)

    p = sub.add_parser("preset", help="application presets")
    p.add_argument("name", choices=("arrow", "clustering", "clustering-nontrivial", "preorder-oligarchy", "argumentation"))
    p.add_argument("--agents", type=int)
    p.add_argument("--vertices", type=int)
    _common(p)
    return ap


# --- helpers -------------------------------------------------------------------------


def _caps(args):
    return replace(CAPS, max_profiles=args.max_profiles, max_valuations=args.max_valuations)


def _atoms(args):
    if not getattr(args, "atoms", None):
        return None
    return tuple(a.strip() for a in args.atoms.split(",") if a.strip())


def _valuation(u, atoms, specs):
    from .errors import UsageError
    from .modal import Valuation

    assign = {a: [] for a in atoms}
    for s in specs:
        name, eq, rest = s.partition("=")
        name = name.strip()
        if not eq or name not in assign:
            raise UsageError(f"bad --val {s!r}; expected ATOM=V1,V2 for one of {', '.join(atoms)}")
        assign[name] = [v.strip() for v in rest.split(",") if v.strip()]
    return Valuation.of(u, assign)


def _modal_check(f, atoms, g, check, val_specs):
    """Truth of ``f`` at the requested level on graph ``g``."""
    from .errors import UsageError
    from .modal import KripkeModel, frame_valid, globally_true, truth_at

    if check == "frame":
        return frame_valid(g, f, atoms)
    val = _valuation(g.universe, atoms, val_specs)
    if check == "global":
        return globally_true(KripkeModel(g, val), f)
    if check.startswith("world:"):
        x = check[len("world:"):]
        g.universe.index(x)
        return truth_at(KripkeModel(g, val), x, f)
    raise UsageError(f"bad --check {check!r}; use frame, global or world:<vertex>")


class _Out:
    def __init__(self, args):
        self.json = getattr(args, "json", False)
        self.data = {"command": " ".join(sys.argv[1:]) if sys.argv else ""}
        self.lines = []

    def say(self, text=""):
        self.lines.append(text)

    def emit(self, started):
        if self.json:
            self.data["elapsed"] = round(time.time() - started, 4)
            print(json.dumps(self.data, indent=2, sort_keys=True))
        else:
            print("\n".join(self.lines))


def _save_witness(path, verdict, out):
    if not path or verdict.witness is None:
        return
    from .fileio import write_profile_file

    for i, pr in enumerate(verdict.witness.profiles):
        target = path if i == 0 else f"{path}.{i + 1}"
        write_profile_file(target, pr)
        out.say(f"witness profile written to {target}")


# --- commands ------------------------------------------------------------------------


def cmd_aggregate(args, out):
    from .fileio import parse_profile_file, to_dot, write_graph, write_graph_file
    from .modal import _atoms as formula_atoms
    from .modal import parse_formula
    from .rules import parse_rule

    pr = parse_profile_file(args.profile)
    rule = parse_rule(args.rule, pr.universe)
    g = rule.apply(pr)
    text = to_dot(g) if args.format == "dot" else write_graph(g)
    out.say(text.rstrip())
    out.data.update(rule=str(rule), output=write_graph(g), output_edges=[list(e) for e in g.edges])
    if args.output:
        write_graph_file(args.output, g)
    code = EXIT_PASS
    if args.property or args.formula:
        if args.property:
            p = get_property(args.property)
            label = p.name
            test = p
        else:
            atoms = _atoms(args)
            f = parse_formula(args.formula, atoms)
            atoms = formula_atoms(f, atoms)
            label = f"{args.formula} ({args.check})"
            test = lambda h: _modal_check(f, atoms, h, args.check, args.val)
        ins = [bool(test(h)) for h in pr]
        res = bool(test(g))
        violated = all(ins) and not res
        for i, v in enumerate(ins, 1):
            out.say(f"agent {i}: {label} {'holds' if v else 'fails'}")
        out.say(f"output: {label} {'holds' if res else 'fails'}")
        if violated:
            out.say("collective rationality violated on this profile")
            code = EXIT_FAIL
        out.data.update(check=label, inputs=ins, output_holds=res, violated=violated)
    return code


def cmd_check_axiom(args, out):
    from .axioms import check_axiom
    from .rules import parse_rule

    u = VertexUniverse.standard(args.vertices)
    rule = parse_rule(args.rule, u)
    scope = get_property(args.restrict) if args.restrict else None
    v = check_axiom(rule, args.axiom, u, args.agents, scope=scope, caps=_caps(args))
    out.say(v.describe())
    out.data["verdict"] = v.to_dict()
    _save_witness(args.save_witness, v, out)
    return EXIT_PASS if v.passed else EXIT_FAIL


def cmd_check_cr(args, out):
    from .cr import check_cr, check_modal_cr
    from .rules import parse_rule

    u = VertexUniverse.standard(args.vertices)
    rule = parse_rule(args.rule, u)
    caps = _caps(args)
    if args.property:
        v = check_cr(rule, args.property, u, args.agents, caps=caps, sample=args.sample, seed=args.seed)
    else:
        v = check_modal_cr(rule, args.formula, _atoms(args), u, args.agents, args.level, caps=caps,
                           sample=args.sample, seed=args.seed)
    out.say(v.describe())
    out.data["verdict"] = v.to_dict()
    _save_witness(args.save_witness, v, out)
    return EXIT_PASS if v.passed else EXIT_FAIL


def cmd_check_meta(args, out):
    from .errors import UsageError
    from .fileio import write_graph
    from .metaprops import EXPECTED_META, is_contagious, is_disjunctive, is_implicative, meta_table

    caps = replace(_caps(args))
    if args.meta == "table":
        rows = meta_table(args.vertices, caps=caps)
        ok = True
        out.say(f"{'property':<24}contagious implicative disjunctive")
        mark = lambda b: "yes" if b else "no"
        table = []
        for r in rows:
            exp = EXPECTED_META.get(r.name)
            match = exp is None or exp == r.cells
            ok &= match
            out.say(f"{r.name:<24}{mark(r.contagious):<11}{mark(r.implicative):<12}{mark(r.disjunctive):<11}"
                    + ("" if match else f"  expected {tuple(map(mark, exp))}"))
            table.append({"property": r.name, "cells": list(r.cells), "expected": None if exp is None else list(exp)})
        out.data.update(table=table, matches=ok)
        out.say("matches the reference table" if ok else "DIFFERS from the reference table")
        return EXIT_PASS if ok else EXIT_FAIL
    if not args.property:
        raise UsageError("--property is required unless --meta table")
    p = get_property(args.property)
    if args.meta == "contagious":
        cv = is_contagious(p, args.vertices, caps)
        out.say(f"{p.name} contagious: {cv.contagious} (conditions {cv.conditions})")
        wits = {k: w for k, w in cv.witnesses.items() if w is not None}
        first = next(iter(wits.values()), None)
        out.data.update(holds=cv.contagious, conditions=cv.conditions,
                        witness=None if first is None else first.to_dict())
        if first is not None:
            out.say(first.describe())
            for name, g in first.exemplars.items():
                out.say(f"{name}:\n{write_graph(g).rstrip()}")
        return EXIT_PASS if cv.contagious else EXIT_FAIL
    fn = is_implicative if args.meta == "implicative" else is_disjunctive
    w = fn(p, args.vertices, caps)
    out.say(f"{p.name} {args.meta}: {w is not None}")
    out.data.update(holds=w is not None, witness=None if w is None else w.to_dict())
    if w is not None:
        out.say(w.describe())
        for name, g in w.exemplars.items():
            out.say(f"{name}:\n{write_graph(g).rstrip()}")
    return EXIT_PASS if w is not None else EXIT_FAIL


def cmd_coalitions(args, out):
    from .axioms import classify_family, detect_regime, extract_winning_families
    from .rules import parse_rule

    u = VertexUniverse.standard(args.vertices)
    rule = parse_rule(args.rule, u)
    caps = _caps(args)
    fams = extract_winning_families(rule, u, args.agents, validate=args.validate, samples=args.samples,
                                    seed=args.seed, caps=caps)
    rows = {}
    for (x, y), w in fams.items():
        c = classify_family(w)
        kind = "ultrafilter" if c.is_ultrafilter else "filter" if c.is_filter else "neither"
        out.say(f"({x},{y}): {w!r} {kind}")
        rows[f"{x},{y}"] = {"coalitions": [sorted(s) for s in w.coalitions], "filter": c.is_filter,
                            "ultrafilter": c.is_ultrafilter}
    regime = detect_regime(rule, u, args.agents, caps=caps)
    out.say(f"regime: {regime.to_dict()}")
    out.data.update(families=rows, regime=regime.to_dict())
    return EXIT_PASS


def cmd_verify(args, out):
    from .theoremlab import verify

    rep = verify(args.theorem, args.agents, args.vertices, caps=_caps(args), threads=args.threads)
    out.say(rep.describe())
    out.data["report"] = rep.to_dict()
    return EXIT_PASS if rep.agrees else EXIT_FAIL


def cmd_modal(args, out):
    from .fileio import parse_graph_file
    from .modal import _atoms as formula_atoms
    from .modal import depth, fragment, parse_formula, print_formula, to_nnf

    if args.property:
        if not args.graph:
            from .errors import UsageError

            raise UsageError("--property needs --graph")
        g = parse_graph_file(args.graph)
        holds = get_property(args.property)(g)
        out.say(f"{args.property}: {'holds' if holds else 'fails'}")
        out.data.update(property=args.property, holds=holds)
        return EXIT_PASS if holds else EXIT_FAIL
    atoms = _atoms(args)
    f = parse_formula(args.formula, atoms)
    atoms = formula_atoms(f, atoms)
    info = {"formula": print_formula(f), "nnf": print_formula(to_nnf(f)), "fragment": fragment(f),
            "depth": depth(f), "atoms": list(atoms)}
    out.data.update(info)
    out.say(f"formula {info['formula']}  nnf {info['nnf']}  fragment {info['fragment']}  depth {info['depth']}")
    if not args.graph:
        return EXIT_PASS
    g = parse_graph_file(args.graph)
    holds = _modal_check(f, atoms, g, args.check, args.val)
    out.say(f"{args.check}: {'true' if holds else 'false'}")
    out.data.update(check=args.check, holds=holds)
    return EXIT_PASS if holds else EXIT_FAIL


def cmd_demo(args, out):
    from .fileio import to_dot
    from .theoremlab import demo

    d = demo(args.name)
    out.say(d.describe() if args.format == "text" else to_dot(d.output))
    out.data.update(d.to_dict())
    return EXIT_PASS


def cmd_preset(args, out):
    from .theoremlab import application_preset

    kw = {"caps": _caps(args)}
    if args.agents:
        kw["n"] = args.agents
    if args.vertices:
        kw["vertices"] = args.vertices
    if args.name != "argumentation":
        kw["threads"] = args.threads
    rep = application_preset(args.name, **kw)
    out.say(rep.describe())
    out.data["report"] = rep.to_dict()
    return EXIT_PASS if rep.agrees else EXIT_FAIL


COMMANDS = {
    "aggregate": cmd_aggregate,
    "check-axiom": cmd_check_axiom,
    "check-cr": cmd_check_cr,
    "check-meta": cmd_check_meta,
    "coalitions": cmd_coalitions,
    "verify": cmd_verify,
    "modal": cmd_modal,
    "demo": cmd_demo,
    "preset": cmd_preset,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_ERROR
    out = _Out(args)
    out.data["command"] = " ".join(argv if argv is not None else sys.argv[1:])
    out.data["caps"] = {"max_profiles": args.max_profiles, "max_valuations": args.max_valuations}
    started = time.time()
    try:
        code = COMMANDS[args.command](args, out)
    except GraphAggError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out.data["exit"] = code
    out.emit(started)
    return code


if __name__ == "__main__":
    sys.exit(main())
