"""Small-instance checks of the oligarchy and dictatorship theorems.

Every neutral IIE rule is described by one winning family W applied to all
edges.  A verification run enumerates the families in ascending bit order,
discards those failing unanimity (N in W), groundedness (empty coalition not
in W) or collective rationality on the constraint domain, and compares the
survivors with the filters or ultrafilters computed by ``classify_family``.
"""

from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .axioms import CoalitionFamily, check_axiom, classify_family
from .cr import check_cr, check_world_cr
from .errors import CapExceeded, PreconditionError, UsageError
from .graphs import Caps, Graph, GraphProperty, Profile, VertexUniverse, active_caps, conjunction, get_property
from .metaprops import is_contagious, is_disjunctive, is_implicative
from .modal import fragment, parse_formula, print_formula
from .rules import AggregationRule, FamilyRule, OligarchyRule, QuotaRule, RepresentativeVoterRule
from .verdict import Verdict

# A small chunk lets the many short-lived exclusion checks stop early.
_CHUNK = 1 << 14


def _prop(p) -> GraphProperty:
    return get_property(p) if isinstance(p, str) else p


def _universe(u) -> VertexUniverse:
    return VertexUniverse.standard(u) if isinstance(u, int) else u


def enumerate_neutral_rules(n: int, caps: Optional[Caps] = None) -> Iterator:
    """Yield (CoalitionFamily, FamilyRule) for every family over n agents."""
    caps = active_caps(caps)
    if n < 2:
        raise UsageError("need at least two agents")
    if (1 << n) > caps.filtered_enum_bits:
        raise CapExceeded("neutral rule enumeration", 1 << (1 << n), 1 << caps.filtered_enum_bits)
    for bits in range(1 << (1 << n)):
        yield CoalitionFamily(n, bits), FamilyRule.neutral(bits, n)


@dataclass
class Exclusion:
    family: CoalitionFamily
    constraint: str
    verdict: Optional[Verdict]


@dataclass
class SurvivorReport:
    theorem: str
    n: int
    vertices: int
    constraint: str
    expected_kind: str  # "filter" or "ultrafilter"
    survivors: list  # (CoalitionFamily, FamilyClass)
    excluded: list  # Exclusion
    expected: list  # CoalitionFamily predicted by classify_family
    meta: dict = field(default_factory=dict)
    recheck: dict = field(default_factory=dict)  # family bits -> {check: status}
    stats: dict = field(default_factory=dict)

    @property
    def survivor_families(self) -> list:
        return [w for w, _ in self.survivors]

    @property
    def agrees(self) -> bool:
        """Survivors equal the predicted (ultra)filters and all re-checks pass."""
        rechecked = all(s == "pass" for r in self.recheck.values() for s in r.values())
        return [w.bits for w in self.survivor_families] == [w.bits for w in self.expected] and rechecked

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "agents": self.n,
            "vertices": self.vertices,
            "constraint": self.constraint,
            "survivors": [
                {
                    "family": _family_text(w),
                    "filter": c.is_filter,
                    "ultrafilter": c.is_ultrafilter,
                    "generator": sorted(c.principal_generator) if c.principal_generator is not None else None,
                }
                for w, c in self.survivors
            ],
            "expected": [_family_text(w) for w in self.expected],
            "expected_kind": self.expected_kind,
            "agrees": self.agrees,
            "excluded_by": _tally(self.excluded),
            "meta": self.meta,
            "recheck": {str(k): v for k, v in self.recheck.items()},
            "stats": self.stats,
        }

    def describe(self) -> str:
        lines = [
            f"{self.theorem}: n={self.n}, |V|={self.vertices}, constraint {self.constraint}",
            f"  families examined: {self.stats.get('families')}, survivors: {len(self.survivors)}",
        ]
        for w, c in self.survivors:
            gen = "{" + ",".join(map(str, sorted(c.principal_generator or ()))) + "}"
            kind = "ultrafilter" if c.is_ultrafilter else "filter" if c.is_filter else "neither"
            lines.append(f"    {_family_text(w)}  {kind}, generator {gen}")
        lines.append(f"  excluded by: {_tally(self.excluded)}")
        for k, v in self.meta.items():
            lines.append(f"  {k}: {v}")
        verdict = "agrees" if self.agrees else "DISAGREES"
        lines.append(f"  survivors vs {self.expected_kind}s from classify_family: {verdict}")
        lines.append(f"  elapsed {self.stats.get('elapsed', 0):.2f}s")
        return "\n".join(lines)


def _family_text(w: CoalitionFamily) -> str:
    return "[" + ", ".join("{" + ",".join(map(str, sorted(c))) + "}" for c in w.coalitions) + "]"


def _tally(excluded) -> dict:
    out = {}
    for e in excluded:
        out[e.constraint] = out.get(e.constraint, 0) + 1
    return out


def _examine(w: CoalitionFamily, u, n, domain: GraphProperty, caps):
    """An Exclusion, or the passing exhaustive CR verdict of a survivor."""
    rule = FamilyRule.neutral(w.bits, n)
    full = (1 << n) - 1
    if not w.bits >> full & 1:
        return Exclusion(w, "unanimity", check_axiom(rule, "unanimity", u, n, scope=domain, caps=caps))
    if w.bits & 1:
        return Exclusion(w, "groundedness", check_axiom(rule, "groundedness", u, n, scope=domain, caps=caps))
    v = check_cr(rule, domain, u, n, caps=caps)
    return v if v.passed else Exclusion(w, "cr", v)


def _run(theorem, n, vertices, domain, kind, caps, threads, meta, extra_axioms=()):
    u = _universe(vertices)
    caps = dataclasses.replace(active_caps(caps), chunk=_CHUNK)
    t0 = time.time()
    fams = [w for w, _ in enumerate_neutral_rules(n, caps)]
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda w: _examine(w, u, n, domain, caps), fams))
    else:
        results = [_examine(w, u, n, domain, caps) for w in fams]
    survivors, excluded, recheck = [], [], {}
    for w, r in zip(fams, results):
        if isinstance(r, Exclusion):
            excluded.append(r)
            continue
        survivors.append((w, classify_family(w)))
        # Black-box axiom checks, independent of the family bits used to filter.
        rule = FamilyRule.neutral(w.bits, n)
        checks = {a: check_axiom(rule, a, u, n, scope=domain, caps=caps).status for a in ("unanimity", "groundedness", *extra_axioms)}
        checks["cr"] = r.status
        recheck[w.bits] = checks
    pick = (lambda c: c.is_ultrafilter) if kind == "ultrafilter" else (lambda c: c.is_filter)
    expected = [w for w in fams if pick(classify_family(w))]
    stats = {"families": len(fams), "elapsed": time.time() - t0}
    return SurvivorReport(theorem, n, u.size, domain.name, kind, survivors, excluded, expected, meta, recheck, stats)


def _meta_holds(meta: str, p: GraphProperty, u: VertexUniverse, caps) -> tuple:
    """(holds, note); falls back to |V|=3 when the search exceeds the caps."""
    fn = {"implicative": is_implicative, "disjunctive": is_disjunctive}[meta]
    try:
        return fn(p, u, caps) is not None, ""
    except CapExceeded:
        return fn(p, VertexUniverse.standard(3), caps) is not None, " (checked at |V|=3)"


def _meta_flags(p: GraphProperty, u, caps) -> dict:
    return {
        "contagious": bool(is_contagious(p, u, caps)) if _universe(u).size >= 3 else None,
        "implicative": is_implicative(p, u, caps) is not None,
        "disjunctive": is_disjunctive(p, u, caps) is not None,
    }


def verify_oligarchy_theorem(
    n: int,
    vertices,
    p="transitivity",
    enforce: bool = True,
    caps: Optional[Caps] = None,
    threads: int = 1,
    extra_axioms=(),
    theorem: str = "oligarchy",
) -> SurvivorReport:
    """Survivors among neutral rules for CR w.r.t. ``p``; predicted: the filters."""
    p = _prop(p)
    u = _universe(vertices)
    impl, note = _meta_holds("implicative", p, u, caps)
    meta = {f"{p.name} implicative{note}": impl}
    if enforce and not impl:
        raise PreconditionError(
            f"{p.name} is not implicative on {u.size} vertices, so the oligarchy theorem does not apply"
        )
    return _run(theorem, n, u, p, "filter", caps, threads, meta, extra_axioms)


def verify_dictatorship_theorem(
    n: int,
    vertices,
    p_impl="transitivity",
    p_disj="completeness",
    domain=None,
    enforce: bool = True,
    caps: Optional[Caps] = None,
    threads: int = 1,
    extra_axioms=(),
    theorem: str = "dictatorship",
) -> SurvivorReport:
    """Survivors for CR on graphs satisfying both properties (and ``domain``); predicted: the ultrafilters."""
    p_impl, p_disj = _prop(p_impl), _prop(p_disj)
    u = _universe(vertices)
    impl, n1 = _meta_holds("implicative", p_impl, u, caps)
    disj, n2 = _meta_holds("disjunctive", p_disj, u, caps)
    meta = {f"{p_impl.name} implicative{n1}": impl, f"{p_disj.name} disjunctive{n2}": disj}
    if enforce and not (impl and disj):
        bad = [f"{p_impl.name} is not implicative"] * (not impl) + [f"{p_disj.name} is not disjunctive"] * (not disj)
        raise PreconditionError("; ".join(bad) + f" on {u.size} vertices, so the dictatorship theorem does not apply")
    parts = [p_impl] if p_impl.name == p_disj.name else [p_impl, p_disj]
    if domain is not None:
        parts.insert(0, _prop(domain))
    dom = parts[0] if len(parts) == 1 else conjunction(*parts)
    return _run(theorem, n, u, dom, "ultrafilter", caps, threads, meta, extra_axioms)


THEOREMS = ("oligarchy", "dictatorship", "arrow", "clustering", "preorder", "maxmin", "connectedness")


def verify(theorem: str, n: int = 3, vertices=3, caps: Optional[Caps] = None, threads: int = 1) -> SurvivorReport:
    t = theorem.lower()
    if t == "oligarchy":
        return verify_oligarchy_theorem(n, vertices, "transitivity", caps=caps, threads=threads)
    if t == "dictatorship":
        return verify_dictatorship_theorem(n, vertices, "transitivity", "completeness", caps=caps, threads=threads)
    if t == "arrow":
        return verify_dictatorship_theorem(
            n, vertices, "transitivity", "completeness", domain="weak-order", caps=caps, threads=threads,
            extra_axioms=("iie",), theorem="arrow",
        )
    if t == "clustering":
        return preset_clustering(n, vertices, caps=caps, threads=threads)
    if t == "preorder":
        return verify_oligarchy_theorem(n, vertices, "preorder", caps=caps, threads=threads, theorem="preorder")
    if t == "maxmin":
        return verify_dictatorship_theorem(
            n, vertices, "transitivity", "has-maxima-or-minima", caps=caps, threads=threads, theorem="maxmin"
        )
    if t == "connectedness":
        return verify_dictatorship_theorem(
            n, vertices, "connectedness", "connectedness", caps=caps, threads=threads, theorem="connectedness"
        )
    raise UsageError(f"unknown theorem {theorem!r}; known: {', '.join(THEOREMS)}")


# --- presets -------------------------------------------------------------------------


def preset_clustering(n: int = 3, vertices=3, caps=None, threads=1) -> SurvivorReport:
    """Equivalence relations; oligarchies are predicted.

    Equivalence is not implicative itself, so the precondition is reported
    rather than enforced.
    """
    u = _universe(vertices)
    rep = verify_oligarchy_theorem(n, u, "equivalence", enforce=False, caps=caps, threads=threads, theorem="clustering")
    if u.size <= 3:
        rep.meta.update({f"equivalence {k}": v for k, v in _meta_flags(get_property("equivalence"), u, caps).items()})
    return rep


def preset_clustering_nontrivial(n: int = 3, vertices=3, caps=None, threads=1) -> SurvivorReport:
    """Nontrivial equivalence relations (some pair of distinct vertices related); dictatorships predicted."""
    return verify_dictatorship_theorem(
        n, vertices, "transitivity", "nr-nontriviality", domain="equivalence", caps=caps, threads=threads,
        theorem="clustering-nontrivial",
    )


def preset_arrow(n: int = 3, vertices=3, caps=None, threads=1) -> SurvivorReport:
    return verify("arrow", n, vertices, caps, threads)


def preset_preorder_oligarchy(n: int = 3, vertices=3, caps=None, threads=1) -> SurvivorReport:
    return verify("preorder", n, vertices, caps, threads)


ARGUMENTATION_ATOMS = ("in", "out", "undec")
ARGUMENTATION_FORMULAS = (
    "in -> []out",
    "[]out -> in",
    "out -> <>in",
    "<>in -> out",
    "(in & ~out & ~undec) | (~in & out & ~undec) | (~in & ~out & undec)",
)


@dataclass
class ArgumentationRow:
    rule: str
    formula: str
    fragment: str
    predicted: Optional[bool]  # None when no result predicts the outcome
    verdict: Verdict

    @property
    def consistent(self) -> bool:
        return self.predicted is None or self.predicted == self.verdict.passed


@dataclass
class ArgumentationReport:
    n: int
    vertices: int
    rows: list

    @property
    def agrees(self) -> bool:
        return all(r.consistent for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "agents": self.n,
            "vertices": self.vertices,
            "atoms": list(ARGUMENTATION_ATOMS),
            "rows": [
                {
                    "rule": r.rule,
                    "formula": r.formula,
                    "fragment": r.fragment,
                    "predicted_pass": r.predicted,
                    "verdict": r.verdict.to_dict(),
                }
                for r in self.rows
            ],
            "agrees": self.agrees,
        }

    def describe(self) -> str:
        lines = [f"argumentation: world-level CR, n={self.n}, |V|={self.vertices}, atoms in/out/undec"]
        for r in self.rows:
            pred = "-" if r.predicted is None else ("pass" if r.predicted else "fail")
            lines.append(f"  {r.rule:<22} {r.formula:<28} {r.fragment:<9} predicted {pred:<5} got {r.verdict.label}")
        lines.append("  consistent with predictions" if self.agrees else "  INCONSISTENT with predictions")
        return "\n".join(lines)


def _predict(rule_kind: str, frag: str) -> Optional[bool]:
    if frag == "Propositional" or rule_kind == "representative":
        return True
    if rule_kind == "oligarchy" and frag == "Box":
        return True
    if rule_kind == "union" and frag == "Diamond":
        return True
    return None


def preset_argumentation(n: int = 2, vertices=3, caps=None, formulas=ARGUMENTATION_FORMULAS) -> ArgumentationReport:
    """World-level CR of the labelling constraints for three rules."""
    u = _universe(vertices)
    rules = [
        ("oligarchy", OligarchyRule([1, 2])),
        ("union", QuotaRule.union()),
        ("representative", RepresentativeVoterRule()),
    ]
    rows = []
    for kind, rule in rules:
        for text in formulas:
            f = parse_formula(text, ARGUMENTATION_ATOMS)
            frag = fragment(f)
            v = check_world_cr(rule, f, ARGUMENTATION_ATOMS, u, n, caps=caps)
            rows.append(ArgumentationRow(str(rule), print_formula(f), frag, _predict(kind, frag), v))
    return ArgumentationReport(n, u.size, rows)


PRESETS = {
    "arrow": preset_arrow,
    "clustering": preset_clustering,
    "clustering-nontrivial": preset_clustering_nontrivial,
    "preorder-oligarchy": preset_preorder_oligarchy,
    "argumentation": preset_argumentation,
}


def application_preset(name: str, **kwargs):
    try:
        fn = PRESETS[name.lower()]
    except KeyError:
        raise UsageError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None
    return fn(**kwargs)


# --- demos ---------------------------------------------------------------------------


@dataclass
class Demo:
    name: str
    rule: AggregationRule
    profile: Profile
    output: Graph
    checks: dict  # description -> bool, all recomputed
    notes: list

    def describe(self) -> str:
        from .fileio import write_graph, write_profile

        lines = [f"demo {self.name}: rule {self.rule}", "profile:", write_profile(self.profile).rstrip(), "output:"]
        lines.append(write_graph(self.output).rstrip())
        for k, v in self.checks.items():
            lines.append(f"  {k}: {v}")
        lines.extend(f"  {s}" for s in self.notes)
        return "\n".join(lines)

    def to_dict(self) -> dict:
        from .fileio import write_graph, write_profile

        return {
            "demo": self.name,
            "rule": str(self.rule),
            "profile": write_profile(self.profile),
            "output": write_graph(self.output),
            "output_edges": [list(e) for e in self.output.edges],
            "checks": self.checks,
            "notes": self.notes,
        }


def condorcet_profile() -> Profile:
    u = VertexUniverse.standard(3)
    orders = [("x", "y", "z"), ("z", "x", "y"), ("y", "z", "x")]
    return Profile.from_edge_lists(u, [[(o[0], o[1]), (o[1], o[2]), (o[0], o[2])] for o in orders])


def seriality_profile() -> Profile:
    u = VertexUniverse.standard(4)
    lists = []
    for a in ("x", "y", "z"):
        loops = [(b, b) for b in ("x", "y", "z") if b != a]
        lists.append([(a, "w"), ("w", a)] + loops)
    return Profile.from_edge_lists(u, lists)


def union_transitivity_profile() -> Profile:
    u = VertexUniverse.standard(3)
    return Profile.from_edge_lists(u, [[("x", "y")], [("y", "z")]])


def demo(name: str) -> Demo:
    from .modal import frame_valid

    key = name.lower()
    if key == "condorcet":
        pr, rule, p = condorcet_profile(), QuotaRule.majority(), get_property("transitivity")
        out = rule.apply(pr)
        checks = {f"agent {i + 1} transitive": p(g) for i, g in enumerate(pr)}
        checks["output transitive"] = p(out)
        checks["output is a 3-cycle"] = out.edges == [("x", "y"), ("y", "z"), ("z", "x")]
        return Demo(key, rule, pr, out, checks, ["each agent submits a linear order; the majority graph is cyclic"])
    if key == "seriality":
        pr, rule = seriality_profile(), QuotaRule.majority()
        out = rule.apply(pr)
        ser, sym = get_property("seriality"), get_property("symmetry")
        checks = {f"agent {i + 1} serial": ser(g) for i, g in enumerate(pr)}
        checks["output serial"] = ser(out)
        checks["w has a successor in the output"] = bool(out.successors("w"))
        checks["symmetry preserved"] = all(sym(g) for g in pr) and sym(out)
        checks["output frame validates <>(p | ~p)"] = frame_valid(out, parse_formula("<>(p | ~p)"))
        return Demo(key, rule, pr, out, checks, ["majority keeps only the loops, so w loses every successor"])
    if key == "union-transitivity":
        pr, rule, p = union_transitivity_profile(), QuotaRule.union(), get_property("transitivity")
        out = rule.apply(pr)
        checks = {f"agent {i + 1} transitive": p(g) for i, g in enumerate(pr)}
        checks["output transitive"] = p(out)
        checks["output contains (x,z)"] = out.has_edge("x", "z")
        return Demo(key, rule, pr, out, checks, ["the union of {(x,y)} and {(y,z)} lacks (x,z)"])
    raise UsageError(f"unknown demo {name!r}; known: condorcet, seriality, union-transitivity")


DEMOS = ("condorcet", "seriality", "union-transitivity")
