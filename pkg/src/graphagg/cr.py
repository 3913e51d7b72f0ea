"""Collective rationality at the property level and the three modal levels.

Searches stream profiles in canonical order, so the first counterexample found
is the canonically smallest one.  Model- and world-level searches put the
valuation (and then the world) outermost, since the admissible inputs depend
on it; a valuation or world is skipped when every graph already satisfies the
constraint there, because then no output can fail.

Profile spaces that cannot be exhausted are streamed under a work budget
(``Caps.max_profiles``).  A counterexample inside the budget is still exact.
Running out of budget raises :class:`CapExceeded`, unless sampling is
requested, in which case random profiles are drawn and a clean result is
reported as "no counterexample found (sampled)".
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import CapExceeded, UsageError
from .graphs import Caps, Graph, Profile, VertexUniverse, active_caps, get_property
from .modal import (
    KripkeModel,
    Valuation,
    as_formula,
    frame_valid,
    frame_valid_codes,
    globally_true,
    print_formula,
    truth_at,
    truth_sets,
    valuation_count,
    _atoms,
)
from .rules import AggregationRule
from .space import ProfileSpace
from .verdict import Verdict, Witness

LEVELS = ("property", "frame", "model", "world")


class _Budget:
    def __init__(self, caps: Caps):
        self.left = caps.max_profiles
        self.used = 0

    def spend(self, k: int):
        self.left -= k
        self.used += k


def _scan(rule, sp: ProfileSpace, ok_out: np.ndarray, budget: _Budget):
    """First profile whose output code is not allowed by ``ok_out``.

    Returns (index, codes row, output code) or None; raises ``_OutOfBudget``.
    """
    for s, codes in sp.chunks(stop=sp.size):
        if budget.left <= 0:
            raise _OutOfBudget()
        if len(codes) > budget.left:
            codes = codes[: budget.left]
        out = rule.apply_codes(codes, sp.universe)
        budget.spend(len(codes))
        bad = np.flatnonzero(~ok_out[out])
        if len(bad):
            j = int(bad[0])
            return s + j, codes[j], int(out[j])
    return None


class _OutOfBudget(Exception):
    pass


def _sample(rule, sp: ProfileSpace, ok_out, rng, count):
    if sp.D == 0:
        return None
    pos = rng.integers(0, sp.D, size=(count, sp.n))
    codes = sp.domain[pos]
    out = rule.apply_codes(codes, sp.universe)
    bad = np.flatnonzero(~ok_out[out])
    if len(bad):
        j = int(bad[0])
        return -1, codes[j], int(out[j])
    return None


def _universe(u):
    return VertexUniverse.standard(u) if isinstance(u, int) else u


def _witness(sp, row, out, **extra):
    u = sp.universe
    pr = Profile.from_codes(u, row)
    return Witness("cr", (pr,), (Graph(u, out),), (), "", extra)


def _run(rule, u, n, domain, ok_out, caps, budget, sample, rng):
    """Exhaustive scan if it fits the budget or no sampling was asked for."""
    sp = ProfileSpace(u, n, domain=domain, caps=caps)
    if sample and sp.size > budget.left:
        hit = _sample(rule, sp, ok_out, rng, sample)
        budget.used += sample
        return hit, sp, True
    return _scan(rule, sp, ok_out, budget), sp, False


def _require_tables(u: VertexUniverse, caps: Caps):
    if u.n_edges > caps.filtered_enum_bits:
        raise CapExceeded("graph enumeration", 1 << u.n_edges, 1 << caps.filtered_enum_bits)


def check_cr(
    rule: AggregationRule,
    p,
    universe,
    n: int,
    caps: Optional[Caps] = None,
    sample: Optional[int] = None,
    seed: int = 0,
) -> Verdict:
    """Property-level collective rationality for ``p``."""
    u = _universe(universe)
    caps = active_caps(caps)
    p = get_property(p) if isinstance(p, str) else p
    _require_tables(u, caps)
    table = p.table(u, caps)
    domain = np.flatnonzero(table).astype(np.int64)
    budget = _Budget(caps)
    rng = np.random.default_rng(seed)
    name = f"cr[{p.name}]"
    try:
        hit, sp, sampled = _run(rule, u, n, domain, table, caps, budget, sample, rng)
    except _OutOfBudget:
        raise CapExceeded(f"{name} profile space", len(domain) ** n, caps.max_profiles) from None
    info = {"level": "property", "property": p.name}
    if hit is None:
        return Verdict(name, "pass", examined=budget.used, scope=f"{p.name} profiles", sampled=sampled, info=info)
    idx, row, out = hit
    w = _witness(sp, row, out)
    w.detail = f"every input satisfies {p.name}, the output does not"
    if idx >= 0:
        info["profile_index"] = idx
    return Verdict(name, "fail", w, examined=budget.used, scope=f"{p.name} profiles", sampled=sampled, info=info)


def check_frame_cr(
    rule: AggregationRule,
    f,
    atoms,
    universe,
    n: int,
    caps: Optional[Caps] = None,
    sample: Optional[int] = None,
    seed: int = 0,
) -> Verdict:
    u = _universe(universe)
    caps = active_caps(caps)
    f = as_formula(f, atoms)
    atoms = _atoms(f, atoms)
    _require_tables(u, caps)
    valid = frame_valid_codes(f, np.arange(1 << u.n_edges, dtype=np.int64), u, atoms, caps)
    domain = np.flatnonzero(valid).astype(np.int64)
    budget = _Budget(caps)
    rng = np.random.default_rng(seed)
    text = print_formula(f)
    name = f"frame-cr[{text}]"
    info = {"level": "frame", "formula": text, "atoms": list(atoms)}
    try:
        hit, sp, sampled = _run(rule, u, n, domain, valid, caps, budget, sample, rng)
    except _OutOfBudget:
        raise CapExceeded(f"{name} profile space", len(domain) ** n, caps.max_profiles) from None
    if hit is None:
        return Verdict(name, "pass", examined=budget.used, scope="frames validating f", sampled=sampled, info=info)
    idx, row, out = hit
    w = _witness(sp, row, out)
    w.detail = "every input frame validates the formula, the output frame does not"
    if idx >= 0:
        info["profile_index"] = idx
    return Verdict(name, "fail", w, examined=budget.used, scope="frames validating f", sampled=sampled, info=info)


def _valuation_tables(f, u, atoms, caps):
    """Truth sets of f for every (graph, valuation): shape (2**m, #vals)."""
    nv = valuation_count(u, atoms, caps)
    codes = np.arange(1 << u.n_edges, dtype=np.int64)
    vals = np.arange(nv, dtype=np.int64)
    step = max(1, (1 << 22) // len(codes))
    for s in range(0, nv, step):
        yield s, truth_sets(f, codes, vals[s : s + step], u, atoms)


def _modal_search(rule, f, atoms, universe, n, caps, sample, seed, level):
    u = _universe(universe)
    caps = active_caps(caps)
    f = as_formula(f, atoms)
    atoms = _atoms(f, atoms)
    _require_tables(u, caps)
    full = (1 << u.size) - 1
    budget = _Budget(caps)
    rng = np.random.default_rng(seed)
    text = print_formula(f)
    name = f"{level}-cr[{text}]"
    info = {"level": level, "formula": text, "atoms": list(atoms)}
    sampled_any = False
    skipped = 0
    for base, T in _valuation_tables(f, u, atoms, caps):
        for j in range(T.shape[1]):
            v = base + j
            col = T[:, j]
            if level == "model":
                targets = [(None, col == full)]
            else:
                targets = [(x, (col >> x) & 1 == 1) for x in range(u.size)]
            for x, ok in targets:
                if ok.all():
                    skipped += 1
                    continue
                domain = np.flatnonzero(ok).astype(np.int64)
                if len(domain) == 0:
                    continue
                try:
                    hit, sp, sampled = _run(rule, u, n, domain, ok, caps, budget, sample, rng)
                except _OutOfBudget:
                    raise CapExceeded(f"{name} search", budget.used, caps.max_profiles) from None
                sampled_any |= sampled
                if hit is not None:
                    idx, row, out = hit
                    val = Valuation.from_code(u, atoms, v)
                    extra = {"valuation": val.as_dict()}
                    if x is not None:
                        extra["world"] = u.names[x]
                    w = _witness(sp, row, out, **extra)
                    where = "globally true in every input model" if x is None else f"true at {u.names[x]} in every input model"
                    w.detail = f"formula {where}, not in the output model"
                    info.update(skipped=skipped, valuation_code=v)
                    if idx >= 0:
                        info["profile_index"] = idx
                    return Verdict(name, "fail", w, examined=budget.used, scope=f"{level} level", sampled=sampled_any, info=info)
    info["skipped"] = skipped
    return Verdict(name, "pass", examined=budget.used, scope=f"{level} level", sampled=sampled_any, info=info)


def check_model_cr(rule, f, atoms, universe, n, caps=None, sample=None, seed=0) -> Verdict:
    return _modal_search(rule, f, atoms, universe, n, caps, sample, seed, "model")


def check_world_cr(rule, f, atoms, universe, n, caps=None, sample=None, seed=0) -> Verdict:
    return _modal_search(rule, f, atoms, universe, n, caps, sample, seed, "world")


def check_modal_cr(rule, f, atoms, universe, n, level: str, caps=None, sample=None, seed=0) -> Verdict:
    if level == "frame":
        return check_frame_cr(rule, f, atoms, universe, n, caps, sample, seed)
    if level == "model":
        return check_model_cr(rule, f, atoms, universe, n, caps, sample, seed)
    if level == "world":
        return check_world_cr(rule, f, atoms, universe, n, caps, sample, seed)
    raise UsageError(f"unknown level {level!r}; use frame, model or world")


def validate_cr_witness(rule: AggregationRule, verdict: Verdict, constraint, atoms=None) -> bool:
    """Re-check a counterexample from scratch with the scalar semantics."""
    w = verdict.witness
    if verdict.status != "fail" or w is None:
        return False
    (pr,) = w.profiles
    out = rule.apply(pr)
    if out != w.outputs[0]:
        return False
    level = verdict.info.get("level")
    if level == "property":
        p = get_property(constraint) if isinstance(constraint, str) else constraint
        return all(p(g) for g in pr) and not p(out)
    f = as_formula(constraint, atoms)
    atoms = _atoms(f, atoms)
    u = pr.universe
    if level == "frame":
        return all(frame_valid(g, f, atoms) for g in pr) and not frame_valid(out, f, atoms)
    val = Valuation.of(u, {a: w.extra["valuation"].get(a, []) for a in atoms})
    if level == "model":
        return all(globally_true(KripkeModel(g, val), f) for g in pr) and not globally_true(KripkeModel(out, val), f)
    x = w.extra["world"]
    return all(truth_at(KripkeModel(g, val), x, f) for g in pr) and not truth_at(KripkeModel(out, val), x, f)
