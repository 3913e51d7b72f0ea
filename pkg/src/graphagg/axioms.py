"""Exhaustive axiom checks for black-box rules, winning families and filters.

Every check quantifies over the profile space of a fixed (|V|, n), optionally
restricted to profiles of graphs satisfying a property.  Failing verdicts carry
the canonically first witness:

* single-profile axioms (unanimity, groundedness, (NR-)neutrality): first
  profile, then first edge (pair);
* IIE / IIS / IIT: first profile B that disagrees with an earlier profile A on
  a slot (edge, source or target) with identical input, then first slot, then
  the first such A;
* anonymity: first profile, then first permutation in itertools order;
* monotonicity: first profile E, then first edge e, then first agent for whom
  adding e to their graph removes e from the output.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CapExceeded, ConfigError, UsageError
from .graphs import Caps, Graph, GraphProperty, Profile, VertexUniverse, active_caps, coalition, get_property
from .rules import AggregationRule, FamilyRule, OligarchyRule, supporter_masks
from .space import ProfileSpace
from .verdict import Verdict, Witness

AXIOMS = (
    "unanimity",
    "groundedness",
    "anonymity",
    "neutrality",
    "nr-neutrality",
    "monotonicity",
    "iie",
    "iis",
    "iit",
)


def _space(universe, n, scope, caps) -> ProfileSpace:
    if isinstance(universe, int):
        universe = VertexUniverse.standard(universe)
    if isinstance(scope, str):
        scope = get_property(scope)
    return ProfileSpace(universe, n, scope=scope, caps=caps)


def check_axiom(
    rule: AggregationRule,
    axiom: str,
    universe,
    n: int,
    scope: Optional[GraphProperty] = None,
    caps: Optional[Caps] = None,
) -> Verdict:
    """Decide ``axiom`` for ``rule`` over all profiles at this (|V|, n)."""
    key = axiom.lower()
    if key not in _CHECKS:
        raise UsageError(f"unknown axiom {axiom!r}; known: {', '.join(AXIOMS)}")
    sp = _space(universe, n, scope, caps)
    if sp.D == 0:
        return Verdict(key, "pass", examined=0, scope=sp.scope_name)
    return _CHECKS[key](rule, sp)


def _pass(name, sp, examined):
    return Verdict(name, "pass", examined=examined, scope=sp.scope_name)


def _fail(name, sp, examined, witness):
    return Verdict(name, "fail", witness=witness, examined=examined, scope=sp.scope_name)


def _graph(u, c):
    return Graph(u, int(c))


# --- single-profile axioms ------------------------------------------------------


def _stream(rule, sp):
    sp.require(sp.caps.max_profiles, "profile scan")
    for s, codes in sp.chunks():
        yield s, codes, rule.apply_codes(codes, sp.universe)


def _check_inclusion(rule, sp, name):
    u = sp.universe
    for s, codes, out in _stream(rule, sp):
        if name == "unanimity":
            ref = np.bitwise_and.reduce(codes, axis=1)
            bad = ref & ~out
        else:
            ref = np.bitwise_or.reduce(codes, axis=1)
            bad = out & ~ref
        hit = np.flatnonzero(bad)
        if len(hit):
            j = hit[0]
            b = int(bad[j]) & -int(bad[j])
            e = u.edge(b.bit_length() - 1)
            pr = Profile.from_codes(u, codes[j])
            verb = "accepted by every agent but rejected" if name == "unanimity" else "accepted by no agent but output"
            wit = Witness(name, (pr,), (_graph(u, out[j]),), (e,), f"edge ({e[0]},{e[1]}) {verb}")
            return _fail(name, sp, s + j + 1, wit)
    return _pass(name, sp, sp.size)


def _check_unanimity(rule, sp):
    return _check_inclusion(rule, sp, "unanimity")


def _check_groundedness(rule, sp):
    return _check_inclusion(rule, sp, "groundedness")


def _neutral_scan(rule, sp, name, edges):
    u = sp.universe
    n = sp.n
    if n > 6:
        raise CapExceeded("neutrality check (agents)", n, 6)
    edges = np.asarray(edges, dtype=np.int64)
    for s, codes, out in _stream(rule, sp):
        sm = supporter_masks(codes, u.n_edges)[:, edges]
        acc = (out[:, None] >> edges[None, :]) & 1
        one = np.uint64(1)
        flags = one << sm.astype(np.uint64)
        s1 = np.bitwise_or.reduce(np.where(acc == 1, flags, np.uint64(0)), axis=1)
        s0 = np.bitwise_or.reduce(np.where(acc == 0, flags, np.uint64(0)), axis=1)
        hit = np.flatnonzero(s1 & s0)
        if len(hit):
            j = hit[0]
            row_sm, row_acc = sm[j], acc[j]
            e1 = e2 = None
            for a, b in itertools.combinations(range(len(edges)), 2):
                if row_sm[a] == row_sm[b] and row_acc[a] != row_acc[b]:
                    e1, e2 = u.edge(int(edges[a])), u.edge(int(edges[b]))
                    break
            pr = Profile.from_codes(u, codes[j])
            c = sorted(coalition(int(row_sm[a])))
            wit = Witness(
                name,
                (pr,),
                (_graph(u, out[j]),),
                (e1, e2),
                f"edges ({e1[0]},{e1[1]}) and ({e2[0]},{e2[1]}) share supporters {c} "
                "but only one is accepted",
            )
            return _fail(name, sp, s + j + 1, wit)
    return _pass(name, sp, sp.size)


def _check_neutrality(rule, sp):
    return _neutral_scan(rule, sp, "neutrality", range(sp.universe.n_edges))


def _check_nr_neutrality(rule, sp):
    u = sp.universe
    return _neutral_scan(rule, sp, "nr-neutrality", [e for e in range(u.n_edges) if not u.is_loop(e)])


# --- functional-dependency axioms --------------------------------------------------


class _FirstSeen:
    """Tracks, per (slot, key), the first profile index and its value."""

    def __init__(self, slots: int, keys: int):
        self.K = keys
        self.idx = np.full(slots * keys, -1, dtype=np.int64)
        self.val = np.zeros(slots * keys, dtype=np.int64)
        self.slot_base = np.arange(slots, dtype=np.int64) * keys

    def update(self, start: int, keys: np.ndarray, vals: np.ndarray):
        """Return (row, slot) of the first conflicting row in this chunk, or None."""
        N, S = keys.shape
        flat = (keys + self.slot_base[None, :]).ravel()
        rows = np.repeat(np.arange(N, dtype=np.int64), S)
        first = np.full(len(self.idx), N, dtype=np.int64)
        np.minimum.at(first, flat, rows)
        fresh = np.flatnonzero((first < N) & (self.idx < 0))
        self.idx[fresh] = start + first[fresh]
        self.val[fresh] = vals.ravel()[first[fresh] * S + fresh // self.K]
        bad = vals != self.val[flat].reshape(N, S)
        hit = np.flatnonzero(bad.any(axis=1))
        if not len(hit):
            return None
        r = int(hit[0])
        slot = int(np.flatnonzero(bad[r])[0])
        return r, slot, int(self.idx[slot * self.K + keys[r, slot]])


def _fd_check(rule, sp, name, slots, key_bits, keyfun, valfun, describe):
    sp.require(sp.caps.max_profiles, "profile scan")
    if slots * (1 << key_bits) > 1 << 26:
        raise CapExceeded(f"{name} key table", slots * (1 << key_bits), 1 << 26)
    tracker = _FirstSeen(slots, 1 << key_bits)
    u = sp.universe
    for s, codes in sp.chunks():
        out = rule.apply_codes(codes, u)
        hit = tracker.update(s, keyfun(codes), valfun(out))
        if hit is not None:
            r, slot, a_idx = hit
            b_pr = Profile.from_codes(u, codes[r])
            a_pr = sp.profile(a_idx)
            outs = (rule.apply(a_pr), _graph(u, out[r]))
            label, edges = describe(slot)
            wit = Witness(
                name, (a_pr, b_pr), outs, edges,
                f"{label}: identical input, different output",
                {"slot": label, "profile_indices": [a_idx, s + r]},
            )
            return _fail(name, sp, s + r + 1, wit)
    return _pass(name, sp, sp.size)


def _rows(codes, k):
    low = (1 << k) - 1
    return np.stack([(codes >> (x * k)) & low for x in range(k)], axis=-1)


def _cols(codes, k):
    out = []
    for y in range(k):
        col = np.zeros_like(codes)
        for x in range(k):
            col |= ((codes >> (x * k + y)) & 1) << x
        out.append(col)
    return np.stack(out, axis=-1)


def _combine(parts, width):
    """(N, n, S) per-agent fields -> (N, S) concatenated keys."""
    n = parts.shape[1]
    shifts = (width * np.arange(n, dtype=np.int64))[None, :, None]
    return (parts << shifts).sum(axis=1)


def _check_iie(rule, sp):
    u, n, m = sp.universe, sp.n, sp.universe.n_edges
    return _fd_check(
        rule, sp, "iie", m, n,
        lambda c: supporter_masks(c, m),
        lambda o: (o[:, None] >> np.arange(m, dtype=np.int64)) & 1,
        lambda e: (f"edge ({u.edge(e)[0]},{u.edge(e)[1]})", (u.edge(e),)),
    )


def _check_iis(rule, sp):
    u, n, k = sp.universe, sp.n, sp.universe.size
    return _fd_check(
        rule, sp, "iis", k, k * n,
        lambda c: _combine(_rows(c, k), k),
        lambda o: _rows(o, k),
        lambda x: (f"source {u.names[x]}", ()),
    )


def _check_iit(rule, sp):
    u, n, k = sp.universe, sp.n, sp.universe.size
    return _fd_check(
        rule, sp, "iit", k, k * n,
        lambda c: _combine(_cols(c, k), k),
        lambda o: _cols(o, k),
        lambda y: (f"target {u.names[y]}", ()),
    )


# --- table axioms --------------------------------------------------------------


def _check_anonymity(rule, sp):
    u, n, D = sp.universe, sp.n, sp.D
    T = sp.output_table(rule).reshape((D,) * n)
    best = None
    for perm in itertools.permutations(range(n)):
        if perm == tuple(range(n)):
            continue
        axes = tuple(int(a) for a in np.argsort(perm))
        diff = np.flatnonzero((T != T.transpose(axes)).ravel())
        if len(diff) and (best is None or diff[0] < best[0]):
            best = (int(diff[0]), perm)
    if best is None:
        return _pass("anonymity", sp, sp.size)
    idx, perm = best
    pr = sp.profile(idx)
    q = pr.permuted(perm)
    outs = (rule.apply(pr), rule.apply(q))
    shown = tuple(p + 1 for p in perm)
    wit = Witness(
        "anonymity", (pr, q), outs, (),
        f"reordering the agents as {shown} changes the output",
        {"permutation": list(shown)},
    )
    return _fail("anonymity", sp, idx + 1, wit)


def _check_monotonicity(rule, sp):
    """Adding e to some agents' graphs never removes e from the output.

    The condition is read with E_i contained in E'_i: otherwise E' could drop e
    from every agent and no nonconstant rule would qualify.  Because the scope is
    a product P^n, adding e agent by agent stays inside the scope, so
    checking single-agent additions decides the axiom exactly.
    """
    u, n, m, D = sp.universe, sp.n, sp.universe.n_edges, sp.D
    T = sp.output_table(rule).reshape((D,) * n)
    best = None
    for e in range(m):
        bit = ((T >> e) & 1).astype(bool)
        up = sp.positions(sp.domain | (1 << e))
        valid = ((sp.domain >> e) & 1 == 0) & (up >= 0)
        if not valid.any():
            continue
        upc = np.where(valid, up, 0)
        for i in range(n):
            moved = np.take(bit, upc, axis=i)
            shape = [1] * n
            shape[i] = D
            viol = bit & ~moved & valid.reshape(shape)
            hit = np.flatnonzero(viol.ravel()[: None if best is None else best[0] + 1])
            if len(hit):
                cand = (int(hit[0]), e, i)
                if best is None or cand < best:
                    best = cand
    if best is None:
        return _pass("monotonicity", sp, sp.size)
    idx, e, i = best
    p1 = sp.profile(idx)
    codes = list(p1.codes)
    codes[i] |= 1 << e
    p2 = Profile.from_codes(u, codes)
    edge = u.edge(e)
    wit = Witness(
        "monotonicity", (p1, p2), (rule.apply(p1), rule.apply(p2)), (edge,),
        f"agent {i + 1} adds ({edge[0]},{edge[1]}) and the edge is lost",
        {"agent": i + 1},
    )
    return _fail("monotonicity", sp, idx + 1, wit)


_CHECKS = {
    "unanimity": _check_unanimity,
    "groundedness": _check_groundedness,
    "neutrality": _check_neutrality,
    "nr-neutrality": _check_nr_neutrality,
    "iie": _check_iie,
    "iis": _check_iis,
    "iit": _check_iit,
    "anonymity": _check_anonymity,
    "monotonicity": _check_monotonicity,
}


def validate_witness(rule: AggregationRule, verdict: Verdict) -> bool:
    """Re-check a failing verdict's witness literally, through ``rule.apply``."""
    w = verdict.witness
    if verdict.status != "fail" or w is None:
        return False
    outs = [rule.apply(p) for p in w.profiles]
    if [g.code for g in outs] != [g.code for g in w.outputs]:
        return False
    name = verdict.check
    if name == "unanimity":
        (e,) = w.edges
        return all(e in g for g in w.profiles[0]) and e not in outs[0]
    if name == "groundedness":
        (e,) = w.edges
        return not any(e in g for g in w.profiles[0]) and e in outs[0]
    if name in ("neutrality", "nr-neutrality"):
        e1, e2 = w.edges
        pr = w.profiles[0]
        if name == "nr-neutrality" and (e1[0] == e1[1] or e2[0] == e2[1]):
            return False
        return pr.supporter_mask(e1) == pr.supporter_mask(e2) and (e1 in outs[0]) != (e2 in outs[0])
    if name == "iie":
        (e,) = w.edges
        a, b = w.profiles
        return a.supporter_mask(e) == b.supporter_mask(e) and (e in outs[0]) != (e in outs[1])
    if name in ("iis", "iit"):
        a, b = w.profiles
        v = w.extra["slot"].split()[-1]
        if name == "iis":
            same = all(ga.row(v) == gb.row(v) for ga, gb in zip(a, b))
            return same and outs[0].row(v) != outs[1].row(v)
        same = all(ga.column(v) == gb.column(v) for ga, gb in zip(a, b))
        return same and outs[0].column(v) != outs[1].column(v)
    if name == "anonymity":
        a, b = w.profiles
        perm = [p - 1 for p in w.extra["permutation"]]
        return b.codes == a.permuted(perm).codes and outs[0] != outs[1]
    if name == "monotonicity":
        (e,) = w.edges
        a, b = w.profiles
        eb = 1 << a.universe.edge_index(*e)
        grows = all(ca & ~cb == 0 and cb & ~ca & ~eb == 0 for ca, cb in zip(a.codes, b.codes))
        return grows and e in outs[0] and e not in outs[1]
    return False


# --- winning coalitions ------------------------------------------------------------


@dataclass(frozen=True)
class CoalitionFamily:
    """A set of coalitions over agents 1..n, as a 2**n bit integer (bit C)."""

    n: int
    bits: int

    @classmethod
    def from_sets(cls, n: int, sets) -> "CoalitionFamily":
        bits = 0
        for s in sets:
            c = sum(1 << (i - 1) for i in s)
            if c >> n:
                raise UsageError(f"coalition {sorted(s)} mentions agents beyond {n}")
            bits |= 1 << c
        return cls(n, bits)

    @classmethod
    def upset(cls, n: int, generator) -> "CoalitionFamily":
        """All supersets of ``generator`` (principal filter when nonempty)."""
        g = sum(1 << (i - 1) for i in generator)
        return cls(n, sum(1 << c for c in range(1 << n) if c & g == g))

    @property
    def masks(self) -> list:
        return [c for c in range(1 << self.n) if self.bits >> c & 1]

    @property
    def coalitions(self) -> list:
        return [coalition(c) for c in self.masks]

    def __contains__(self, agents) -> bool:
        c = sum(1 << (i - 1) for i in agents)
        return bool(self.bits >> c & 1)

    def __len__(self):
        return self.bits.bit_count()

    def __repr__(self):
        inner = ", ".join("{" + ",".join(map(str, sorted(c))) + "}" for c in self.coalitions)
        return f"CoalitionFamily(n={self.n}, [{inner}])"


@dataclass(frozen=True)
class FamilyClass:
    is_filter: bool
    is_ultrafilter: bool
    principal_generator: Optional[frozenset]
    reason: str = ""


def family_conditions(w: CoalitionFamily) -> dict:
    """The individual filter/ultrafilter conditions, evaluated literally."""
    n, ms = w.n, w.masks
    full = (1 << n) - 1
    has = lambda c: bool(w.bits >> c & 1)
    return {
        "nonempty": bool(ms),
        "no_empty_coalition": not has(0),
        "intersection_closed": all(has(a & b) for a in ms for b in ms),
        "superset_closed": all(has(b) for a in ms for b in range(1 << n) if b & a == a),
        "maximal": all(has(c) or has(full & ~c) for c in range(1 << n)),
    }


def classify_family(w: CoalitionFamily, n: Optional[int] = None) -> FamilyClass:
    """Filter / ultrafilter test.

    A filter must also be nonempty: the empty family meets the three filter
    conditions vacuously but corresponds to no oligarchy.
    """
    if n is not None and n != w.n:
        raise ConfigError(f"family is over {w.n} agents, not {n}")
    c = family_conditions(w)
    is_filter = c["nonempty"] and c["no_empty_coalition"] and c["intersection_closed"] and c["superset_closed"]
    is_ultra = c["no_empty_coalition"] and c["intersection_closed"] and c["maximal"]
    gen = None
    if is_filter:
        g = (1 << w.n) - 1
        for m in w.masks:
            g &= m
        gen = coalition(g)
    failed = [k for k, ok in c.items() if not ok]
    return FamilyClass(is_filter, is_ultra, gen, ", ".join(failed))


def single_edge_profile(universe: VertexUniverse, n: int, e: int, coal: int) -> Profile:
    """Agents in ``coal`` submit {e}; everybody else submits the empty graph."""
    return Profile.from_codes(universe, [(1 << e) if coal >> i & 1 else 0 for i in range(n)])


def extract_winning_families(
    rule: AggregationRule,
    universe,
    n: int,
    validate: str = "sample",
    samples: int = 2000,
    seed: int = 0,
    assume_iie: bool = False,
    caps: Optional[Caps] = None,
) -> dict:
    """Map edge -> CoalitionFamily for an IIE rule.

    ``validate`` is ``"sample"`` (random profiles), ``"full"`` (every profile)
    or ``"none"``.
    """
    if isinstance(universe, int):
        universe = VertexUniverse.standard(universe)
    if not assume_iie:
        v = check_axiom(rule, "iie", universe, n, caps=caps)
        if not v.passed:
            raise ConfigError("rule is not IIE:\n" + v.describe())
    m = universe.n_edges
    codes = np.array(
        [[(1 << e) if c >> i & 1 else 0 for i in range(n)] for e in range(m) for c in range(1 << n)],
        dtype=np.int64,
    )
    out = rule.apply_codes(codes, universe)
    fams = {}
    table = np.zeros((m, 1 << n), dtype=bool)
    for e in range(m):
        bits = 0
        for c in range(1 << n):
            if out[e * (1 << n) + c] >> e & 1:
                bits |= 1 << c
                table[e, c] = True
        fams[universe.edge(e)] = CoalitionFamily(n, bits)
    if validate != "none":
        sp = ProfileSpace(universe, n, caps=caps)
        if validate == "full":
            it = (c for _, c in sp.chunks())
        else:
            rng = np.random.default_rng(seed)
            it = [rng.integers(0, 1 << m, size=(samples, n), dtype=np.int64)]
        for c in it:
            got = rule.apply_codes(c, universe)
            sm = supporter_masks(c, m)
            pred = (table[np.arange(m)[None, :], sm].astype(np.int64) << np.arange(m)).sum(axis=1)
            bad = np.flatnonzero(got != pred)
            if len(bad):
                pr = Profile.from_codes(universe, c[bad[0]])
                raise ConfigError(f"winning families do not reproduce the rule on {pr}")
    return fams


# --- regimes --------------------------------------------------------------------


@dataclass
class Regime:
    dictatorial: Optional[int] = None
    oligarchic: Optional[frozenset] = None
    nr_dictatorial: Optional[int] = None
    nr_oligarchic: Optional[frozenset] = None
    cross_check: Optional[bool] = None
    examined: int = 0

    def to_dict(self):
        f = lambda c: None if c is None else sorted(c)
        return {
            "dictatorial": self.dictatorial,
            "oligarchic": f(self.oligarchic),
            "nr_dictatorial": self.nr_dictatorial,
            "nr_oligarchic": f(self.nr_oligarchic),
            "cross_check": self.cross_check,
        }


def _coalition_order(n):
    """Nonempty coalitions, smallest first, then by agent indices."""
    cs = [c for c in range(1, 1 << n)]
    return sorted(cs, key=lambda c: (c.bit_count(), sorted(coalition(c))))


def detect_regime(
    rule: AggregationRule,
    universe,
    n: int,
    scope: Optional[GraphProperty] = None,
    cross_check: bool = False,
    caps: Optional[Caps] = None,
) -> Regime:
    """Find the coalition (if any) whose intersection the rule reproduces.

    The plain regimes compare whole outputs; the NR regimes compare only
    nonreflexive edges.
    """
    sp = _space(universe, n, scope, caps)
    u = sp.universe
    sp.require(sp.caps.max_profiles, "regime scan")
    nr = u.nonreflexive_code()
    plain = _coalition_order(n)
    nrc = list(plain)
    examined = 0
    for s, codes in sp.chunks():
        out = rule.apply_codes(codes, u)
        examined = s + len(codes)
        for lst, mask in ((plain, -1), (nrc, nr)):
            keep = []
            for c in lst:
                ref = np.bitwise_and.reduce(codes[:, [i for i in range(n) if c >> i & 1]], axis=1)
                if np.array_equal(ref & mask, out & mask):
                    keep.append(c)
            lst[:] = keep
        if not plain and not nrc:
            break
    r = Regime(examined=examined)
    if plain:
        r.oligarchic = coalition(plain[0])
        single = [c for c in plain if c.bit_count() == 1]
        if single:
            r.dictatorial = single[0].bit_length()
    if nrc:
        r.nr_oligarchic = coalition(nrc[0])
        single = [c for c in nrc if c.bit_count() == 1]
        if single:
            r.nr_dictatorial = single[0].bit_length()
    if cross_check:
        r.cross_check = _cross_check(rule, u, n, r, sp.caps)
    return r


def _cross_check(rule, u, n, regime, caps) -> Optional[bool]:
    """For IIE + NR-neutral rules: filter <=> NR-oligarchic, ultrafilter <=> NR-dictatorial."""
    nonloops = [e for e in range(u.n_edges) if not u.is_loop(e)]
    if not nonloops:
        return None
    if not check_axiom(rule, "iie", u, n, caps=caps).passed:
        return None
    if not check_axiom(rule, "nr-neutrality", u, n, caps=caps).passed:
        return None
    fams = extract_winning_families(rule, u, n, validate="none", assume_iie=True, caps=caps)
    w = fams[u.edge(nonloops[0])]
    cls = classify_family(w)
    return cls.is_filter == (regime.nr_oligarchic is not None) and cls.is_ultrafilter == (
        regime.nr_dictatorial is not None
    )


def all_families(n: int):
    """Every coalition family over n agents, in ascending bit order."""
    for bits in range(1 << (1 << n)):
        yield CoalitionFamily(n, bits)
