"""Deciders for the meta-properties contagious, implicative and disjunctive.

A candidate is a restriction pair (S+, S-) together with distinguished edges.
Pairs are encoded in base 3, one digit per edge (0 free, 1 in S+, 2 in S-,
edge ``i`` at digit ``3**i``) and searched in the canonical order
(|S+| + |S-|, code); distinguished edge tuples follow in lexicographic order
of edge indices.  The first candidate in that order is the reported witness.

The fast search works per tuple of distinguished edges.  Each graph of P
fixes a full assignment of the remaining edges and belongs to every pair that
agrees with it where fixed; a base-3 superset transform therefore yields, for
every pair at once, which patterns on the distinguished edges occur in
P[S+, S-].  A loop-based search that scans P[S+, S-] directly serves as the
reference implementation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CapExceeded, UsageError
from .graphs import (
    STANDARD_PROPERTIES,
    Caps,
    EdgeSetPair,
    Graph,
    GraphProperty,
    VertexUniverse,
    active_caps,
    get_property,
    graph_codes,
)

# A meta-property is described by how many distinguished edges it uses, which
# pattern (bit t set iff edge t present) condition (i) forbids, and which
# patterns the richness condition (ii) requires, with exemplar names.
_SPEC = {
    "contagious": (2, 0b01, {"E0": 0b00, "E1": 0b11}),
    "implicative": (3, 0b011, {"E0": 0b000, "E1": 0b001, "E2": 0b010, "E13": 0b101, "E123": 0b111}),
    "disjunctive": (2, 0b00, {"E1": 0b01, "E2": 0b10}),
}
META = tuple(_SPEC)


@dataclass
class MetaWitness:
    meta: str
    pair: EdgeSetPair
    edges: tuple  # distinguished edges as label pairs
    exemplars: dict = field(default_factory=dict)  # name -> Graph
    code: int = 0  # base-3 pair code

    @property
    def s_plus(self):
        return self.pair.s_plus.edges

    @property
    def s_minus(self):
        return self.pair.s_minus.edges

    def to_dict(self) -> dict:
        from .fileio import write_graph

        return {
            "meta": self.meta,
            "s_plus": [list(e) for e in self.s_plus],
            "s_minus": [list(e) for e in self.s_minus],
            "edges": [list(e) for e in self.edges],
            "exemplars": {k: write_graph(g) for k, g in self.exemplars.items()},
        }

    def describe(self) -> str:
        fmt = lambda es: "{" + ", ".join(f"({x},{y})" for x, y in es) + "}"
        names = ("x y / z w" if self.meta == "contagious" else "e1 e2 e3" if self.meta == "implicative" else "e1 e2")
        lines = [
            f"S+ = {fmt(self.s_plus)}, S- = {fmt(self.s_minus)}",
            f"{names}: " + ", ".join(f"({x},{y})" for x, y in self.edges),
        ]
        for k, g in self.exemplars.items():
            lines.append(f"{k} = {fmt(g.edges)}")
        return "\n".join(lines)


# --- pair codes ----------------------------------------------------------------


def pair_from_code(universe: VertexUniverse, code: int) -> EdgeSetPair:
    plus = minus = 0
    for e in range(universe.n_edges):
        d = code % 3
        code //= 3
        if d == 1:
            plus |= 1 << e
        elif d == 2:
            minus |= 1 << e
    return EdgeSetPair(universe, plus, minus)


def pair_code(sp: EdgeSetPair) -> int:
    code = 0
    for e in range(sp.universe.n_edges - 1, -1, -1):
        code = code * 3 + (1 if sp.plus >> e & 1 else 2 if sp.minus >> e & 1 else 0)
    return code


def pair_order(m: int) -> np.ndarray:
    """All 3**m pair codes in canonical order."""
    codes = np.arange(3**m, dtype=np.int64)
    return codes[np.lexsort((codes, _nonzero_digits(codes, m)))]


def _nonzero_digits(codes: np.ndarray, m: int) -> np.ndarray:
    rank = np.zeros(len(codes), dtype=np.int64)
    rest = codes.copy()
    for _ in range(m):
        rank += rest % 3 != 0
        rest //= 3
    return rank


def _check_caps(universe: VertexUniverse, caps: Caps) -> None:
    m = universe.n_edges
    if 3**m > caps.max_restrictions:
        raise CapExceeded("restriction pairs", 3**m, caps.max_restrictions)


def _tuples(meta: str, m: int, fixed=None):
    if fixed is not None:
        return [tuple(fixed)]
    if meta == "implicative":
        return list(itertools.permutations(range(m), 3))
    if meta == "disjunctive":
        return list(itertools.combinations(range(m), 2))
    return list(itertools.permutations(range(m), 2))


def _patterns(G: np.ndarray, tup) -> np.ndarray:
    pat = np.zeros(len(G), dtype=np.int64)
    for t, e in enumerate(tup):
        pat |= ((G >> e) & 1) << t
    return pat


# --- fast search ----------------------------------------------------------------


class _Search:
    """Covered-pattern tables for one property on one universe."""

    def __init__(self, p: GraphProperty, universe: VertexUniverse, caps: Optional[Caps] = None):
        self.caps = active_caps(caps)
        _check_caps(universe, self.caps)
        self.p = p
        self.u = universe
        self.m = universe.n_edges
        self.G = graph_codes(universe, p, self.caps)
        self.examined = 0

    def covered(self, tup) -> tuple:
        """(bitmask of patterns per local pair code, full pair codes, ranks)."""
        m = self.m
        others = [e for e in range(m) if e not in tup]
        r = len(others)
        G = self.G
        local = np.zeros(len(G), dtype=np.int64)
        for j, e in enumerate(others):
            local += (2 - ((G >> e) & 1)) * 3**j
        A = np.zeros(3**r, dtype=np.uint8)
        np.bitwise_or.at(A, local, (1 << _patterns(G, tup)).astype(np.uint8))
        for j in range(r):
            Ar = A.reshape(-1, 3, 3**j)
            Ar[:, 0, :] |= Ar[:, 1, :] | Ar[:, 2, :]
        codes = np.arange(3**r, dtype=np.int64)
        full = np.zeros(3**r, dtype=np.int64)
        rest = codes.copy()
        for j, e in enumerate(others):
            full += (rest % 3) * 3**e
            rest //= 3
        return A, full, _nonzero_digits(codes, r)

    def first(self, meta: str, fixed=None):
        """Best (rank, code, tuple index, tuple) over all candidates, or None."""
        k, bad, need = _SPEC[meta]
        req = 0
        for pat in need.values():
            req |= 1 << pat
        best = None
        tuples = _tuples(meta, self.m, fixed)
        for ti, tup in enumerate(tuples):
            A, full, rank = self.covered(tup)
            self.examined += len(A)
            ok = ((A >> bad) & 1 == 0) & ((A & req) == req)
            hit = np.flatnonzero(ok)
            if not len(hit):
                continue
            j = hit[np.lexsort((full[hit], rank[hit]))[0]]
            cand = (int(rank[j]), int(full[j]), ti, tup)
            if best is None or cand[:3] < best[:3]:
                best = cand
        return best

    def witness(self, meta: str, fixed=None) -> Optional[MetaWitness]:
        best = self.first(meta, fixed)
        if best is None:
            return None
        _, code, _, tup = best
        return build_witness(self.p, self.u, meta, pair_from_code(self.u, code), tup, self.G)


def build_witness(p, universe, meta, pair: EdgeSetPair, tup, G=None) -> MetaWitness:
    """Attach the canonically first exemplar graph for each required pattern."""
    if G is None:
        G = graph_codes(universe, p)
    inside = [int(g) for g in G if pair.admits(int(g))]
    _, _, need = _SPEC[meta]
    ex = {}
    for name, pat in need.items():
        for g in inside:
            if sum(((g >> e) & 1) << t for t, e in enumerate(tup)) == pat:
                ex[name] = Graph(universe, g)
                break
    return MetaWitness(meta, pair, tuple(universe.edge(e) for e in tup), ex, pair_code(pair))


def validate_meta_witness(p: GraphProperty, w: MetaWitness) -> bool:
    """Re-check a witness by enumerating P[S+, S-] from scratch."""
    u = w.pair.universe
    idx = [u.edge_index(*e) for e in w.edges]
    if len(set(idx)) != len(idx):
        return False
    if w.meta != "contagious":
        if any((w.pair.plus | w.pair.minus) >> e & 1 for e in idx):
            return False
    _, bad, need = _SPEC[w.meta]
    seen = set()
    for code in range(1 << u.n_edges):
        g = Graph(u, code)
        if not (w.pair.admits(code) and p(g)):
            continue
        pat = sum(((code >> e) & 1) << t for t, e in enumerate(idx))
        if pat == bad:
            return False
        seen.add(pat)
    for name, pat in need.items():
        g = w.exemplars.get(name)
        if pat not in seen or g is None:
            return False
        if not (w.pair.admits(g.code) and p(g)):
            return False
        if sum(((g.code >> e) & 1) << t for t, e in enumerate(idx)) != pat:
            return False
    return True


# --- public deciders ---------------------------------------------------------------


def _prop(p):
    return get_property(p) if isinstance(p, str) else p


def _universe(u):
    return VertexUniverse.standard(u) if isinstance(u, int) else u


def is_xyzw_contagious(p, u, x, y, z, w, caps: Optional[Caps] = None) -> Optional[MetaWitness]:
    p, u = _prop(p), _universe(u)
    a, b = u.edge_index(x, y), u.edge_index(z, w)
    if a == b:
        raise UsageError("xy/zw-contagiousness needs two different edges")
    return _Search(p, u, caps).witness("contagious", (a, b))


@dataclass
class ContagionVerdict:
    contagious: bool
    conditions: dict  # "i" / "ii" / "iii" -> bool
    witnesses: dict  # (condition, x, y, z, kind) -> MetaWitness or None

    def __bool__(self):
        return self.contagious


def _condition_pairs(x, y, z):
    return {
        "i": [("xy/yz", (x, y), (y, z))],
        "ii": [("xy/zx", (x, y), (z, x))],
        "iii": [("xy/xz", (x, y), (x, z)), ("xy/zy", (x, y), (z, y))],
    }


def is_contagious(p, u, caps: Optional[Caps] = None) -> ContagionVerdict:
    p, u = _prop(p), _universe(u)
    if u.size < 3:
        raise UsageError("contagiousness quantifies over triples of distinct vertices; need |V| >= 3")
    s = _Search(p, u, caps)
    conds = {"i": True, "ii": True, "iii": True}
    wits = {}
    for x, y, z in itertools.permutations(u.names, 3):
        for cond, items in _condition_pairs(x, y, z).items():
            for kind, e1, e2 in items:
                wit = s.witness("contagious", (u.edge_index(*e1), u.edge_index(*e2)))
                wits[(cond, x, y, z, kind)] = wit
                if wit is None:
                    conds[cond] = False
    return ContagionVerdict(any(conds.values()), conds, wits)


def is_implicative(p, u, caps: Optional[Caps] = None) -> Optional[MetaWitness]:
    return _Search(_prop(p), _universe(u), caps).witness("implicative")


def is_disjunctive(p, u, caps: Optional[Caps] = None) -> Optional[MetaWitness]:
    return _Search(_prop(p), _universe(u), caps).witness("disjunctive")


def search_space_size(meta: str, m: int) -> int:
    """Number of (pair, tuple) candidates with the tuple edges free."""
    k = _SPEC[meta][0]
    return len(_tuples(meta, m)) * 3 ** (m - k)


@dataclass
class MetaRow:
    name: str
    contagious: bool
    implicative: bool
    disjunctive: bool
    contagion: Optional[ContagionVerdict] = None
    implicative_witness: Optional[MetaWitness] = None
    disjunctive_witness: Optional[MetaWitness] = None

    @property
    def cells(self) -> tuple:
        return (self.contagious, self.implicative, self.disjunctive)


def meta_table(u=3, properties=STANDARD_PROPERTIES, caps: Optional[Caps] = None) -> list:
    u = _universe(u)
    rows = []
    for name in properties:
        p = _prop(name)
        c = is_contagious(p, u, caps)
        s = _Search(p, u, caps)
        iw = s.witness("implicative")
        dw = s.witness("disjunctive")
        rows.append(MetaRow(p.name, c.contagious, iw is not None, dw is not None, c, iw, dw))
    return rows


# Expected cells for the standard properties (contagious, implicative, disjunctive).
EXPECTED_META = {
    "reflexivity": (False, False, False),
    "irreflexivity": (False, False, False),
    "symmetry": (False, False, False),
    "antisymmetry": (False, False, False),
    "right-euclidean": (True, True, False),
    "left-euclidean": (True, True, False),
    "transitivity": (True, True, False),
    "negative-transitivity": (True, False, True),
    "connectedness": (True, True, True),
    "completeness": (False, False, True),
    "nontriviality": (False, False, True),
    "seriality": (False, False, True),
}


# --- reference search ----------------------------------------------------------------


def reference_search(
    p,
    u,
    meta: str,
    fixed=None,
    prune: bool = True,
    exhaustive: bool = False,
    caps: Optional[Caps] = None,
):
    """Loop-based search straight from the definitions.

    Returns ``(witness or None, examined)`` where ``examined`` counts the
    (pair, tuple) candidates considered.  With ``prune`` the richness
    condition is tested before condition (i).  ``exhaustive`` keeps counting
    after the first witness.
    """
    p, u = _prop(p), _universe(u)
    caps = active_caps(caps)
    _check_caps(u, caps)
    m = u.n_edges
    G = [int(g) for g in graph_codes(u, p, caps)]
    _, bad, need = _SPEC[meta]
    tuples = _tuples(meta, m, fixed)
    found = None
    examined = 0
    for code in pair_order(m):
        pair = pair_from_code(u, int(code))
        fixed_mask = pair.plus | pair.minus
        inside = [g for g in G if pair.admits(g)]
        for tup in tuples:
            if any(fixed_mask >> e & 1 for e in tup):
                continue
            examined += 1
            if found is not None:
                continue

            def pattern(g):
                return sum(((g >> e) & 1) << t for t, e in enumerate(tup))

            def rich():
                return all(any(pattern(g) == pat for g in inside) for pat in need.values())

            def cond_i():
                for g in inside:
                    if pattern(g) == bad:
                        return False
                return True

            ok = (rich() and cond_i()) if prune else (cond_i() and rich())
            if ok:
                found = build_witness(p, u, meta, pair, tup, np.array(G, dtype=np.int64))
                if not exhaustive:
                    return found, examined
    return found, examined
