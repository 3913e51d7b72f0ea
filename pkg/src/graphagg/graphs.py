"""Graphs, profiles and graph properties over a fixed finite vertex universe.

A graph is stored as an integer bit-vector: edge ``(x, y)`` lives at bit
``index(x) * |V| + index(y)``.  The integer order of these codes is the
canonical graph order used by every enumeration in the package.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import CapExceeded, UsageError


@dataclass
class Caps:
    """Search limits.  Bigger machines can raise these."""

    enum_bits: int = 12  # unfiltered enumeration: |V|^2 <= 12, so |V| <= 3
    filtered_enum_bits: int = 16  # property-filtered enumeration: |V| <= 4
    max_table: int = 2**27  # profiles held in memory as one output table
    max_profiles: int = 2**31  # profiles scanned by one streaming search
    max_valuations: int = 2**12
    max_restrictions: int = 3**9  # (S+, S-) pairs for meta-property search
    chunk: int = 2**20


CAPS = Caps()


def active_caps(caps: Optional[Caps]) -> Caps:
    return CAPS if caps is None else caps


@dataclass(frozen=True)
class VertexUniverse:
    names: tuple

    def __init__(self, names: Iterable[str]):
        names = tuple(str(v) for v in names)
        if not names:
            raise UsageError("a vertex universe needs at least one vertex")
        if len(set(names)) != len(names):
            raise UsageError(f"duplicate vertex labels in {names}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "_pos", {v: i for i, v in enumerate(names)})

    @classmethod
    def standard(cls, k: int) -> "VertexUniverse":
        """x, y, z, w for k <= 4; v1..vk beyond that."""
        if k <= 4:
            return cls("xyzw"[:k])
        return cls(f"v{i + 1}" for i in range(k))

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def n_edges(self) -> int:
        return len(self.names) ** 2

    @property
    def full_code(self) -> int:
        return (1 << self.n_edges) - 1

    def index(self, label) -> int:
        try:
            return self._pos[label]
        except KeyError:
            raise UsageError(f"unknown vertex {label!r}") from None

    def edge_index(self, x, y) -> int:
        return self.index(x) * self.size + self.index(y)

    def edge(self, i: int) -> tuple:
        k = self.size
        return (self.names[i // k], self.names[i % k])

    def edges(self) -> list:
        """All |V|^2 edges in canonical index order."""
        return [self.edge(i) for i in range(self.n_edges)]

    def is_loop(self, i: int) -> bool:
        return i // self.size == i % self.size

    def nonreflexive_code(self) -> int:
        return sum(1 << i for i in range(self.n_edges) if not self.is_loop(i))

    def vertex_set(self, mask: int) -> frozenset:
        return frozenset(v for i, v in enumerate(self.names) if mask >> i & 1)

    def vertex_mask(self, labels: Iterable) -> int:
        return sum(1 << self.index(v) for v in labels)

    def __repr__(self):
        return f"VertexUniverse({' '.join(self.names)})"


@dataclass(frozen=True)
class Graph:
    universe: VertexUniverse
    code: int

    def __post_init__(self):
        if not 0 <= self.code <= self.universe.full_code:
            raise UsageError(f"edge bit-vector {self.code} out of range")

    @classmethod
    def from_edges(cls, universe: VertexUniverse, edges: Iterable) -> "Graph":
        code = 0
        for x, y in edges:
            code |= 1 << universe.edge_index(x, y)
        return cls(universe, code)

    @classmethod
    def empty(cls, universe):
        return cls(universe, 0)

    @classmethod
    def full(cls, universe):
        return cls(universe, universe.full_code)

    @property
    def edges(self) -> list:
        """Edges as label pairs, in canonical index order."""
        u = self.universe
        return [u.edge(i) for i in range(u.n_edges) if self.code >> i & 1]

    def has_edge(self, x, y) -> bool:
        return bool(self.code >> self.universe.edge_index(x, y) & 1)

    def __contains__(self, edge) -> bool:
        return self.has_edge(*edge)

    def __len__(self):
        return self.code.bit_count()

    def __and__(self, other: "Graph") -> "Graph":
        return Graph(self.universe, self.code & other.code)

    def __or__(self, other: "Graph") -> "Graph":
        return Graph(self.universe, self.code | other.code)

    def row(self, x) -> int:
        """Successor set of ``x`` as a vertex bitmask."""
        k = self.universe.size
        return self.code >> (self.universe.index(x) * k) & ((1 << k) - 1)

    def column(self, y) -> int:
        k = self.universe.size
        j = self.universe.index(y)
        return sum(1 << i for i in range(k) if self.code >> (i * k + j) & 1)

    def successors(self, x) -> frozenset:
        return self.universe.vertex_set(self.row(x))

    def predecessors(self, y) -> frozenset:
        return self.universe.vertex_set(self.column(y))

    def __repr__(self):
        body = ", ".join(f"({x},{y})" for x, y in self.edges)
        return f"Graph({{{body}}})"


def successors(g: Graph, x) -> frozenset:
    return g.successors(x)


def predecessors(g: Graph, y) -> frozenset:
    return g.predecessors(y)


@dataclass(frozen=True)
class Profile:
    universe: VertexUniverse
    graphs: tuple

    def __init__(self, graphs: Sequence[Graph], universe: Optional[VertexUniverse] = None):
        graphs = tuple(graphs)
        if len(graphs) < 2:
            raise UsageError("a profile needs at least two agents")
        if universe is None:
            universe = graphs[0].universe
        if any(g.universe != universe for g in graphs):
            raise UsageError("all graphs of a profile must share one vertex universe")
        object.__setattr__(self, "universe", universe)
        object.__setattr__(self, "graphs", graphs)

    @classmethod
    def from_codes(cls, universe: VertexUniverse, codes: Iterable[int]) -> "Profile":
        return cls([Graph(universe, int(c)) for c in codes], universe)

    @classmethod
    def from_edge_lists(cls, universe, edge_lists) -> "Profile":
        return cls([Graph.from_edges(universe, es) for es in edge_lists], universe)

    @property
    def n(self) -> int:
        return len(self.graphs)

    @property
    def codes(self) -> tuple:
        return tuple(g.code for g in self.graphs)

    def __getitem__(self, i):
        return self.graphs[i]

    def __iter__(self):
        return iter(self.graphs)

    def __len__(self):
        return len(self.graphs)

    def supporter_mask(self, edge) -> int:
        """Coalition accepting ``edge``; agent ``i`` (1-based) is bit ``i - 1``."""
        b = self.universe.edge_index(*edge)
        return sum(1 << i for i, g in enumerate(self.graphs) if g.code >> b & 1)

    def permuted(self, perm: Sequence[int]) -> "Profile":
        """The profile (E_perm[0], ..., E_perm[n-1]) with 0-based ``perm``."""
        return Profile([self.graphs[j] for j in perm], self.universe)

    def __repr__(self):
        return "Profile(" + "; ".join(repr(g) for g in self.graphs) + ")"


def coalition(mask: int) -> frozenset:
    """Agent numbers (1-based) in a coalition bitmask."""
    return frozenset(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


def coalition_mask(agents: Iterable[int]) -> int:
    return sum(1 << (i - 1) for i in agents)


def supporters(pr: Profile, e) -> frozenset:
    return coalition(pr.supporter_mask(e))


# --- graph properties --------------------------------------------------------


def adjacency(codes: np.ndarray, k: int) -> np.ndarray:
    """Boolean adjacency tensor of shape (N, k, k) for an array of codes."""
    codes = np.asarray(codes, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(k * k, dtype=np.int64)) & 1
    return bits.astype(bool).reshape(-1, k, k)


@dataclass(eq=False)
class GraphProperty:
    name: str
    predicate: Callable[[Graph], bool]
    kind: str = "user"  # builtin | conjunction | user
    parts: tuple = ()
    vector: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    _tables: dict = field(default_factory=dict, repr=False)

    def __call__(self, g: Graph) -> bool:
        return bool(self.predicate(g))

    def evaluate(self, codes: np.ndarray, universe: VertexUniverse) -> np.ndarray:
        """Vectorised membership test for an array of graph codes."""
        codes = np.asarray(codes, dtype=np.int64)
        if self.vector is not None:
            out = np.empty(len(codes), dtype=bool)
            step = 1 << 14
            for s in range(0, len(codes), step):
                out[s : s + step] = self.vector(adjacency(codes[s : s + step], universe.size))
            return out
        return np.fromiter(
            (self.predicate(Graph(universe, int(c))) for c in codes), dtype=bool, count=len(codes)
        )

    def table(self, universe: VertexUniverse, caps: Optional[Caps] = None) -> np.ndarray:
        """Membership of every graph on ``universe``, indexed by code."""
        caps = active_caps(caps)
        if universe.n_edges > caps.filtered_enum_bits:
            raise CapExceeded("property table", 1 << universe.n_edges, 1 << caps.filtered_enum_bits)
        t = self._tables.get(universe.names)
        if t is None:
            t = self.evaluate(np.arange(1 << universe.n_edges, dtype=np.int64), universe)
            t.setflags(write=False)
            self._tables[universe.names] = t
        return t


def check_property(p: GraphProperty, g: Graph) -> bool:
    return p(g)


def _rel(g: Graph):
    k = g.universe.size
    c = g.code
    return k, (lambda x, y: bool(c >> (x * k + y) & 1))


def _reflexive(g):
    k, E = _rel(g)
    return all(E(x, x) for x in range(k))


def _irreflexive(g):
    k, E = _rel(g)
    return not any(E(x, x) for x in range(k))


def _symmetric(g):
    k, E = _rel(g)
    return all(not E(x, y) or E(y, x) for x in range(k) for y in range(k))


def _antisymmetric(g):
    k, E = _rel(g)
    return all(not (E(x, y) and E(y, x)) or x == y for x in range(k) for y in range(k))


def _triples(k):
    return itertools.product(range(k), repeat=3)


def _right_euclidean(g):
    k, E = _rel(g)
    return all(not (E(x, y) and E(x, z)) or E(y, z) for x, y, z in _triples(k))


def _left_euclidean(g):
    k, E = _rel(g)
    return all(not (E(x, y) and E(z, y)) or E(z, x) for x, y, z in _triples(k))


def _transitive(g):
    k, E = _rel(g)
    return all(not (E(x, y) and E(y, z)) or E(x, z) for x, y, z in _triples(k))


def _negatively_transitive(g):
    k, E = _rel(g)
    return all(not E(x, y) or E(x, z) or E(z, y) for x, y, z in _triples(k))


def _connected(g):
    k, E = _rel(g)
    return all(not (E(x, y) and E(x, z)) or E(y, z) or E(z, y) for x, y, z in _triples(k))


def _complete(g):
    k, E = _rel(g)
    return all(x == y or E(x, y) or E(y, x) for x in range(k) for y in range(k))


def _nontrivial(g):
    return g.code != 0


def _nr_nontrivial(g):
    k, E = _rel(g)
    return any(E(x, y) for x in range(k) for y in range(k) if x != y)


def _serial(g):
    k, E = _rel(g)
    return all(any(E(x, y) for y in range(k)) for x in range(k))


def _has_maxima(g):
    k, E = _rel(g)
    return any(all(E(x, y) for y in range(k)) for x in range(k))


def _has_minima(g):
    k, E = _rel(g)
    return any(all(E(y, x) for y in range(k)) for x in range(k))


def _acyclic(g):
    k, E = _rel(g)
    # Kahn-style peeling: a graph is acyclic iff repeatedly removing vertices
    # without incoming edges empties it (self-loops count as cycles).
    alive = set(range(k))
    while alive:
        sources = [y for y in alive if not any(E(x, y) for x in alive)]
        if not sources:
            return False
        alive.difference_update(sources)
    return True


def _T(A):
    return A.transpose(0, 2, 1)


def _offdiag(k):
    return ~np.eye(k, dtype=bool)


def _v_acyclic(A):
    k = A.shape[1]
    R = A.copy()
    for _ in range(k):
        R = R | (np.einsum("nxy,nyz->nxz", R.astype(np.int32), A.astype(np.int32)) > 0)
    return ~R.diagonal(axis1=1, axis2=2).any(axis=1)


_VECTOR = {
    "reflexivity": lambda A: A.diagonal(axis1=1, axis2=2).all(axis=1),
    "irreflexivity": lambda A: ~A.diagonal(axis1=1, axis2=2).any(axis=1),
    "symmetry": lambda A: (~A | _T(A)).all(axis=(1, 2)),
    "antisymmetry": lambda A: ~(A & _T(A) & _offdiag(A.shape[1])).any(axis=(1, 2)),
    "right-euclidean": lambda A: ~(
        A[:, :, :, None] & A[:, :, None, :] & ~A[:, None, :, :]
    ).any(axis=(1, 2, 3)),
    "left-euclidean": lambda A: ~(
        A[:, :, :, None] & _T(A)[:, None, :, :] & ~_T(A)[:, :, None, :]
    ).any(axis=(1, 2, 3)),
    "transitivity": lambda A: ~(
        A[:, :, :, None] & A[:, None, :, :] & ~A[:, :, None, :]
    ).any(axis=(1, 2, 3)),
    "negative-transitivity": lambda A: ~(
        A[:, :, :, None] & ~A[:, :, None, :] & ~_T(A)[:, None, :, :]
    ).any(axis=(1, 2, 3)),
    "connectedness": lambda A: ~(
        A[:, :, :, None] & A[:, :, None, :] & ~A[:, None, :, :] & ~_T(A)[:, None, :, :]
    ).any(axis=(1, 2, 3)),
    "completeness": lambda A: ((A | _T(A)) | ~_offdiag(A.shape[1])).all(axis=(1, 2)),
    "nontriviality": lambda A: A.any(axis=(1, 2)),
    "nr-nontriviality": lambda A: (A & _offdiag(A.shape[1])).any(axis=(1, 2)),
    "seriality": lambda A: A.any(axis=2).all(axis=1),
    "has-maxima": lambda A: A.all(axis=2).any(axis=1),
    "has-minima": lambda A: A.all(axis=1).any(axis=1),
    "has-maxima-or-minima": lambda A: A.all(axis=2).any(axis=1) | A.all(axis=1).any(axis=1),
    "acyclicity": _v_acyclic,
}

_SCALAR = {
    "reflexivity": _reflexive,
    "irreflexivity": _irreflexive,
    "symmetry": _symmetric,
    "antisymmetry": _antisymmetric,
    "right-euclidean": _right_euclidean,
    "left-euclidean": _left_euclidean,
    "transitivity": _transitive,
    "negative-transitivity": _negatively_transitive,
    "connectedness": _connected,
    "completeness": _complete,
    "nontriviality": _nontrivial,
    "nr-nontriviality": _nr_nontrivial,
    "seriality": _serial,
    "has-maxima": _has_maxima,
    "has-minima": _has_minima,
    "has-maxima-or-minima": lambda g: _has_maxima(g) or _has_minima(g),
    "acyclicity": _acyclic,
}

# The twelve rows of the standard property table, in its order.
STANDARD_PROPERTIES = (
    "reflexivity",
    "irreflexivity",
    "symmetry",
    "antisymmetry",
    "right-euclidean",
    "left-euclidean",
    "transitivity",
    "negative-transitivity",
    "connectedness",
    "completeness",
    "nontriviality",
    "seriality",
)

PROPERTIES: dict = {
    name: GraphProperty(name, _SCALAR[name], "builtin", (), _VECTOR[name]) for name in _SCALAR
}


def conjunction(*props: GraphProperty, name: Optional[str] = None) -> GraphProperty:
    """Left-to-right conjunction; no simplification of the parts."""
    if not props:
        raise UsageError("empty conjunction")

    def pred(g):
        return all(p(g) for p in props)

    vector = None
    if all(p.vector is not None for p in props):

        def vector(A):
            out = props[0].vector(A)
            for p in props[1:]:
                out = out & p.vector(A)
            return out

    return GraphProperty(name or "+".join(p.name for p in props), pred, "conjunction", props, vector)


_COMPOSITES = {
    "preorder": ("reflexivity", "transitivity"),
    "weak-order": ("reflexivity", "transitivity", "completeness"),
    "equivalence": ("reflexivity", "symmetry", "transitivity"),
    "strict-linear-order": ("irreflexivity", "transitivity", "completeness"),
}

for _name, _parts in _COMPOSITES.items():
    PROPERTIES[_name] = conjunction(*(PROPERTIES[p] for p in _parts), name=_name)


def get_property(name: str) -> GraphProperty:
    """Look up a property by name; ``a+b`` builds a conjunction."""
    if isinstance(name, GraphProperty):
        return name
    if name in PROPERTIES:
        return PROPERTIES[name]
    if "+" in name:
        return conjunction(*(get_property(part) for part in name.split("+")), name=name)
    raise UsageError(f"unknown graph property {name!r}; known: {', '.join(PROPERTIES)}")


def user_property(name: str, predicate: Callable[[Graph], bool]) -> GraphProperty:
    return GraphProperty(name, predicate, "user")


# --- enumeration -------------------------------------------------------------


def graph_codes(
    universe: VertexUniverse, p: Optional[GraphProperty] = None, caps: Optional[Caps] = None
) -> np.ndarray:
    """Codes of all graphs (satisfying ``p``), ascending."""
    caps = active_caps(caps)
    m = universe.n_edges
    if p is None:
        if m > caps.enum_bits:
            raise CapExceeded("graph enumeration", 1 << m, 1 << caps.enum_bits)
        return np.arange(1 << m, dtype=np.int64)
    if m > caps.filtered_enum_bits:
        raise CapExceeded("filtered graph enumeration", 1 << m, 1 << caps.filtered_enum_bits)
    return np.flatnonzero(p.table(universe, caps)).astype(np.int64)


def enumerate_graphs(
    universe: VertexUniverse, p: Optional[GraphProperty] = None, caps: Optional[Caps] = None
) -> Iterator[Graph]:
    for c in graph_codes(universe, p, caps):
        yield Graph(universe, int(c))


# --- restrictions P[S+, S-] ---------------------------------------------------


@dataclass(frozen=True)
class EdgeSetPair:
    universe: VertexUniverse
    plus: int
    minus: int

    def __post_init__(self):
        if self.plus & self.minus:
            raise UsageError("S+ and S- must be disjoint")

    @classmethod
    def from_edges(cls, universe, s_plus=(), s_minus=()) -> "EdgeSetPair":
        return cls(
            universe,
            Graph.from_edges(universe, s_plus).code,
            Graph.from_edges(universe, s_minus).code,
        )

    @property
    def s_plus(self) -> Graph:
        return Graph(self.universe, self.plus)

    @property
    def s_minus(self) -> Graph:
        return Graph(self.universe, self.minus)

    def admits(self, code: int) -> bool:
        return code & self.plus == self.plus and not code & self.minus

    def __repr__(self):
        return f"EdgeSetPair(S+={self.s_plus.edges}, S-={self.s_minus.edges})"


def restricted_membership(p: GraphProperty, sp: EdgeSetPair, g: Graph) -> bool:
    return sp.admits(g.code) and p(g)
