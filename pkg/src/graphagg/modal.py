"""Basic modal logic over graphs viewed as Kripke frames.

Concrete syntax: ``~`` negation, ``&``, ``|``, ``->`` (right-associative),
``[]`` box, ``<>`` diamond, parentheses, and identifiers as atoms.  Unary
operators bind tightest, then ``&``, then ``|``, then ``->``.

Truth sets are vertex bitmasks.  A valuation over atoms ``Φ`` (sorted) is
encoded as one integer whose bits ``j*|V| .. j*|V|+|V|-1`` hold the extension
of the ``j``-th atom; the canonical valuation order is ascending integer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

import numpy as np

from .errors import CapExceeded, ParseError, UsageError
from .graphs import Caps, Graph, VertexUniverse, active_caps


# --- syntax ---------------------------------------------------------------------


class Formula:
    __slots__ = ()

    def __str__(self):
        return print_formula(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Box(Formula):
    sub: Formula


@dataclass(frozen=True)
class Diamond(Formula):
    sub: Formula


_TOKEN = re.compile(r"\s*(?:(->)|(\[\])|(<>)|([~&|()])|([A-Za-z_][A-Za-z0-9_]*))")


def _tokenize(text: str) -> list:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[col]!r} at position {col}")
        kind = next(i for i in range(1, 6) if m.group(i))
        start = m.start(kind)
        toks.append((m.group(kind), kind == 5, start))
        pos = m.end()
    toks.append(("<end>", False, len(text)))
    return toks


class _Parser:
    def __init__(self, text, atoms):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.atoms = atoms

    def peek(self):
        return self.toks[self.i]

    def take(self, tok=None):
        t = self.toks[self.i]
        if tok is not None and t[0] != tok:
            raise ParseError(f"expected {tok!r} at position {t[2]}, found {t[0]!r}")
        self.i += 1
        return t

    def formula(self):
        left = self.disj()
        if self.peek()[0] == "->":
            self.take()
            return Implies(left, self.formula())
        return left

    def disj(self):
        f = self.conj()
        while self.peek()[0] == "|":
            self.take()
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.peek()[0] == "&":
            self.take()
            f = And(f, self.unary())
        return f

    def unary(self):
        tok, ident, pos = self.peek()
        if tok == "~":
            self.take()
            return Not(self.unary())
        if tok == "[]":
            self.take()
            return Box(self.unary())
        if tok == "<>":
            self.take()
            return Diamond(self.unary())
        if tok == "(":
            self.take()
            f = self.formula()
            self.take(")")
            return f
        if ident:
            self.take()
            if self.atoms is not None and tok not in self.atoms:
                raise ParseError(f"atom {tok!r} at position {pos} is not among the declared atoms {sorted(self.atoms)}")
            return Atom(tok)
        raise ParseError(f"unexpected {tok!r} at position {pos}")


def parse_formula(text: str, atoms: Optional[Iterable[str]] = None) -> Formula:
    p = _Parser(text, None if atoms is None else set(atoms))
    f = p.formula()
    tok, _, pos = p.peek()
    if tok != "<end>":
        raise ParseError(f"unexpected {tok!r} at position {pos}")
    return f


def _prec(f):
    if isinstance(f, Implies):
        return 1
    if isinstance(f, Or):
        return 2
    if isinstance(f, And):
        return 3
    return 4


def print_formula(f: Formula) -> str:
    """Minimal parentheses; ``parse_formula(print_formula(f)) == f``."""

    def go(f, ctx):
        if isinstance(f, Atom):
            return f.name
        if isinstance(f, Not):
            s = "~" + go(f.sub, 4)
        elif isinstance(f, Box):
            s = "[]" + go(f.sub, 4)
        elif isinstance(f, Diamond):
            s = "<>" + go(f.sub, 4)
        elif isinstance(f, Implies):
            s = go(f.left, 2) + " -> " + go(f.right, 1)
        elif isinstance(f, Or):
            s = go(f.left, 2) + " | " + go(f.right, 3)
        elif isinstance(f, And):
            s = go(f.left, 3) + " & " + go(f.right, 4)
        else:
            raise TypeError(f"not a formula: {f!r}")
        return "(" + s + ")" if _prec(f) < ctx else s

    return go(f, 0)


def atoms_of(f: Formula) -> tuple:
    out = set()

    def go(f):
        if isinstance(f, Atom):
            out.add(f.name)
        elif isinstance(f, (Not, Box, Diamond)):
            go(f.sub)
        else:
            go(f.left)
            go(f.right)

    go(f)
    return tuple(sorted(out))


def depth(f: Formula) -> int:
    if isinstance(f, Atom):
        return 0
    if isinstance(f, Not):
        return depth(f.sub)
    if isinstance(f, (Box, Diamond)):
        return 1 + depth(f.sub)
    return max(depth(f.left), depth(f.right))


# --- NNF and fragments -------------------------------------------------------------


def to_nnf(f: Formula) -> Formula:
    """Negation normal form: no implications, negation only on atoms."""

    def pos(f):
        if isinstance(f, Atom):
            return f
        if isinstance(f, Not):
            return neg(f.sub)
        if isinstance(f, And):
            return And(pos(f.left), pos(f.right))
        if isinstance(f, Or):
            return Or(pos(f.left), pos(f.right))
        if isinstance(f, Implies):
            return Or(neg(f.left), pos(f.right))
        if isinstance(f, Box):
            return Box(pos(f.sub))
        return Diamond(pos(f.sub))

    def neg(f):
        if isinstance(f, Atom):
            return Not(f)
        if isinstance(f, Not):
            return pos(f.sub)
        if isinstance(f, And):
            return Or(neg(f.left), neg(f.right))
        if isinstance(f, Or):
            return And(neg(f.left), neg(f.right))
        if isinstance(f, Implies):
            return And(pos(f.left), neg(f.right))
        if isinstance(f, Box):
            return Diamond(neg(f.sub))
        return Box(neg(f.sub))

    return pos(f)


def _has(f, cls):
    if isinstance(f, cls):
        return True
    if isinstance(f, Atom):
        return False
    if isinstance(f, (Not, Box, Diamond)):
        return _has(f.sub, cls)
    return _has(f.left, cls) or _has(f.right, cls)


def fragment(f: Formula) -> str:
    """``Propositional``, ``Box``, ``Diamond`` or ``Mixed``, judged on the NNF."""
    g = to_nnf(f)
    b, d = _has(g, Box), _has(g, Diamond)
    if not b and not d:
        return "Propositional"
    if not d:
        return "Box"
    if not b:
        return "Diamond"
    return "Mixed"


# --- semantics --------------------------------------------------------------------


@dataclass(frozen=True)
class Valuation:
    """Atom -> vertex bitmask."""

    universe: VertexUniverse
    masks: tuple  # sorted (atom, mask) pairs

    @classmethod
    def of(cls, universe: VertexUniverse, assignment: Mapping[str, Iterable]) -> "Valuation":
        return cls(universe, tuple(sorted((a, universe.vertex_mask(vs)) for a, vs in assignment.items())))

    @classmethod
    def from_code(cls, universe: VertexUniverse, atoms: Iterable[str], code: int) -> "Valuation":
        k = universe.size
        low = (1 << k) - 1
        return cls(universe, tuple((a, code >> (j * k) & low) for j, a in enumerate(sorted(atoms))))

    def code(self, atoms: Optional[Iterable[str]] = None) -> int:
        atoms = sorted(atoms) if atoms is not None else [a for a, _ in self.masks]
        d = dict(self.masks)
        return sum(d.get(a, 0) << (j * self.universe.size) for j, a in enumerate(atoms))

    def mask(self, atom: str) -> int:
        for a, m in self.masks:
            if a == atom:
                return m
        raise UsageError(f"valuation does not cover atom {atom!r}")

    def extension(self, atom: str) -> frozenset:
        return self.universe.vertex_set(self.mask(atom))

    def as_dict(self) -> dict:
        return {a: sorted(self.universe.vertex_set(m), key=self.universe.index) for a, m in self.masks}

    def __repr__(self):
        return "Valuation(" + ", ".join(f"{a}={{{','.join(v)}}}" for a, v in self.as_dict().items()) + ")"


@dataclass(frozen=True)
class KripkeModel:
    frame: Graph
    valuation: Valuation

    def __post_init__(self):
        if self.frame.universe != self.valuation.universe:
            raise UsageError("valuation and frame use different vertex universes")


def truth_set(f: Formula, g: Graph, val: Valuation) -> int:
    """Worlds (bitmask) where ``f`` holds in the model (g, val)."""
    u = g.universe
    k = u.size
    full = (1 << k) - 1
    rows = [g.code >> (x * k) & full for x in range(k)]

    def dia(s):
        return sum(1 << x for x in range(k) if rows[x] & s)

    def go(f):
        if isinstance(f, Atom):
            return val.mask(f.name)
        if isinstance(f, Not):
            return full & ~go(f.sub)
        if isinstance(f, And):
            return go(f.left) & go(f.right)
        if isinstance(f, Or):
            return go(f.left) | go(f.right)
        if isinstance(f, Implies):
            return (full & ~go(f.left)) | go(f.right)
        if isinstance(f, Diamond):
            return dia(go(f.sub))
        if isinstance(f, Box):
            return full & ~dia(full & ~go(f.sub))
        raise TypeError(f"not a formula: {f!r}")

    return go(f)


def truth_at(m: KripkeModel, x, f: Formula) -> bool:
    """Recursive evaluation at a single world, straight from the clauses."""
    u = m.frame.universe
    xi = u.index(x)
    k = u.size

    def go(f, w):
        if isinstance(f, Atom):
            return bool(m.valuation.mask(f.name) >> w & 1)
        if isinstance(f, Not):
            return not go(f.sub, w)
        if isinstance(f, And):
            return go(f.left, w) and go(f.right, w)
        if isinstance(f, Or):
            return go(f.left, w) or go(f.right, w)
        if isinstance(f, Implies):
            return (not go(f.left, w)) or go(f.right, w)
        succ = [v for v in range(k) if m.frame.code >> (w * k + v) & 1]
        if isinstance(f, Diamond):
            return any(go(f.sub, v) for v in succ)
        if isinstance(f, Box):
            return all(go(f.sub, v) for v in succ)
        raise TypeError(f"not a formula: {f!r}")

    return go(f, xi)


def globally_true(m: KripkeModel, f: Formula) -> bool:
    return truth_set(f, m.frame, m.valuation) == (1 << m.frame.universe.size) - 1


def _atoms(f, atoms):
    if atoms is None:
        return atoms_of(f)
    atoms = tuple(sorted(set(atoms)))
    missing = set(atoms_of(f)) - set(atoms)
    if missing:
        raise UsageError(f"formula uses undeclared atoms {sorted(missing)}")
    return atoms


def valuation_count(universe: VertexUniverse, atoms, caps: Optional[Caps] = None) -> int:
    caps = active_caps(caps)
    bits = len(atoms) * universe.size
    if (1 << bits) > caps.max_valuations:
        raise CapExceeded("valuation space", 1 << bits, caps.max_valuations)
    return 1 << bits


def frame_valid(g: Graph, f: Formula, atoms=None, caps: Optional[Caps] = None) -> bool:
    """True iff ``f`` is globally true under every valuation of ``atoms``."""
    atoms = _atoms(f, atoms)
    nv = valuation_count(g.universe, atoms, caps)
    vals = np.arange(nv, dtype=np.int64)
    t = truth_sets(f, np.array([g.code], dtype=np.int64), vals, g.universe, atoms)
    return bool((t == (1 << g.universe.size) - 1).all())


# --- vectorised semantics ------------------------------------------------------------


def truth_sets(
    f: Formula, codes: np.ndarray, vals: np.ndarray, universe: VertexUniverse, atoms
) -> np.ndarray:
    """Truth-set bitmasks, shape (len(codes), len(vals)).

    ``codes`` are graph codes, ``vals`` valuation codes over sorted ``atoms``.
    """
    k = universe.size
    full = np.int64((1 << k) - 1)
    atoms = tuple(sorted(atoms))
    codes = np.asarray(codes, dtype=np.int64)[:, None]
    vals = np.asarray(vals, dtype=np.int64)[None, :]
    rows = [(codes >> (x * k)) & full for x in range(k)]
    pos = {a: j for j, a in enumerate(atoms)}

    def dia(s):
        out = np.zeros(np.broadcast_shapes(s.shape, codes.shape), dtype=np.int64)
        for x in range(k):
            out |= ((rows[x] & s) != 0).astype(np.int64) << x
        return out

    def go(f):
        if isinstance(f, Atom):
            if f.name not in pos:
                raise UsageError(f"atom {f.name!r} has no valuation")
            return (vals >> (pos[f.name] * k)) & full
        if isinstance(f, Not):
            return full & ~go(f.sub)
        if isinstance(f, And):
            return go(f.left) & go(f.right)
        if isinstance(f, Or):
            return go(f.left) | go(f.right)
        if isinstance(f, Implies):
            return (full & ~go(f.left)) | go(f.right)
        if isinstance(f, Diamond):
            return dia(go(f.sub))
        if isinstance(f, Box):
            return full & ~dia(full & ~go(f.sub))
        raise TypeError(f"not a formula: {f!r}")

    out = go(f)
    return np.broadcast_to(out, (codes.shape[0], vals.shape[1]))


def frame_valid_codes(
    f: Formula, codes: np.ndarray, universe: VertexUniverse, atoms=None, caps: Optional[Caps] = None
) -> np.ndarray:
    """Frame validity for many graphs at once."""
    atoms = _atoms(f, atoms)
    nv = valuation_count(universe, atoms, caps)
    vals = np.arange(nv, dtype=np.int64)
    full = (1 << universe.size) - 1
    codes = np.asarray(codes, dtype=np.int64)
    out = np.empty(len(codes), dtype=bool)
    step = max(1, (1 << 22) // nv)
    for s in range(0, len(codes), step):
        t = truth_sets(f, codes[s : s + step], vals, universe, atoms)
        out[s : s + step] = (t == full).all(axis=1)
    return out


# --- formulas of the standard correspondence table ---------------------------------

CORRESPONDENCES = {
    "reflexivity": "p -> <>p",
    "symmetry": "p -> []<>p",
    "right-euclidean": "<>p -> []<>p",
    "transitivity": "<><>p -> <>p",
    "connectedness": "[]([]p -> q) | []([]q -> p)",
    "seriality": "<>(p | ~p)",
}

FormulaLike = Union[str, Formula]


def as_formula(f: FormulaLike, atoms=None) -> Formula:
    return parse_formula(f, atoms) if isinstance(f, str) else f
