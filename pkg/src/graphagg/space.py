"""Profile spaces: D^n profiles over a sorted domain of graph codes.

Canonical profile order is lexicographic in the agents' domain positions with
agent 1 most significant, so profile index ``sum(pos_i * D**(n-1-i))``.
"""

from __future__ import annotations

from typing import Iterator, Optional

import numpy as np

from .errors import CapExceeded
from .graphs import Caps, GraphProperty, Profile, VertexUniverse, active_caps, graph_codes


class ProfileSpace:
    def __init__(
        self,
        universe: VertexUniverse,
        n: int,
        domain: Optional[np.ndarray] = None,
        scope: Optional[GraphProperty] = None,
        caps: Optional[Caps] = None,
    ):
        self.universe = universe
        self.n = n
        self.scope = scope
        self.caps = active_caps(caps)
        if domain is None:
            domain = graph_codes(universe, scope, self.caps)
        self.domain = np.asarray(domain, dtype=np.int64)
        self.D = len(self.domain)
        self.size = self.D**n
        self._pos = None
        m = universe.n_edges
        self.is_full = self.D == 1 << m and bool((self.domain == np.arange(self.D)).all())

    @property
    def scope_name(self) -> str:
        return "all graphs" if self.scope is None else self.scope.name

    def require(self, limit: int, what: str) -> None:
        if self.size > limit:
            raise CapExceeded(what, self.size, limit)

    def codes_at(self, idx: np.ndarray) -> np.ndarray:
        """Agent codes for an array of profile indices: shape (N, n)."""
        idx = np.asarray(idx, dtype=np.int64)
        out = np.empty((len(idx), self.n), dtype=np.int64)
        if self.is_full:
            m = self.universe.n_edges
            low = (1 << m) - 1
            for i in range(self.n):
                out[:, i] = (idx >> (m * (self.n - 1 - i))) & low
            return out
        rest = idx.copy()
        for i in range(self.n - 1, -1, -1):
            out[:, i] = self.domain[rest % self.D]
            rest //= self.D
        return out

    def profile(self, index: int) -> Profile:
        return Profile.from_codes(self.universe, self.codes_at(np.array([index]))[0])

    def positions(self, codes: np.ndarray) -> np.ndarray:
        """Domain positions of graph codes (-1 when outside the domain)."""
        if self._pos is None:
            self._pos = np.full(1 << self.universe.n_edges, -1, dtype=np.int64)
            self._pos[self.domain] = np.arange(self.D)
        return self._pos[codes]

    def index_of(self, codes) -> int:
        pos = self.positions(np.asarray(codes, dtype=np.int64))
        if (pos < 0).any():
            raise ValueError("profile is not in this space")
        idx = 0
        for p in pos:
            idx = idx * self.D + int(p)
        return idx

    def chunks(self, start: int = 0, stop: Optional[int] = None) -> Iterator:
        """Yield (first index, codes array) in canonical order."""
        stop = self.size if stop is None else min(stop, self.size)
        step = self.caps.chunk
        for s in range(start, stop, step):
            e = min(s + step, stop)
            yield s, self.codes_at(np.arange(s, e, dtype=np.int64))

    def output_table(self, rule) -> np.ndarray:
        """Rule output code for every profile, indexed by profile index."""
        self.require(self.caps.max_table, "full output table")
        dtype = np.uint16 if self.universe.n_edges <= 16 else np.int64
        out = np.empty(self.size, dtype=dtype)
        for s, codes in self.chunks():
            out[s : s + len(codes)] = rule.apply_codes(codes, self.universe)
        return out
