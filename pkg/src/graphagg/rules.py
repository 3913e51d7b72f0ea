"""Aggregation rules.

Every rule maps a :class:`Profile` to a :class:`Graph` on the same universe.
Besides ``apply`` each rule offers ``apply_codes``, a batch evaluator taking an
``(N, n)`` array of graph codes and returning the ``N`` output codes.  The
exhaustive checkers only ever call ``apply_codes``; rules without a
vectorised form fall back to a loop over ``apply``, so they stay black boxes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigError, UsageError
from .graphs import Graph, Profile, VertexUniverse


@dataclass(frozen=True)
class RuleSpec:
    variant: str
    params: tuple = ()

    def __str__(self):
        v, p = self.variant, self.params
        if v in ("majority", "union", "intersection"):
            return v
        if v == "uniform-quota":
            return f"quota:{p[0]}"
        if v == "quota":
            return "quota-file" if not p else f"quota-file:{p[0]}"
        if v == "dictator":
            return f"dictator:{p[0]}"
        if v == "oligarchy":
            return "oligarchy:" + ",".join(str(i) for i in p)
        if v == "successor-approval":
            return f"succ:{_CHOICE_SHORT[p[0]]}"
        if v == "representative-voter":
            return f"rep:{p[0]}"
        if v == "neutral-family":
            return f"family:{p[1]}:{p[0]}"
        return v + ("" if not p else ":" + ",".join(map(str, p)))


# --- choice functions ----------------------------------------------------------
# Mask versions work on vertex bitmasks over k candidates; the public versions
# take label collections and a candidate order.


def _counts(masks: Sequence[int], k: int) -> list:
    return [sum(m >> x & 1 for m in masks) for x in range(k)]


def argmax_mask(masks: Sequence[int], k: int) -> int:
    c = _counts(masks, k)
    top = max(c)
    if top == 0:
        return 0
    return sum(1 << x for x in range(k) if c[x] == top)


def above_average_mask(masks: Sequence[int], k: int) -> int:
    c = _counts(masks, k)
    total = sum(c)
    if total == 0:
        return 0
    # c(x) > total / k, kept in integers
    return sum(1 << x for x in range(k) if c[x] * k > total)


def even_equal_mask(masks: Sequence[int], k: int) -> int:
    w = [Fraction(0)] * k
    for m in masks:
        size = m.bit_count()
        if size:
            share = Fraction(1, size)
            for x in range(k):
                if m >> x & 1:
                    w[x] += share
    top = max(w)
    if top == 0:
        return 0
    return sum(1 << x for x in range(k) if w[x] == top)


def quota_choice_mask(q: int) -> Callable[[Sequence[int], int], int]:
    """The successor-approval choice function equivalent to uniform quota q."""

    def choose(masks, k):
        c = _counts(masks, k)
        return sum(1 << x for x in range(k) if c[x] >= q)

    return choose


CHOICES = {
    "argmax-approval": argmax_mask,
    "above-average": above_average_mask,
    "even-equal-cumulative": even_equal_mask,
}
_CHOICE_SHORT = {
    "argmax-approval": "argmax",
    "above-average": "above-avg",
    "even-equal-cumulative": "even-equal",
}
_CHOICE_ALIASES = {
    "argmax": "argmax-approval",
    "argmax-approval": "argmax-approval",
    "above-avg": "above-average",
    "above-average": "above-average",
    "even-equal": "even-equal-cumulative",
    "even-equal-cumulative": "even-equal-cumulative",
}


def _as_masks(sets, candidates):
    pos = {v: i for i, v in enumerate(candidates)}
    try:
        return [sum(1 << pos[v] for v in s) for s in sets]
    except KeyError as exc:
        raise UsageError(f"approval of unknown candidate {exc.args[0]!r}") from None


def _label_set(mask, candidates):
    return frozenset(v for i, v in enumerate(candidates) if mask >> i & 1)


def choice_argmax(sets: Iterable[Iterable], candidates: Sequence) -> frozenset:
    return _label_set(argmax_mask(_as_masks(sets, candidates), len(candidates)), candidates)


def choice_above_average(sets: Iterable[Iterable], candidates: Sequence) -> frozenset:
    return _label_set(above_average_mask(_as_masks(sets, candidates), len(candidates)), candidates)


def choice_even_equal(sets: Iterable[Iterable], candidates: Sequence) -> frozenset:
    return _label_set(even_equal_mask(_as_masks(sets, candidates), len(candidates)), candidates)


# --- batch helpers ---------------------------------------------------------------


def edge_counts(codes: np.ndarray, m: int) -> np.ndarray:
    """Support count per edge: shape (N, m)."""
    out = np.zeros((len(codes), m), dtype=np.int64)
    for e in range(m):
        for i in range(codes.shape[1]):
            out[:, e] += (codes[:, i] >> e) & 1
    return out


_BIT_TABLES: dict = {}


def _bit_table(m: int) -> np.ndarray:
    t = _BIT_TABLES.get(m)
    if t is None:
        t = ((np.arange(1 << m)[:, None] >> np.arange(m)) & 1).astype(np.uint8)
        _BIT_TABLES[m] = t
    return t


def supporter_masks(codes: np.ndarray, m: int) -> np.ndarray:
    """Coalition bitmask per edge (agent i at bit i-1): shape (N, m)."""
    n = codes.shape[1]
    if m <= 16 and n <= 8:
        bt = _bit_table(m)
        out = bt[codes[:, 0]].copy()
        for i in range(1, n):
            out |= bt[codes[:, i]] << np.uint8(i)
        return out
    out = np.zeros((len(codes), m), dtype=np.int64)
    for i in range(n):
        col = codes[:, i]
        for e in range(m):
            out[:, e] |= ((col >> e) & 1) << i
    return out


def count_planes(codes: np.ndarray) -> list:
    """Bit-sliced support counts: bit e of plane j is bit j of edge e's count."""
    planes: list = []
    for i in range(codes.shape[1]):
        carry = codes[:, i].copy()
        for j in range(len(planes)):
            planes[j], carry = planes[j] ^ carry, planes[j] & carry
        planes.append(carry)
    return planes


def quota_accept(codes: np.ndarray, quotas: np.ndarray, full: int) -> np.ndarray:
    """Output codes of the quota rule with per-edge ``quotas``; all bitwise."""
    n = codes.shape[1]
    planes = count_planes(codes)
    acc = np.zeros(len(codes), dtype=np.int64)
    for v in range(n + 1):
        reach = sum(1 << e for e, q in enumerate(quotas) if q <= v)
        if not reach:
            continue
        eq = np.full(len(codes), full, dtype=np.int64)
        for j, plane in enumerate(planes):
            eq &= plane if v >> j & 1 else ~plane
        acc |= eq & reach
    return acc & full


def pack_edges(accept: np.ndarray) -> np.ndarray:
    """(N, m) boolean acceptance -> (N,) codes."""
    m = accept.shape[1]
    return (accept.astype(np.int64) << np.arange(m, dtype=np.int64)).sum(axis=1)


def hamming(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.bitwise_xor(a, b)).astype(np.int64)


# --- rules ---------------------------------------------------------------------------


class AggregationRule:
    """Base class.  Subclasses implement ``apply`` and may override ``apply_codes``."""

    spec: RuleSpec = RuleSpec("user")
    #: agent count the rule is tied to, if any
    n: Optional[int] = None

    def __call__(self, pr: Profile) -> Graph:
        return self.apply(pr)

    def apply(self, pr: Profile) -> Graph:
        self.check_profile(pr.universe, pr.n)
        out = self.apply_codes(np.array([pr.codes], dtype=np.int64), pr.universe)
        return Graph(pr.universe, int(out[0]))

    def apply_codes(self, codes: np.ndarray, universe: VertexUniverse) -> np.ndarray:
        out = np.empty(len(codes), dtype=np.int64)
        for j, row in enumerate(codes):
            out[j] = self.apply(Profile.from_codes(universe, row)).code
        return out

    def check_profile(self, universe: VertexUniverse, n: int) -> None:
        if self.n is not None and n != self.n:
            raise ConfigError(f"rule {self} is defined for {self.n} agents, profile has {n}")

    @property
    def name(self) -> str:
        return str(self.spec)

    def __str__(self):
        return str(self.spec)

    def __repr__(self):
        return f"<rule {self}>"


class FunctionRule(AggregationRule):
    """Wraps an arbitrary Python function Profile -> Graph."""

    def __init__(self, fn: Callable[[Profile], Graph], name: str = "user"):
        self.fn = fn
        self.spec = RuleSpec(name)

    def apply(self, pr: Profile) -> Graph:
        g = self.fn(pr)
        if g.universe != pr.universe:
            raise ConfigError("rule output lives on a different vertex universe")
        return g


def _uniform(spec_q):
    return lambda n, m: np.full(m, spec_q(n), dtype=np.int64)


class QuotaRule(AggregationRule):
    """Edge e is accepted iff at least q(e) agents accept it."""

    def __init__(self, spec: RuleSpec, quota: Callable[[int, int], np.ndarray]):
        self.spec = spec
        self._quota = quota

    @classmethod
    def majority(cls):
        return cls(RuleSpec("majority"), _uniform(lambda n: n // 2 + 1))

    @classmethod
    def union(cls):
        return cls(RuleSpec("union"), _uniform(lambda n: 1))

    @classmethod
    def intersection(cls):
        return cls(RuleSpec("intersection"), _uniform(lambda n: n))

    @classmethod
    def uniform(cls, q: int):
        return cls(RuleSpec("uniform-quota", (q,)), _uniform(lambda n: q))

    @classmethod
    def from_map(cls, quotas: dict, universe: VertexUniverse, source: str = ""):
        """``quotas`` maps edge index (or label pair) to its quota."""
        idx = {}
        for e, q in quotas.items():
            idx[e if isinstance(e, int) else universe.edge_index(*e)] = int(q)
        missing = [universe.edge(i) for i in range(universe.n_edges) if i not in idx]
        if missing:
            raise ConfigError(f"quota map is missing edges {missing}")
        arr = np.array([idx[i] for i in range(universe.n_edges)], dtype=np.int64)
        rule = cls(RuleSpec("quota", (source,) if source else ()), lambda n, m: arr)
        rule.universe = universe
        return rule

    def quotas(self, n: int, m: int) -> np.ndarray:
        return self._quota(n, m)

    def check_profile(self, universe, n):
        super().check_profile(universe, n)
        u = getattr(self, "universe", None)
        if u is not None and u != universe:
            raise ConfigError("quota map was built for a different vertex universe")
        q = self.quotas(n, universe.n_edges)
        if len(q) != universe.n_edges:
            raise ConfigError("quota map does not cover every edge")
        if (q < 0).any() or (q > n + 1).any():
            raise ConfigError(f"quotas must lie in 0..{n + 1}")

    def apply_codes(self, codes, universe):
        m = universe.n_edges
        self.check_profile(universe, codes.shape[1])
        return quota_accept(codes, self.quotas(codes.shape[1], m), universe.full_code)


class DictatorRule(AggregationRule):
    def __init__(self, i: int):
        if i < 1:
            raise ConfigError("dictator index must be at least 1")
        self.i = i
        self.spec = RuleSpec("dictator", (i,))

    def check_profile(self, universe, n):
        if self.i > n:
            raise ConfigError(f"dictator {self.i} does not exist among {n} agents")

    def apply_codes(self, codes, universe):
        self.check_profile(universe, codes.shape[1])
        return codes[:, self.i - 1].copy()


class OligarchyRule(AggregationRule):
    def __init__(self, coalition: Iterable[int]):
        c = tuple(sorted(set(int(i) for i in coalition)))
        if not c:
            raise ConfigError("an oligarchy needs a nonempty coalition")
        if c[0] < 1:
            raise ConfigError("agent indices start at 1")
        self.coalition = c
        self.spec = RuleSpec("oligarchy", c)

    def check_profile(self, universe, n):
        if self.coalition[-1] > n:
            raise ConfigError(f"oligarch {self.coalition[-1]} does not exist among {n} agents")

    def apply_codes(self, codes, universe):
        self.check_profile(universe, codes.shape[1])
        out = codes[:, self.coalition[0] - 1].copy()
        for i in self.coalition[1:]:
            out &= codes[:, i - 1]
        return out


class NROligarchyRule(AggregationRule):
    """Oligarchy on nonreflexive edges; loops follow a fixed winning family."""

    def __init__(self, coalition: Iterable[int], loop_family: int):
        self.base = OligarchyRule(coalition)
        self.loop_family = loop_family
        self.spec = RuleSpec("nr-oligarchy", self.base.coalition + (f"loops={loop_family}",))

    def apply_codes(self, codes, universe):
        n = codes.shape[1]
        nonloops = universe.nonreflexive_code()
        out = self.base.apply_codes(codes, universe) & nonloops
        loops = FamilyRule.neutral(self.loop_family, n).apply_codes(codes, universe)
        return out | (loops & ~nonloops & universe.full_code)


class FamilyRule(AggregationRule):
    """IIE rule given by one winning family per edge.

    ``families[e]`` is a 2**n bit integer; bit ``C`` is set iff coalition ``C``
    (agent i at bit i-1) makes edge ``e`` accepted.
    """

    def __init__(self, families: Sequence[int], n: int, name: str = "family"):
        self.families = tuple(int(f) for f in families)
        self.n = n
        self.spec = RuleSpec(name)
        self._table = np.array(
            [[f >> c & 1 for c in range(1 << n)] for f in self.families], dtype=bool
        )

    @classmethod
    def neutral(cls, family: int, n: int, m: Optional[int] = None, universe=None):
        """Same family on every edge.  ``m`` may be filled in lazily."""
        rule = cls.__new__(cls)
        rule.families = None
        rule.family = int(family)
        rule.n = n
        rule.spec = RuleSpec("neutral-family", (int(family), n))
        rule._row = np.array([family >> c & 1 for c in range(1 << n)], dtype=bool)
        return rule

    @classmethod
    def nr_neutral(cls, family: int, loop_family: int, n: int, universe: VertexUniverse):
        fams = [loop_family if universe.is_loop(e) else family for e in range(universe.n_edges)]
        rule = cls(fams, n, name="nr-neutral-family")
        rule.spec = RuleSpec("nr-neutral-family", (family, loop_family))
        return rule

    def check_profile(self, universe, n):
        super().check_profile(universe, n)
        if self.families is not None and len(self.families) != universe.n_edges:
            raise ConfigError("family rule does not cover every edge")

    def apply_codes(self, codes, universe):
        self.check_profile(universe, codes.shape[1])
        sm = supporter_masks(codes, universe.n_edges)
        if self.families is None:
            acc = self._row[sm]
        else:
            acc = self._table[np.arange(universe.n_edges)[None, :], sm]
        return pack_edges(acc)


class SuccessorApprovalRule(AggregationRule):
    def __init__(self, choice: str | Callable = "argmax-approval", name: Optional[str] = None):
        if callable(choice):
            self.choice = choice
            self.spec = RuleSpec(name or "successor-approval-user")
        else:
            key = _CHOICE_ALIASES.get(choice)
            if key is None:
                raise UsageError(
                    f"unknown choice function {choice!r}; use argmax, above-avg or even-equal"
                )
            self.choice = CHOICES[key]
            self.spec = RuleSpec("successor-approval", (key,))
        self._tables = {}

    def _table(self, k: int, n: int) -> Optional[np.ndarray]:
        if k * n > 20:
            return None
        key = (k, n)
        t = self._tables.get(key)
        if t is None:
            low = (1 << k) - 1
            t = np.array(
                [self.choice([c >> (k * i) & low for i in range(n)], k) for c in range(1 << (k * n))],
                dtype=np.int64,
            )
            self._tables[key] = t
        return t

    def apply_codes(self, codes, universe):
        k = universe.size
        n = codes.shape[1]
        low = (1 << k) - 1
        table = self._table(k, n)
        out = np.zeros(len(codes), dtype=np.int64)
        for x in range(k):
            rows = (codes >> (x * k)) & low
            if table is not None:
                combined = (rows << (k * np.arange(n, dtype=np.int64))[None, :]).sum(axis=1)
                chosen = table[combined]
            else:
                chosen = np.array([self.choice(list(map(int, r)), k) for r in rows], dtype=np.int64)
            out |= chosen << (x * k)
        return out


class RepresentativeVoterRule(AggregationRule):
    """Returns the graph of the agent closest to the majority outcome."""

    def __init__(self, metric: str = "majority-closest"):
        if metric != "majority-closest":
            raise UsageError(f"unknown representative metric {metric!r}; use majority-closest")
        self.spec = RuleSpec("representative-voter", (metric,))
        self._majority = QuotaRule.majority()

    def pick_codes(self, codes, universe) -> np.ndarray:
        """0-based index of the chosen agent per profile."""
        maj = self._majority.apply_codes(codes, universe)
        d = hamming(codes, maj[:, None])
        return np.argmin(d, axis=1)  # first minimum = lowest agent index

    def apply_codes(self, codes, universe):
        pick = self.pick_codes(codes, universe)
        return codes[np.arange(len(codes)), pick]


def representative_pick_majority_closest(pr: Profile) -> int:
    """1-based index of the representative agent."""
    rule = RepresentativeVoterRule()
    return int(rule.pick_codes(np.array([pr.codes], dtype=np.int64), pr.universe)[0]) + 1


def apply(rule: AggregationRule, pr: Profile) -> Graph:
    return rule.apply(pr)


# --- textual specs -------------------------------------------------------------------


def _int(text, what):
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"{what} must be an integer, got {text!r}") from None


def parse_rule(text: str, universe: Optional[VertexUniverse] = None) -> AggregationRule:
    """Build a rule from its CLI syntax, e.g. ``quota:2`` or ``oligarchy:1,3``."""
    text = text.strip()
    head, _, arg = text.partition(":")
    if head in ("majority", "union", "intersection") and not arg:
        return getattr(QuotaRule, head)()
    if head == "quota":
        return QuotaRule.uniform(_int(arg, "quota"))
    if head == "quota-file":
        if universe is None:
            raise UsageError("quota-file rules need the vertex universe (give --vertices or a profile)")
        from .fileio import parse_quota_file

        return QuotaRule.from_map(parse_quota_file(arg, universe), universe, source=arg)
    if head == "dictator":
        return DictatorRule(_int(arg, "dictator index"))
    if head == "oligarchy":
        if not arg:
            raise ConfigError("an oligarchy needs a nonempty coalition")
        return OligarchyRule(_int(a, "agent index") for a in arg.split(","))
    if head == "succ":
        return SuccessorApprovalRule(arg)
    if head == "rep":
        return RepresentativeVoterRule(arg)
    if head == "family":
        n, _, bits = arg.partition(":")
        n, bits = _int(n, "family agent count"), _int(bits, "family bits")
        if n < 2 or bits >> (1 << n):
            raise UsageError(f"family bits {bits} do not describe coalitions over {n} agents")
        return FamilyRule.neutral(bits, n)
    raise UsageError(
        f"unknown rule {text!r}; expected majority, union, intersection, quota:<k>, "
        "quota-file:<path>, dictator:<i>, oligarchy:<i,j,...>, succ:<argmax|above-avg|even-equal>, "
        "rep:majority-closest, family:<n>:<bits>"
    )
