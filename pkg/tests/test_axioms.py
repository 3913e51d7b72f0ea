import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphagg.axioms import (
    AXIOMS,
    CoalitionFamily,
    all_families,
    check_axiom,
    classify_family,
    detect_regime,
    extract_winning_families,
    family_conditions,
    validate_witness,
)
from graphagg.cr import check_cr
from graphagg.errors import ConfigError, UsageError
from graphagg.graphs import Graph, Profile, VertexUniverse, get_property
from graphagg.rules import (
    DictatorRule,
    FamilyRule,
    FunctionRule,
    NROligarchyRule,
    OligarchyRule,
    QuotaRule,
    RepresentativeVoterRule,
    SuccessorApprovalRule,
)
from graphagg.space import ProfileSpace

U2 = VertexUniverse.standard(2)


def _odd_rule():
    # edge accepted iff an odd number of agents accept it
    return FunctionRule(
        lambda pr: Graph(pr.universe, int(np.bitwise_xor.reduce(np.array(pr.codes)))), "parity"
    )


def _first_agent_rows_rule():
    # copies agent 1 on row x, agent 2 elsewhere: IIS but not anonymous
    def fn(pr):
        u = pr.universe
        rx = pr[0].row("x")
        return Graph(u, (pr[1].code & ~((1 << u.size) - 1)) | rx)

    return FunctionRule(fn, "split")


RULES = {
    "majority": QuotaRule.majority(),
    "union": QuotaRule.union(),
    "intersection": QuotaRule.intersection(),
    "quota0": QuotaRule.uniform(0),
    "dictator2": DictatorRule(2),
    "oligarchy12": OligarchyRule([1, 2]),
    "succ-argmax": SuccessorApprovalRule("argmax"),
    "succ-avg": SuccessorApprovalRule("above-avg"),
    "succ-even": SuccessorApprovalRule("even-equal"),
    "rep": RepresentativeVoterRule(),
    "parity": _odd_rule(),
    "split": _first_agent_rows_rule(),
    "nr-oligarchy": NROligarchyRule([1], (1 << 0b11) | (1 << 0b10)),
}


# --- literal oracle ----------------------------------------------------------------


class Oracle:
    """Axioms decided straight from their definitions on explicit profiles."""

    def __init__(self, rule, u, n, scope=None):
        self.u, self.n = u, n
        self.sp = ProfileSpace(u, n, scope=scope)
        self.profiles = [self.sp.profile(i) for i in range(self.sp.size)]
        self.out = [rule.apply(p) for p in self.profiles]
        self.rule = rule

    def _edges(self):
        return self.u.edges()

    def first_violation(self, axiom):
        return getattr(self, "_" + axiom.replace("-", "_"))()

    def _unanimity(self):
        for i, (p, o) in enumerate(zip(self.profiles, self.out)):
            common = set.intersection(*(set(g.edges) for g in p))
            if not common <= set(o.edges):
                return i
        return None

    def _groundedness(self):
        for i, (p, o) in enumerate(zip(self.profiles, self.out)):
            if not set(o.edges) <= set().union(*(set(g.edges) for g in p)):
                return i
        return None

    def _neutral(self, loops):
        es = [e for e in self._edges() if loops or e[0] != e[1]]
        for i, (p, o) in enumerate(zip(self.profiles, self.out)):
            for a, b in itertools.combinations(es, 2):
                if p.supporter_mask(a) == p.supporter_mask(b) and o.has_edge(*a) != o.has_edge(*b):
                    return i
        return None

    def _neutrality(self):
        return self._neutral(True)

    def _nr_neutrality(self):
        return self._neutral(False)

    def _anonymity(self):
        for i, (p, o) in enumerate(zip(self.profiles, self.out)):
            for perm in itertools.permutations(range(self.n)):
                if self.rule.apply(p.permuted(perm)) != o:
                    return i
        return None

    def _fd(self, key, val):
        """First (A, B) with equal key and different value, B minimal then slot."""
        keys = [key(p) for p in self.profiles]
        vals = [val(g) for g in self.out]
        first = {}
        for b in range(len(self.profiles)):
            for s, k in enumerate(keys[b]):
                a = first.setdefault((s, k), b)
                if vals[a][s] != vals[b][s]:
                    return a, b
        return None

    def _iie(self):
        es = self._edges()
        return self._fd(lambda p: [p.supporter_mask(e) for e in es], lambda g: [g.has_edge(*e) for e in es])

    def _iis(self):
        vs = self.u.names
        return self._fd(lambda p: [tuple(g.row(x) for g in p) for x in vs], lambda g: [g.row(x) for x in vs])

    def _iit(self):
        vs = self.u.names
        return self._fd(lambda p: [tuple(g.column(y) for g in p) for y in vs], lambda g: [g.column(y) for y in vs])

    def _monotonicity(self):
        """Literal reading over every coalition adding e at once."""
        index = {p.codes: i for i, p in enumerate(self.profiles)}
        for i, (p, o) in enumerate(zip(self.profiles, self.out)):
            for e in range(self.u.n_edges):
                if not o.code >> e & 1:
                    continue
                lacking = [a for a in range(self.n) if not p.codes[a] >> e & 1]
                for r in range(1, len(lacking) + 1):
                    for group in itertools.combinations(lacking, r):
                        codes = tuple(c | (1 << e) if a in group else c for a, c in enumerate(p.codes))
                        j = index.get(codes)
                        if j is not None and not self.out[j].code >> e & 1:
                            return i
        return None


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("name", sorted(RULES))
class TestAgainstOracle:
    def test_verdicts_and_witnesses(self, name, n):
        rule = RULES[name]
        oracle = Oracle(rule, U2, n)
        for axiom in AXIOMS:
            v = check_axiom(rule, axiom, U2, n)
            want = oracle.first_violation(axiom)
            assert v.passed == (want is None), axiom
            if v.passed:
                continue
            assert validate_witness(rule, v), axiom
            if axiom in ("iie", "iis", "iit"):
                assert tuple(v.witness.extra["profile_indices"]) == want, axiom
            elif axiom != "monotonicity":
                assert oracle.sp.index_of(v.witness.profiles[0].codes) == want, axiom


class TestScoped:
    def test_restricted_scope_matches_oracle(self):
        scope = get_property("reflexivity")
        for name in ("succ-argmax", "parity", "majority", "rep"):
            rule = RULES[name]
            oracle = Oracle(rule, U2, 3, scope)
            for axiom in AXIOMS:
                v = check_axiom(rule, axiom, U2, 3, scope=scope)
                assert v.passed == (oracle.first_violation(axiom) is None), (name, axiom)
                assert v.scope == "reflexivity"

    def test_monotonicity_first_witness(self):
        rule = RULES["parity"]
        v = check_axiom(rule, "monotonicity", U2, 2)
        assert not v.passed and validate_witness(rule, v)
        # profile 0 already contains e for nobody; the first E where adding e loses it
        p1, p2 = v.witness.profiles
        (e,) = v.witness.edges
        assert p1.supporter_mask(e) != p2.supporter_mask(e)

    def test_unknown_axiom(self):
        with pytest.raises(UsageError):
            check_axiom(RULES["majority"], "pareto", U2, 2)


class TestKnownVerdicts:
    """Facts about concrete rules at (|V|, n) = (3, 2)."""

    U3 = VertexUniverse.standard(3)

    @pytest.mark.parametrize("axiom", ["anonymity", "neutrality", "iie", "monotonicity", "unanimity", "groundedness"])
    def test_majority(self, axiom):
        assert check_axiom(QuotaRule.majority(), axiom, self.U3, 2).passed

    def test_succ_argmax_is_iis_not_iie(self):
        r = SuccessorApprovalRule("argmax")
        assert check_axiom(r, "iis", self.U3, 2).passed
        assert not check_axiom(r, "iie", self.U3, 2).passed

    def test_succ_argmax_not_neutral(self):
        v = check_axiom(SuccessorApprovalRule("argmax"), "neutrality", self.U3, 2)
        assert not v.passed and validate_witness(SuccessorApprovalRule("argmax"), v)

    def test_dictator_not_anonymous(self):
        v = check_axiom(DictatorRule(1), "anonymity", self.U3, 2)
        assert not v.passed and v.witness.extra["permutation"] == [2, 1]


class TestQuotaRuleFacts:
    @settings(max_examples=8, deadline=None)
    @given(st.integers(0, 4))
    def test_quota_rules_anonymous_neutral_independent_monotonic(self, q):
        rule = QuotaRule.uniform(q)
        for axiom in ("anonymity", "neutrality", "iie", "monotonicity"):
            assert check_axiom(rule, axiom, U2, 3).passed

    @pytest.mark.parametrize("q", range(5))
    def test_unanimity_and_groundedness_depend_on_quota(self, q):
        rule = QuotaRule.uniform(q)
        assert check_axiom(rule, "unanimity", U2, 3).passed == (q <= 3)
        assert check_axiom(rule, "groundedness", U2, 3).passed == (q >= 1)


families3 = st.integers(0, 255)


class TestAxiomsImplyCR:
    @settings(max_examples=25, deadline=None)
    @given(families3)
    def test_unanimous_gives_reflexivity(self, bits):
        rule = FamilyRule.neutral(bits, 3)
        if check_axiom(rule, "unanimity", U2, 3).passed:
            assert check_cr(rule, "reflexivity", U2, 3).passed

    @settings(max_examples=25, deadline=None)
    @given(families3)
    def test_grounded_gives_irreflexivity(self, bits):
        rule = FamilyRule.neutral(bits, 3)
        if check_axiom(rule, "groundedness", U2, 3).passed:
            assert check_cr(rule, "irreflexivity", U2, 3).passed

    @settings(max_examples=25, deadline=None)
    @given(families3)
    def test_neutral_gives_symmetry(self, bits):
        rule = FamilyRule.neutral(bits, 3)
        assert check_axiom(rule, "neutrality", U2, 3).passed
        assert check_cr(rule, "symmetry", U2, 3).passed

    def test_nonneutral_rule_can_break_symmetry(self):
        v = check_cr(SuccessorApprovalRule("argmax"), "symmetry", VertexUniverse.standard(3), 2)
        assert not v.passed


class TestFamilies:
    def test_filter_and_ultrafilter_counts(self):
        classes = [classify_family(w) for w in all_families(3)]
        assert sum(c.is_filter for c in classes) == 7
        assert sum(c.is_ultrafilter for c in classes) == 3

    def test_empty_family_is_not_a_filter(self):
        w = CoalitionFamily(3, 0)
        conds = family_conditions(w)
        assert conds["intersection_closed"] and conds["superset_closed"] and conds["no_empty_coalition"]
        assert not classify_family(w).is_filter

    def test_filters_are_principal(self):
        for w in all_families(3):
            c = classify_family(w)
            if c.is_filter:
                assert w == CoalitionFamily.upset(3, c.principal_generator)
            if c.is_ultrafilter:
                assert c.is_filter and len(c.principal_generator) == 1

    def test_from_sets(self):
        w = CoalitionFamily.from_sets(3, [{1, 2}, {1, 2, 3}])
        assert {1, 2} in w and {1} not in w and len(w) == 2
        with pytest.raises(UsageError):
            CoalitionFamily.from_sets(2, [{3}])

    def test_classify_rejects_other_n(self):
        with pytest.raises(ConfigError):
            classify_family(CoalitionFamily(2, 0b1000), 3)


class TestWinningCoalitions:
    def test_majority_families(self):
        fams = extract_winning_families(QuotaRule.majority(), U2, 3, validate="full")
        want = CoalitionFamily.from_sets(3, [{1, 2}, {1, 3}, {2, 3}, {1, 2, 3}])
        assert all(w == want for w in fams.values())

    def test_non_iie_rule_rejected(self):
        with pytest.raises(ConfigError):
            extract_winning_families(SuccessorApprovalRule("argmax"), U2, 3)

    def test_rule_from_families_round_trip(self):
        rule = NROligarchyRule([2], 1 << 0b111)
        fams = extract_winning_families(rule, U2, 3, validate="full")
        assert fams[("x", "y")] == CoalitionFamily.upset(3, {2})
        assert fams[("x", "x")] == CoalitionFamily.from_sets(3, [{1, 2, 3}])

    def test_filters_match_regimes_on_every_family(self):
        """Filters are exactly the oligarchies and ultrafilters the dictatorships (|V|=2, n=3)."""
        for w in all_families(3):
            rule = FamilyRule.neutral(w.bits, 3)
            c = classify_family(w)
            r = detect_regime(rule, U2, 3)
            assert (r.oligarchic is not None) == c.is_filter
            assert (r.dictatorial is not None) == c.is_ultrafilter
            if c.is_filter:
                assert r.oligarchic == c.principal_generator


class TestRegime:
    def test_dictator(self):
        r = detect_regime(DictatorRule(2), U2, 3)
        assert r.dictatorial == 2 and r.oligarchic == {2}

    def test_nr_oligarchy_only(self):
        r = detect_regime(NROligarchyRule([1, 3], 1 << 0b111), U2, 3, cross_check=True)
        assert r.oligarchic is None and r.nr_oligarchic == {1, 3} and r.nr_dictatorial is None
        assert r.cross_check is True

    def test_majority_has_no_regime(self):
        r = detect_regime(QuotaRule.majority(), U2, 3)
        assert r.oligarchic is None and r.nr_oligarchic is None
