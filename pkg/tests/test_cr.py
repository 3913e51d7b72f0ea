import itertools

import pytest

from graphagg.cr import (
    check_cr,
    check_frame_cr,
    check_modal_cr,
    check_model_cr,
    check_world_cr,
    validate_cr_witness,
)
from graphagg.errors import CapExceeded, UsageError
from graphagg.graphs import Caps, Graph, Profile, VertexUniverse, enumerate_graphs, get_property
from graphagg.modal import KripkeModel, Valuation, frame_valid, globally_true, parse_formula, truth_at
from graphagg.rules import (
    DictatorRule,
    FunctionRule,
    OligarchyRule,
    QuotaRule,
    RepresentativeVoterRule,
    SuccessorApprovalRule,
)

U2 = VertexUniverse.standard(2)
U3 = VertexUniverse.standard(3)

RULES = {
    "majority": QuotaRule.majority(),
    "union": QuotaRule.union(),
    "intersection": QuotaRule.intersection(),
    "dictator1": DictatorRule(1),
    "oligarchy12": OligarchyRule([1, 2]),
    "succ-argmax": SuccessorApprovalRule("argmax"),
    "rep": RepresentativeVoterRule(),
}


def _serial_gate():
    # full graph if every input is serial, empty otherwise
    serial = get_property("seriality")

    def fn(pr):
        return Graph.full(pr.universe) if all(serial(g) for g in pr) else Graph.empty(pr.universe)

    return FunctionRule(fn, "serial-gate")


def oracle_property(rule, p, u, n):
    """First failing profile index over P^n in lexicographic order, or None."""
    dom = [g for g in enumerate_graphs(u) if p(g)]
    for i, gs in enumerate(itertools.product(dom, repeat=n)):
        if not p(rule.apply(Profile(gs, u))):
            return i
    return None


def oracle_model(rule, f, atoms, u, n):
    """First failing (valuation code, profile index) in nested order."""
    graphs = list(enumerate_graphs(u))
    for code in range(1 << (len(atoms) * u.size)):
        val = Valuation.from_code(u, atoms, code)
        dom = [g for g in graphs if globally_true(KripkeModel(g, val), f)]
        if len(dom) == len(graphs):
            continue
        for i, gs in enumerate(itertools.product(dom, repeat=n)):
            if not globally_true(KripkeModel(rule.apply(Profile(gs, u)), val), f):
                return code, i
    return None


class TestPropertyCR:
    @pytest.mark.parametrize("rule", sorted(RULES))
    @pytest.mark.parametrize(
        "prop", ["reflexivity", "symmetry", "transitivity", "completeness", "seriality", "connectedness", "negative-transitivity"]
    )
    @pytest.mark.parametrize("n", [2, 3])
    def test_matches_oracle(self, rule, prop, n):
        p = get_property(prop)
        v = check_cr(RULES[rule], p, U2, n)
        want = oracle_property(RULES[rule], p, U2, n)
        assert v.passed == (want is None)
        if not v.passed:
            assert v.info["profile_index"] == want
            assert validate_cr_witness(RULES[rule], v, p)

    def test_majority_verdict_suite(self):
        maj = QuotaRule.majority()
        for prop in ("reflexivity", "irreflexivity", "symmetry", "antisymmetry"):
            assert check_cr(maj, prop, U3, 3).passed, prop

    def test_majority_completeness_depends_on_parity(self):
        maj = QuotaRule.majority()
        assert check_cr(maj, "completeness", U3, 3).passed
        v = check_cr(maj, "completeness", U3, 2)
        assert not v.passed and validate_cr_witness(maj, v, "completeness")

    def test_condorcet_cycle_found(self):
        maj = QuotaRule.majority()
        v = check_cr(maj, "transitivity", U3, 3)
        assert not v.passed and validate_cr_witness(maj, v, "transitivity")
        assert v.info["profile_index"] == 59870

    def test_intersection_breaks_connectedness(self):
        inter = QuotaRule.intersection()
        v = check_cr(inter, "connectedness", U3, 2)
        assert not v.passed and validate_cr_witness(inter, v, "connectedness")

    def test_connectedness_literal_reading_needs_loops(self):
        # with x = y = z unrestricted, (x,y) in E forces a loop at y
        conn = get_property("connectedness")
        g1 = Graph.from_edges(U3, [("x", "y"), ("x", "z"), ("y", "z")])
        assert not conn(g1)
        assert conn(Graph.from_edges(U3, [("x", "y"), ("x", "z"), ("y", "z"), ("y", "y"), ("z", "z")]))

    def test_tampered_witness_rejected(self):
        maj = QuotaRule.majority()
        v = check_cr(maj, "transitivity", U3, 3)
        assert not validate_cr_witness(QuotaRule.union(), v, "transitivity")

    def test_cap_exceeded(self):
        with pytest.raises(CapExceeded):
            check_cr(QuotaRule.majority(), "transitivity", U3, 3, caps=Caps(max_profiles=1000))

    def test_sampled_label(self):
        v = check_cr(QuotaRule.union(), "reflexivity", U3, 3, caps=Caps(max_profiles=1000), sample=2000, seed=1)
        assert v.passed and v.sampled
        assert v.label == "no counterexample found (sampled)"

    def test_counterexample_within_budget_is_exact(self):
        v = check_cr(QuotaRule.majority(), "completeness", U3, 2, caps=Caps(max_profiles=10**4))
        assert not v.passed and not v.sampled

    def test_sampling_can_find_failures(self):
        maj = QuotaRule.majority()
        v = check_cr(maj, "transitivity", U3, 3, caps=Caps(max_profiles=10), sample=20000, seed=3)
        assert not v.passed and v.sampled and validate_cr_witness(maj, v, "transitivity")


class TestFrameCR:
    def test_majority_seriality(self):
        maj = QuotaRule.majority()
        u4 = VertexUniverse.standard(4)
        v = check_frame_cr(maj, "<>(p | ~p)", None, u4, 3)
        assert not v.passed and validate_cr_witness(maj, v, "<>(p | ~p)")

    def test_majority_reflexivity(self):
        assert check_frame_cr(QuotaRule.majority(), "p -> <>p", None, U3, 3).passed

    def test_frame_matches_property_cr(self):
        # p -> <>p defines reflexivity, so frame CR and property CR coincide
        for name, rule in RULES.items():
            a = check_frame_cr(rule, "p -> <>p", None, U2, 2).passed
            b = check_cr(rule, "reflexivity", U2, 2).passed
            assert a == b, name


class TestModelAndWorldCR:
    @pytest.mark.parametrize("rule", ["majority", "intersection", "union", "succ-argmax"])
    @pytest.mark.parametrize("text", ["p -> <>p", "p -> []<>p", "<><>p -> <>p", "[]p -> p", "<>p | []~p"])
    def test_model_matches_oracle(self, rule, text):
        f = parse_formula(text)
        r = RULES[rule]
        v = check_model_cr(r, f, None, U2, 2)
        want = oracle_model(r, f, ("p",), U2, 2)
        assert v.passed == (want is None)
        if want is not None:
            assert (v.info["valuation_code"], v.info["profile_index"]) == want
            assert validate_cr_witness(r, v, f)

    def test_intersection_reflexivity_formula(self):
        inter = QuotaRule.intersection()
        v = check_model_cr(inter, "p -> <>p", None, U2, 2)
        assert not v.passed and validate_cr_witness(inter, v, "p -> <>p")
        # frame level passes: intersection preserves reflexivity
        assert check_frame_cr(inter, "p -> <>p", None, U2, 2).passed

    def test_intersection_symmetry_formula(self):
        inter = QuotaRule.intersection()
        v = check_model_cr(inter, "p -> []<>p", None, U3, 2)
        assert not v.passed and validate_cr_witness(inter, v, "p -> []<>p")

    def test_model_but_not_world(self):
        gate = _serial_gate()
        f = "<>(p | ~p)"
        assert check_model_cr(gate, f, None, U2, 2).passed
        v = check_world_cr(gate, f, None, U2, 2)
        assert not v.passed and validate_cr_witness(gate, v, f)
        assert v.witness.extra["world"] in U2.names

    def test_world_witness_is_pointwise(self):
        inter = QuotaRule.intersection()
        f = parse_formula("p -> <>p")
        v = check_world_cr(inter, f, None, U2, 2)
        assert not v.passed
        val = Valuation.of(U2, v.witness.extra["valuation"])
        x = v.witness.extra["world"]
        assert all(truth_at(KripkeModel(g, val), x, f) for g in v.witness.profiles[0])
        assert not truth_at(KripkeModel(v.witness.outputs[0], val), x, f)

    def test_skipped_valuations_counted(self):
        v = check_model_cr(QuotaRule.union(), "p | ~p", None, U2, 2)
        assert v.passed and v.info["skipped"] == 4

    def test_dispatch(self):
        maj = QuotaRule.majority()
        assert check_modal_cr(maj, "p -> <>p", None, U2, 3, "frame").passed
        with pytest.raises(UsageError):
            check_modal_cr(maj, "p", None, U2, 3, "global")

    def test_validator_rejects_passing_verdict(self):
        v = check_model_cr(QuotaRule.union(), "p | ~p", None, U2, 2)
        assert not validate_cr_witness(QuotaRule.union(), v, "p | ~p")

    def test_frame_valid_consistency(self):
        maj = QuotaRule.majority()
        v = check_frame_cr(maj, "<>(p | ~p)", None, VertexUniverse.standard(4), 3)
        f = parse_formula("<>(p | ~p)")
        assert all(frame_valid(g, f) for g in v.witness.profiles[0])
        assert not frame_valid(v.witness.outputs[0], f)
