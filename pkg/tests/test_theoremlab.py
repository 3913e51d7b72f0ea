import itertools
import json

import pytest

from graphagg.axioms import CoalitionFamily, classify_family
from graphagg.errors import CapExceeded, PreconditionError, UsageError
from graphagg.graphs import Caps, Graph, Profile, VertexUniverse, enumerate_graphs, get_property
from graphagg.rules import FamilyRule
from graphagg.theoremlab import (
    DEMOS,
    PRESETS,
    THEOREMS,
    application_preset,
    demo,
    enumerate_neutral_rules,
    preset_argumentation,
    preset_clustering_nontrivial,
    verify,
    verify_dictatorship_theorem,
    verify_oligarchy_theorem,
)
from graphagg.theoremlab import _meta_holds

U3 = VertexUniverse.standard(3)


class TestEnumeration:
    @pytest.mark.parametrize("n, count", [(2, 16), (3, 256)])
    def test_family_counts(self, n, count):
        fams = [w.bits for w, _ in enumerate_neutral_rules(n)]
        assert fams == list(range(count))

    def test_everything_wins_gives_full_graph(self):
        w, rule = list(enumerate_neutral_rules(2))[15]
        assert len(w) == 4
        pr = Profile.from_codes(U3, [0, 0])
        assert rule.apply(pr) == Graph.full(U3)

    def test_cap(self):
        with pytest.raises(CapExceeded):
            list(enumerate_neutral_rules(4, Caps(filtered_enum_bits=8)))

    def test_too_few_agents(self):
        with pytest.raises(UsageError):
            list(enumerate_neutral_rules(1))


class TestTheoremsAtTwoAgents:
    @pytest.mark.parametrize("theorem", THEOREMS)
    def test_agrees(self, theorem):
        rep = verify(theorem, 2, 3)
        assert rep.agrees
        kind = rep.expected_kind
        for w, c in rep.survivors:
            assert c.is_filter
            if kind == "ultrafilter":
                assert c.is_ultrafilter

    def test_oligarchy_counts(self):
        rep = verify_oligarchy_theorem(2, 3, "transitivity")
        assert len(rep.survivors) == 3
        gens = sorted(sorted(c.principal_generator) for _, c in rep.survivors)
        assert gens == [[1], [1, 2], [2]]

    def test_dictatorship_counts(self):
        rep = verify_dictatorship_theorem(2, 3)
        assert [sorted(c.principal_generator) for _, c in rep.survivors] == [[1], [2]]

    def test_exclusions_cover_everything_else(self):
        rep = verify_oligarchy_theorem(2, 3, "transitivity")
        assert len(rep.survivors) + len(rep.excluded) == 16
        tally = rep.to_dict()["excluded_by"]
        assert set(tally) <= {"unanimity", "groundedness", "cr"}

    def test_cr_exclusions_carry_witnesses(self):
        rep = verify_oligarchy_theorem(2, 3, "transitivity")
        cr = [e for e in rep.excluded if e.constraint.startswith("cr")]
        assert cr and all(e.verdict is not None and not e.verdict.passed for e in cr)

    def test_report_serialises(self):
        rep = verify("arrow", 2, 3)
        d = json.loads(json.dumps(rep.to_dict()))
        assert d["agrees"] and len(d["survivors"]) == 2
        assert "agrees" in rep.describe()

    def test_unknown_theorem(self):
        with pytest.raises(UsageError):
            verify("condorcet")


class TestPreconditions:
    def test_symmetry_is_not_implicative(self):
        with pytest.raises(PreconditionError):
            verify_oligarchy_theorem(2, 3, "symmetry")

    def test_not_enforced_reports_meta(self):
        rep = verify_oligarchy_theorem(2, 3, "symmetry", enforce=False)
        assert rep.meta["symmetry implicative"] is False

    def test_completeness_not_implicative(self):
        with pytest.raises(PreconditionError):
            verify_dictatorship_theorem(2, 3, "completeness", "completeness")

    def test_meta_fallback_above_caps(self):
        holds, note = _meta_holds("implicative", get_property("transitivity"), VertexUniverse.standard(4), None)
        assert holds and note == " (checked at |V|=3)"


class TestClusteringParityFamily:
    """The odd-support family survives nontrivial clustering at three vertices."""

    ODD = CoalitionFamily.from_sets(3, [{1}, {2}, {3}, {1, 2, 3}])

    def test_brute_force_cr(self):
        eq, nt = get_property("equivalence"), get_property("nr-nontriviality")
        dom = [g for g in enumerate_graphs(U3) if eq(g) and nt(g)]
        assert len(dom) == 4
        for gs in itertools.product(dom, repeat=3):
            code = gs[0].code ^ gs[1].code ^ gs[2].code
            out = Graph(U3, code)
            assert eq(out) and nt(out)

    def test_family_rule_is_odd_support(self):
        rule = FamilyRule.neutral(self.ODD.bits, 3)
        pr = Profile.from_codes(U3, [0b101, 0b011, 0b110])
        assert rule.apply(pr).code == 0b101 ^ 0b011 ^ 0b110

    def test_not_a_filter(self):
        assert not classify_family(self.ODD).is_filter

    def test_four_vertices_break_parity(self):
        eq, nt = get_property("equivalence"), get_property("nr-nontriviality")
        u4 = VertexUniverse.standard(4)
        a = Graph.from_edges(u4, [(x, x) for x in u4.names] + [("x", "y"), ("y", "x")])
        b = Graph.from_edges(u4, [(x, x) for x in u4.names] + [("y", "z"), ("z", "y")])
        c = Graph.from_edges(u4, [(x, x) for x in u4.names] + [("z", "w"), ("w", "z")])
        assert all(eq(g) and nt(g) for g in (a, b, c))
        assert not eq(Graph(u4, a.code ^ b.code ^ c.code))

    def test_two_agents(self):
        rep = preset_clustering_nontrivial(2, 3)
        assert rep.agrees and len(rep.survivors) == 2


class TestPresets:
    def test_registry(self):
        assert set(PRESETS) == {"arrow", "clustering", "clustering-nontrivial", "preorder-oligarchy", "argumentation"}
        with pytest.raises(UsageError):
            application_preset("voting")

    def test_clustering_reports_meta(self):
        rep = application_preset("clustering", n=2, vertices=3)
        assert rep.agrees
        assert rep.meta["equivalence implicative"] is False

    def test_argumentation(self):
        rep = preset_argumentation(n=2, vertices=2)
        assert rep.agrees
        kinds = {r.fragment for r in rep.rows}
        assert {"Box", "Propositional"} <= kinds
        assert "consistent" in rep.describe()


class TestDemos:
    def test_condorcet(self):
        d = demo("condorcet")
        assert d.output.edges == [("x", "y"), ("y", "z"), ("z", "x")]
        assert d.checks["output transitive"] is False
        assert all(d.checks[f"agent {i} transitive"] for i in (1, 2, 3))

    def test_seriality(self):
        d = demo("seriality")
        assert d.checks["output serial"] is False
        assert d.checks["symmetry preserved"] is True
        assert all(d.checks[f"agent {i} serial"] for i in (1, 2, 3))

    def test_union_transitivity(self):
        d = demo("union-transitivity")
        assert d.output.edges == [("x", "y"), ("y", "z")]
        assert d.checks["output transitive"] is False

    @pytest.mark.parametrize("name", DEMOS)
    def test_serialises(self, name):
        json.dumps(demo(name).to_dict())
        assert demo(name).describe().startswith("demo")

    def test_unknown(self):
        with pytest.raises(UsageError):
            demo("arrow")
