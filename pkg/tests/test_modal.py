import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphagg.errors import CapExceeded, ParseError, UsageError
from graphagg.graphs import Caps, Graph, VertexUniverse, enumerate_graphs, get_property
from graphagg.modal import (
    CORRESPONDENCES,
    And,
    Atom,
    Box,
    Diamond,
    Implies,
    KripkeModel,
    Not,
    Or,
    Valuation,
    atoms_of,
    depth,
    fragment,
    frame_valid,
    frame_valid_codes,
    globally_true,
    parse_formula,
    print_formula,
    to_nnf,
    truth_at,
    truth_set,
    truth_sets,
    valuation_count,
)

from .formulas import formulas

p, q, r = Atom("p"), Atom("q"), Atom("r")
U2 = VertexUniverse.standard(2)
U3 = VertexUniverse.standard(3)
U4 = VertexUniverse.standard(4)


def naive_truth(g, assignment, f, x):
    """Independent evaluator over label sets."""
    if isinstance(f, Atom):
        return x in assignment[f.name]
    if isinstance(f, Not):
        return not naive_truth(g, assignment, f.sub, x)
    if isinstance(f, And):
        return naive_truth(g, assignment, f.left, x) and naive_truth(g, assignment, f.right, x)
    if isinstance(f, Or):
        return naive_truth(g, assignment, f.left, x) or naive_truth(g, assignment, f.right, x)
    if isinstance(f, Implies):
        return not naive_truth(g, assignment, f.left, x) or naive_truth(g, assignment, f.right, x)
    succ = [y for (a, y) in g.edges if a == x]
    if isinstance(f, Diamond):
        return any(naive_truth(g, assignment, f.sub, y) for y in succ)
    return all(naive_truth(g, assignment, f.sub, y) for y in succ)


class TestParser:
    def test_precedence(self):
        assert parse_formula("p & q | r -> p") == Implies(Or(And(p, q), r), p)
        assert parse_formula("~[]p") == Not(Box(p))
        assert parse_formula("<>~p & q") == And(Diamond(Not(p)), q)

    def test_implication_is_right_associative(self):
        assert parse_formula("p -> q -> r") == Implies(p, Implies(q, r))
        assert print_formula(Implies(Implies(p, q), r)) == "(p -> q) -> r"

    def test_and_or_left_associative(self):
        assert parse_formula("p & q & r") == And(And(p, q), r)
        assert print_formula(And(p, And(q, r))) == "p & (q & r)"

    def test_whitespace_insensitive(self):
        assert parse_formula("  []( p->q )") == parse_formula("[](p->q)")

    @pytest.mark.parametrize("text", ["", "p &", "(p", "p q", "[]", "p -> ", "p $ q", ")"])
    def test_errors(self, text):
        with pytest.raises(ParseError):
            parse_formula(text)

    def test_undeclared_atom(self):
        with pytest.raises(ParseError):
            parse_formula("p -> r", atoms=["p", "q"])
        assert parse_formula("p -> q", atoms=["p", "q"]) == Implies(p, q)

    def test_error_reports_position(self):
        with pytest.raises(ParseError, match="position 4"):
            parse_formula("p & )")

    @settings(max_examples=200, deadline=None)
    @given(formulas(("p", "q", "r")))
    def test_round_trip(self, f):
        assert parse_formula(print_formula(f)) == f

    def test_atoms_and_depth(self):
        f = parse_formula("[](q -> <>[]p) | r")
        assert atoms_of(f) == ("p", "q", "r")
        assert depth(f) == 3


def _is_nnf(f):
    if isinstance(f, Atom):
        return True
    if isinstance(f, Not):
        return isinstance(f.sub, Atom)
    if isinstance(f, Implies):
        return False
    if isinstance(f, (Box, Diamond)):
        return _is_nnf(f.sub)
    return _is_nnf(f.left) and _is_nnf(f.right)


class TestNNF:
    @settings(max_examples=150, deadline=None)
    @given(formulas(), st.integers(0, (1 << 12) - 1), st.integers(0, 255))
    def test_shape_and_equivalence(self, f, gcode, vcode):
        g = to_nnf(f)
        assert _is_nnf(g)
        u = VertexUniverse.standard(3)
        graph = Graph(u, gcode & ((1 << 9) - 1))
        val = Valuation.from_code(u, ("p", "q"), vcode % 64)
        assert truth_set(f, graph, val) == truth_set(g, graph, val)

    def test_dualities(self):
        assert to_nnf(parse_formula("~[]p")) == Diamond(Not(p))
        assert to_nnf(parse_formula("~<>~p")) == Box(p)
        assert to_nnf(parse_formula("p -> q")) == Or(Not(p), q)

    @pytest.mark.parametrize(
        "text, frag",
        [
            ("p & ~q", "Propositional"),
            ("[]p & []~q", "Box"),
            ("~<>p", "Box"),
            ("<>p -> q", "Box"),
            ("p -> <>p", "Diamond"),
            ("~[]p", "Diamond"),
            ("p -> []<>p", "Mixed"),
            ("<>in -> out", "Box"),
            ("in -> []out", "Box"),
            ("out -> <>in", "Diamond"),
        ],
    )
    def test_fragment(self, text, frag):
        assert fragment(parse_formula(text)) == frag


class TestSemantics:
    @settings(max_examples=150, deadline=None)
    @given(formulas(), st.integers(0, (1 << 9) - 1), st.integers(0, 63), st.integers(0, 2))
    def test_scalar_and_vectorised_agree_with_naive(self, f, gcode, vcode, xi):
        g = Graph(U3, gcode)
        val = Valuation.from_code(U3, ("p", "q"), vcode)
        assignment = {a: set(val.extension(a)) for a in ("p", "q")}
        x = U3.names[xi]
        want = naive_truth(g, assignment, f, x)
        assert truth_at(KripkeModel(g, val), x, f) == want
        assert bool(truth_set(f, g, val) >> xi & 1) == want
        t = truth_sets(f, np.array([gcode]), np.array([vcode]), U3, ("p", "q"))
        assert bool(int(t[0, 0]) >> xi & 1) == want

    def test_valuation_code_round_trip(self):
        for code in range(1 << 6):
            v = Valuation.from_code(U3, ("p", "q"), code)
            assert v.code() == code
            assert Valuation.of(U3, v.as_dict()) == v

    def test_valuation_missing_atom(self):
        with pytest.raises(UsageError):
            Valuation.of(U2, {"p": ["x"]}).mask("q")

    def test_model_universe_mismatch(self):
        with pytest.raises(UsageError):
            KripkeModel(Graph(U2, 0), Valuation.of(U3, {"p": []}))

    def test_valuation_cap(self):
        assert valuation_count(U3, ("p", "q")) == 64
        with pytest.raises(CapExceeded):
            valuation_count(U4, ("p", "q", "r", "s"), Caps(max_valuations=1 << 12))

    def test_frame_valid_codes_matches_scalar(self):
        f = parse_formula("[]p -> [][]p")
        codes = np.arange(1 << 4)
        vec = frame_valid_codes(f, codes, U2)
        assert list(vec) == [frame_valid(Graph(U2, int(c)), f) for c in codes]


class TestFourWorldFrame:
    G = Graph.from_edges(U4, [("x", "y"), ("z", "x"), ("z", "y"), ("y", "y")])

    def test_box_four_valid(self):
        assert frame_valid(self.G, parse_formula("[]q -> [][]q"))

    def test_reflexivity_formula_not_valid(self):
        f = parse_formula("p -> <>p")
        assert not frame_valid(self.G, f)
        assert not globally_true(KripkeModel(self.G, Valuation.of(U4, {"p": ["z"]})), f)
        assert globally_true(KripkeModel(self.G, Valuation.of(U4, {"p": []})), f)

    def test_world_without_successor(self):
        m = KripkeModel(self.G, Valuation.of(U4, {"p": U4.names}))
        f = parse_formula("p -> <>p")
        assert not truth_at(m, "w", f) and truth_at(m, "y", f)
        assert truth_at(m, "w", parse_formula("[]~p"))


class TestCorrespondence:
    @pytest.mark.parametrize("name", [n for n in CORRESPONDENCES if n != "connectedness"])
    def test_rows_at_three_vertices(self, name):
        f = parse_formula(CORRESPONDENCES[name])
        prop = get_property(name)
        codes = np.arange(1 << U3.n_edges)
        valid = frame_valid_codes(f, codes, U3)
        assert all(bool(valid[c]) == prop(Graph(U3, int(c))) for c in codes)

    def test_connectedness_row_reported(self):
        f = parse_formula(CORRESPONDENCES["connectedness"])
        prop = get_property("connectedness")
        codes = np.arange(1 << U3.n_edges)
        valid = frame_valid_codes(f, codes, U3)
        mismatches = [int(c) for c in codes if bool(valid[c]) != prop(Graph(U3, int(c)))]
        assert mismatches == []

    @pytest.mark.parametrize("name", sorted(CORRESPONDENCES))
    def test_rows_at_two_vertices(self, name):
        f = parse_formula(CORRESPONDENCES[name])
        prop = get_property(name)
        assert all(frame_valid(g, f) == prop(g) for g in enumerate_graphs(U2))
