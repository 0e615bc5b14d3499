import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from igabez.extraction import build_topo_mesh, extract_patch
from igabez.fem import make_grid_mesh
from igabez.regions import (
    All, And, CoordPredicate, NamedSet, Not, Or, SelectorSyntaxError, UnknownSetError,
    define_region, eval_selector, format_selector, parse_selector, tokenize,
)


@pytest.fixture(scope="module")
def topo(demo):
    return build_topo_mesh(extract_patch(demo))


class TestParse:
    def test_all(self):
        assert parse_selector("all") == All()

    def test_box(self):
        assert parse_selector("vertices in (x > 1.5) & (y < 1.5)") == \
            And(CoordPredicate(0, ">", 1.5), CoordPredicate(1, "<", 1.5))

    def test_named_set(self):
        assert parse_selector("vertices of set xi10") == NamedSet("xi10")

    def test_precedence(self):
        ast = parse_selector("vertices in x < 1 | y > 2 & ~z >= -3")
        assert ast == Or(CoordPredicate(0, "<", 1.0),
                         And(CoordPredicate(1, ">", 2.0), Not(CoordPredicate(2, ">=", -3.0))))

    def test_left_associative(self):
        ast = parse_selector("vertices in x<1&y<2&z<3")
        assert ast == And(And(CoordPredicate(0, "<", 1.0), CoordPredicate(1, "<", 2.0)),
                          CoordPredicate(2, "<", 3.0))

    def test_whitespace_insensitive(self):
        assert parse_selector("  vertices   in(x>=.5)  ") == CoordPredicate(0, ">=", 0.5)

    def test_exponent_literal(self):
        assert parse_selector("vertices in x <= 1e-3").threshold == 1e-3

    @pytest.mark.parametrize("text,column", [
        ("", 1),
        ("everything", 1),
        ("vertices", 9),
        ("vertices at x < 1", 10),
        ("vertices in", 12),
        ("vertices in (x > 1", 19),
        ("vertices in x > 1)", 18),
        ("vertices in w > 1", 13),
        ("vertices in x = 1", 15),
        ("vertices in x > y", 17),
        ("vertices in x >", 16),
        ("vertices in x > 1 &", 20),
        ("vertices in x > 1 & & y < 2", 21),
        ("vertices in x > 1 $ y < 2", 19),
        ("vertices of xi10", 13),
        ("vertices of set", 16),
        ("vertices of set 12", 17),
        ("vertices of set xi10 xi11", 22),
        ("all x", 5),
        ("vertices in ()", 14),
    ])
    def test_errors_have_columns(self, text, column):
        with pytest.raises(SelectorSyntaxError) as info:
            parse_selector(text)
        assert info.value.column == column
        assert f"column {column}" in str(info.value)

    def test_tokens(self):
        kinds = [t.kind for t in tokenize("x>=1.5e2|~y")]
        assert kinds == ["ident", "op", "number", "op", "op", "ident", "end"]


coords = st.sampled_from([0, 1, 2])
ops = st.sampled_from(["<", ">", "<=", ">="])
thresholds = st.floats(-1e6, 1e6, allow_nan=False)
leaves = st.builds(CoordPredicate, coords, ops, thresholds)
unit_leaves = st.builds(CoordPredicate, coords, ops, st.floats(-0.5, 1.5))
exprs = st.recursive(
    leaves,
    lambda sub: st.one_of(st.builds(And, sub, sub), st.builds(Or, sub, sub), st.builds(Not, sub)),
    max_leaves=8,
)
selectors = st.one_of(st.just(All()), st.builds(NamedSet, st.from_regex(r"[a-z][a-z0-9_]{0,6}",
                                                                        fullmatch=True)), exprs)


class TestRoundTrip:
    @given(ast=selectors)
    def test_parse_print_parse(self, ast):
        assert parse_selector(format_selector(ast)) == ast

    @pytest.mark.filterwarnings("ignore:region")
    @given(ast=st.recursive(unit_leaves, lambda sub: st.one_of(
        st.builds(And, sub, sub), st.builds(Or, sub, sub), st.builds(Not, sub)), max_leaves=6))
    def test_and_is_monotone(self, ast):
        mesh = make_grid_mesh([0, 0, 0], [1, 1, 1], (2, 2, 2))
        other = CoordPredicate(0, "<", 0.6)
        both = eval_selector(And(ast, other), mesh, "vertex").ids
        assert set(both) <= set(eval_selector(ast, mesh, "vertex").ids)
        assert set(both) <= set(eval_selector(other, mesh, "vertex").ids)


class TestEval:
    def test_all_cells(self, topo):
        np.testing.assert_array_equal(eval_selector(All(), topo, "cell").ids, np.arange(12))

    def test_box_cells(self, topo):
        region = define_region(topo, "Omega_0", "vertices in (x > 1.5) & (y < 1.5)")
        np.testing.assert_array_equal(region.ids, [10, 11])
        assert region.kind == "cell"

    def test_side_facets(self, topo):
        region = define_region(topo, "Gamma1", ("vertices of set xi10", "facet"))
        # the x = 0.4 side: cells of the first element column, local facet 2 (axis 1, side 0)
        np.testing.assert_array_equal(region.ids, [[0, 2], [1, 2], [2, 2]])
        np.testing.assert_array_equal(region.cells, [0, 1, 2])

    def test_facets_are_boundary_only(self, topo):
        region = eval_selector(parse_selector("vertices in x > 0.3"), topo, "facet")
        assert topo.boundary_facets()[region.ids[:, 0], region.ids[:, 1]].all()
        assert len(region.ids) == 14  # every boundary edge of a 3 x 4 grid

    def test_empty_region_warns(self, topo):
        with pytest.warns(UserWarning, match="empty"):
            region = define_region(topo, "nothing", "vertices in x > 100")
        assert len(region) == 0

    def test_unknown_set(self, topo):
        with pytest.raises(UnknownSetError, match="xi00"):
            define_region(topo, "bad", "vertices of set xi99")

    def test_vertex_kind(self, topo):
        region = define_region(topo, "corner", ("vertices in (x < 0.5) & (y > 1.9)", "vertex"))
        np.testing.assert_array_equal(region.ids, [0])

    def test_z_on_planar_mesh(self, topo):
        with pytest.raises(ValueError, match="z"):
            define_region(topo, "bad", "vertices in z > 0")

    def test_unknown_kind(self, topo):
        with pytest.raises(ValueError):
            define_region(topo, "bad", ("all", "edge"))

    def test_no_warning_on_nonempty(self, topo):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            define_region(topo, "Omega", "all")
