from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import qgraph
from qgraph import GraphError, GraphFormatError
from qgraph.graph_model import _lex_order
from qgraph.numformat import format_complex, parse_complex

from conftest import (
    full_line,
    interval_lead,
    lasso,
    poly_bump,
    composite,
    unitary_condition,
    whole_line_value,
)

SLOTS2 = (("a", 0), ("b", 0))
SLOTS1 = (("a", 0),)


def make_cond(a, b, slots):
    return qgraph.VertexCondition(np.array(a, dtype=complex), np.array(b, dtype=complex), slots)


class TestValidateCondition:
    def test_dirichlet_ok(self):
        report = qgraph.validate_condition(make_cond(np.eye(2), np.zeros((2, 2)), SLOTS2))
        assert report.ok

    def test_zero_matrices_rank_violation(self):
        report = qgraph.validate_condition(make_cond([[0.0]], [[0.0]], SLOTS1))
        assert not report.ok
        assert any("rank 0 < 1" in f for f in report.failures)

    def test_continuity_kirchhoff_ok(self):
        # by hand: rows (1,-1|0,0) and (0,0|1,1); (A B) has rank 2; A B* = 0
        a = [[1.0, -1.0], [0.0, 0.0]]
        b = [[0.0, 0.0], [1.0, 1.0]]
        report = qgraph.validate_condition(make_cond(a, b, SLOTS2))
        assert report.ok
        assert report.hermiticity_defect == 0.0

    def test_non_hermitian_rejected(self):
        a = [[1.0, 0.0], [0.0, 1.0]]
        b = [[0.0, 1.0], [0.0, 0.0]]  # A B* = B* not Hermitian
        report = qgraph.validate_condition(make_cond(a, b, SLOTS2))
        assert not report.ok
        assert any("Hermitian" in f for f in report.failures)

    def test_shape_mismatch_is_structural(self):
        with pytest.raises(GraphError):
            make_cond(np.eye(3), np.zeros((3, 3)), SLOTS2)

    def test_duplicate_slot_rejected(self):
        with pytest.raises(GraphError):
            make_cond(np.eye(2), np.zeros((2, 2)), (("a", 0), ("a", 0)))


class TestStandardCondition:
    def test_degree_one_is_neumann(self):
        cond = qgraph.standard_condition(SLOTS1)
        assert np.array_equal(cond.a, [[0.0]])
        assert np.array_equal(cond.b, [[1.0]])

    def test_degree_two_rows(self):
        cond = qgraph.standard_condition(SLOTS2)
        assert np.array_equal(cond.a, [[1.0, -1.0], [0.0, 0.0]])
        assert np.array_equal(cond.b, [[0.0, 0.0], [1.0, 1.0]])

    @pytest.mark.parametrize("d", range(1, 9))
    def test_admissible_for_degrees_up_to_eight(self, d):
        slots = tuple((f"e{i}", 0) for i in range(d))
        assert qgraph.validate_condition(qgraph.standard_condition(slots)).ok

    def test_degree_zero_rejected(self):
        with pytest.raises(GraphError):
            qgraph.standard_condition(())

    @pytest.mark.parametrize("d", [1, 2, 3, 5])
    def test_unitary_parametrization_admissible(self, d):
        rng = np.random.default_rng(3 + d)
        slots = tuple((f"e{i}", 0) for i in range(d))
        a, b = unitary_condition(d, rng)
        assert qgraph.validate_condition(make_cond(a, b, slots)).ok


class TestGraphValidation:
    def test_bad_length(self):
        with pytest.raises(GraphError):
            qgraph.build_graph(
                vertices={"v": "standard", "w": "dirichlet"},
                edges=[("e", "v", "w", 0.0)],
                leads=[("l", "v")],
            )

    def test_unknown_vertex(self):
        with pytest.raises(GraphError):
            qgraph.build_graph(
                vertices={"v": "standard"},
                edges=[("e", "v", "nope", 1.0)],
                leads=[("l", "v")],
            )

    def test_isolated_vertex(self):
        with pytest.raises(GraphError):
            qgraph.build_graph(
                vertices={"v": "standard", "w": "standard", "x": "standard"},
                edges=[("e", "v", "w", 1.0)],
                leads=[("l", "v")],
            )

    def test_leadless_graph_rejected(self):
        with pytest.raises(GraphError):
            qgraph.build_graph(
                vertices={"v": "dirichlet", "w": "dirichlet"},
                edges=[("e", "v", "w", 1.0)],
                leads=[],
            )

    def test_duplicate_ids_across_edges_and_leads(self):
        with pytest.raises(GraphError):
            qgraph.build_graph(
                vertices={"v": "standard", "w": "standard"},
                edges=[("x", "v", "w", 1.0)],
                leads=[("x", "v")],
            )

    def test_inadmissible_condition_reported(self):
        zero = (np.zeros((2, 2)), np.zeros((2, 2)))
        with pytest.raises(GraphError, match="rank"):
            qgraph.build_graph(
                vertices={"v": "standard", "m": zero, "w": "dirichlet"},
                edges=[("e0", "v", "m", 1.0), ("e1", "m", "w", 1.0)],
                leads=[("l", "v")],
            )


class TestNormalize:
    def test_offset_must_be_positive(self):
        g = interval_lead(1.0)
        with pytest.raises(GraphError):
            qgraph.normalize_boundary(g, 0.0)

    def test_delta_vertex_splits(self):
        # single vertex, delta-type condition (alpha u + u' = 0), one lead
        g = qgraph.build_graph(
            vertices={"v": (np.array([[2.5]]), np.array([[1.0]]))},
            edges=[],
            leads=[("l0", "v")],
        )
        assert not g.is_normalized
        ng = qgraph.normalize_boundary(g, 0.4)
        assert ng.is_normalized
        assert len(ng.edges) == 1 and ng.edges[0].length == 0.4
        assert ng.boundary_vertices == ("l0_b",)
        # old vertex keeps its condition, rewritten onto the stub slot
        cond = ng.conditions["v"]
        assert cond.edge_order == (("l0_s", 0),)
        assert cond.a[0, 0] == 2.5 and cond.b[0, 0] == 1.0

    def test_idempotent_on_normalized(self):
        g = full_line(2.0)
        ng = qgraph.normalize_boundary(g, 0.7)
        assert [e.id for e in ng.edges] == [e.id for e in g.edges]
        assert ng.boundary_vertices == g.boundary_vertices

    def test_point_with_two_leads_becomes_line(self):
        g = qgraph.build_graph(
            vertices={"p": "standard"},
            edges=[],
            leads=[("l0", "p"), ("l1", "p")],
        )
        ng = qgraph.normalize_boundary(g, 1.0)
        assert ng.is_normalized
        assert len(ng.edges) == 1
        assert set(ng.boundary_vertices) == {"l0_b", "p"}

    def test_two_offsets_same_quadratic_form(self):
        # the graph is a free line through a point; data sits past both offsets
        g = qgraph.build_graph(
            vertices={"p": "standard"},
            edges=[],
            leads=[("l0", "p"), ("l1", "p")],
        )
        lam = 1.9 + 0.55j
        values = []
        for offset in (1.0, 0.7):
            ng = qgraph.normalize_boundary(g, offset)
            # original lead coordinate t; new lead coordinate t - offset
            f = composite(
                ng,
                lead_parts={
                    "l0": poly_bump(1.2, 2.2).shifted(-offset),
                    "l1": poly_bump(1.5, 2.5, amp=0.5 - 0.25j).shifted(-offset),
                },
            )
            values.append(qgraph.solve_full(ng, f, lam).value)
        assert abs(values[0] - values[1]) <= 1e-9 * abs(values[0])

    def test_normalized_point_graph_matches_free_line_kernel(self):
        g = qgraph.build_graph(
            vertices={"p": "standard"}, edges=[], leads=[("l0", "p"), ("l1", "p")]
        )
        ng = qgraph.normalize_boundary(g, 1.0)
        lam = 2.4 + 0.8j
        f = composite(ng, lead_parts={"l0": poly_bump(1.2, 2.2).shifted(-1.0)})
        value = qgraph.solve_full(ng, f, lam).value
        # unfold by hand: lead l0 beyond p maps to y = -(t), other side y = t
        fline = poly_bump(1.2, 2.2).transformed(0.0, -1.0)
        oracle = whole_line_value(fline, lam)
        assert abs(value - oracle) <= 1e-10 * abs(oracle)


class TestConditionEquivalence:
    def test_scaled_rows_equivalent(self):
        c1 = qgraph.standard_condition(SLOTS2)
        c2 = make_cond(3.0 * np.asarray(c1.a), 3.0 * np.asarray(c1.b), SLOTS2)
        assert qgraph.conditions_equivalent(c1, c2)

    def test_different_subspace_not_equivalent(self):
        c1 = qgraph.standard_condition(SLOTS2)
        c2 = qgraph.dirichlet_condition(SLOTS2)
        assert not qgraph.conditions_equivalent(c1, c2)


GRAPH_TEXT = """
# interval with one lead
[vertex]
id = v0
condition = standard

[vertex]
id = v1
condition = general
a = [[1+0i]]
b = [[0+0i]]

[edge]
id = e0
endpoints = v0, v1
length = 3.141592653589793

[lead]
id = l0
vertex = v0
"""


class TestTextFormat:
    def test_parse_minimal_interval(self):
        g = qgraph.parse_graph(GRAPH_TEXT)
        assert g.n_boundary == 1
        assert g.is_normalized

    def test_zero_condition_rejected(self):
        bad = GRAPH_TEXT.replace("a = [[1+0i]]", "a = [[0+0i]]")
        with pytest.raises(GraphFormatError, match="rank"):
            qgraph.parse_graph(bad)

    def test_syntax_error_carries_line_number(self):
        bad = "[vertex]\nid = v0\nbogus line without equals\n"
        with pytest.raises(GraphFormatError, match="line 3"):
            qgraph.parse_graph(bad)

    def test_bad_matrix_entry_line(self):
        bad = GRAPH_TEXT.replace("b = [[0+0i]]", "b = [[zzz]]")
        with pytest.raises(GraphFormatError, match="line"):
            qgraph.parse_graph(bad)

    def test_roundtrip_identical_computation(self):
        g1 = lasso()
        g2 = qgraph.parse_graph(qgraph.format_graph(g1))
        lam = 2.31 + 0.4j
        m1 = qgraph.dtn_matrix(g1, lam).matrix
        m2 = qgraph.dtn_matrix(g2, lam).matrix
        assert np.array_equal(m1, m2)

    def test_roundtrip_after_normalization(self):
        raw = qgraph.build_graph(
            vertices={"v": "standard"},
            edges=[("c0", "v", "v", 2 * math.pi)],
            leads=[("l0", "v")],
        )
        g1 = qgraph.normalize_boundary(raw, 0.5)
        g2 = qgraph.parse_graph(qgraph.format_graph(g1))
        lam = 0.77
        assert np.array_equal(
            qgraph.dtn_matrix(g1, lam).matrix, qgraph.dtn_matrix(g2, lam).matrix
        )


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


class TestComplexTokens:
    @given(finite, finite)
    def test_roundtrip(self, re, im):
        z = complex(re, im)
        assert parse_complex(format_complex(z, sig=17)) == z

    @pytest.mark.parametrize(
        "tok,expect",
        [
            ("2", 2 + 0j),
            ("2i", 2j),
            ("-i", -1j),
            ("1e-3+2e+4i", 1e-3 + 2e4j),
            ("1.5-2.25i", 1.5 - 2.25j),
        ],
    )
    def test_examples(self, tok, expect):
        assert parse_complex(tok) == expect

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_complex("1+2")
        with pytest.raises(ValueError):
            parse_complex("")


def test_lex_order_fixes_slot_convention():
    assert _lex_order([("b", 1), ("a", 0), ("a", 1)]) == (("a", 0), ("a", 1), ("b", 1))


def test_boundary_index_sorted_by_vertex_id():
    g = full_line(2.0)
    assert g.boundary_vertices == ("v0", "v1")
    assert g.boundary_index == {"v0": 0, "v1": 1}
