"""Shared graph builders, function builders and closed-form oracles."""

from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

import qgraph
from qgraph.piecewise import PiecewisePoly, PolyPiece, osc_panel_limit, poly_quad_nodes

TWO_PI = 2.0 * math.pi


# -- graph builders ------------------------------------------------------------


def interval_lead(ell: float = math.pi, far: str = "dirichlet") -> qgraph.MetricGraph:
    """One boundary vertex with a lead at x=0, condition ``far`` at x=ell."""
    return qgraph.build_graph(
        vertices={"v0": "standard", "v1": far},
        edges=[("e0", "v0", "v1", ell)],
        leads=[("l0", "v0")],
    )


def full_line(ell: float = 2.0) -> qgraph.MetricGraph:
    """Edge of length ell with a standard vertex and a lead at each end."""
    return qgraph.build_graph(
        vertices={"v0": "standard", "v1": "standard"},
        edges=[("e0", "v0", "v1", ell)],
        leads=[("l0", "v0"), ("l1", "v1")],
    )


def three_star(lengths=(1.0, 1.0, 1.0)) -> qgraph.MetricGraph:
    edges = [(f"e{i}", "c", f"b{i}", ln) for i, ln in enumerate(lengths, start=1)]
    vertices = {"c": "standard"}
    leads = []
    for i in range(1, len(lengths) + 1):
        vertices[f"b{i}"] = "standard"
        leads.append((f"l{i}", f"b{i}"))
    return qgraph.build_graph(vertices=vertices, edges=edges, leads=leads)


def lasso(loop_len: float = TWO_PI, stub: float = 0.5) -> qgraph.MetricGraph:
    """Normalized lasso: loop at v, stub v-w, lead at w."""
    return qgraph.build_graph(
        vertices={"v": "standard", "w": "standard"},
        edges=[("c0", "v", "v", loop_len), ("s0", "v", "w", stub)],
        leads=[("l0", "w")],
    )


def lasso_raw(loop_len: float = TWO_PI) -> qgraph.MetricGraph:
    """Loop with the lead attached directly at the (degree 3) loop vertex."""
    return qgraph.build_graph(
        vertices={"v": "standard"},
        edges=[("c0", "v", "v", loop_len)],
        leads=[("l0", "v")],
    )


def asym_two_lead() -> qgraph.MetricGraph:
    """Two leads joined through an asymmetric core with a dangling edge."""
    return qgraph.build_graph(
        vertices={
            "b0": "standard",
            "b1": "standard",
            "m": "standard",
            "d": "neumann",
        },
        edges=[
            ("ea", "b0", "m", 0.7),
            ("eb", "m", "b1", 1.3),
            ("ec", "m", "d", 0.9),
        ],
        leads=[("l0", "b0"), ("l1", "b1")],
    )


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def unitary_condition(d: int, rng: np.random.Generator):
    """Admissible pair (U - I, i(U + I)) for Haar-ish unitary U."""
    u = random_unitary(d, rng)
    return u - np.eye(d), 1j * (u + np.eye(d))


def random_admissible_graph(seed: int = 11) -> qgraph.MetricGraph:
    """Five edges including a loop and a parallel pair, general conditions inside."""
    rng = np.random.default_rng(seed)
    return qgraph.build_graph(
        vertices={
            "b0": "standard",
            "b1": "standard",
            "i0": unitary_condition(3, rng),
            "i1": unitary_condition(5, rng),
        },
        edges=[
            ("e0", "b0", "i0", 0.9),
            ("e1", "b1", "i1", 1.1),
            ("e2", "i0", "i1", 0.75),
            ("e3", "i0", "i1", 1.35),
            ("e4", "i1", "i1", 1.7),
        ],
        leads=[("l0", "b0"), ("l1", "b1")],
    )


# -- function builders ---------------------------------------------------------


def poly_bump(a: float, b: float, amp: complex = 1.0) -> PiecewisePoly:
    """amp * (x - a)^2 (b - x)^2 on [a, b]: compactly supported, C^1."""
    p = np.polynomial.Polynomial([-a, 1.0]) ** 2 * np.polynomial.Polynomial([b, -1.0]) ** 2
    return PiecewisePoly([PolyPiece(a, b, tuple(complex(amp) * c for c in p.coef))])


def pieces(*specs) -> PiecewisePoly:
    return PiecewisePoly([PolyPiece(a, b, tuple(complex(c) for c in cs)) for a, b, cs in specs])


def composite(graph, edge_parts=None, lead_parts=None) -> qgraph.CompositeFunction:
    forcing = qgraph.EdgeForcing(graph, edge_parts or {})
    lead = qgraph.LeadFunction(graph, lead_parts or {})
    return qgraph.CompositeFunction(forcing, lead)


def loop_overlap_function(graph) -> qgraph.CompositeFunction:
    """Forcing on the lasso loop with nonzero overlap against sin(n x)."""
    p = (
        np.polynomial.Polynomial([0.0, 1.0])
        * np.polynomial.Polynomial([TWO_PI, -1.0])
        * np.polynomial.Polynomial([-math.pi, 1.0])
    )
    poly = PiecewisePoly([PolyPiece(0.0, TWO_PI, tuple(0.05 * complex(c) for c in p.coef))])
    return composite(graph, edge_parts={"c0": poly})


# -- closed forms ---------------------------------------------------------------


def entire_c(x: float, lam: complex) -> complex:
    c, _, _, _ = qgraph.eval_fundamental(x, lam)
    return c


def entire_s(x: float, lam: complex) -> complex:
    _, _, s, _ = qgraph.eval_fundamental(x, lam)
    return s


def interval_dtn_1x1(lam: complex, ell: float) -> complex:
    """sqrt(lam) cot(sqrt(lam) ell) in branch-free form c(ell)/s(ell)."""
    return entire_c(ell, lam) / entire_s(ell, lam)


def interval_dtn_2x2(lam: complex, ell: float) -> np.ndarray:
    s = entire_s(ell, lam)
    c = entire_c(ell, lam)
    return np.array([[c / s, -1.0 / s], [-1.0 / s, c / s]], dtype=complex)


def exp_poly_integral(coeffs, a: float, b: float, k: complex) -> complex:
    """Exact int_a^b p(x) e^{ikx} dx by the integration-by-parts recurrence."""
    ik = 1j * k
    vals = []
    i_prev = (cmath.exp(ik * b) - cmath.exp(ik * a)) / ik
    vals.append(i_prev)
    for m in range(1, len(coeffs)):
        i_m = (b**m * cmath.exp(ik * b) - a**m * cmath.exp(ik * a)) / ik - (m / ik) * vals[m - 1]
        vals.append(i_m)
    return sum(complex(c) * v for c, v in zip(coeffs, vals))


def unfold_full_line(f: qgraph.CompositeFunction, graph) -> PiecewisePoly:
    """Lay the full-line graph out on the real axis.

    Lead at v0 maps to y = -t, the edge to y = x, the lead at v1 to
    y = ell + t, matching the builder's edge orientation v0 -> v1.
    """
    ell = graph.edge_map["e0"].length
    i0 = graph.boundary_index["v0"]
    i1 = graph.boundary_index["v1"]
    parts = []
    lead0 = f.lead.component(i0)
    if not lead0.is_zero:
        parts.extend(lead0.transformed(0.0, -1.0).pieces)
    parts.extend(f.forcing.component("e0").pieces)
    lead1 = f.lead.component(i1)
    if not lead1.is_zero:
        parts.extend(lead1.shifted(ell).pieces)
    return PiecewisePoly(parts)


def whole_line_value(fline: PiecewisePoly, lam: complex) -> complex:
    """(i/2k) iint e^{ik|y-s|} f(s) conj(f(y)) ds dy by iterated quadrature."""
    k = cmath.sqrt(lam)
    panel = osc_panel_limit(abs(k))
    ys, wy = poly_quad_nodes(fline, panel)
    total = 0.0 + 0.0j
    for y, w in zip(ys, wy):
        xs, wx = poly_quad_nodes(fline, panel, split_at=(float(y),))
        inner = np.sum(wx * fline(xs) * np.exp(1j * k * np.abs(y - xs)))
        total += w * inner * np.conj(fline(y))
    return complex(1j / (2.0 * k) * total)


def regular_real_lambdas(graph, window, count, *, min_dist=5e-3, lo_guard=None):
    """Deterministic real spectral points in the window, away from the interior
    spectrum."""
    lo, hi = window
    hits = qgraph.find_eigenvalues(graph, qgraph.ScanConfig(lo - 0.2, hi + 0.2))
    bad = [h.lam for h in hits] + list(lo_guard or [])
    out = []
    grid = np.linspace(lo, hi, 4 * count)
    for x in grid:
        if all(abs(x - b) >= min_dist for b in bad):
            out.append(float(x))
        if len(out) == count:
            break
    assert len(out) == count, "window too crowded to produce regular samples"
    return out


@pytest.fixture(scope="session")
def interval_pi():
    return interval_lead(math.pi)


@pytest.fixture(scope="session")
def fullline():
    return full_line(2.0)


@pytest.fixture(scope="session")
def star3():
    return three_star()


@pytest.fixture(scope="session")
def lasso_graph():
    return lasso()
