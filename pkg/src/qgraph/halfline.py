"""Explicit Neumann resolvent on the half-line and the shared sqrt branch.

All lead computations use k = sqrt(lam) with the principal branch (cut on the
negative reals), so Im k > 0 in the upper half-plane and k continues
analytically through the positive reals into the lower half-plane with
Re k > 0, Im k < 0.  The resolvent of -d^2/dx^2 on [0, inf) with the Neumann
condition at the origin acts on a compactly supported f as

    (r(lam) f)(x) = (i / 2k) * int_0^inf [e^{ik(x+s)} + e^{ik|x-s|}] f(s) ds,

which for fixed compactly supported f is entire in k, so the same expression
evaluates the analytic continuation at real and lower-half-plane lam.

Points on the cut (-inf, 0] and the ball |lam| < LAMBDA_FLOOR around the
threshold are refused everywhere in this module.
"""

from __future__ import annotations

import cmath
from typing import Callable, Mapping

import numpy as np

from .graph_model import GraphError, MetricGraph
from .piecewise import PiecewisePoly, osc_panel_limit, poly_quad_nodes

LAMBDA_FLOOR = 1e-6


class ThresholdError(ValueError):
    """Spectral parameter on the branch cut or inside the threshold ball."""

    def __init__(self, lam: complex, reason: str):
        self.lam = complex(lam)
        super().__init__(f"lam={lam} rejected: {reason}")


def branch_k(lam: complex) -> complex:
    """Principal square root of lam; the branch shared by all lead formulas."""
    lam = complex(lam)
    if abs(lam) < LAMBDA_FLOOR:
        raise ThresholdError(lam, f"|lam| < {LAMBDA_FLOOR} (threshold region)")
    if lam.imag == 0.0 and lam.real <= 0.0:
        raise ThresholdError(lam, "on the branch cut (-inf, 0]")
    return cmath.sqrt(lam)


class LeadFunction:
    """Compactly supported data on the leads, one polynomial per lead.

    Components are aligned with the boundary index (sorted boundary vertex
    ids); a missing component is identically zero.
    """

    def __init__(self, graph: MetricGraph, per_lead: Mapping[str, PiecewisePoly] = ()):
        graph.require_normalized()
        self.graph = graph
        by_index: list[PiecewisePoly] = [PiecewisePoly.zero()] * graph.n_boundary
        for lead_id, poly in dict(per_lead).items():
            if lead_id not in graph.lead_map:
                raise GraphError(f"lead function references unknown lead {lead_id!r}")
            support = poly.support
            if support is not None and support[0] < -1e-12:
                raise GraphError(f"lead {lead_id!r} data starts at {support[0]} < 0")
            vertex = graph.lead_map[lead_id].vertex
            by_index[graph.boundary_index[vertex]] = poly
        self.components = tuple(by_index)

    @classmethod
    def zero(cls, graph: MetricGraph) -> LeadFunction:
        return cls(graph, {})

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def is_zero(self) -> bool:
        return all(p.is_zero for p in self.components)

    @property
    def x_max(self) -> float:
        return max((p.x_max for p in self.components), default=0.0)

    def component(self, index: int) -> PiecewisePoly:
        return self.components[index]

    def scaled(self, factor: complex) -> LeadFunction:
        out = LeadFunction.zero(self.graph)
        out.components = tuple(p.scaled(factor) for p in self.components)
        return out


def _component_quad(poly: PiecewisePoly, k: complex, split: float | None):
    panel = osc_panel_limit(abs(k))
    split_at = () if split is None else (split,)
    return poly_quad_nodes(poly, panel, split_at)


def _rf_component(poly: PiecewisePoly, k: complex, x: float) -> complex:
    if poly.is_zero:
        return 0.0 + 0.0j
    ts, ws = _component_quad(poly, k, x)
    fv = poly(ts)
    kern = np.exp(1j * k * (x + ts)) + np.exp(1j * k * np.abs(x - ts))
    return complex(1j / (2.0 * k) * np.sum(ws * fv * kern))


def _rf_deriv_component(poly: PiecewisePoly, k: complex, x: float) -> complex:
    if poly.is_zero:
        return 0.0 + 0.0j
    ts, ws = _component_quad(poly, k, x)
    fv = poly(ts)
    sign = np.where(ts < x, 1.0, -1.0)  # d/dx e^{ik|x-s|} = ik sgn(x-s) e^{ik|x-s|}
    kern = 1j * k * (np.exp(1j * k * (x + ts)) + sign * np.exp(1j * k * np.abs(x - ts)))
    return complex(1j / (2.0 * k) * np.sum(ws * fv * kern))


def neumann_resolvent_eval(f: LeadFunction, lam: complex, x) -> np.ndarray:
    """(r(lam) f)(x) componentwise; ``x`` a scalar or 1-d array.

    Returns shape (n,) for scalar x, (n, m) for an array of m points.
    """
    k = branch_k(lam)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros((f.n, xs.size), dtype=complex)
    for i, poly in enumerate(f.components):
        if poly.is_zero:
            continue
        for j, xv in enumerate(xs):
            out[i, j] = _rf_component(poly, k, float(xv))
    if np.ndim(x) == 0:
        return out[:, 0]
    return out


def neumann_derivative_at_zero(f: LeadFunction, lam: complex) -> np.ndarray:
    """(r(lam) f)'(0), which vanishes by the Neumann property; kept as a
    self-test of the kernel differentiation."""
    k = branch_k(lam)
    out = np.zeros(f.n, dtype=complex)
    for i, poly in enumerate(f.components):
        if not poly.is_zero:
            out[i] = _rf_deriv_component(poly, k, 0.0)
    return out


def outgoing_coefficient(f: LeadFunction, lam: complex) -> np.ndarray:
    """C with (r(lam) f)(x) = C e^{ikx} beyond the support of f.

    For x past the support both kernel terms share the factor e^{ikx}:
    C = (i/2k) int (e^{iks} + e^{-iks}) f(s) ds.
    """
    k = branch_k(lam)
    out = np.zeros(f.n, dtype=complex)
    for i, poly in enumerate(f.components):
        if poly.is_zero:
            continue
        ts, ws = _component_quad(poly, k, None)
        fv = poly(ts)
        out[i] = 1j / (2.0 * k) * np.sum(
            ws * fv * (np.exp(1j * k * ts) + np.exp(-1j * k * ts))
        )
    return out


def lead_inner_product(
    u_eval: Callable[[int, np.ndarray], np.ndarray],
    f: LeadFunction,
    *,
    k_mag: float = 0.0,
) -> complex:
    """sum_leads int u_i(x) conj(f_i(x)) dx with conjugation on the second
    argument.  ``u_eval(i, xs)`` returns component i of u at the points xs;
    ``k_mag`` sets the quadrature panel size for oscillatory u.
    """
    total = 0.0 + 0.0j
    panel = osc_panel_limit(k_mag)
    for i, poly in enumerate(f.components):
        if poly.is_zero:
            continue
        xs, ws = poly_quad_nodes(poly, panel)
        if xs.size == 0:
            continue
        uv = np.asarray(u_eval(i, xs))
        total += np.sum(ws * uv * np.conj(poly(xs)))
    return complex(total)
