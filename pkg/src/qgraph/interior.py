"""Exact edgewise solutions on the compact core.

On each finite edge the homogeneous solutions of ``-u'' = lam u`` are spanned
by the pair

    c(x, lam) = cos(w x),     s(x, lam) = sin(w x) / w,     w^2 = lam,

which is entire in lam (both functions are even in w), so nothing here ever
touches a square-root branch cut.  Derivatives close under the pair:
c' = -lam * s and s' = c, hence the Wronskian c s' - c' s is identically 1.

The interior boundary-value problem (vertex conditions away from the boundary
set, prescribed values on it) becomes a small dense linear system in the
per-edge coefficients (alpha_e, beta_e) of u_e = alpha c + beta s + u_p,
where u_p is the particular solution with zero Cauchy data at x = 0.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np
import scipy.linalg

from .graph_model import GraphError, MetricGraph
from .piecewise import PiecewisePoly, osc_panel_limit, panel_nodes, poly_quad_nodes

#: Below this bound on |lam| x^2 the truncated power series is used.
SERIES_WINDOW = 1e-3
_SERIES_TERMS = 12

#: Relative smallest-singular-value threshold signalling lam in the interior
#: spectrum.
SING_TOL = 1e-8

_COS_COEFFS = np.array(
    [(-1.0) ** k / math.factorial(2 * k) for k in range(_SERIES_TERMS)]
)
_SINC_COEFFS = np.array(
    [(-1.0) ** k / math.factorial(2 * k + 1) for k in range(_SERIES_TERMS)]
)


class NearSingular(ArithmeticError):
    """The interior system is singular at this spectral point.

    Raised when the smallest singular value of the collocation matrix drops
    below ``SING_TOL`` times its norm, i.e. lam is (numerically) an interior
    eigenvalue.
    """

    def __init__(self, lam: complex, smin: float, norm: float):
        self.lam = complex(lam)
        self.smin = float(smin)
        self.norm = float(norm)
        super().__init__(
            f"interior system singular at lam={lam}: smin={smin:.3e}, norm={norm:.3e}"
        )


def _horner(coeffs: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = np.full(w.shape, coeffs[-1], dtype=complex)
    for c in coeffs[-2::-1]:
        out = out * w + c
    return out


def eval_fundamental(x, lam: complex):
    """Values (c, c', s, s') of the entire pair at coordinate(s) ``x``.

    ``x`` may be a scalar or an ndarray; ``lam`` any complex number.  Near
    lam x^2 = 0 a truncated Taylor series avoids the 0/0 in sin(w x)/w.
    """
    lam = complex(lam)
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs)
    w = lam * xs * xs
    c = np.empty(xs.shape, dtype=complex)
    s = np.empty(xs.shape, dtype=complex)
    small = np.abs(w) < SERIES_WINDOW
    if np.any(small):
        ws = w[small]
        c[small] = _horner(_COS_COEFFS, ws)
        s[small] = xs[small] * _horner(_SINC_COEFFS, ws)
    big = ~small
    if np.any(big):
        om = np.sqrt(complex(lam))  # any branch: c, s are even in om
        z = om * xs[big]
        c[big] = np.cos(z)
        s[big] = np.sin(z) / om
    cp = -lam * s
    sp = c
    if scalar:
        return complex(c[0]), complex(cp[0]), complex(s[0]), complex(sp[0])
    return c, cp, s, sp


class EdgeForcing:
    """Per-edge right-hand side, each component a piecewise polynomial."""

    def __init__(self, graph: MetricGraph, components: Mapping[str, PiecewisePoly] = ()):
        self.graph = graph
        comps: dict[str, PiecewisePoly] = {}
        for eid, poly in dict(components).items():
            if eid not in graph.edge_map:
                raise GraphError(f"forcing references unknown edge {eid!r}")
            support = poly.support
            if support is not None:
                length = graph.edge_map[eid].length
                if support[0] < -1e-12 or support[1] > length + 1e-12:
                    raise GraphError(
                        f"forcing on edge {eid!r} supported on {support}, "
                        f"outside [0, {length}]"
                    )
            if not poly.is_zero:
                comps[eid] = poly
        self.components = comps

    @classmethod
    def zero(cls, graph: MetricGraph) -> EdgeForcing:
        return cls(graph, {})

    @property
    def is_zero(self) -> bool:
        return not self.components

    def component(self, edge_id: str) -> PiecewisePoly:
        return self.components.get(edge_id, PiecewisePoly.zero())

    def scaled(self, factor: complex) -> EdgeForcing:
        return EdgeForcing(
            self.graph, {eid: p.scaled(factor) for eid, p in self.components.items()}
        )


class ParticularSolution:
    """u_p(x) = -int_0^x s(x - t, lam) f(t) dt, so that -u_p'' - lam u_p = f
    with u_p(0) = u_p'(0) = 0."""

    def __init__(self, forcing: PiecewisePoly, lam: complex):
        self.forcing = forcing
        self.lam = complex(lam)
        self._panel = osc_panel_limit(math.sqrt(abs(lam)))

    def eval(self, x: float) -> tuple[complex, complex]:
        """Return (u_p(x), u_p'(x))."""
        x = float(x)
        if x <= 0.0 or self.forcing.is_zero:
            return 0.0 + 0.0j, 0.0 + 0.0j
        u = 0.0 + 0.0j
        du = 0.0 + 0.0j
        for piece in self.forcing.pieces:
            lo, hi = piece.lo, min(piece.hi, x)
            if hi <= lo:
                continue
            ts, ws = panel_nodes(lo, hi, self._panel)
            fv = piece(ts)
            c, _, s, _ = eval_fundamental(x - ts, self.lam)
            u -= np.sum(ws * s * fv)
            du -= np.sum(ws * c * fv)
        return complex(u), complex(du)

    def eval_many(self, xs) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized evaluation via cumulative moments.

        The addition formula s(x - t) = s(x) c(t) - c(x) s(t) turns the
        convolution into u_p(x) = -s(x) C(x) + c(x) S(x) with the cumulative
        integrals C, S of c(t) f(t) and s(t) f(t); each inter-point segment is
        integrated once.
        """
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        order = np.argsort(xs, kind="stable")
        c_cum = np.zeros(xs.size, dtype=complex)
        s_cum = np.zeros(xs.size, dtype=complex)
        c_acc = 0.0 + 0.0j
        s_acc = 0.0 + 0.0j
        prev = 0.0
        for pos in order:
            x = xs[pos]
            if not self.forcing.is_zero and x > prev:
                for piece in self.forcing.pieces:
                    lo, hi = max(piece.lo, prev), min(piece.hi, x)
                    if hi <= lo:
                        continue
                    ts, ws = panel_nodes(lo, hi, self._panel)
                    fv = piece(ts)
                    cc, _, ss, _ = eval_fundamental(ts, self.lam)
                    c_acc += np.sum(ws * cc * fv)
                    s_acc += np.sum(ws * ss * fv)
                prev = x
            c_cum[pos] = c_acc
            s_cum[pos] = s_acc
        cx, _, sx, _ = eval_fundamental(xs, self.lam)
        u = -sx * c_cum + cx * s_cum
        du = -cx * c_cum - self.lam * sx * s_cum
        return u, du


class InteriorSystem:
    """Collocation system for the interior problem at one spectral point.

    Unknowns are (alpha_e, beta_e) per finite edge.  Rows are the vertex
    conditions at non-boundary vertices plus one prescribed-value row per
    finite-edge slot at each boundary vertex; the count always equals twice
    the number of finite edges.  The matrix is independent of the boundary
    data and forcing, so one factorization serves many right-hand sides.
    """

    def __init__(self, graph: MetricGraph, lam: complex):
        self.graph = graph
        self.lam = complex(lam)
        self.edge_ids = tuple(e.id for e in graph.edges)
        self._col = {eid: 2 * i for i, eid in enumerate(self.edge_ids)}
        self._fund = {
            e.id: eval_fundamental(e.length, self.lam) for e in graph.edges
        }
        self.matrix = self._assemble_matrix()
        self.svals = np.linalg.svd(self.matrix, compute_uv=False)
        self.norm = float(self.svals[0]) if self.svals.size else 0.0
        self._lu = None

    @property
    def size(self) -> int:
        return 2 * len(self.edge_ids)

    @property
    def smin(self) -> float:
        return float(self.svals[-1]) if self.svals.size else 0.0

    @property
    def smin_normalized(self) -> float:
        return self.smin / self.norm if self.norm > 0 else 0.0

    def _slot_coeff_rows(self, eid: str, end: int):
        """(value, outgoing derivative) coefficient pairs for (alpha, beta)."""
        if end == 0:
            return (1.0 + 0j, 0.0 + 0j), (0.0 + 0j, 1.0 + 0j)
        c, cp, s, sp = self._fund[eid]
        return (c, s), (-cp, -sp)

    def _assemble_matrix(self) -> np.ndarray:
        g = self.graph
        m = np.zeros((self.size, self.size), dtype=complex)
        boundary = set(g.boundary_vertices)
        row = 0
        for v in g.vertex_ids:
            if v in boundary:
                continue
            cond = g.conditions[v]
            d = cond.degree
            for j, (eid, end) in enumerate(cond.edge_order):
                val, der = self._slot_coeff_rows(eid, end)
                col = self._col[eid]
                for comp in range(2):
                    m[row:row + d, col + comp] += (
                        cond.a[:, j] * val[comp] + cond.b[:, j] * der[comp]
                    )
            row += d
        for v in g.boundary_vertices:
            for eid, end in g.edge_slots(v):
                val, _ = self._slot_coeff_rows(eid, end)
                col = self._col[eid]
                m[row, col] = val[0]
                m[row, col + 1] = val[1]
                row += 1
        if row != self.size:
            raise GraphError(
                f"interior system is not square: {row} rows for {self.size} unknowns"
            )
        return m

    def _particulars(self, forcing: EdgeForcing | None) -> dict[str, ParticularSolution]:
        if forcing is None or forcing.is_zero:
            return {}
        return {
            eid: ParticularSolution(poly, self.lam)
            for eid, poly in forcing.components.items()
        }

    def rhs(self, phi, forcing: EdgeForcing | None = None) -> np.ndarray:
        g = self.graph
        n = g.n_boundary
        if phi is None:
            phi_vec = np.zeros(n, dtype=complex)
        else:
            phi_vec = np.asarray(phi, dtype=complex).reshape(n)
        particulars = self._particulars(forcing)

        def endpoint_data(eid: str, end: int):
            if end == 0 or eid not in particulars:
                return 0.0 + 0j, 0.0 + 0j
            up, dup = particulars[eid].eval(g.edge_map[eid].length)
            return up, -dup  # outgoing derivative at the x = len end

        rhs = np.zeros(self.size, dtype=complex)
        boundary = set(g.boundary_vertices)
        row = 0
        for v in g.vertex_ids:
            if v in boundary:
                continue
            cond = g.conditions[v]
            d = cond.degree
            for j, (eid, end) in enumerate(cond.edge_order):
                up, dup_out = endpoint_data(eid, end)
                rhs[row:row + d] -= cond.a[:, j] * up + cond.b[:, j] * dup_out
            row += d
        for v in g.boundary_vertices:
            i = g.boundary_index[v]
            for eid, end in g.edge_slots(v):
                up, _ = endpoint_data(eid, end)
                rhs[row] = phi_vec[i] - up
                row += 1
        return rhs

    def solve(self, phi=None, forcing: EdgeForcing | None = None) -> "InteriorSolution":
        if self.smin < SING_TOL * self.norm:
            raise NearSingular(self.lam, self.smin, self.norm)
        if self._lu is None:
            self._lu = scipy.linalg.lu_factor(self.matrix)
        b = self.rhs(phi, forcing)
        coeffs = scipy.linalg.lu_solve(self._lu, b)
        residual = float(np.linalg.norm(self.matrix @ coeffs - b))
        return InteriorSolution(self, coeffs, forcing, residual)

    def null_vectors(self, tol: float) -> list[np.ndarray]:
        """Right singular vectors whose singular value is below tol * norm."""
        _, svals, vh = np.linalg.svd(self.matrix)
        return [vh[i].conj() for i in range(len(svals)) if svals[i] < tol * self.norm]


class InteriorSolution:
    """Edgewise representation u_e = alpha_e c + beta_e s + u_p,e."""

    def __init__(self, system: InteriorSystem, coeffs: np.ndarray,
                 forcing: EdgeForcing | None, residual: float):
        self.graph = system.graph
        self.lam = system.lam
        self._col = system._col
        self.coeff_vector = np.asarray(coeffs, dtype=complex)
        self.forcing = forcing
        self._particulars = system._particulars(forcing)
        self.residual = residual

    def coefficients(self, edge_id: str) -> tuple[complex, complex]:
        col = self._col[edge_id]
        return complex(self.coeff_vector[col]), complex(self.coeff_vector[col + 1])

    def trace(self, edge_id: str, x: float) -> tuple[complex, complex]:
        """(u, u') at coordinate x on the given edge."""
        length = self.graph.edge_map[edge_id].length
        if x < -1e-12 or x > length + 1e-12:
            raise ValueError(f"x={x} outside [0, {length}] on edge {edge_id!r}")
        alpha, beta = self.coefficients(edge_id)
        c, cp, s, sp = eval_fundamental(x, self.lam)
        u = alpha * c + beta * s
        du = alpha * cp + beta * sp
        if edge_id in self._particulars:
            up, dup = self._particulars[edge_id].eval(x)
            u += up
            du += dup
        return u, du

    def trace_many(self, edge_id: str, xs) -> tuple[np.ndarray, np.ndarray]:
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        alpha, beta = self.coefficients(edge_id)
        c, cp, s, sp = eval_fundamental(xs, self.lam)
        u = alpha * c + beta * s
        du = alpha * cp + beta * sp
        if edge_id in self._particulars:
            up, dup = self._particulars[edge_id].eval_many(xs)
            u = u + up
            du = du + dup
        return u, du

    def boundary_values(self) -> np.ndarray:
        """Values at the boundary vertices, one finite-edge slot each."""
        g = self.graph
        out = np.zeros(g.n_boundary, dtype=complex)
        for v in g.boundary_vertices:
            slots = g.edge_slots(v)
            eid, end = slots[0]
            x = g.edge_map[eid].length if end == 1 else 0.0
            out[g.boundary_index[v]], _ = self.trace(eid, x)
        return out

    def inner_product_with_forcing(self, forcing: EdgeForcing, k_mag: float) -> complex:
        """int_core u(x) conj(f(x)) dx over all edges carrying forcing."""
        total = 0.0 + 0.0j
        panel = osc_panel_limit(k_mag)
        for eid, poly in forcing.components.items():
            xs, ws = poly_quad_nodes(poly, panel)
            if xs.size == 0:
                continue
            u, _ = self.trace_many(eid, xs)
            total += np.sum(ws * u * np.conj(poly(xs)))
        return complex(total)


def assemble_interior(graph: MetricGraph, lam: complex, phi=None,
                      forcing: EdgeForcing | None = None) -> tuple[np.ndarray, np.ndarray]:
    """The collocation matrix and right-hand side at one spectral point."""
    system = InteriorSystem(graph, lam)
    return system.matrix, system.rhs(phi, forcing)


def solve_interior(graph: MetricGraph, lam: complex, phi=None,
                   forcing: EdgeForcing | None = None) -> InteriorSolution:
    """Solve the interior problem; raises NearSingular on the interior spectrum."""
    return InteriorSystem(graph, lam).solve(phi, forcing)


def trace(solution: InteriorSolution, edge_id: str, x: float) -> tuple[complex, complex]:
    return solution.trace(edge_id, x)
