"""Dirichlet-to-Neumann matrix of the compact core and related boundary data.

``dtn_matrix`` solves the interior problem once per boundary basis vector
(sharing a single factorization) and reads off normal derivatives, i.e. the
derivative at each boundary vertex taken toward the vertex along its unique
core edge.  ``dtn_via_extension`` reaches the same matrix through an explicit
extension operator and the inhomogeneous interior solve; it exists as an
independent cross-check and for tests, not as the production route.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph_model import GraphError, MetricGraph
from .interior import EdgeForcing, InteriorSolution, InteriorSystem
from .piecewise import PiecewisePoly, PolyPiece, compose_linear


@dataclass(frozen=True, eq=False)
class DtNMatrix:
    """Boundary-to-boundary response at one spectral point.

    Hermitian (up to roundoff) at real lam away from the interior spectrum;
    meromorphic in lam with poles confined to the interior spectrum.
    """

    lam: complex
    matrix: np.ndarray
    smin: float  # normalized smallest singular value of the interior system

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_defect(self) -> float:
        return float(np.linalg.norm(self.matrix - self.matrix.conj().T, 2))


@dataclass(frozen=True, eq=False)
class RobinData:
    """Boundary trace of normal derivatives induced by interior forcing."""

    lam: complex
    vector: np.ndarray


def normal_derivative(solution: InteriorSolution, graph: MetricGraph | None = None) -> np.ndarray:
    """Derivative toward each boundary vertex: +u'(len) at the far end of its
    core edge, -u'(0) at the near end."""
    g = graph if graph is not None else solution.graph
    out = np.zeros(g.n_boundary, dtype=complex)
    for v in g.boundary_vertices:
        slots = g.edge_slots(v)
        if len(slots) != 1:
            raise GraphError(
                f"boundary vertex {v!r} touches {len(slots)} core edges; "
                "normal derivative needs exactly one (normalize the graph)"
            )
        eid, end = slots[0]
        x = g.edge_map[eid].length if end == 1 else 0.0
        _, du = solution.trace(eid, x)
        out[g.boundary_index[v]] = du if end == 1 else -du
    return out


def _dtn_from_system(system: InteriorSystem) -> DtNMatrix:
    g = system.graph
    n = g.n_boundary
    cols = []
    for j in range(n):
        phi = np.zeros(n, dtype=complex)
        phi[j] = 1.0
        cols.append(normal_derivative(system.solve(phi)))
    matrix = np.column_stack(cols) if cols else np.zeros((0, 0), dtype=complex)
    return DtNMatrix(system.lam, matrix, system.smin_normalized)


def dtn_matrix(graph: MetricGraph, lam: complex) -> DtNMatrix:
    """Column j is the normal derivative of the interior solution with the
    j-th standard basis vector as boundary data.  Raises NearSingular on the
    interior spectrum."""
    graph.require_normalized()
    return _dtn_from_system(InteriorSystem(graph, lam))


def robin_data(graph: MetricGraph, lam: complex, forcing: EdgeForcing) -> RobinData:
    """Normal derivative of the zero-boundary-data interior solve with the
    given forcing; linear in the forcing."""
    graph.require_normalized()
    system = InteriorSystem(graph, lam)
    vec = normal_derivative(system.solve(None, forcing))
    return RobinData(system.lam, vec)


def dtn_with_robin(graph: MetricGraph, lam: complex,
                   forcing: EdgeForcing | None) -> tuple[DtNMatrix, np.ndarray]:
    """Both boundary objects from one factorization of the interior system."""
    graph.require_normalized()
    system = InteriorSystem(graph, lam)
    dtn = _dtn_from_system(system)
    if forcing is None or forcing.is_zero:
        g_vec = np.zeros(graph.n_boundary, dtype=complex)
    else:
        g_vec = normal_derivative(system.solve(None, forcing))
    return dtn, g_vec


# -- extension-operator route --------------------------------------------------

# Quintic bump 1 - S(t/r) with S = 10 t^3 - 15 t^4 + 6 t^5: value 1 and two
# vanishing derivatives at t = 0; value and two derivatives vanish at t = r.


def _profile_coeffs(radius: float) -> tuple[complex, ...]:
    r = float(radius)
    return (1.0, 0.0, 0.0, -10.0 / r**3, 15.0 / r**4, -6.0 / r**5)


@dataclass(frozen=True, eq=False)
class ExtensionProfile:
    """One boundary vertex's extension bump, expressed on its core edge."""

    vertex: str
    edge_id: str
    end: int
    radius: float
    poly: PiecewisePoly  # in the edge coordinate


def extension_profiles(graph: MetricGraph) -> dict[str, ExtensionProfile]:
    graph.require_normalized()
    radius = graph.shortest_edge_length / 2.0
    profiles = {}
    for v in graph.boundary_vertices:
        eid, end = graph.edge_slots(v)[0]
        length = graph.edge_map[eid].length
        coeffs = _profile_coeffs(radius)
        if end == 0:
            piece = PolyPiece(0.0, radius, coeffs)
        else:
            piece = PolyPiece(length - radius, length,
                              compose_linear(coeffs, length, -1.0))
        profiles[v] = ExtensionProfile(v, eid, end, radius, PiecewisePoly([piece]))
    return profiles


def dtn_via_extension(graph: MetricGraph, lam: complex, phi) -> np.ndarray:
    """Apply the boundary response to ``phi`` through the extension operator.

    Builds w = (d^2/dx^2 + lam) E(phi) as polynomial data, solves the interior
    problem with zero boundary values and forcing w, and takes normal
    derivatives (the extension itself contributes none).  Agrees with
    ``dtn_matrix(graph, lam) @ phi`` up to quadrature accuracy.
    """
    graph.require_normalized()
    phi_vec = np.asarray(phi, dtype=complex).reshape(graph.n_boundary)
    pieces_by_edge: dict[str, list[PolyPiece]] = {}
    for v, profile in extension_profiles(graph).items():
        weight = phi_vec[graph.boundary_index[v]]
        if weight == 0:
            continue
        for piece in profile.poly.pieces:
            base = np.asarray(piece.coeffs, dtype=complex)
            second = np.polynomial.polynomial.polyder(base, 2)
            coeffs = complex(lam) * base
            coeffs[: second.size] += second
            pieces_by_edge.setdefault(profile.edge_id, []).append(
                PolyPiece(piece.lo, piece.hi, tuple(weight * coeffs))
            )
    forcing = EdgeForcing(
        graph, {eid: PiecewisePoly(ps) for eid, ps in pieces_by_edge.items()}
    )
    system = InteriorSystem(graph, lam)
    return normal_derivative(system.solve(None, forcing))
