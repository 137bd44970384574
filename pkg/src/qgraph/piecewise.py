"""Piecewise polynomials and panel Gauss-Legendre quadrature.

Forcing terms on finite edges and compactly supported data on leads are both
stored as lists of polynomial pieces with complex coefficients (low degree
first, in the global edge coordinate).  Quadrature panels are capped at a
fraction of the local oscillation wavelength so that order-12 Gauss-Legendre
resolves integrands like ``poly(x) * exp(i k x)`` to ~1e-12 for |k| <= 30.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

GAUSS_ORDER = 12
MAX_DEGREE = 10
_OVERLAP_TOL = 1e-12

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_ORDER)


def osc_panel_limit(k_mag: float) -> float:
    """Largest admissible panel length for oscillation scale |k|."""
    return math.pi / (4.0 * (1.0 + float(k_mag)))


def compose_linear(coeffs: Sequence[complex], a: float, b: float) -> tuple[complex, ...]:
    """Coefficients of p(a + b*x) given the coefficients of p."""
    poly = np.polynomial.Polynomial(np.asarray(coeffs, dtype=complex))
    inner = np.polynomial.Polynomial([a, b])
    out = poly(inner)
    coef = np.atleast_1d(np.asarray(out.coef, dtype=complex))
    return tuple(coef)


@dataclass(frozen=True)
class PolyPiece:
    """One polynomial piece on [lo, hi], coefficients low-to-high in x."""

    lo: float
    hi: float
    coeffs: tuple[complex, ...]

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"piece [{self.lo}, {self.hi}] has non-positive length")
        if len(self.coeffs) == 0:
            raise ValueError("piece needs at least one coefficient")
        if len(self.coeffs) - 1 > MAX_DEGREE:
            raise ValueError(f"piece degree {len(self.coeffs) - 1} exceeds {MAX_DEGREE}")
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, np.asarray(self.coeffs))

    def derivative(self) -> PolyPiece:
        der = np.polynomial.polynomial.polyder(np.asarray(self.coeffs))
        if der.size == 0:
            der = np.zeros(1, dtype=complex)
        return PolyPiece(self.lo, self.hi, tuple(der))

    def conjugate(self) -> PolyPiece:
        return PolyPiece(self.lo, self.hi, tuple(np.conj(self.coeffs)))


class PiecewisePoly:
    """Union of non-overlapping polynomial pieces; identically zero elsewhere."""

    __slots__ = ("pieces",)

    def __init__(self, pieces: Iterable[PolyPiece] = ()):
        ordered = tuple(sorted(pieces, key=lambda p: (p.lo, p.hi)))
        for prev, nxt in zip(ordered, ordered[1:]):
            if nxt.lo < prev.hi - _OVERLAP_TOL:
                raise ValueError(
                    f"pieces [{prev.lo}, {prev.hi}] and [{nxt.lo}, {nxt.hi}] overlap"
                )
        self.pieces = ordered

    @classmethod
    def zero(cls) -> PiecewisePoly:
        return cls(())

    @classmethod
    def from_pieces(cls, specs: Iterable[tuple[float, float, Sequence[complex]]]) -> PiecewisePoly:
        return cls(PolyPiece(lo, hi, tuple(c)) for lo, hi, c in specs)

    @property
    def is_zero(self) -> bool:
        return all(all(c == 0 for c in p.coeffs) for p in self.pieces)

    @property
    def support(self) -> tuple[float, float] | None:
        if not self.pieces:
            return None
        return (self.pieces[0].lo, self.pieces[-1].hi)

    @property
    def x_max(self) -> float:
        return self.pieces[-1].hi if self.pieces else 0.0

    def __call__(self, x):
        xs = np.asarray(x, dtype=float)
        out = np.zeros(xs.shape, dtype=complex)
        for piece in self.pieces:
            mask = (xs >= piece.lo) & (xs <= piece.hi)
            if np.any(mask):
                out[mask] = piece(xs[mask])
        if xs.ndim == 0:
            return complex(out[()])
        return out

    def derivative(self) -> PiecewisePoly:
        return PiecewisePoly(p.derivative() for p in self.pieces)

    def conjugate(self) -> PiecewisePoly:
        return PiecewisePoly(p.conjugate() for p in self.pieces)

    def scaled(self, factor: complex) -> PiecewisePoly:
        return PiecewisePoly(
            PolyPiece(p.lo, p.hi, tuple(factor * c for c in p.coeffs)) for p in self.pieces
        )

    def transformed(self, a: float, b: float) -> PiecewisePoly:
        """Pull back through x -> a + b*x: returns q with q(x) = p(a + b*x), b != 0."""
        if b == 0:
            raise ValueError("linear substitution must be invertible")
        pieces = []
        for p in self.pieces:
            u, v = (p.lo - a) / b, (p.hi - a) / b
            lo, hi = (u, v) if u < v else (v, u)
            pieces.append(PolyPiece(lo, hi, compose_linear(p.coeffs, a, b)))
        return PiecewisePoly(pieces)

    def shifted(self, delta: float) -> PiecewisePoly:
        """q with q(x) = p(x - delta); support moves right by delta."""
        return self.transformed(-delta, 1.0)


def panel_nodes(lo: float, hi: float, max_panel: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights for [lo, hi] split into panels <= max_panel."""
    length = hi - lo
    if length <= 0:
        return np.empty(0), np.empty(0)
    n_panels = max(1, int(math.ceil(length / max_panel)))
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    xs = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    ws = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return xs, ws


def poly_quad_nodes(
    poly: PiecewisePoly,
    max_panel: float,
    split_at: Iterable[float] = (),
) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes over the support of ``poly``, panels split at ``split_at``."""
    breaks = sorted(set(float(s) for s in split_at))
    xs_all: list[np.ndarray] = []
    ws_all: list[np.ndarray] = []
    for piece in poly.pieces:
        cuts = [piece.lo] + [s for s in breaks if piece.lo < s < piece.hi] + [piece.hi]
        for a, b in zip(cuts, cuts[1:]):
            xs, ws = panel_nodes(a, b, max_panel)
            xs_all.append(xs)
            ws_all.append(ws)
    if not xs_all:
        return np.empty(0), np.empty(0)
    return np.concatenate(xs_all), np.concatenate(ws_all)
