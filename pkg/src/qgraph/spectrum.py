"""Interior spectrum located as the singular set of the collocation system.

The determinant of the interior matrix is complex for general admissible
conditions, so eigenvalues are found by scanning the normalized smallest
singular value over a grid, bracketing local minima and refining each by
golden-section minimization.  Eigenvalues closer together than the grid step
can be missed; that is the documented resolution limit of the scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph_model import MetricGraph
from .interior import InteriorSystem

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class EigenvalueHit:
    lam: float
    multiplicity: int
    smin: float


@dataclass
class ScanConfig:
    lo: float
    hi: float
    step: float | None = None
    accept_tol: float = 1e-8
    merge_tol: float = 1e-6
    refine_width: float = 1e-12
    max_refine_iter: int = 200

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"window [{self.lo}, {self.hi}] is empty")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")
        for name in ("accept_tol", "merge_tol", "refine_width"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def default_step(graph: MetricGraph) -> float:
    """A fraction of the coarsest expected eigenvalue spacing."""
    lmax = graph.longest_edge_length
    return 0.01 * (math.pi / lmax) ** 2


def smin_profile(graph: MetricGraph, lam: complex) -> float:
    """Smallest singular value of the interior system, normalized by its norm."""
    return InteriorSystem(graph, lam).smin_normalized


def _golden_min(fn, a: float, b: float, width: float, max_iter: int) -> tuple[float, float]:
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    best = (x1, f1) if f1 <= f2 else (x2, f2)
    for _ in range(max_iter):
        if (b - a) < width:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fn(x2)
        cand = (x1, f1) if f1 <= f2 else (x2, f2)
        if cand[1] < best[1]:
            best = cand
    return best


def find_eigenvalues(graph: MetricGraph, cfg: ScanConfig) -> list[EigenvalueHit]:
    """Grid scan plus golden-section refinement of every bracketed minimum.

    A hit is accepted when the refined normalized smallest singular value
    falls below ``accept_tol``; its multiplicity is the number of singular
    values below ``accept_tol`` times the matrix norm at the refined point.
    """
    step = cfg.step if cfg.step is not None else default_step(graph)
    n_points = max(2, int(math.floor((cfg.hi - cfg.lo) / step)) + 1)
    grid = cfg.lo + step * np.arange(n_points)
    grid = grid[grid <= cfg.hi + 1e-12 * max(1.0, abs(cfg.hi))]
    profile = np.array([smin_profile(graph, x) for x in grid])

    brackets: list[tuple[float, float]] = []
    m = len(grid)
    for i in range(m):
        left = profile[i - 1] if i > 0 else math.inf
        right = profile[i + 1] if i < m - 1 else math.inf
        if profile[i] <= left and profile[i] <= right and (profile[i] < left or profile[i] < right):
            a = grid[i - 1] if i > 0 else grid[i]
            b = grid[i + 1] if i < m - 1 else grid[i]
            if a < b:
                brackets.append((a, b))

    fn = lambda x: smin_profile(graph, x)
    hits: list[EigenvalueHit] = []
    for a, b in brackets:
        width = cfg.refine_width * max(1.0, abs(0.5 * (a + b)))
        x_star, f_star = _golden_min(fn, a, b, width, cfg.max_refine_iter)
        if f_star >= cfg.accept_tol:
            continue
        if not (cfg.lo - cfg.merge_tol <= x_star <= cfg.hi + cfg.merge_tol):
            continue
        system = InteriorSystem(graph, x_star)
        mult = int(np.sum(system.svals < cfg.accept_tol * system.norm))
        hits.append(EigenvalueHit(float(x_star), max(1, mult), float(f_star)))

    hits.sort(key=lambda h: h.lam)
    merged: list[EigenvalueHit] = []
    for hit in hits:
        if merged and abs(hit.lam - merged[-1].lam) <= cfg.merge_tol:
            if hit.smin < merged[-1].smin:
                merged[-1] = hit
            continue
        merged.append(hit)
    return merged
