"""Limiting-absorption sweeps, exceptional-set scans, embedded-eigenvalue probes.

The quadratic form (R(lam + i eps) f, f) is sampled on a real window over a
decreasing eps ladder and compared with the continued boundary value F(lam).
Away from a discrete exceptional set the sweep stays bounded and converges at
first order in eps; at an embedded eigenvalue overlapping f it blows up like
1/eps, which is what the probe classifier fits.

The exceptional set combines interior eigenvalues (found by the spectrum
scan, split into embedded candidates when every eigenfunction has vanishing
normal data) with numerical near-singularities of the Robin matrix
k I + i DtN(lam).  On the real axis the latter is bounded below by k for
Hermitian DtN, so genuine dips flag numerical trouble rather than theory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph_model import MetricGraph
from .interior import InteriorSolution, InteriorSystem, NearSingular
from .resolvent import CompositeFunction, continue_value, solve_full
from .dtn import _dtn_from_system, normal_derivative
from .spectrum import ScanConfig, default_step, find_eigenvalues

DEFAULT_EPS_LADDER = (1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
EXCLUSION_RADIUS = 1e-3

KIND_INTERIOR = "InteriorEigenvalue"
KIND_POLE = "ContinuationPole"
KIND_EMBEDDED = "EmbeddedEigenvalueCandidate"


class ExceptionalWindowError(ValueError):
    """A sweep window touches exceptional points and exclusion was not requested."""

    def __init__(self, offenders: tuple[float, ...]):
        self.offenders = offenders
        listed = ", ".join(f"{x:.12g}" for x in offenders)
        super().__init__(f"window touches exceptional points: {listed}")


@dataclass(frozen=True)
class ExceptionalPoint:
    lam: float
    kind: str
    smin: float
    multiplicity: int = 1
    normal_defect: float | None = None


@dataclass(frozen=True)
class ExceptionalSet:
    window: tuple[float, float]
    points: tuple[ExceptionalPoint, ...]

    def lams(self) -> tuple[float, ...]:
        return tuple(p.lam for p in self.points)

    def of_kind(self, kind: str) -> tuple[ExceptionalPoint, ...]:
        return tuple(p for p in self.points if p.kind == kind)


def _normal_defect(system: InteriorSystem, accept_tol: float) -> tuple[float, int]:
    """Smallest attainable norm of the normal data over the numerical
    eigenspace at this point, plus the space's dimension."""
    null = system.null_vectors(accept_tol)
    if not null:
        return math.inf, 0
    columns = []
    for vec in null:
        sol = InteriorSolution(system, vec, None, 0.0)
        columns.append(normal_derivative(sol))
    stacked = np.column_stack(columns)
    svals = np.linalg.svd(stacked, compute_uv=False)
    defect = float(svals[-1]) if svals.size else 0.0
    return defect, len(null)


def exceptional_scan(
    graph: MetricGraph,
    window: tuple[float, float],
    *,
    step: float | None = None,
    accept_tol: float = 1e-8,
    dip_ratio: float = 0.5,
) -> ExceptionalSet:
    """Locate the discrete exceptional set inside a real window.

    Interior eigenvalues come from the spectrum scan; each is tagged as an
    embedded candidate when the numerical eigenspace contains a function with
    (near) zero normal data, since such a function extends by zero to an
    eigenfunction of the full operator.  Robin-matrix dips below
    ``dip_ratio * sqrt(lam)`` are reported as continuation poles; Hermitian
    boundary response keeps the real-axis matrix above sqrt(lam), so this
    fires only on numerical anomalies.
    """
    graph.require_normalized()
    lo, hi = float(window[0]), float(window[1])
    cfg = ScanConfig(lo, hi, step=step, accept_tol=accept_tol)
    points: list[ExceptionalPoint] = []
    for hit in find_eigenvalues(graph, cfg):
        system = InteriorSystem(graph, hit.lam)
        defect, dim = _normal_defect(system, accept_tol)
        embed_tol = 1e-6 * (1.0 + math.sqrt(abs(hit.lam)))
        if dim >= 1 and defect < embed_tol:
            kind = KIND_EMBEDDED
        else:
            kind = KIND_INTERIOR
        points.append(
            ExceptionalPoint(hit.lam, kind, hit.smin, hit.multiplicity, defect)
        )

    eig_lams = [p.lam for p in points]
    scan_step = cfg.step if cfg.step is not None else _scan_step(graph, lo, hi)
    grid = np.arange(lo, hi + scan_step / 2, scan_step)
    profile = np.full(grid.shape, np.nan)
    for i, lam in enumerate(grid):
        if any(abs(lam - e) < EXCLUSION_RADIUS for e in eig_lams):
            continue
        try:
            system = InteriorSystem(graph, lam)
            dtn = _dtn_from_system(system)
            profile[i] = _robin_smin_real(dtn.matrix, math.sqrt(lam))
        except NearSingular:
            continue
    floor = dip_ratio * np.sqrt(np.maximum(grid, 1e-300))
    for i in range(len(grid)):
        if np.isnan(profile[i]):
            continue
        if profile[i] < floor[i]:
            points.append(ExceptionalPoint(float(grid[i]), KIND_POLE, float(profile[i])))

    points.sort(key=lambda p: p.lam)
    return ExceptionalSet((lo, hi), tuple(points))


def _robin_smin_real(dtn_matrix: np.ndarray, k: float) -> float:
    t = k * np.eye(dtn_matrix.shape[0], dtype=complex) + 1j * dtn_matrix
    svals = np.linalg.svd(t, compute_uv=False)
    return float(svals[-1]) if svals.size else 0.0


def _scan_step(graph: MetricGraph, lo: float, hi: float) -> float:
    return min(default_step(graph), (hi - lo) / 50)


@dataclass(eq=False)
class LapSweep:
    window: tuple[float, float]
    lambdas: np.ndarray           # (m,) real grid after exclusions
    eps_ladder: tuple[float, ...]
    values: np.ndarray            # (m, e) complex, (R(lam + i eps) f, f)
    continued: np.ndarray         # (m,) complex boundary values F(lam)
    deviations: np.ndarray        # (m, e) |values - continued|
    sup_abs: np.ndarray           # (m,) sup over the ladder of |values|
    rates: np.ndarray             # (m,) fitted slope of log dev vs log eps
    excluded: tuple[float, ...]


def lap_sweep(
    graph: MetricGraph,
    f: CompositeFunction,
    window: tuple[float, float],
    *,
    step: float | None = None,
    eps_ladder: tuple[float, ...] = DEFAULT_EPS_LADDER,
    exclude: bool = False,
    exclusion_radius: float = EXCLUSION_RADIUS,
    formula: str = "derived",
) -> LapSweep:
    """Tabulate |(R(lam + i eps) f, f)| over a window and an eps ladder.

    The window must avoid the exceptional set; pass ``exclude=True`` to drop
    grid points within ``exclusion_radius`` of exceptional points instead of
    erroring out.
    """
    lo, hi = float(window[0]), float(window[1])
    ladder = tuple(sorted((float(e) for e in eps_ladder), reverse=True))
    if len(ladder) < 1 or ladder[-1] <= 0:
        raise ValueError("eps ladder must contain positive entries")
    exc = exceptional_scan(graph, (lo, hi), step=step)
    offenders = tuple(exc.lams())
    if offenders and not exclude:
        raise ExceptionalWindowError(offenders)

    grid_step = step if step is not None else (hi - lo) / 40
    grid = np.arange(lo, hi + grid_step / 2, grid_step)
    keep = np.array(
        [all(abs(x - e) >= exclusion_radius for e in offenders) for x in grid]
    )
    excluded = tuple(float(x) for x in grid[~keep])
    grid = grid[keep]

    m, ne = len(grid), len(ladder)
    values = np.zeros((m, ne), dtype=complex)
    continued = np.zeros(m, dtype=complex)
    for i, lam in enumerate(grid):
        for j, eps in enumerate(ladder):
            values[i, j] = solve_full(graph, f, complex(lam, eps), formula).value
        continued[i] = continue_value(graph, f, float(lam), formula).value
    deviations = np.abs(values - continued[:, None])
    sup_abs = np.max(np.abs(values), axis=1)

    rates = np.zeros(m)
    small = [j for j, e in enumerate(ladder) if e <= 1e-2]
    if len(small) >= 2:
        le = np.log(np.array([ladder[j] for j in small]))
        for i in range(m):
            ld = np.log(np.maximum(deviations[i, small], 1e-300))
            slope = np.polyfit(le, ld, 1)[0]
            rates[i] = slope
    return LapSweep(
        window=(lo, hi),
        lambdas=grid,
        eps_ladder=ladder,
        values=values,
        continued=continued,
        deviations=deviations,
        sup_abs=sup_abs,
        rates=rates,
        excluded=excluded,
    )


@dataclass(frozen=True)
class EmbeddedProbeResult:
    lam_star: float
    classification: str           # "EmbeddedEigenvalue" | "Regular"
    pole_coefficient: float       # c in |value| ~ c / eps + b
    background: float             # b
    eps_ladder: tuple[float, ...]
    values: tuple[complex, ...]


def embedded_probe(
    graph: MetricGraph,
    f: CompositeFunction,
    lam_star: float,
    eps_ladder: tuple[float, ...] = DEFAULT_EPS_LADDER,
    formula: str = "derived",
) -> EmbeddedProbeResult:
    """Classify a real point by fitting |(R(lam* + i eps) f, f)| to c/eps + b.

    A significant 1/eps coefficient (pole term exceeding ten times the fitted
    background at the smallest eps) marks an embedded eigenvalue whose
    eigenprojection overlaps f; eigenvalues orthogonal to f are invisible.
    """
    ladder = tuple(sorted((float(e) for e in eps_ladder), reverse=True))
    if len(ladder) < 3:
        raise ValueError("eps ladder needs at least three points for the fit")
    vals = [
        solve_full(graph, f, complex(lam_star, eps), formula).value for eps in ladder
    ]
    mags = np.abs(np.array(vals))
    design = np.column_stack([1.0 / np.array(ladder), np.ones(len(ladder))])
    coef, *_ = np.linalg.lstsq(design, mags, rcond=None)
    c, b = float(coef[0]), float(coef[1])
    eps_min = ladder[-1]
    embedded = c > 0 and (c / eps_min) > 10.0 * abs(b)
    return EmbeddedProbeResult(
        lam_star=float(lam_star),
        classification="EmbeddedEigenvalue" if embedded else "Regular",
        pole_coefficient=c,
        background=b,
        eps_ladder=ladder,
        values=tuple(complex(v) for v in vals),
    )
