"""Rasterized extinction/survival regions over a grid of initial states ``(x0, y0)``."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import analysis
from .core import Certificate, Limits, ModelParams, Verdict, fold_initials, normalize, simulate

__all__ = [
    "GridSpec",
    "RectangleOracle",
    "RegionRaster",
    "base_component",
    "classify_point",
    "default_grid",
    "extinct_components",
    "oracle_contradictions",
    "raster",
    "rectangle_oracles",
]

# 4-connectivity
_STRUCTURE = ndimage.generate_binary_structure(2, 1)

#: Truncation for rectangles unbounded to the right/top.
TRUNCATION = 20.0


@dataclass(frozen=True)
class GridSpec:
    """Cell-center sampling of ``x_range x y_range`` with ``nx`` by ``ny`` cells."""

    x_range: tuple[float, float]
    y_range: tuple[float, float]
    nx: int = 200
    ny: int = 200

    def __post_init__(self):
        object.__setattr__(self, "x_range", tuple(float(v) for v in self.x_range))
        object.__setattr__(self, "y_range", tuple(float(v) for v in self.y_range))
        for name in ("x_range", "y_range"):
            lo, hi = getattr(self, name)
            if not (0 <= lo < hi) or not math.isfinite(hi):
                raise ValueError(f"{name}: need 0 <= lo < hi, got {(lo, hi)}")
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"nx, ny: need at least 2 cells each, got {(self.nx, self.ny)}")

    def x_centers(self) -> np.ndarray:
        lo, hi = self.x_range
        return lo + (np.arange(self.nx) + 0.5) * ((hi - lo) / self.nx)

    def y_centers(self) -> np.ndarray:
        lo, hi = self.y_range
        return lo + (np.arange(self.ny) + 0.5) * ((hi - lo) / self.ny)


def default_grid(params: ModelParams, n: int = 200) -> GridSpec:
    """``[0, u_* + 1] x [0, (u_* + 1)/s'_0]`` in normalized units, or ``[0, 2 max(lam, 1)]^2``
    when ``u_*`` does not exist."""
    p = normalize(params)
    extent = 2.0 * max(p.lam, 1.0)
    if p.lam > 1:
        fo = analysis.first_order_points(p.lam, p.a_sup)
        if fo.u_lower_star is not None:
            extent = fo.u_lower_star + 1.0
    extent /= params.c
    return GridSpec((0.0, extent), (0.0, extent / params.sp_at(0)), n, n)


def classify_point(params: ModelParams, x0: float, y0: float, limits: Limits | None = None):
    """Fold ``(x0, y0)`` into scalar initials, simulate, and return ``(verdict, certificate)``."""
    rec = simulate(params, *fold_initials(params, x0, y0), limits)
    return rec.verdict, rec.certificate


@dataclass(frozen=True)
class RegionRaster:
    """``cells[j, i]`` holds the verdict at ``(x_centers[i], y_centers[j])``; row 0 is ``y_min``."""

    spec: GridSpec
    cells: np.ndarray
    cert_tags: np.ndarray
    params: ModelParams
    limits: Limits
    notes: tuple[str, ...] = field(default=())

    def count(self, verdict: Verdict) -> int:
        return int(np.count_nonzero(self.cells == verdict))

    def certificate_counts(self) -> dict[str, int]:
        tags, counts = np.unique(self.cert_tags, return_counts=True)
        return {Certificate(int(t)).label: int(c) for t, c in zip(tags, counts)}


def _rows(args):
    params, spec, limits, rows = args
    xs = spec.x_centers()
    ys = spec.y_centers()
    out = []
    for j in rows:
        v_row = np.empty(spec.nx, dtype=np.int8)
        c_row = np.empty(spec.nx, dtype=np.int8)
        y0 = float(ys[j])
        for i in range(spec.nx):
            v, c = classify_point(params, float(xs[i]), y0, limits)
            v_row[i] = v
            c_row[i] = c
        out.append((j, v_row, c_row))
    return out


def raster(params: ModelParams, spec: GridSpec | None = None, limits: Limits | None = None,
           workers: int = 1) -> RegionRaster:
    """Classify every cell center. Rows are split across ``workers`` processes."""
    spec = spec or default_grid(params)
    limits = limits or Limits()
    cells = np.empty((spec.ny, spec.nx), dtype=np.int8)
    tags = np.empty((spec.ny, spec.nx), dtype=np.int8)
    if workers <= 1:
        chunks = [_rows((params, spec, limits, range(spec.ny)))]
    else:
        # interleaved rows balance the cheap bottom rows against the expensive ones
        jobs = [(params, spec, limits, range(k, spec.ny, workers)) for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_rows, jobs))
    for chunk in chunks:
        for j, v_row, c_row in chunk:
            cells[j] = v_row
            tags[j] = c_row
    notes = []
    if params.lam <= 1:
        notes.append("lam <= 1: no certificates available, all cells Undecided")
    if not params.is_autonomous:
        notes.append("non-autonomous: only rho-rectangle and u*-monotone certificates apply")
    return RegionRaster(spec, cells, tags, params, limits, tuple(notes))


def base_component(r: RegionRaster) -> np.ndarray:
    """Mask of the 4-connected Extinct component containing cell ``(0, 0)``."""
    extinct = r.cells == Verdict.EXTINCT
    if not extinct[0, 0]:
        raise ValueError("cell (0, 0) is not Extinct; the base component is undefined")
    labels, _ = ndimage.label(extinct, structure=_STRUCTURE)
    return labels == labels[0, 0]


def extinct_components(r: RegionRaster) -> tuple[np.ndarray, int]:
    """Label the 4-connected components of Extinct cells."""
    labels, n = ndimage.label(r.cells == Verdict.EXTINCT, structure=_STRUCTURE)
    return labels, int(n)


@dataclass(frozen=True)
class RectangleOracle:
    """A rectangle of initial states ``(x0, y0)`` with a theorem-backed verdict.

    Intervals are half-open ``[lo, hi)`` unless ``closed`` is set.
    """

    name: str
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    verdict: Verdict
    tag: Certificate
    closed: bool = False

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        (x0, x1), (y0, y1) = self.x_range, self.y_range
        if self.closed:
            return (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)
        return (x >= x0) & (x < x1) & (y >= y0) & (y < y1)


def rectangle_oracles(params: ModelParams) -> list[RectangleOracle]:
    """Ground-truth rectangles in initial-state coordinates, gated on their hypotheses."""
    p = normalize(params)
    if p.lam <= 1:
        return []
    c = params.c
    s0, sp0 = p.s_at(0), p.sp_at(0)
    # x1 = s0 x0 + sp0 y0 must stay below the bound as well
    out = []
    r = analysis.rho(p)
    out.append(RectangleOracle("rho", (0.0, r / c), (0.0, (1 - s0) * r / (sp0 * c)),
                               Verdict.EXTINCT, Certificate.RHO_RECTANGLE))
    if not p.is_semelparous:
        return out
    fo = analysis.first_order_points(p.lam, p.a_sup)
    if fo.u_star is None:
        return out
    us, ul = fo.u_star, fo.u_lower_star
    out.append(RectangleOracle("ustar", (0.0, us / c), (0.0, us / (sp0 * c)),
                               Verdict.EXTINCT, Certificate.USTAR_MONOTONE))
    if not p.is_autonomous:
        return out
    cond = analysis.conditions(p)
    if cond.cond_fup.holds:
        top = ul + TRUNCATION
        for name, xr, x1r in (
            ("R01", (0.0, us), (ul, top)),
            ("R10", (ul, top), (0.0, us)),
            ("R11", (ul, top), (ul, top)),
        ):
            out.append(RectangleOracle(
                name, (xr[0] / c, xr[1] / c), (x1r[0] / (sp0 * c), x1r[1] / (sp0 * c)),
                Verdict.EXTINCT, Certificate.USTAR_MONOTONE,
            ))
    if cond.cond_lam4.holds and cond.cond_fxp1.holds:
        xs = analysis.fixed_points(p).x_star
        lam = p.lam
        out.append(RectangleOracle("cross_upper", (xs / c, lam / c), (0.0, xs / (sp0 * c)),
                                   Verdict.SURVIVE, Certificate.CROSS_REGION, closed=True))
        out.append(RectangleOracle("cross_lower", (0.0, xs / c), (xs / (sp0 * c), lam / (sp0 * c)),
                                   Verdict.SURVIVE, Certificate.CROSS_REGION, closed=True))
    return out


def oracle_contradictions(r: RegionRaster, oracles: list[RectangleOracle] | None = None) -> dict[str, int]:
    """Count cells whose verdict contradicts an emitted rectangle.

    Extinct rectangles require Extinct cells; Survive rectangles forbid Extinct cells.
    """
    oracles = rectangle_oracles(r.params) if oracles is None else oracles
    X, Y = np.meshgrid(r.spec.x_centers(), r.spec.y_centers())
    out = {}
    for o in oracles:
        inside = o.contains(X, Y)
        if o.verdict == Verdict.EXTINCT:
            bad = inside & (r.cells != Verdict.EXTINCT)
        else:
            bad = inside & (r.cells == Verdict.EXTINCT)
        out[o.name] = int(np.count_nonzero(bad))
    return out
