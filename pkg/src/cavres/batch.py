"""Vectorized trajectory engine used by the quadrature and scan layers.

Traces many entry states simultaneously with numpy and returns exit angles,
reflection counts, and validity flags. Implements exactly the same event
rules as ``billiard.trace`` (first-leg zero-travel guard, opening priority
on ties, corner tolerance, reflection cap) and is cross-checked against it
in the test suite; it just skips the per-reflection bookkeeping that only
single-trajectory callers need.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .billiard import TraceLimits
from .geometry import (
    CORNER_TOL,
    OPENING_HALFWIDTH,
    ConicArc,
    GeometryLeakError,
    Segment,
)
from .shapes import Cavity

_FIRST_LEG_GUARD = -1e-12
_EXIT_SLACK = 1e-12
_PARALLEL_EPS = 1e-14


@dataclass
class BatchTraceResult:
    """Per-sample exit angles (NaN when invalid), reflection counts, flags."""

    exit_phi: np.ndarray
    reflections: np.ndarray
    valid: np.ndarray

    @property
    def invalid_count(self) -> int:
        return int(np.count_nonzero(~self.valid))


class _SegmentArrays:
    def __init__(self, seg: Segment):
        self.p0x = seg.p0.x
        self.p0y = seg.p0.y
        tangent = seg.tangent
        self.tx = tangent.x
        self.ty = tangent.y
        self.length = seg.length
        self.nx = seg.normal.x
        self.ny = seg.normal.y

    def travel(self, px, py, dx, dy, guard):
        denom = dx * self.ty - dy * self.tx
        qx = self.p0x - px
        qy = self.p0y - py
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (self.ty * qx - self.tx * qy) / denom
            s = (dy * qx - dx * qy) / denom
        ok = (
            (np.abs(denom) > _PARALLEL_EPS)
            & (t > guard)
            & (s >= -CORNER_TOL)
            & (s <= self.length + CORNER_TOL)
        )
        return np.where(ok, t, np.inf)

    def normals(self, hx, hy):
        shape = np.shape(hx)
        return np.full(shape, self.nx), np.full(shape, self.ny)


class _ConicArrays:
    def __init__(self, arc: ConicArc):
        self.A, self.B, self.C, self.D, self.E, self.F = arc.coeffs
        # Arcs of the form x = f(y) have no x**2 or x*y term; their ray
        # coefficients are much cheaper, so that path is specialized.
        self.axis_aligned = self.A == 0.0 and self.B == 0.0
        self.xlo = arc.x_range[0] - CORNER_TOL
        self.xhi = arc.x_range[1] + CORNER_TOL
        self.ylo = arc.y_range[0] - CORNER_TOL
        self.yhi = arc.y_range[1] + CORNER_TOL
        self.sign = arc.normal_sign

    def _accept(self, px, py, dx, dy, t, guard):
        hx = px + t * dx
        hy = py + t * dy
        return (
            np.isfinite(t)
            & (t > guard)
            & (hx >= self.xlo)
            & (hx <= self.xhi)
            & (hy >= self.ylo)
            & (hy <= self.yhi)
        )

    def travel(self, px, py, dx, dy, guard):
        A, B, C, D, E, F = self.A, self.B, self.C, self.D, self.E, self.F
        if self.axis_aligned:
            a = C * dy * dy
            b = (2.0 * C) * py * dy + D * dx + E * dy
            c = (C * py + E) * py + D * px + F
        else:
            a = A * dx * dx + B * dx * dy + C * dy * dy
            b = (
                2.0 * A * px * dx
                + B * (px * dy + py * dx)
                + 2.0 * C * py * dy
                + D * dx
                + E * dy
            )
            c = A * px * px + B * px * py + C * py * py + D * px + E * py + F

        quadratic = np.abs(a) >= _PARALLEL_EPS
        disc = b * b - 4.0 * a * c
        has_roots = quadratic & (disc >= 0.0)
        sq = np.sqrt(np.where(disc > 0.0, disc, 0.0))
        # Sign-matched root pair avoids cancellation in -b +- sqrt(disc).
        q = -0.5 * (b + np.copysign(sq, b))
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.where(has_roots, q / a, np.nan)
            t2 = np.where(has_roots & (q != 0.0), c / q, np.nan)
            t_lin = np.where(
                (~quadratic) & (np.abs(b) >= _PARALLEL_EPS), -c / b, np.nan
            )
        t1 = np.where(self._accept(px, py, dx, dy, t1, guard), t1, np.inf)
        t2 = np.where(self._accept(px, py, dx, dy, t2, guard), t2, np.inf)
        t_lin = np.where(self._accept(px, py, dx, dy, t_lin, guard), t_lin, np.inf)
        return np.minimum(np.minimum(t1, t2), t_lin)

    def normals(self, hx, hy):
        gx = 2.0 * self.A * hx + self.B * hy + self.D
        gy = self.B * hx + 2.0 * self.C * hy + self.E
        inv = self.sign / np.hypot(gx, gy)
        return gx * inv, gy * inv


def _compile(cavity: Cavity):
    return [
        _SegmentArrays(c) if isinstance(c, Segment) else _ConicArrays(c)
        for c in cavity.curves
    ]


def trace_batch(
    cavity: Cavity,
    xs: np.ndarray,
    phis: np.ndarray,
    limits: TraceLimits = TraceLimits(),
) -> BatchTraceResult:
    """Trace one particle per (xs[i], phis[i]) pair.

    Raises ``GeometryLeakError`` if any particle finds neither a boundary
    hit nor the opening, which indicates broken geometry rather than an
    unlucky sample.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    phis = np.ascontiguousarray(phis, dtype=np.float64)
    if xs.shape != phis.shape or xs.ndim != 1:
        raise ValueError("xs and phis must be 1-D arrays of equal length")
    n = xs.size

    exit_phi = np.full(n, np.nan)
    reflections = np.zeros(n, dtype=np.int32)
    valid = np.ones(n, dtype=bool)

    curves = _compile(cavity)
    junctions = [(j.x, j.y) for j in cavity.junctions]

    alive = np.arange(n)
    px = xs.copy()
    py = np.zeros(n)
    dx = -np.sin(phis)
    dy = np.cos(phis)
    guard = _FIRST_LEG_GUARD
    corner_sq = CORNER_TOL * CORNER_TOL

    for bounce in range(limits.max_reflections + 1):
        if alive.size == 0:
            break

        best_t = np.full(alive.size, np.inf)
        best_curve = np.full(alive.size, -1, dtype=np.int16)
        for ci, curve in enumerate(curves):
            t = curve.travel(px, py, dx, dy, guard)
            closer = t < best_t
            best_t[closer] = t[closer]
            best_curve[closer] = ci

        downward = dy < 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            t_exit = np.where(downward, -py / dy, np.inf)
            x_exit = px + t_exit * dx
        exits = (
            downward
            & (t_exit >= -_EXIT_SLACK)
            & (np.abs(x_exit) <= OPENING_HALFWIDTH)
            & (t_exit <= best_t)
        )
        if exits.any():
            done = alive[exits]
            exit_phi[done] = np.arctan2(dx[exits], -dy[exits])

        remain = ~exits
        leaked = remain & ~np.isfinite(best_t)
        if leaked.any():
            i = int(np.flatnonzero(leaked)[0])
            raise GeometryLeakError(
                f"no boundary hit for particle at ({px[i]:.12g}, {py[i]:.12g}) "
                f"direction ({dx[i]:.12g}, {dy[i]:.12g})"
            )
        if bounce == limits.max_reflections:
            valid[alive[remain]] = False
            break

        alive = alive[remain]
        if alive.size == 0:
            break
        px, py, dx, dy = px[remain], py[remain], dx[remain], dy[remain]
        best_t, best_curve = best_t[remain], best_curve[remain]

        hx = px + best_t * dx
        hy = py + best_t * dy
        corner = np.zeros(alive.size, dtype=bool)
        for jx, jy in junctions:
            corner |= (hx - jx) ** 2 + (hy - jy) ** 2 <= corner_sq
        if corner.any():
            valid[alive[corner]] = False
            keep = ~corner
            alive = alive[keep]
            if alive.size == 0:
                break
            px, py, dx, dy = px[keep], py[keep], dx[keep], dy[keep]
            best_curve = best_curve[keep]
            hx, hy = hx[keep], hy[keep]

        nx = np.empty(alive.size)
        ny = np.empty(alive.size)
        for ci, curve in enumerate(curves):
            sel = best_curve == ci
            if sel.any():
                nx[sel], ny[sel] = curve.normals(hx[sel], hy[sel])

        k = 2.0 * (dx * nx + dy * ny)
        dx = dx - k * nx
        dy = dy - k * ny
        inv = 1.0 / np.hypot(dx, dy)
        dx *= inv
        dy *= inv
        px, py = hx, hy
        reflections[alive] += 1
        guard = limits.min_travel

    return BatchTraceResult(exit_phi=exit_phi, reflections=reflections, valid=valid)
