"""Slow, independent trajectory oracle for the double-parabola cavity.

Finds wall crossings by marching along the ray in small steps and bisecting
the bracketing interval, instead of the closed-form quadratic solve the
production tracer uses, and derives the wall normals from a differently
arranged surface function. Used to freeze expected trajectory values and to
cross-check the production tracer on random samples.

Only generic trajectories are supported: legs shorter than a few marching
steps or nearly tangent wall approaches can defeat the bracketing, so
cross-check samples should skip trajectories flagged by ``is_generic``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_STEP = 1e-4
_BLOCK = 4096
_BISECT_ITERS = 100


def _left_margin(x: float, y: float) -> float:
    # Positive strictly inside the left wall x = y^2/4 - 1/2.
    return x - (y * y / 4.0 - 0.5)


def _right_margin(x: float, y: float) -> float:
    return (0.5 - y * y / 4.0) - x


def _left_normal(y: float) -> tuple[float, float]:
    # Gradient of x - y^2/4 + 1/2 points inward (margin grows inward).
    gx, gy = 1.0, -0.5 * y
    n = math.hypot(gx, gy)
    return gx / n, gy / n


def _right_normal(y: float) -> tuple[float, float]:
    gx, gy = -1.0, -0.5 * y
    n = math.hypot(gx, gy)
    return gx / n, gy / n


@dataclass
class ReferenceResult:
    exit_x: float
    exit_phi: float
    reflections: int
    points: list[tuple[float, float]]
    faces: list[str]
    min_leg: float
    min_incidence: float


def _first_violation(px, py, dx, dy, t0):
    """March forward from travel t0 until some margin goes non-positive."""
    t_start = t0
    while True:
        ts = t_start + _STEP * (1.0 + np.arange(_BLOCK))
        xs = px + ts * dx
        ys = py + ts * dy
        bad_exit = ys < 0.0
        bad_left = (xs - (ys * ys / 4.0 - 0.5)) <= 0.0
        bad_right = ((0.5 - ys * ys / 4.0) - xs) <= 0.0
        any_bad = bad_exit | bad_left | bad_right
        if any_bad.any():
            i = int(np.argmax(any_bad))
            if bad_exit[i]:
                event = "exit"
            elif bad_left[i]:
                event = "left"
            else:
                event = "right"
            lo = ts[i] - _STEP if i > 0 or t_start > t0 else t0
            return event, max(lo, t0), float(ts[i])
        t_start = float(ts[-1])
        if t_start > 100.0:
            raise RuntimeError("reference march ran away")


def _event_function(event: str, px, py, dx, dy):
    if event == "exit":
        return lambda t: py + t * dy
    if event == "left":
        return lambda t: _left_margin(px + t * dx, py + t * dy)
    return lambda t: _right_margin(px + t * dx, py + t * dy)


def ref_trace_double_parabola(x: float, phi: float) -> ReferenceResult:
    """March-and-bisect trace through the double parabola."""
    px, py = x, 0.0
    dx, dy = -math.sin(phi), math.cos(phi)
    points: list[tuple[float, float]] = []
    faces: list[str] = []
    min_leg = math.inf
    min_incidence = math.inf

    for _ in range(64):
        event, lo, hi = _first_violation(px, py, dx, dy, 0.0)
        fn = _event_function(event, px, py, dx, dy)
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            if fn(mid) > 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-14:
                break
        t_hit = 0.5 * (lo + hi)
        min_leg = min(min_leg, t_hit)
        hx, hy = px + t_hit * dx, py + t_hit * dy

        if event == "exit":
            return ReferenceResult(
                exit_x=hx,
                exit_phi=math.atan2(dx, -dy),
                reflections=len(points),
                points=points,
                faces=faces,
                min_leg=min_leg,
                min_incidence=min_incidence,
            )

        nx, ny = _left_normal(hy) if event == "left" else _right_normal(hy)
        k = dx * nx + dy * ny
        min_incidence = min(min_incidence, abs(k))
        dx, dy = dx - 2.0 * k * nx, dy - 2.0 * k * ny
        norm = math.hypot(dx, dy)
        dx, dy = dx / norm, dy / norm
        px, py = hx, hy
        points.append((hx, hy))
        faces.append(event)

    raise RuntimeError("reference trace exceeded 64 reflections")


def is_generic(result: ReferenceResult) -> bool:
    """True when every leg is long enough and no bounce is near-tangent,
    so the marching bracket is trustworthy."""
    return result.min_leg > 10.0 * _STEP and result.min_incidence > 1e-2
