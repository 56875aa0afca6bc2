"""Constructors for the cavity families studied by this package.

Every cavity is normalized: its boundary is a chain of curves running from
(1/2, 0) to (-1/2, 0) through the upper half-plane, closed below by the
opening segment [-1/2, 1/2] x {0} through which particles enter and leave.
The chain runs right to left so that the stored inward normals consistently
point into the enclosed region.

The two-parameter quadratic family encloses the region between the mirrored
graphs x = -g(y) and x = +g(y) with

    g(y) = alpha*y**2 + beta*y + 1/2,   alpha = (-beta*h - 1/2) / h**2,

so g(0) = 1/2 and g(h) = 0. The member with h = sqrt(2), beta = 0 is the
"double parabola": two congruent parabolic arcs whose common axis lies on
the opening line and whose foci each coincide with the other arc's vertex.
It behaves as a near-perfect retroreflector and is the best cavity shape
this package knows about.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from .geometry import BoundaryCurve, ConicArc, Segment, Vec2

# Chain endpoints must meet at least this tightly.
CHAIN_TOL = 1e-12

_RIGHT_ANCHOR = Vec2(0.5, 0.0)
_LEFT_ANCHOR = Vec2(-0.5, 0.0)


class InvalidShapeError(ValueError):
    """Requested parameters do not describe a valid normalized cavity."""


def curve_endpoints(curve: BoundaryCurve) -> tuple[Vec2, Vec2]:
    if isinstance(curve, Segment):
        return curve.p0, curve.p1
    return curve.start, curve.end


@dataclass(frozen=True)
class Cavity:
    """Ordered chain of boundary curves spanning the unit opening."""

    curves: tuple[BoundaryCurve, ...]
    labels: tuple[str, ...]
    name: str
    symmetric: bool
    junctions: tuple[Vec2, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.curves:
            raise InvalidShapeError("cavity needs at least one boundary curve")
        if len(self.labels) != len(self.curves):
            raise InvalidShapeError("one face label per boundary curve required")
        first, _ = curve_endpoints(self.curves[0])
        _, last = curve_endpoints(self.curves[-1])
        if first.distance_to(_RIGHT_ANCHOR) > CHAIN_TOL:
            raise InvalidShapeError("chain must start at (1/2, 0)")
        if last.distance_to(_LEFT_ANCHOR) > CHAIN_TOL:
            raise InvalidShapeError("chain must end at (-1/2, 0)")
        junctions = [first]
        for prev, nxt in zip(self.curves, self.curves[1:]):
            _, p_end = curve_endpoints(prev)
            n_start, _ = curve_endpoints(nxt)
            if p_end.distance_to(n_start) > CHAIN_TOL:
                raise InvalidShapeError(
                    f"chain gap between consecutive curves at ({p_end.x}, {p_end.y})"
                )
            junctions.append(p_end)
        junctions.append(last)
        for curve in self.curves:
            a, b = curve_endpoints(curve)
            if min(a.y, b.y) < -CHAIN_TOL:
                raise InvalidShapeError("boundary points must satisfy y >= 0")
            if isinstance(curve, ConicArc) and curve.y_range[0] < -CHAIN_TOL:
                raise InvalidShapeError("boundary points must satisfy y >= 0")
        object.__setattr__(self, "junctions", tuple(junctions))


@dataclass(frozen=True)
class QuadraticFamilyParams:
    """Height h and origin slope beta of the quadratic side-wall family."""

    h: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.h) and math.isfinite(self.beta)):
            raise InvalidShapeError("parameters must be finite")
        if self.h <= 0.0:
            raise InvalidShapeError("cavity height h must be positive")

    @property
    def alpha(self) -> float:
        # Chosen so that g(h) = 0 exactly.
        return (-self.beta * self.h - 0.5) / (self.h * self.h)

    def g(self, y: float) -> float:
        return (self.alpha * y + self.beta) * y + 0.5


def _segment(p0: Vec2, p1: Vec2, normal: Vec2) -> Segment:
    return Segment(p0=p0, p1=p1, normal=normal.normalized())


def make_flat() -> Cavity:
    """Degenerate cavity: the opening itself acts as a flat mirror."""
    floor = _segment(_RIGHT_ANCHOR, _LEFT_ANCHOR, Vec2(0.0, 1.0))
    return Cavity(curves=(floor,), labels=("floor",), name="flat", symmetric=True)


def make_right_triangle() -> Cavity:
    """Isosceles right triangle over the opening, right angle at the apex.

    The two legs form perpendicular mirrors, so most particles leave with
    their velocity reversed (a 2D corner retroreflector).
    """
    apex = Vec2(0.0, 0.5)
    s = 1.0 / math.sqrt(2.0)
    right = _segment(_RIGHT_ANCHOR, apex, Vec2(-s, -s))
    left = _segment(apex, _LEFT_ANCHOR, Vec2(s, -s))
    return Cavity(
        curves=(right, left),
        labels=("right", "left"),
        name="right-triangle",
        symmetric=True,
    )


def make_rectangle(depth: float = 10.0) -> Cavity:
    """Unit-width rectangular indentation of the given depth."""
    if not (math.isfinite(depth) and depth > 0.0):
        raise InvalidShapeError("rectangle depth must be positive")
    tr = Vec2(0.5, depth)
    tl = Vec2(-0.5, depth)
    curves = (
        _segment(_RIGHT_ANCHOR, tr, Vec2(-1.0, 0.0)),
        _segment(tr, tl, Vec2(0.0, -1.0)),
        _segment(tl, _LEFT_ANCHOR, Vec2(1.0, 0.0)),
    )
    return Cavity(
        curves=curves,
        labels=("right", "top", "left"),
        name=f"rectangle(depth={depth:g})",
        symmetric=True,
    )


def _quadratic_gmax(params: QuadraticFamilyParams) -> float:
    """Largest value of g on [0, h] (needed for the arc bounding boxes)."""
    g_max = max(params.g(0.0), 0.0)
    alpha = params.alpha
    if alpha < 0.0:
        vertex = -params.beta / (2.0 * alpha)
        if 0.0 < vertex < params.h:
            g_max = max(g_max, params.g(vertex))
    return g_max


def _check_quadratic_positive(params: QuadraticFamilyParams) -> None:
    alpha = params.alpha
    if alpha > 0.0:
        vertex = -params.beta / (2.0 * alpha)
        if 0.0 < vertex < params.h and params.g(vertex) <= 0.0:
            raise InvalidShapeError(
                f"g(y) is not positive on (0, {params.h:g}) for "
                f"h={params.h:g}, beta={params.beta:g}"
            )


def make_quadratic(params: QuadraticFamilyParams, name: str | None = None) -> Cavity:
    """Cavity bounded by the mirrored quadratic graphs x = -g(y), x = +g(y).

    Both walls are stored as implicit conic arcs; the right wall satisfies
    alpha*y**2 + beta*y + 1/2 - x = 0 and the left wall its x-mirror, so
    ray intersection stays a quadratic solve. Raises ``InvalidShapeError``
    when g dips to zero or below inside (0, h), which would pinch the
    cavity shut.
    """
    _check_quadratic_positive(params)
    h = params.h
    alpha = params.alpha
    beta = params.beta
    g_max = _quadratic_gmax(params)
    apex = Vec2(0.0, h)

    # Right wall: g(y) - x = 0; the interior (x < g) has positive implicit
    # value, so the inward normal follows +gradient.
    right = ConicArc(
        coeffs=(0.0, 0.0, alpha, -1.0, beta, 0.5),
        y_range=(0.0, h),
        x_range=(0.0, g_max),
        normal_sign=1.0,
        start=_RIGHT_ANCHOR,
        end=apex,
    )
    # Left wall: -g(y) - x = 0 with the interior on the negative side.
    left = ConicArc(
        coeffs=(0.0, 0.0, -alpha, -1.0, -beta, -0.5),
        y_range=(0.0, h),
        x_range=(-g_max, 0.0),
        normal_sign=-1.0,
        start=apex,
        end=_LEFT_ANCHOR,
    )
    return Cavity(
        curves=(right, left),
        labels=("right", "left"),
        name=name or f"quadratic(h={h:g}, beta={beta:g})",
        symmetric=True,
    )


def make_double_parabola() -> Cavity:
    """The near-optimal cavity: two nested parabolic arcs.

    Right arc x = 1/2 - y**2/4 and left arc x = y**2/4 - 1/2 for
    y in [0, sqrt(2)]. Each parabola's focus sits at the other's vertex and
    both axes lie on the opening line. Coefficients are written out exactly
    rather than derived through the h = sqrt(2) parameterization, so this
    constructor cross-checks ``make_quadratic``.
    """
    h = math.sqrt(2.0)
    apex = Vec2(0.0, h)
    right = ConicArc(
        coeffs=(0.0, 0.0, -0.25, -1.0, 0.0, 0.5),
        y_range=(0.0, h),
        x_range=(0.0, 0.5),
        normal_sign=1.0,
        start=_RIGHT_ANCHOR,
        end=apex,
    )
    left = ConicArc(
        coeffs=(0.0, 0.0, 0.25, -1.0, 0.0, -0.5),
        y_range=(0.0, h),
        x_range=(-0.5, 0.0),
        normal_sign=-1.0,
        start=apex,
        end=_LEFT_ANCHOR,
    )
    return Cavity(
        curves=(right, left),
        labels=("right", "left"),
        name="double-parabola",
        symmetric=True,
    )


def _polyline_normal(p0: Vec2, p1: Vec2) -> Vec2:
    tangent = (p1 - p0).normalized()
    normal = Vec2(-tangent.y, tangent.x)
    # Floor-level segments face the particles above them regardless of the
    # side the (possibly degenerate) enclosed region lies on.
    if abs(p0.y) <= CHAIN_TOL and abs(p1.y) <= CHAIN_TOL and normal.y < 0.0:
        normal = -normal
    return normal


def _is_mirror_symmetric(vertices: Sequence[Vec2]) -> bool:
    mirrored = [Vec2(-v.x, v.y) for v in reversed(vertices)]
    return all(a.distance_to(b) <= 1e-9 for a, b in zip(vertices, mirrored))


def make_polyline(vertices: Iterable[Union[Vec2, Sequence[float]]]) -> Cavity:
    """Cavity whose wall is the polygonal chain through the given vertices.

    The chain must run from (1/2, 0) to (-1/2, 0) with y >= 0 throughout.
    Faces are labeled by segment index.
    """
    pts = [v if isinstance(v, Vec2) else Vec2(float(v[0]), float(v[1])) for v in vertices]
    if len(pts) < 2:
        raise InvalidShapeError("polyline needs at least two vertices")
    if pts[0].distance_to(_RIGHT_ANCHOR) > CHAIN_TOL:
        raise InvalidShapeError("polyline must start at (1/2, 0)")
    if pts[-1].distance_to(_LEFT_ANCHOR) > CHAIN_TOL:
        raise InvalidShapeError("polyline must end at (-1/2, 0)")
    if any(p.y < -CHAIN_TOL for p in pts):
        raise InvalidShapeError("polyline vertices must satisfy y >= 0")
    curves = []
    for p0, p1 in zip(pts, pts[1:]):
        if p0.distance_to(p1) <= CHAIN_TOL:
            raise InvalidShapeError("repeated polyline vertex")
        curves.append(_segment(p0, p1, _polyline_normal(p0, p1)))
    labels = tuple(f"seg{i}" for i in range(len(curves)))
    return Cavity(
        curves=tuple(curves),
        labels=labels,
        name="polyline",
        symmetric=_is_mirror_symmetric(pts),
    )


# ---------------------------------------------------------------------------
# JSON serialization (used by the CLI --shape-file flag)
# ---------------------------------------------------------------------------


def cavity_to_dict(cavity: Cavity) -> dict:
    curves = []
    for curve, label in zip(cavity.curves, cavity.labels):
        if isinstance(curve, Segment):
            curves.append(
                {
                    "kind": "segment",
                    "label": label,
                    "p0": [curve.p0.x, curve.p0.y],
                    "p1": [curve.p1.x, curve.p1.y],
                    "normal": [curve.normal.x, curve.normal.y],
                }
            )
        else:
            curves.append(
                {
                    "kind": "conic-arc",
                    "label": label,
                    "coefficients": list(curve.coeffs),
                    "y_range": list(curve.y_range),
                    "x_range": list(curve.x_range),
                    "normal_sign": curve.normal_sign,
                    "start": [curve.start.x, curve.start.y],
                    "end": [curve.end.x, curve.end.y],
                }
            )
    return {"name": cavity.name, "symmetric": cavity.symmetric, "curves": curves}


def cavity_from_dict(data: dict) -> Cavity:
    curves: list[BoundaryCurve] = []
    labels: list[str] = []
    for i, spec in enumerate(data["curves"]):
        kind = spec.get("kind")
        labels.append(spec.get("label", f"seg{i}"))
        if kind == "segment":
            curves.append(
                Segment(
                    p0=Vec2(*map(float, spec["p0"])),
                    p1=Vec2(*map(float, spec["p1"])),
                    normal=Vec2(*map(float, spec["normal"])),
                )
            )
        elif kind == "conic-arc":
            coeffs = tuple(float(v) for v in spec["coefficients"])
            curves.append(
                ConicArc(
                    coeffs=coeffs,  # type: ignore[arg-type]
                    y_range=tuple(map(float, spec["y_range"])),  # type: ignore[arg-type]
                    x_range=tuple(map(float, spec["x_range"])),  # type: ignore[arg-type]
                    normal_sign=float(spec["normal_sign"]),
                    start=Vec2(*map(float, spec["start"])),
                    end=Vec2(*map(float, spec["end"])),
                )
            )
        else:
            raise InvalidShapeError(f"unknown curve kind {kind!r}")
    return Cavity(
        curves=tuple(curves),
        labels=tuple(labels),
        name=str(data.get("name", "custom")),
        symmetric=bool(data.get("symmetric", False)),
    )


def save_cavity(cavity: Cavity, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cavity_to_dict(cavity), fh, indent=2)
        fh.write("\n")


def load_cavity(path) -> Cavity:
    with open(path, "r", encoding="utf-8") as fh:
        return cavity_from_dict(json.load(fh))
