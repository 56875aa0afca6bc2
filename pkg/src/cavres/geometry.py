"""Exact 2D primitives for planar billiard tracing.

Rays, boundary curves (line segments and implicit conic arcs), first-hit
queries, inward normals, and specular reflection. All coordinates are
dimensionless cavity units; every cavity handled by this package has its
opening on the segment [-1/2, 1/2] x {0}.

Conic arcs are stored through the implicit form

    A*x**2 + B*x*y + C*y**2 + D*x + E*y + F = 0

so that intersecting a ray with any supported curve reduces to a linear or
quadratic solve in the ray parameter. Straight-sided shapes built from the
same machinery (all quadratic coefficients zero) degenerate gracefully to
the linear solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Union

if TYPE_CHECKING:  # import used for annotations only; avoids a cycle
    from .shapes import Cavity

# Re-hit guard: a reflected ray may legitimately hit the same curve again,
# but never at the point it just left.
MIN_TRAVEL = 1e-9

# Hits closer than this to a junction between two boundary curves have no
# well-defined normal and are reported as corner hits.
CORNER_TOL = 1e-9

# Half-width of the normalized cavity opening.
OPENING_HALFWIDTH = 0.5

_UNIT_TOL = 1e-12
_PARALLEL_EPS = 1e-14
_EXIT_SLACK = 1e-12


class GeometryLeakError(RuntimeError):
    """A ray found neither a boundary hit nor the opening (geometry bug)."""


class CornerHitError(RuntimeError):
    """A ray hit the boundary within ``CORNER_TOL`` of a curve junction."""

    def __init__(self, point: "Vec2"):
        super().__init__(
            f"boundary hit at curve junction near ({point.x:.12g}, {point.y:.12g})"
        )
        self.point = point


@dataclass(frozen=True)
class Vec2:
    """Point or direction in the cavity plane."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite components ({self.x}, {self.y})")

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def __mul__(self, s: float) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def normalized(self) -> "Vec2":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero vector")
        return Vec2(self.x / n, self.y / n)

    def distance_to(self, other: "Vec2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Ray:
    """Half-line with unit direction."""

    origin: Vec2
    direction: Vec2

    def __post_init__(self):
        if abs(self.direction.norm() - 1.0) > _UNIT_TOL:
            raise ValueError("ray direction must be unit length")

    def at(self, t: float) -> Vec2:
        return Vec2(
            self.origin.x + t * self.direction.x,
            self.origin.y + t * self.direction.y,
        )


@dataclass(frozen=True)
class Segment:
    """Straight boundary piece with a fixed unit inward normal."""

    p0: Vec2
    p1: Vec2
    normal: Vec2

    kind = "segment"

    def __post_init__(self):
        length = self.p0.distance_to(self.p1)
        if length <= 0.0:
            raise ValueError("degenerate segment")
        if abs(self.normal.norm() - 1.0) > 1e-9:
            raise ValueError("segment normal must be unit length")
        tangent = (self.p1 - self.p0) * (1.0 / length)
        if abs(tangent.dot(self.normal)) > 1e-9:
            raise ValueError("segment normal must be perpendicular to the segment")

    @property
    def length(self) -> float:
        return self.p0.distance_to(self.p1)

    @property
    def tangent(self) -> Vec2:
        return (self.p1 - self.p0) * (1.0 / self.length)


@dataclass(frozen=True)
class ConicArc:
    """Arc of an implicit conic, bounded by an axis-aligned box.

    ``normal_sign`` selects which of the two gradient directions of the
    implicit function is the inward normal: ``+1`` for the gradient itself,
    ``-1`` for its opposite. ``start`` and ``end`` are the chain endpoints
    of the arc (in boundary-chain order).
    """

    coeffs: tuple[float, float, float, float, float, float]
    y_range: tuple[float, float]
    x_range: tuple[float, float]
    normal_sign: float
    start: Vec2
    end: Vec2

    kind = "conic-arc"

    def __post_init__(self):
        if len(self.coeffs) != 6:
            raise ValueError("conic needs six implicit coefficients")
        if self.normal_sign not in (-1.0, 1.0):
            raise ValueError("normal_sign must be -1.0 or +1.0")
        if not (self.y_range[0] < self.y_range[1]) or not (
            self.x_range[0] <= self.x_range[1]
        ):
            raise ValueError("degenerate arc parameter interval")
        for p in (self.start, self.end):
            if abs(self.implicit_value(p.x, p.y)) > 1e-9:
                raise ValueError("arc endpoint does not lie on the conic")

    def implicit_value(self, x: float, y: float) -> float:
        a, b, c, d, e, f = self.coeffs
        return a * x * x + b * x * y + c * y * y + d * x + e * y + f

    def gradient(self, x: float, y: float) -> Vec2:
        a, b, c, d, e, _ = self.coeffs
        return Vec2(2.0 * a * x + b * y + d, b * x + 2.0 * c * y + e)

    def contains_point(self, x: float, y: float, tol: float = CORNER_TOL) -> bool:
        return (
            self.x_range[0] - tol <= x <= self.x_range[1] + tol
            and self.y_range[0] - tol <= y <= self.y_range[1] + tol
        )


BoundaryCurve = Union[Segment, ConicArc]


@dataclass(frozen=True)
class Hit:
    """First intersection of a ray with the boundary chain."""

    point: Vec2
    travel: float
    curve_index: int
    inward_normal: Vec2


@dataclass(frozen=True)
class OpeningExit:
    """The ray crosses the opening segment moving downward: the particle leaves."""

    point: Vec2
    travel: float


def reflect_direction(incoming: Vec2, normal: Vec2) -> Vec2:
    """Specular reflection of a unit direction about a unit normal.

    Returns ``d - 2 (d . n) n``: the tangential component is preserved and
    the normal component negated. Insensitive to the sign of ``normal``.
    """
    k = 2.0 * incoming.dot(normal)
    return Vec2(incoming.x - k * normal.x, incoming.y - k * normal.y)


def normal_at(curve: BoundaryCurve, point: Vec2) -> Vec2:
    """Unit inward normal of a boundary curve at a point on it.

    For conic arcs this is the normalized implicit gradient with the sign
    chosen by the arc's orientation flag; a vanishing gradient signals a
    singular point of the conic and raises ``ValueError``.
    """
    if isinstance(curve, Segment):
        off = (point - curve.p0).dot(curve.normal)
        if abs(off) > 1e-6:
            raise ValueError("point does not lie on the segment")
        return curve.normal
    if abs(curve.implicit_value(point.x, point.y)) > 1e-6:
        raise ValueError("point does not lie on the conic")
    grad = curve.gradient(point.x, point.y)
    n = grad.norm()
    if n < 1e-14:
        raise ValueError("singular point on conic: zero gradient")
    return grad * (curve.normal_sign / n)


def _segment_travel(
    seg: Segment, ox: float, oy: float, dx: float, dy: float, min_travel: float
) -> Optional[tuple[float, float, float]]:
    length = seg.length
    tx = (seg.p1.x - seg.p0.x) / length
    ty = (seg.p1.y - seg.p0.y) / length
    denom = dx * ty - dy * tx
    if abs(denom) < _PARALLEL_EPS:
        return None
    qx = seg.p0.x - ox
    qy = seg.p0.y - oy
    t = (ty * qx - tx * qy) / denom
    if t <= min_travel:
        return None
    s = (dy * qx - dx * qy) / denom
    if s < -CORNER_TOL or s > length + CORNER_TOL:
        return None
    return t, seg.p0.x + s * tx, seg.p0.y + s * ty


def _conic_travel(
    arc: ConicArc, ox: float, oy: float, dx: float, dy: float, min_travel: float
) -> Optional[tuple[float, float, float]]:
    a2, b2, c2, d2, e2, f2 = arc.coeffs
    a = a2 * dx * dx + b2 * dx * dy + c2 * dy * dy
    b = (
        2.0 * a2 * ox * dx
        + b2 * (ox * dy + oy * dx)
        + 2.0 * c2 * oy * dy
        + d2 * dx
        + e2 * dy
    )
    c = a2 * ox * ox + b2 * ox * oy + c2 * oy * oy + d2 * ox + e2 * oy + f2

    roots: list[float] = []
    if abs(a) < _PARALLEL_EPS:
        if abs(b) < _PARALLEL_EPS:
            return None
        roots.append(-c / b)
    else:
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            return None
        sq = math.sqrt(disc)
        # Sign-matched formula avoids cancellation between -b and sqrt(disc).
        q = -0.5 * (b + math.copysign(sq, b))
        roots.append(q / a)
        if q != 0.0:
            roots.append(c / q)

    best: Optional[tuple[float, float, float]] = None
    for t in roots:
        if not (t > min_travel) or not math.isfinite(t):
            continue
        hx = ox + t * dx
        hy = oy + t * dy
        if not arc.contains_point(hx, hy):
            continue
        if best is None or t < best[0]:
            best = (t, hx, hy)
    return best


def first_hit(
    ray: Ray, cavity: "Cavity", min_travel: float = MIN_TRAVEL
) -> Union[Hit, OpeningExit]:
    """First boundary event of a ray inside a cavity.

    Returns the ``Hit`` with smallest travel exceeding ``min_travel`` over
    all boundary curves, or an ``OpeningExit`` when the ray crosses the
    opening segment y = 0, |x| <= 1/2 moving downward before reaching any
    curve. The opening crossing is given priority on ties so a departing
    particle cannot tunnel past the opening.

    Raises ``GeometryLeakError`` when no event is found and
    ``CornerHitError`` when the winning hit is within ``CORNER_TOL`` of a
    junction of the boundary chain.
    """
    ox, oy = ray.origin.x, ray.origin.y
    dx, dy = ray.direction.x, ray.direction.y

    best_t = math.inf
    best_idx = -1
    best_point: Optional[tuple[float, float]] = None
    for idx, curve in enumerate(cavity.curves):
        if isinstance(curve, Segment):
            cand = _segment_travel(curve, ox, oy, dx, dy, min_travel)
        else:
            cand = _conic_travel(curve, ox, oy, dx, dy, min_travel)
        if cand is not None and cand[0] < best_t:
            best_t = cand[0]
            best_idx = idx
            best_point = (cand[1], cand[2])

    if dy < 0.0:
        t_exit = -oy / dy
        if t_exit >= -_EXIT_SLACK:
            x_exit = ox + t_exit * dx
            if abs(x_exit) <= OPENING_HALFWIDTH and t_exit <= best_t:
                return OpeningExit(point=Vec2(x_exit, 0.0), travel=max(t_exit, 0.0))

    if best_point is None:
        raise GeometryLeakError(
            f"no boundary hit for ray at ({ox:.12g}, {oy:.12g}) "
            f"direction ({dx:.12g}, {dy:.12g})"
        )

    point = Vec2(best_point[0], best_point[1])
    for junction in cavity.junctions:
        if point.distance_to(junction) <= CORNER_TOL:
            raise CornerHitError(point)
    curve = cavity.curves[best_idx]
    return Hit(
        point=point,
        travel=best_t,
        curve_index=best_idx,
        inward_normal=normal_at(curve, point),
    )
