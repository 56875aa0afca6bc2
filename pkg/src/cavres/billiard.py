"""Trajectory simulation: entry at (x, phi), repeated specular reflection,
exit detection, face labeling.

Sign conventions, fixed once for the whole package:

* the entry angle phi in (-pi/2, pi/2) is measured anticlockwise from the
  outward opening normal (0, -1) to the reversed entry velocity, so the
  entry velocity is v = (-sin(phi), cos(phi));
* the exit angle phi_plus applies the same convention to the exit velocity,
  v_plus = (sin(phi_plus), -cos(phi_plus)).

This is the unique sign choice for which a flat mirror gives
phi_plus = -phi and an ideal retroreflector (exit velocity opposite to the
entry velocity, the maximum momentum transfer) gives phi_plus = phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .geometry import (
    CornerHitError,
    OpeningExit,
    Ray,
    Vec2,
    first_hit,
    reflect_direction,
)
from .shapes import Cavity

# The first trajectory leg accepts zero-travel hits so that entry points
# lying on a floor-level boundary curve (the flat cavity) reflect at the
# entry point itself.
_FIRST_LEG_GUARD = -1e-12


@dataclass(frozen=True)
class EntryState:
    """Entry abscissa on the opening and entry angle (radians)."""

    x: float
    phi: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.phi)):
            raise ValueError("entry state must be finite")
        if not (-0.5 < self.x < 0.5):
            raise ValueError(f"entry x={self.x} outside the open interval (-1/2, 1/2)")
        if not (-math.pi / 2 < self.phi < math.pi / 2):
            raise ValueError(
                f"entry phi={self.phi} outside the open interval (-pi/2, pi/2)"
            )


@dataclass(frozen=True)
class TraceLimits:
    """Caps protecting the tracer from degenerate geometry."""

    max_reflections: int = 1000
    min_travel: float = 1e-9

    def __post_init__(self):
        if self.max_reflections < 1:
            raise ValueError("max_reflections must be at least 1")


@dataclass(frozen=True)
class TrajectoryResult:
    """One particle's passage through a cavity.

    ``points`` and ``faces`` hold the reflection points and the labels of
    the curves they occurred on, in order. ``valid`` is False only for
    corner hits and reflection-cap overruns, in which case ``failure``
    names the cause and the exit fields are NaN.
    """

    exit_x: float
    exit_phi: float
    reflections: int
    points: tuple[Vec2, ...]
    faces: tuple[str, ...]
    valid: bool
    failure: Optional[str] = None


def entry_direction(phi: float) -> Vec2:
    """Unit velocity of a particle entering with angle phi."""
    return Vec2(-math.sin(phi), math.cos(phi))


def exit_angle_of_direction(direction: Vec2) -> float:
    """Exit angle of a downward-moving exit velocity."""
    return math.atan2(direction.x, -direction.y)


def trace(
    cavity: Cavity, entry: EntryState, limits: TraceLimits = TraceLimits()
) -> TrajectoryResult:
    """Follow one particle from entry to exit through the opening.

    Iterates first-hit queries and specular reflections until the path
    crosses the opening moving downward. Trajectories that strike a curve
    junction or exceed the reflection cap are flagged invalid rather than
    raising: they form a measure-zero (respectively pathological) set that
    integration layers skip and count.
    """
    position = Vec2(entry.x, 0.0)
    direction = entry_direction(entry.phi)
    points: list[Vec2] = []
    faces: list[str] = []
    travel_guard = _FIRST_LEG_GUARD

    while True:
        try:
            event = first_hit(Ray(position, direction), cavity, travel_guard)
        except CornerHitError:
            return TrajectoryResult(
                exit_x=math.nan,
                exit_phi=math.nan,
                reflections=len(points),
                points=tuple(points),
                faces=tuple(faces),
                valid=False,
                failure="corner-hit",
            )
        if isinstance(event, OpeningExit):
            return TrajectoryResult(
                exit_x=event.point.x,
                exit_phi=exit_angle_of_direction(direction),
                reflections=len(points),
                points=tuple(points),
                faces=tuple(faces),
                valid=True,
            )
        if len(points) >= limits.max_reflections:
            return TrajectoryResult(
                exit_x=math.nan,
                exit_phi=math.nan,
                reflections=len(points),
                points=tuple(points),
                faces=tuple(faces),
                valid=False,
                failure="cap-exceeded",
            )
        direction = reflect_direction(direction, event.inward_normal).normalized()
        position = event.point
        points.append(event.point)
        faces.append(cavity.labels[event.curve_index])
        travel_guard = limits.min_travel


def exit_angle(
    cavity: Cavity,
    x: float,
    phi: float,
    limits: TraceLimits = TraceLimits(),
) -> Optional[float]:
    """Exit angle phi_plus for entry (x, phi), or None for invalid samples.

    Invalid samples (corner hits, cap overruns) must be skipped and counted
    by quadrature layers.
    """
    result = trace(cavity, EntryState(x, phi), limits)
    return result.exit_phi if result.valid else None
