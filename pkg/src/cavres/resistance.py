"""Numerical evaluation of the cavity resistance functional and the
body-level aggregation formulas.

The normalized resistance of a cavity with unit opening is

    R = (3/8) * integral over x in [-1/2, 1/2], phi in [-pi/2, pi/2] of
        (1 + cos(phi_plus(x, phi) - phi)) * cos(phi)  dphi dx.

A flat mirror (phi_plus = -phi) gives exactly 1; a perfect retroreflector
(phi_plus = phi) gives the theoretical ceiling 1.5. Two quadrature schemes
are provided: a composite midpoint rule valid for any cavity, and a folded
Simpson scheme for mirror-symmetric cavities,

    R = (1/2) dx dphi * sum_{i=Nx/2+1..Nx} sum_{k=1..Nphi-1}
        w_k (1 + cos(phi_plus(x_i, phi_k) - phi_k)) cos(phi_k),

with w_k = 2 for odd k, 1 for even k, x_i = -1/2 + (i - 1/2) dx and
phi_k = -pi/2 + k dphi. The leading 3/8, Simpson's 1/3 weights, and the
factor 2 from folding the x-integral over the symmetry axis combine into
the printed 1/2; the phi endpoints drop out because cos(+-pi/2) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .batch import trace_batch
from .billiard import TraceLimits
from .shapes import Cavity

# Integration aborts when more than this fraction of samples is invalid:
# corner hits are a measure-zero set, so anything beyond stray bad luck
# signals a geometry bug.
INVALID_FRACTION_LIMIT = 1e-6

# Upper bound for any normalized cavity resistance, plus numerical slack.
MAX_RESISTANCE = 1.5
_RANGE_SLACK = 1e-6

_RULES = ("midpoint", "simpson-symmetric")

# Keep peak memory of the vectorized tracer bounded.
_CHUNK_SAMPLES = 2_000_000


class IntegrationFailureError(RuntimeError):
    """Too many invalid trajectory samples during quadrature."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Grid sizes and rule selection for the resistance integral."""

    n_x: int
    n_phi: int
    rule: str = "midpoint"

    def __post_init__(self):
        for n, label in ((self.n_x, "n_x"), (self.n_phi, "n_phi")):
            if n < 2 or n % 2 != 0:
                raise ValueError(f"{label} must be an even integer >= 2, got {n}")
        if self.rule not in _RULES:
            raise ValueError(f"rule must be one of {_RULES}, got {self.rule!r}")


@dataclass(frozen=True)
class ResistanceEstimate:
    """Computed resistance plus grid metadata and an error proxy.

    ``refinement_delta`` is the absolute difference against the estimate at
    half resolution (NaN when the refinement pass was skipped).
    """

    value: float
    spec: QuadratureSpec
    invalid_samples: int
    refinement_delta: float

    def __post_init__(self):
        if not (0.0 < self.value <= MAX_RESISTANCE + _RANGE_SLACK):
            raise ValueError(
                f"resistance estimate {self.value} outside (0, {MAX_RESISTANCE}]"
            )


@dataclass(frozen=True)
class BodySpec:
    """Disc rim tiled by n equal cavities, each spanning an arc eps = 2*pi*r/n."""

    n_cavities: int

    def __post_init__(self):
        if self.n_cavities < 3:
            raise ValueError("a disc rim needs at least 3 cavities")

    @property
    def eps_over_r(self) -> float:
        return 2.0 * math.pi / self.n_cavities


def _integrand_rows(
    cavity: Cavity,
    xs: np.ndarray,
    phis: np.ndarray,
    weights: Optional[np.ndarray],
    limits: TraceLimits,
) -> tuple[list[float], int]:
    """Weighted integrand row sums (one per x node) and the invalid count."""
    n_phi = phis.size
    cos_phi = np.cos(phis)
    row_sums: list[float] = []
    invalid = 0
    rows_per_chunk = max(1, _CHUNK_SAMPLES // n_phi)
    for lo in range(0, xs.size, rows_per_chunk):
        sub = xs[lo : lo + rows_per_chunk]
        grid_x = np.repeat(sub, n_phi)
        grid_phi = np.tile(phis, sub.size)
        res = trace_batch(cavity, grid_x, grid_phi, limits)
        invalid += res.invalid_count
        with np.errstate(invalid="ignore"):
            vals = (1.0 + np.cos(res.exit_phi - grid_phi)) * np.tile(cos_phi, sub.size)
        vals = np.where(res.valid, vals, 0.0).reshape(sub.size, n_phi)
        if weights is None:
            partial = np.sum(vals, axis=1)
        else:
            partial = vals @ weights
        row_sums.extend(partial.tolist())
    return row_sums, invalid


def _check_invalid(invalid: int, total: int) -> None:
    if invalid > INVALID_FRACTION_LIMIT * total:
        raise IntegrationFailureError(
            f"{invalid} of {total} samples invalid "
            f"(limit {INVALID_FRACTION_LIMIT:g}); geometry looks broken"
        )


def _midpoint_value(
    cavity: Cavity, n_x: int, n_phi: int, limits: TraceLimits
) -> tuple[float, int]:
    dx = 1.0 / n_x
    dphi = math.pi / n_phi
    xs = -0.5 + (np.arange(n_x) + 0.5) * dx
    phis = -0.5 * math.pi + (np.arange(n_phi) + 0.5) * dphi
    rows, invalid = _integrand_rows(cavity, xs, phis, None, limits)
    _check_invalid(invalid, n_x * n_phi)
    # Fixed x-major evaluation order; compensated reduction across rows.
    value = 0.375 * dx * dphi * math.fsum(rows)
    return value, invalid


def _simpson_value(
    cavity: Cavity, n_x: int, n_phi: int, limits: TraceLimits
) -> tuple[float, int]:
    dx = 1.0 / n_x
    dphi = math.pi / n_phi
    i = np.arange(n_x // 2 + 1, n_x + 1)
    xs = -0.5 + (i - 0.5) * dx
    k = np.arange(1, n_phi)
    phis = -0.5 * math.pi + k * dphi
    weights = np.where(k % 2 == 1, 2.0, 1.0)
    rows, invalid = _integrand_rows(cavity, xs, phis, weights, limits)
    _check_invalid(invalid, xs.size * phis.size)
    value = 0.5 * dx * dphi * math.fsum(rows)
    return value, invalid


def _half_even(n: int) -> int:
    half = n // 2
    if half % 2 != 0:
        half -= 1
    return max(2, half)


def cavity_resistance(
    cavity: Cavity,
    spec: QuadratureSpec,
    limits: TraceLimits = TraceLimits(),
    with_refinement: bool = True,
) -> ResistanceEstimate:
    """Resistance of a normalized cavity under the requested quadrature.

    The midpoint rule places nodes at cell centers, which keeps them away
    from the degenerate boundary values x = +-1/2 and phi = +-pi/2. The
    Simpson rule requires a mirror-symmetric cavity. Invalid trajectory
    samples are skipped and counted; integration fails if their fraction
    exceeds ``INVALID_FRACTION_LIMIT``. With ``with_refinement`` a second
    estimate at half resolution fills ``refinement_delta``.
    """
    if spec.rule == "simpson-symmetric":
        if not cavity.symmetric:
            raise ValueError("simpson-symmetric requires a symmetric cavity")
        value, invalid = _simpson_value(cavity, spec.n_x, spec.n_phi, limits)
    else:
        value, invalid = _midpoint_value(cavity, spec.n_x, spec.n_phi, limits)

    delta = math.nan
    if with_refinement:
        half_spec = QuadratureSpec(
            _half_even(spec.n_x), _half_even(spec.n_phi), spec.rule
        )
        half = cavity_resistance(cavity, half_spec, limits, with_refinement=False)
        delta = abs(value - half.value)
    return ResistanceEstimate(
        value=value, spec=spec, invalid_samples=invalid, refinement_delta=delta
    )


def simpson_resistance(
    cavity: Cavity,
    n_x: int,
    n_phi: int,
    limits: TraceLimits = TraceLimits(),
    with_refinement: bool = True,
) -> ResistanceEstimate:
    """Folded Simpson scheme for mirror-symmetric cavities (see module doc)."""
    spec = QuadratureSpec(n_x=n_x, n_phi=n_phi, rule="simpson-symmetric")
    return cavity_resistance(cavity, spec, limits, with_refinement)


def perimeter_ratio(eps_over_r: float) -> float:
    """Perimeter penalty of faceting a disc rim into cavity arcs.

    For cavities spanning arcs of angular size eps/r the convex hull of the
    faceted body has perimeter sin(eps/2r) / (eps/2r) times the disc's.
    """
    if not 0.0 < eps_over_r <= 2.0 * math.pi / 3.0:
        raise ValueError("eps_over_r must lie in (0, 2*pi/3]")
    half = 0.5 * eps_over_r
    return math.sin(half) / half


def perimeter_ratio_second_order(eps_over_r: float) -> float:
    """Small-arc expansion of ``perimeter_ratio``: 1 - (eps/r)**2 / 24."""
    return 1.0 - eps_over_r * eps_over_r / 24.0


def body_resistance(body: BodySpec, r_cavity: float) -> float:
    """Normalized resistance of a disc whose rim is tiled with equal cavities.

    Equals the single-cavity resistance scaled by the perimeter ratio of
    the faceted hull.
    """
    if not 0.0 < r_cavity <= MAX_RESISTANCE:
        raise ValueError("cavity resistance must lie in (0, 1.5]")
    return perimeter_ratio(body.eps_over_r) * r_cavity


def combine_cavity_resistances(
    convex_len: float,
    openings: Sequence[tuple[float, float]],
    hull_ratio: float,
) -> float:
    """Weighted mean of per-cavity resistances over a body's boundary.

    ``convex_len`` is the length of the convex (smooth) part of the
    boundary, contributing resistance 1 per unit length; ``openings`` holds
    (opening length, normalized cavity resistance) pairs; ``hull_ratio`` is
    the perimeter ratio between the body's convex hull and the enclosing
    disc.
    """
    if convex_len < 0.0:
        raise ValueError("convex boundary length must be nonnegative")
    if not 0.0 < hull_ratio <= 1.0:
        raise ValueError("hull_ratio must lie in (0, 1]")
    for length, _ in openings:
        if length <= 0.0:
            raise ValueError("opening lengths must be positive")
    total = convex_len + math.fsum(length for length, _ in openings)
    if total <= 0.0:
        raise ValueError("total boundary length must be positive")
    weighted = convex_len + math.fsum(length * r for length, r in openings)
    return hull_ratio * weighted / total
