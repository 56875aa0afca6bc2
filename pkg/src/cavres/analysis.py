"""Empirical verification of the double-parabola reflection structure,
random-census statistics, and parameter-scan data exports.

The double parabola has a critical entry angle

    phi0 = arctan(sqrt(2)/4) ~ 19.47 degrees

with three proved properties this module checks by direct simulation:

1. for |phi| > phi0 every trajectory reflects exactly three times,
   alternating between the left and right faces;
2. no trajectory reflects fewer than three times, whatever the entry;
3. consequently, trajectories with four or more reflections (which require
   |phi| < phi0) leave with an angle lag |phi - phi_plus| below 2*phi0.

The supporting closed-form bounds on the reflection ordinates derived under
the counterfactual assumption of a fourth reflection are shipped as checked
constants (``AppendixConstants``); they document the analysis and are not
asserted against real trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from .billiard import EntryState, TraceLimits, trace
from .resistance import IntegrationFailureError, QuadratureSpec, cavity_resistance
from .shapes import Cavity, InvalidShapeError, QuadraticFamilyParams, make_quadratic

# Comparisons against phi0 use a guard band: behavior exactly at the
# critical angle is not covered by the proofs.
PHI0_GUARD = 1e-12


def _phi0() -> float:
    return math.atan(math.sqrt(2.0) / 4.0)


@dataclass(frozen=True)
class AppendixConstants:
    """Closed-form constants of the double-parabola trajectory analysis.

    ``phi0`` is the critical entry angle. ``y1_star``, ``y2_star`` and
    ``y3_star`` are lower bounds for the ordinates of the first three
    reflection points of a hypothetical four-reflection trajectory with
    |phi| > phi0 (whose impossibility yields the three-reflection theorem);
    ``y3_tilde`` locates the minimum behind ``y2_star`` and ``slope_bound``
    bounds the slope of the leg arriving at the second reflection.
    """

    phi0: float
    y1_star: float
    y2_star: float
    y3_star: float
    y3_tilde: float
    slope_bound: float

    @property
    def phi0_degrees(self) -> float:
        return math.degrees(self.phi0)

    @property
    def two_phi0(self) -> float:
        return 2.0 * self.phi0


def _appendix_constants() -> AppendixConstants:
    root = math.sqrt(6.0 * math.sqrt(79.0) - 51.0)
    cube = (54.0 * math.sqrt(2.0) + 6.0 * math.sqrt(546.0)) ** (1.0 / 3.0)
    y1 = (23.0 / 10.0) * math.sqrt(2.0) - (1.0 / 90.0) * math.sqrt(
        444498.0
        - 33120.0 * math.sqrt(2.0) * root
        - 38400.0 * math.sqrt(79.0)
    )
    return AppendixConstants(
        phi0=_phi0(),
        y1_star=y1,
        y2_star=(8.0 / 9.0) * root,
        y3_star=cube / 3.0 - 8.0 / cube,
        y3_tilde=(2.0 / 3.0) * root,
        slope_bound=(23.0 / 20.0) * math.sqrt(2.0),
    )


APPENDIX = _appendix_constants()


@dataclass(frozen=True)
class CensusRecord:
    """Entry, exit, and reflection summary of one traced sample."""

    x: float
    phi: float
    exit_phi: float
    reflections: int
    faces: tuple[str, ...]
    valid: bool


@dataclass(frozen=True)
class TheoremReport:
    """Outcome of one empirical check: zero violations means pass."""

    samples: int
    violations: int
    witness: Optional[CensusRecord]
    bound_checked: str

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _record(x: float, phi: float, cavity: Cavity, limits: TraceLimits) -> CensusRecord:
    result = trace(cavity, EntryState(x, phi), limits)
    return CensusRecord(
        x=x,
        phi=phi,
        exit_phi=result.exit_phi,
        reflections=result.reflections,
        faces=result.faces,
        valid=result.valid,
    )


def _draw_open(rng: np.random.Generator, lo: float, hi: float) -> float:
    value = rng.uniform(lo, hi)
    while not lo < value < hi:
        value = rng.uniform(lo, hi)
    return value


def census(
    cavity: Cavity,
    n_samples: int,
    seed: int,
    limits: TraceLimits = TraceLimits(),
) -> list[CensusRecord]:
    """Trace n i.i.d. uniform entries (x, phi) from a seeded generator."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    records = []
    for _ in range(n_samples):
        x = _draw_open(rng, -0.5, 0.5)
        phi = _draw_open(rng, -0.5 * math.pi, 0.5 * math.pi)
        records.append(_record(x, phi, cavity, limits))
    return records


def grid_census(
    cavity: Cavity,
    xs: Iterable[float],
    phis: Iterable[float],
    limits: TraceLimits = TraceLimits(),
) -> list[CensusRecord]:
    """Trace the full (x, phi) product grid in deterministic x-major order."""
    phis = list(phis)
    return [_record(x, phi, cavity, limits) for x in xs for phi in phis]


def write_census_csv(records: Sequence[CensusRecord], stream: TextIO) -> None:
    stream.write("x,phi,exit_phi,reflections,valid\n")
    for r in records:
        stream.write(
            f"{r.x!r},{r.phi!r},{r.exit_phi!r},{r.reflections},"
            f"{'true' if r.valid else 'false'}\n"
        )


def _alternating(faces: Sequence[str], first: str) -> bool:
    expected = first
    for face in faces:
        if face != expected:
            return False
        expected = "right" if expected == "left" else "left"
    return True


def verify_theorem1(records: Sequence[CensusRecord]) -> TheoremReport:
    """Check: |phi| > phi0 implies exactly 3 reflections on alternating faces."""
    phi0 = APPENDIX.phi0
    checked = 0
    violations = 0
    witness = None
    for r in records:
        if not r.valid or abs(r.phi) <= phi0 + PHI0_GUARD:
            continue
        checked += 1
        first = "left" if r.phi > 0.0 else "right"
        if r.reflections != 3 or not _alternating(r.faces, first):
            violations += 1
            if witness is None:
                witness = r
    return TheoremReport(
        samples=checked,
        violations=violations,
        witness=witness,
        bound_checked="reflections == 3 with alternating faces for |phi| > phi0",
    )


def verify_theorem2(records: Sequence[CensusRecord]) -> TheoremReport:
    """Check: every valid trajectory has at least 3 reflections."""
    checked = 0
    violations = 0
    witness = None
    for r in records:
        if not r.valid:
            continue
        checked += 1
        if r.reflections < 3:
            violations += 1
            if witness is None:
                witness = r
    return TheoremReport(
        samples=checked,
        violations=violations,
        witness=witness,
        bound_checked="reflections >= 3 for every valid trajectory",
    )


def verify_corollary(records: Sequence[CensusRecord]) -> TheoremReport:
    """Check: reflections >= 4 implies |phi - phi_plus| < 2*phi0.

    Vacuously passes when no record has four or more reflections; the
    maximum observed lag is reported either way.
    """
    bound = APPENDIX.two_phi0
    checked = 0
    violations = 0
    witness = None
    max_lag = 0.0
    for r in records:
        if not r.valid or r.reflections < 4:
            continue
        checked += 1
        lag = abs(r.phi - r.exit_phi)
        max_lag = max(max_lag, lag)
        if not lag < bound:
            violations += 1
            if witness is None:
                witness = r
    return TheoremReport(
        samples=checked,
        violations=violations,
        witness=witness,
        bound_checked=(
            f"max |phi - phi_plus| = {max_lag!r} < 2*phi0 = {bound!r} "
            f"over trajectories with >= 4 reflections"
        ),
    )


def verify_appendix_structure(
    cavity: Cavity,
    n_samples: int,
    seed: int,
    limits: TraceLimits = TraceLimits(),
) -> TheoremReport:
    """Check the three-bounce skeleton for phi > phi0 on the double parabola.

    Sampled trajectories must hit left, right, left; climb between the
    first and second reflections; descend between the second and third; and
    keep the third reflection strictly above the opening line.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    phi_lo = APPENDIX.phi0 + PHI0_GUARD
    phi_hi = 0.5 * math.pi
    checked = 0
    violations = 0
    witness = None
    for _ in range(n_samples):
        x = _draw_open(rng, -0.5, 0.5)
        phi = _draw_open(rng, phi_lo, phi_hi)
        result = trace(cavity, EntryState(x, phi), limits)
        r = CensusRecord(
            x=x,
            phi=phi,
            exit_phi=result.exit_phi,
            reflections=result.reflections,
            faces=result.faces,
            valid=result.valid,
        )
        if not r.valid:
            continue
        checked += 1
        ok = r.faces == ("left", "right", "left") and r.reflections == 3
        if ok:
            y1, y2, y3 = (p.y for p in result.points)
            ok = y2 > y1 and y3 < y2 and y3 > 0.0
        if not ok:
            violations += 1
            if witness is None:
                witness = r
    return TheoremReport(
        samples=checked,
        violations=violations,
        witness=witness,
        bound_checked=(
            "faces (left, right, left) with y2 > y1, y3 < y2, y3 > 0 "
            "for phi > phi0"
        ),
    )


def diagonal_concentration(
    records: Sequence[CensusRecord], tol: float = math.radians(5.0)
) -> tuple[float, float]:
    """Fractions of valid records near the retroreflection diagonal
    phi_plus = phi and near the mirror diagonal phi_plus = -phi."""
    valid = [r for r in records if r.valid]
    if not valid:
        return 0.0, 0.0
    near_retro = sum(1 for r in valid if abs(r.exit_phi - r.phi) < tol)
    near_mirror = sum(1 for r in valid if abs(r.exit_phi + r.phi) < tol)
    return near_retro / len(valid), near_mirror / len(valid)


def scan_r_of_h(
    beta: float,
    h_values: Iterable[float],
    quad: QuadratureSpec,
    limits: TraceLimits = TraceLimits(),
) -> list[tuple[float, float]]:
    """Resistance of the quadratic family along h at fixed beta.

    Rows whose parameters describe invalid shapes, or whose trajectories
    blow past the reflection cap, carry NaN (raise the cap for wide scans
    over tall shapes).
    """
    rows = []
    for h in h_values:
        try:
            cavity = make_quadratic(QuadraticFamilyParams(h=float(h), beta=beta))
            value = cavity_resistance(
                cavity, quad, limits=limits, with_refinement=False
            ).value
        except (InvalidShapeError, IntegrationFailureError):
            value = math.nan
        rows.append((float(h), value))
    return rows


def scan_r_grid(
    h_values: Iterable[float],
    beta_values: Iterable[float],
    quad: QuadratureSpec,
    limits: TraceLimits = TraceLimits(),
) -> list[tuple[float, float, float]]:
    """Resistance of the quadratic family over the (h, beta) product grid."""
    beta_values = list(beta_values)
    rows = []
    for h in h_values:
        for beta in beta_values:
            try:
                cavity = make_quadratic(
                    QuadraticFamilyParams(h=float(h), beta=float(beta))
                )
                value = cavity_resistance(
                    cavity, quad, limits=limits, with_refinement=False
                ).value
            except (InvalidShapeError, IntegrationFailureError):
                value = math.nan
            rows.append((float(h), float(beta), value))
    return rows
