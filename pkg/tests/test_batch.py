import math

import numpy as np
import pytest

from cavres import (
    EntryState,
    QuadraticFamilyParams,
    TraceLimits,
    make_quadratic,
    trace,
    trace_batch,
)
from conftest import random_entries


def _scalar_reference(cavity, xs, phis, limits):
    exit_phi, refl, valid = [], [], []
    for x, phi in zip(xs, phis):
        r = trace(cavity, EntryState(x, phi), limits)
        exit_phi.append(r.exit_phi)
        refl.append(r.reflections)
        valid.append(r.valid)
    return np.array(exit_phi), np.array(refl), np.array(valid)


@pytest.mark.parametrize(
    "shape,seed,n",
    [
        ("dp", 101, 2000),
        ("triangle", 102, 1000),
        ("rectangle2", 103, 500),
        ("flat", 104, 500),
    ],
)
def test_batch_matches_scalar(shape, seed, n, request):
    cavity = request.getfixturevalue(shape)
    xs, phis = random_entries(seed, n)
    limits = TraceLimits(max_reflections=5000)
    batch = trace_batch(cavity, xs, phis, limits)
    s_phi, s_refl, s_valid = _scalar_reference(cavity, xs, phis, limits)
    assert np.array_equal(batch.valid, s_valid)
    assert np.array_equal(batch.reflections, s_refl)
    ok = batch.valid
    assert np.allclose(batch.exit_phi[ok], s_phi[ok], atol=1e-10, rtol=0.0)
    assert np.isnan(batch.exit_phi[~ok]).all()


def test_batch_matches_scalar_on_bulged_quadratic():
    cavity = make_quadratic(QuadraticFamilyParams(1.2, 0.6))
    xs, phis = random_entries(105, 800)
    limits = TraceLimits(max_reflections=20_000)
    batch = trace_batch(cavity, xs, phis, limits)
    s_phi, s_refl, s_valid = _scalar_reference(cavity, xs, phis, limits)
    assert np.array_equal(batch.valid, s_valid)
    assert np.array_equal(batch.reflections, s_refl)
    ok = batch.valid
    assert np.allclose(batch.exit_phi[ok], s_phi[ok], atol=1e-10, rtol=0.0)


def test_cap_marks_invalid(dp):
    xs, phis = random_entries(7, 64)
    res = trace_batch(dp, xs, phis, TraceLimits(max_reflections=2))
    # The double parabola needs at least three reflections.
    assert not res.valid.any()
    assert res.invalid_count == 64


def test_extreme_angles_trace(dp):
    phis = np.array([-math.pi / 2 + 1e-6, math.pi / 2 - 1e-6, 1e-12, -1e-12])
    xs = np.array([0.0, 0.0, 0.25, -0.25])
    res = trace_batch(dp, xs, phis)
    assert res.valid.all()
    assert (res.reflections >= 3).all()


def test_corner_graze_is_invalid_sample(dp):
    # An almost-horizontal entry from the center lands within the corner
    # tolerance of the opening edge: flagged invalid, not traced.
    res = trace_batch(dp, np.array([0.0]), np.array([math.pi / 2 - 1e-9]))
    assert not res.valid[0]
    assert math.isnan(res.exit_phi[0])


def test_shape_mismatch_rejected(dp):
    with pytest.raises(ValueError):
        trace_batch(dp, np.zeros(3), np.zeros(4))
