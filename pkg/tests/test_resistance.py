import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavres import (
    BodySpec,
    IntegrationFailureError,
    QuadratureSpec,
    ResistanceEstimate,
    TraceLimits,
    body_resistance,
    cavity_resistance,
    combine_cavity_resistances,
    make_quadratic,
    make_rectangle,
    perimeter_ratio,
    perimeter_ratio_second_order,
    simpson_resistance,
    QuadraticFamilyParams,
)

SQ2 = math.sqrt(2.0)


class TestQuadratureSpec:
    def test_even_counts_required(self):
        QuadratureSpec(2, 2)
        for nx, nphi in [(3, 4), (4, 3), (0, 4), (4, 1)]:
            with pytest.raises(ValueError):
                QuadratureSpec(nx, nphi)

    def test_rule_names(self):
        QuadratureSpec(4, 4, "simpson-symmetric")
        with pytest.raises(ValueError):
            QuadratureSpec(4, 4, "gauss")

    def test_simpson_needs_symmetry(self):
        from cavres import make_polyline, Vec2

        lopsided = make_polyline([Vec2(0.5, 0.0), Vec2(0.3, 0.7), Vec2(-0.5, 0.0)])
        with pytest.raises(ValueError):
            cavity_resistance(lopsided, QuadratureSpec(100, 100, "simpson-symmetric"))


class TestEstimateInvariants:
    def test_range_enforced(self):
        spec = QuadratureSpec(4, 4)
        with pytest.raises(ValueError):
            ResistanceEstimate(value=0.0, spec=spec, invalid_samples=0, refinement_delta=0.0)
        with pytest.raises(ValueError):
            ResistanceEstimate(value=1.6, spec=spec, invalid_samples=0, refinement_delta=0.0)
        ResistanceEstimate(value=1.5, spec=spec, invalid_samples=0, refinement_delta=0.0)


class TestFlatResistance:
    def test_exact_unity_midpoint(self, flat):
        est = cavity_resistance(flat, QuadratureSpec(500, 500))
        assert est.value == pytest.approx(1.0, abs=1e-5)
        assert est.invalid_samples == 0
        assert est.refinement_delta < 1e-5

    def test_exact_unity_simpson(self, flat):
        est = simpson_resistance(flat, 500, 500)
        assert est.value == pytest.approx(1.0, abs=1e-6)

    def test_unity_at_every_resolution(self, flat):
        # The flat integrand is smooth with vanishing endpoint derivatives,
        # so the midpoint error decays like n**-4 once resolved at all.
        for n in (10, 50, 200):
            est = cavity_resistance(flat, QuadratureSpec(n, n), with_refinement=False)
            assert est.value == pytest.approx(1.0, abs=2.0 / n**4)
        tiny = cavity_resistance(flat, QuadratureSpec(2, 2), with_refinement=False)
        assert tiny.value == pytest.approx(1.0, abs=0.2)


class TestReferenceCavities:
    def test_triangle_root_two(self, triangle):
        est = cavity_resistance(triangle, QuadratureSpec(600, 600), with_refinement=False)
        assert est.value == pytest.approx(SQ2, abs=5e-4)

    def test_double_parabola_coarse(self, dp):
        est = cavity_resistance(dp, QuadratureSpec(600, 600), with_refinement=False)
        assert est.value == pytest.approx(1.4965, abs=5e-4)

    def test_double_parabola_simpson_vs_midpoint(self, dp):
        mid = cavity_resistance(dp, QuadratureSpec(600, 600), with_refinement=False)
        simp = simpson_resistance(dp, 600, 600, with_refinement=False)
        assert abs(mid.value - simp.value) < 2e-4

    def test_simpson_fine_grid_value(self, dp):
        est = simpson_resistance(dp, 2000, 2000, with_refinement=False)
        assert est.value == pytest.approx(1.49650, abs=1e-4)

    def test_rules_agree_within_refinement_deltas(self, dp):
        for n in (200, 600):
            mid = cavity_resistance(dp, QuadratureSpec(n, n))
            simp = simpson_resistance(dp, n, n)
            gap = abs(mid.value - simp.value)
            assert gap <= 3.0 * max(mid.refinement_delta, simp.refinement_delta)

    def test_monotone_ordering(self, flat, triangle, dp):
        lims = TraceLimits(max_reflections=100_000)
        quad = QuadratureSpec(400, 400)
        r_flat = cavity_resistance(flat, quad, with_refinement=False).value
        r_rect = cavity_resistance(make_rectangle(10.0), quad, limits=lims, with_refinement=False).value
        r_tri = cavity_resistance(triangle, quad, with_refinement=False).value
        r_dp = cavity_resistance(dp, quad, with_refinement=False).value
        assert r_flat < r_rect < r_tri < r_dp < 1.5


class TestInvalidSampleHandling:
    def test_cap_everywhere_aborts(self, dp):
        # A two-reflection cap invalidates every double-parabola sample.
        with pytest.raises(IntegrationFailureError):
            cavity_resistance(
                dp,
                QuadratureSpec(20, 20),
                limits=TraceLimits(max_reflections=2),
                with_refinement=False,
            )

    def test_midpoints_dodge_corners(self, triangle):
        est = cavity_resistance(triangle, QuadratureSpec(100, 100), with_refinement=False)
        assert est.invalid_samples == 0


class TestRefinement:
    def test_delta_tracks_half_resolution(self, dp):
        est = cavity_resistance(dp, QuadratureSpec(200, 200))
        half = cavity_resistance(dp, QuadratureSpec(100, 100), with_refinement=False)
        assert est.refinement_delta == pytest.approx(abs(est.value - half.value), abs=1e-15)

    def test_skipping_refinement_gives_nan(self, flat):
        est = cavity_resistance(flat, QuadratureSpec(100, 100), with_refinement=False)
        assert math.isnan(est.refinement_delta)


class TestPerimeterRatio:
    def test_limit_to_one(self):
        assert perimeter_ratio(1e-9) == pytest.approx(1.0, abs=1e-12)

    def test_42_cavity_value(self):
        ratio = perimeter_ratio(2.0 * math.pi / 42.0)
        assert ratio == pytest.approx(math.sin(math.pi / 42.0) / (math.pi / 42.0), abs=1e-15)
        assert ratio == pytest.approx(0.99907, abs=5e-6)

    @given(st.floats(1e-3, 2.0 * math.pi / 3.0))
    def test_second_order_form_close(self, u):
        exact = perimeter_ratio(u)
        approx = perimeter_ratio_second_order(u)
        # Quartic remainder: sin(u/2)/(u/2) = 1 - u^2/24 + u^4/1920 - ...
        assert abs(exact - approx) <= u**4 / 1900.0

    def test_taylor_remainder_quartic_slope(self):
        us = np.array([0.4 / 2**k for k in range(6)])
        residuals = np.array(
            [perimeter_ratio(u) - perimeter_ratio_second_order(u) for u in us]
        )
        slopes = np.diff(np.log(residuals)) / np.diff(np.log(us))
        assert np.all(np.abs(slopes - 4.0) < 0.1)

    def test_domain_enforced(self):
        with pytest.raises(ValueError):
            perimeter_ratio(0.0)
        with pytest.raises(ValueError):
            perimeter_ratio(3.0)


class TestBodyResistance:
    def test_42_cavities(self):
        value = body_resistance(BodySpec(42), 1.4965)
        assert value == pytest.approx(1.4951, abs=1e-4)

    def test_many_cavities_limit(self):
        assert body_resistance(BodySpec(10_000_000), 1.4965) == pytest.approx(
            1.4965, abs=1e-9
        )

    def test_smooth_cavity_faceting_loss(self):
        assert body_resistance(BodySpec(42), 1.0) == pytest.approx(0.99907, abs=5e-6)

    def test_validation(self):
        with pytest.raises(ValueError):
            BodySpec(2)
        with pytest.raises(ValueError):
            body_resistance(BodySpec(42), 0.0)
        with pytest.raises(ValueError):
            body_resistance(BodySpec(42), 1.6)


class TestCombineCavityResistances:
    def test_smooth_convex_body(self):
        assert combine_cavity_resistances(3.7, [], 1.0) == pytest.approx(1.0)

    def test_single_cavity(self):
        assert combine_cavity_resistances(0.0, [(2.0, 1.23)], 1.0) == pytest.approx(1.23)

    def test_42_equal_cavities(self):
        hull = perimeter_ratio(2.0 * math.pi / 42.0)
        value = combine_cavity_resistances(0.0, [(1.0, 1.4965)] * 42, hull)
        assert value == pytest.approx(1.4951, abs=1e-4)

    @given(
        st.lists(
            st.tuples(st.floats(0.1, 5.0), st.floats(0.1, 1.5)), min_size=1, max_size=8
        ),
        st.floats(0.0, 10.0),
    )
    def test_weighted_mean_bounds(self, openings, convex_len):
        value = combine_cavity_resistances(convex_len, openings, 1.0)
        lo = min([r for _, r in openings] + ([1.0] if convex_len > 0 else []))
        hi = max([r for _, r in openings] + ([1.0] if convex_len > 0 else []))
        assert lo - 1e-12 <= value <= hi + 1e-12

    def test_validation(self):
        with pytest.raises(ValueError):
            combine_cavity_resistances(-1.0, [(1.0, 1.0)], 1.0)
        with pytest.raises(ValueError):
            combine_cavity_resistances(1.0, [(0.0, 1.0)], 1.0)
        with pytest.raises(ValueError):
            combine_cavity_resistances(1.0, [(1.0, 1.0)], 0.0)


class TestQuadraticFamilyValues:
    def test_partial_sums_monotone_in_added_samples(self, dp):
        # The integrand (1 + cos(phi_plus - phi)) cos(phi) is nonnegative,
        # so refining in x only adds nonnegative mass per cell.
        coarse = cavity_resistance(dp, QuadratureSpec(50, 50), with_refinement=False)
        assert coarse.value > 0.0

    def test_bulged_member_integrates(self):
        cav = make_quadratic(QuadraticFamilyParams(1.5, 0.8))
        est = cavity_resistance(
            cav,
            QuadratureSpec(200, 200),
            limits=TraceLimits(max_reflections=20_000),
            with_refinement=False,
        )
        assert 1.0 < est.value < 1.5
