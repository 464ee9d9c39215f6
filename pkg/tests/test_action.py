"""Tests for path actions, least action, and the verification experiments."""

import numpy as np
import pytest

from mal.action import (
    ActionReport,
    LeastActionQuery,
    competitor_paths,
    connecting_geodesic,
    least_action,
    midpoint_convexity_margin,
    path_action,
    verify_action_convexity,
    verify_comparison_inequality,
    verify_jacobi_convexity,
    verify_least_action,
    verify_least_action_continuity,
    verify_noether,
)
from mal.errors import GenerationFailed, HomogeneityRequired
from mal.fixtures import random_potential
from mal.geodesics import EpsGeodesicProblem, solve_epsilon_geodesic, weak_geodesic
from mal.grid import Grid, make_potential
from mal.lagrangians import LorentzWeak, Orlicz, Power
from mal.transport import PotentialPath, linear_path


def constant_potential(grid, value):
    return make_potential(np.full((grid.n, grid.n), float(value)), grid)


def native_scalar_path(grid, profile, intervals):
    """Solver-native path of constants u(t) = profile(t) on [0, 1]."""
    times = np.linspace(0.0, 1.0, intervals + 1)
    knots = tuple(constant_potential(grid, profile(t)) for t in times)
    times.setflags(write=False)
    return PotentialPath(times, knots, "solver-native")


def quadratic_lagrangian():
    return Orlicz(lambda t: t * t, label="orlicz:p2")


class TestActionReport:
    def test_value_must_match_contributions(self):
        with pytest.raises(ValueError):
            ActionReport(1.0, (0.4, 0.4), "midpoint")

    def test_unknown_quadrature_rejected(self):
        with pytest.raises(ValueError):
            ActionReport(1.0, (1.0,), "trapezoid")


class TestQueryValidation:
    def test_grid_mismatch(self):
        a = constant_potential(Grid(8), 0.0)
        b = constant_potential(Grid(16), 1.0)
        with pytest.raises(ValueError):
            LeastActionQuery(a, b, 1.0, Power(1.0))

    @pytest.mark.parametrize("duration", [0.0, -1.0])
    def test_duration_positive(self, duration):
        g = Grid(8)
        with pytest.raises(ValueError):
            LeastActionQuery(
                constant_potential(g, 0.0), constant_potential(g, 1.0), duration, Power(1.0)
            )

    def test_tol_positive(self):
        g = Grid(8)
        with pytest.raises(ValueError):
            LeastActionQuery(
                constant_potential(g, 0.0), constant_potential(g, 1.0), 1.0, Power(1.0), tol=0.0
            )


class TestPathAction:
    def test_constant_path_vanishes(self):
        g = Grid(8)
        c = constant_potential(g, 0.4)
        path = linear_path(c, c, 0.0, 2.0, 3)
        report = path_action(quadratic_lagrangian(), path)
        assert report.value == 0.0
        assert report.quadrature == "right-endpoint"

    def test_linear_constants_power_two(self):
        g = Grid(8)
        path = linear_path(constant_potential(g, 0.0), constant_potential(g, 0.7), 0.0, 1.0, 4)
        assert path_action(Power(2.0), path).value == pytest.approx(0.7, abs=1e-12)

    def test_linear_constants_quadratic_orlicz(self):
        g = Grid(8)
        path = linear_path(constant_potential(g, 0.0), constant_potential(g, 0.7), 0.0, 1.0, 4)
        assert path_action(quadratic_lagrangian(), path).value == pytest.approx(0.49, abs=1e-12)

    def test_contributions_sum_to_value(self):
        g = Grid(8)
        path = linear_path(constant_potential(g, -0.3), constant_potential(g, 0.5), 0.0, 1.0, 5)
        report = path_action(Power(1.0), path)
        assert len(report.contributions) == 5
        assert report.value == pytest.approx(sum(report.contributions), rel=1e-15)

    def test_piecewise_linear_right_endpoint_exact(self):
        """Per-segment constant speeds make the composite rule a finite sum."""
        g = Grid(8)
        times = np.array([0.0, 0.25, 1.0])
        knots = (
            constant_potential(g, 0.0),
            constant_potential(g, 0.6),
            constant_potential(g, 0.2),
        )
        times.setflags(write=False)
        path = PotentialPath(times, knots, "piecewise-linear")
        expected = 0.25 * (0.6 / 0.25) + 0.75 * (0.4 / 0.75)
        assert path_action(Power(1.0), path).value == pytest.approx(expected, abs=1e-12)

    def test_native_quadratic_scalar_path_exact(self):
        """Interval quotients hit the midpoint velocity of a quadratic exactly."""
        g = Grid(8)
        path = native_scalar_path(g, lambda t: t * t, 8)
        assert path_action(Power(1.0), path).value == pytest.approx(1.0, abs=1e-12)
        assert path_action(Power(1.0), path).quadrature == "midpoint"

    def test_native_cubic_path_second_order(self):
        g = Grid(8)
        spec = quadratic_lagrangian()
        errs = [
            abs(path_action(spec, native_scalar_path(g, lambda t: t**3, m)).value - 9.0 / 5.0)
            for m in (4, 8, 16)
        ]
        assert errs[0] > errs[1] > errs[2]
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


class TestLeastAction:
    def test_equal_endpoints_zero(self):
        g = Grid(8)
        u = constant_potential(g, 0.3)
        q = LeastActionQuery(u, u, 2.0, Power(1.0), tol=1e-7, time_steps=8)
        assert least_action(q) == pytest.approx(0.0, abs=1e-6)

    @pytest.mark.parametrize("scheme", ["spectral", "central"])
    def test_constants_power_one(self, scheme):
        g = Grid(8, scheme)
        q = LeastActionQuery(
            constant_potential(g, -0.2), constant_potential(g, 0.5), 2.0, Power(1.0), time_steps=8
        )
        assert least_action(q) == pytest.approx(0.7, abs=1e-6)

    def test_constants_quadratic_orlicz(self):
        g = Grid(8)
        q = LeastActionQuery(
            constant_potential(g, 0.0),
            constant_potential(g, 0.6),
            2.0,
            quadratic_lagrangian(),
            time_steps=8,
        )
        assert least_action(q) == pytest.approx(0.36 / 2.0, abs=1e-6)

    def test_homogeneous_duration_invariance(self):
        g = Grid(16)
        rng = np.random.default_rng(40)
        u_a = random_potential(g, rng)
        u_b = random_potential(g, rng)
        vals = [
            least_action(LeastActionQuery(u_a, u_b, T, Power(1.0), time_steps=16))
            for T in (0.5, 1.0, 2.0)
        ]
        assert max(vals) - min(vals) < 1e-7

    def test_never_beats_linear_path(self):
        g = Grid(16)
        rng = np.random.default_rng(40)
        u_a = random_potential(g, rng)
        u_b = random_potential(g, rng)
        spec = quadratic_lagrangian()
        q = LeastActionQuery(u_a, u_b, 1.0, spec, time_steps=16)
        linear = path_action(spec, linear_path(u_a, u_b, 0.0, 1.0, 8)).value
        assert least_action(q) <= linear + 1e-8

    def test_concatenation_superadditivity_constants(self):
        g = Grid(8)
        spec = quadratic_lagrangian()
        w, w_mid, w_end = (constant_potential(g, v) for v in (0.0, 0.7, 0.3))
        l_first = least_action(LeastActionQuery(w, w_mid, 1.0, spec, time_steps=8))
        l_second = least_action(LeastActionQuery(w_mid, w_end, 0.5, spec, time_steps=8))
        l_joined = least_action(LeastActionQuery(w, w_end, 1.5, spec, time_steps=8))
        assert l_first + l_second >= l_joined - 1e-8
        assert l_first + l_second == pytest.approx(0.49 + 0.16 / 0.5, abs=1e-6)

    def test_concatenation_superadditivity_generic(self):
        g = Grid(16)
        rng = np.random.default_rng(40)
        u_a, u_b, u_c = (random_potential(g, rng) for _ in range(3))
        spec = quadratic_lagrangian()
        l_first = least_action(LeastActionQuery(u_a, u_b, 1.0, spec, time_steps=16))
        l_second = least_action(LeastActionQuery(u_b, u_c, 0.5, spec, time_steps=16))
        l_joined = least_action(LeastActionQuery(u_a, u_c, 1.5, spec, time_steps=16))
        assert l_first + l_second >= l_joined - 1e-8

    def test_even_spec_symmetry(self):
        g = Grid(16)
        rng = np.random.default_rng(40)
        u_a = random_potential(g, rng)
        u_b = random_potential(g, rng)
        forward = least_action(LeastActionQuery(u_a, u_b, 1.0, Power(2.0), time_steps=16))
        backward = least_action(LeastActionQuery(u_b, u_a, 1.0, Power(2.0), time_steps=16))
        assert forward == pytest.approx(backward, abs=2e-6)

    def test_precomputed_geodesic_reused(self):
        g = Grid(8)
        q = LeastActionQuery(
            constant_potential(g, 0.0), constant_potential(g, 0.5), 1.0, Power(1.0), time_steps=8
        )
        geo = connecting_geodesic(q)
        assert least_action(q, geodesic=geo) == least_action(q)


class TestCompetitorPaths:
    def test_zero_budget_is_linear_path(self):
        g = Grid(8)
        u_a = constant_potential(g, 0.0)
        u_b = constant_potential(g, 1.0)
        paths = competitor_paths(u_a, u_b, 2.0, 3, seed=0, knot_budget=0)
        assert len(paths) == 3
        for p in paths:
            assert len(p.knots) == 2
            assert p.knots[0] is u_a and p.knots[1] is u_b

    def test_interior_knot_count_and_endpoints(self):
        g = Grid(16)
        rng = np.random.default_rng(3)
        u_a = random_potential(g, rng)
        u_b = random_potential(g, rng)
        for p in competitor_paths(u_a, u_b, 1.0, 4, seed=1, knot_budget=3):
            assert len(p.knots) == 5
            assert p.knots[0] is u_a and p.knots[-1] is u_b
            assert p.interpolation == "piecewise-linear"

    def test_seed_determinism(self):
        g = Grid(16)
        rng = np.random.default_rng(3)
        u_a = random_potential(g, rng)
        u_b = random_potential(g, rng)
        first = competitor_paths(u_a, u_b, 1.0, 3, seed=5)
        second = competitor_paths(u_a, u_b, 1.0, 3, seed=5)
        other = competitor_paths(u_a, u_b, 1.0, 3, seed=6)
        for a, b in zip(first, second):
            assert np.array_equal(a.times, b.times)
            assert np.array_equal(a.fields, b.fields)
        assert not np.array_equal(first[0].fields, other[0].fields)

    @pytest.mark.parametrize("count", [0, -2])
    def test_count_validation(self, count):
        g = Grid(8)
        u = constant_potential(g, 0.0)
        with pytest.raises(ValueError):
            competitor_paths(u, u, 1.0, count, seed=0)

    def test_budget_validation(self):
        g = Grid(8)
        u = constant_potential(g, 0.0)
        with pytest.raises(ValueError):
            competitor_paths(u, u, 1.0, 1, seed=0, knot_budget=-1)

    def test_generation_failure_on_hopeless_amplitude(self):
        g = Grid(8)
        u = constant_potential(g, 0.0)
        with pytest.raises(GenerationFailed):
            competitor_paths(u, u, 1.0, 1, seed=0, knot_budget=1, amplitude=1e18)


class TestVerifyLeastAction:
    def test_constants_report_passes(self):
        """Coarse grids need gentler competitor knots to tame quadrature bias."""
        g = Grid(8)
        q = LeastActionQuery(
            constant_potential(g, 0.0),
            constant_potential(g, 1.0),
            1.0,
            quadratic_lagrangian(),
            time_steps=16,
        )
        report = verify_least_action(q, count=6, seed=2, tol=5e-3, amplitude=0.02)
        assert report.passed
        assert len(report.provenance["margins"]) == 6

    def test_reparametrized_competitor_jensen(self):
        """Non-constant speed raises the quadratic action above the geodesic's."""
        g = Grid(8)
        spec = quadratic_lagrangian()
        u_a = constant_potential(g, 0.0)
        u_b = constant_potential(g, 1.0)
        times = np.array([0.0, 0.3, 1.0])
        times.setflags(write=False)
        competitor = PotentialPath(
            times, (u_a, constant_potential(g, 0.7), u_b), "piecewise-linear"
        )
        hand = 0.3 * (0.7 / 0.3) ** 2 + 0.7 * (0.3 / 0.7) ** 2
        assert path_action(spec, competitor).value == pytest.approx(hand, abs=1e-12)
        q = LeastActionQuery(u_a, u_b, 1.0, spec, time_steps=8)
        assert least_action(q) <= path_action(spec, competitor).value

    @pytest.mark.parametrize("scheme", ["spectral", "central"])
    def test_generic_fixture_passes(self, scheme):
        g = Grid(16, scheme)
        rng = np.random.default_rng(17)
        u_a = random_potential(g, rng)
        u_b = random_potential(g, rng)
        q = LeastActionQuery(u_a, u_b, 1.0, Power(1.0), time_steps=16, tol=1e-6)
        report = verify_least_action(q, count=10, seed=17, tol=5e-3)
        assert report.passed
        assert min(report.provenance["margins"]) > -5e-3

    def test_geodesic_reuse_matches(self):
        g = Grid(16)
        rng = np.random.default_rng(17)
        u_a = random_potential(g, rng)
        u_b = random_potential(g, rng)
        q = LeastActionQuery(u_a, u_b, 1.0, Power(1.0), time_steps=16)
        geo = connecting_geodesic(q)
        direct = verify_least_action(q, count=4, seed=0)
        reused = verify_least_action(q, count=4, seed=0, geodesic=geo)
        assert direct.worst == reused.worst
        assert direct.provenance["margins"] == reused.provenance["margins"]


class TestVerifyComparison:
    def test_homogeneity_required(self):
        g = Grid(8)
        path = linear_path(constant_potential(g, 0.0), constant_potential(g, 1.0), 0.0, 1.0, 2)
        with pytest.raises(HomogeneityRequired):
            verify_comparison_inequality(quadratic_lagrangian(), path, constant_potential(g, 0.0))

    def test_constants_triangle_power_one(self):
        """Scalar legs: apex sag cancels in the difference of leg values."""
        g = Grid(8)
        path = linear_path(constant_potential(g, 0.2), constant_potential(g, 0.9), 0.0, 1.0, 2)
        report = verify_comparison_inequality(
            Power(1.0), path, constant_potential(g, 0.0), leg_duration=1.0
        )
        assert report.passed
        assert report.provenance["margin"] == pytest.approx(0.0, abs=1e-6)

    def test_degenerate_apex_uses_constant_leg(self):
        g = Grid(16)
        rng = np.random.default_rng(23)
        u_a = random_potential(g, rng)
        u_b = random_potential(g, rng)
        path = linear_path(u_a, u_b, 0.0, 1.0, 4)
        report = verify_comparison_inequality(Power(1.0), path, u_a)
        assert report.passed
        assert report.provenance["leg_values"][0] == 0.0

    @pytest.mark.parametrize("spec", [Power(1.0), LorentzWeak(0.5)], ids=["power", "lorentz"])
    def test_generic_triangle(self, spec):
        g = Grid(16)
        rng = np.random.default_rng(29)
        apex = random_potential(g, rng)
        u_a = random_potential(g, rng)
        u_b = random_potential(g, rng)
        path = linear_path(u_a, u_b, 0.0, 1.0, 4)
        report = verify_comparison_inequality(spec, path, apex, tol=5e-3)
        assert report.passed

    def test_all_vertices_equal(self):
        g = Grid(8)
        u = constant_potential(g, 0.2)
        path = linear_path(u, u, 0.0, 1.0, 2)
        report = verify_comparison_inequality(Power(1.0), path, u)
        assert report.passed
        assert report.worst == 0.0


class TestVerifyNoether:
    def test_linear_constants_exactly_constant(self):
        g = Grid(8)
        path = linear_path(constant_potential(g, 0.0), constant_potential(g, 0.8), 0.0, 1.0, 6)
        report = verify_noether(Power(1.0), path, tol=1e-12)
        assert report.passed
        assert report.worst < 1e-14

    @pytest.mark.parametrize("scheme", ["spectral", "central"])
    @pytest.mark.parametrize("spec", [Power(1.0), LorentzWeak(0.5)], ids=["power", "lorentz"])
    def test_weak_geodesic_conserves(self, scheme, spec):
        g = Grid(16, scheme)
        rng = np.random.default_rng(40)
        u_a = random_potential(g, rng)
        u_b = random_potential(g, rng)
        path = weak_geodesic(u_a, u_b, (0.0, 1.0), tol=1e-6, time_steps=16)
        report = verify_noether(spec, path, tol=5e-3)
        assert report.passed
        assert report.provenance["pairwise_l1"] <= 5e-3

    def test_deviation_shrinks_under_refinement(self):
        worsts = []
        for n, steps in ((16, 16), (32, 32)):
            g = Grid(n)
            rng = np.random.default_rng(40)
            u_a = random_potential(g, rng)
            u_b = random_potential(g, rng)
            path = weak_geodesic(u_a, u_b, (0.0, 1.0), tol=1e-6, time_steps=steps)
            worsts.append(verify_noether(Power(1.0), path).worst)
        assert worsts[1] < worsts[0]
        assert worsts[1] < 5e-3

    def test_non_geodesic_violates(self):
        g = Grid(16)
        rng = np.random.default_rng(40)
        u_a = random_potential(g, rng)
        u_b = random_potential(g, rng)
        report = verify_noether(Power(1.0), linear_path(u_a, u_b, 0.0, 1.0, 8), tol=1e-6)
        assert not report.passed
        assert report.worst > 1e-4


class TestJacobiConvexity:
    def test_constant_directions_flat(self):
        g = Grid(8)
        p = EpsGeodesicProblem(
            constant_potential(g, 0.0), constant_potential(g, 0.5), (0.0, 1.0), 0.5, time_steps=8
        )
        shape = (g.n, g.n)
        report = verify_jacobi_convexity(
            Power(1.0), p, np.full(shape, 0.2), np.full(shape, 0.6)
        )
        assert report.passed

    def test_zero_directions_flat(self):
        g = Grid(8)
        p = EpsGeodesicProblem(
            constant_potential(g, 0.0), constant_potential(g, 0.5), (0.0, 1.0), 0.5, time_steps=8
        )
        zero = np.zeros((g.n, g.n))
        report = verify_jacobi_convexity(Power(1.0), p, zero, zero)
        assert report.passed
        assert report.worst == 0.0

    @pytest.mark.parametrize("eps", [1.0, 0.1, 0.01])
    def test_generic_directions_all_specs(self, eps):
        g = Grid(16)
        rng = np.random.default_rng(11)
        u_a = random_potential(g, rng)
        u_b = random_potential(g, rng)
        xs, ys = g.coords()
        d_a = 0.02 * np.cos(2.0 * np.pi * xs)
        d_b = 0.02 * np.sin(2.0 * np.pi * ys)
        p = EpsGeodesicProblem(u_a, u_b, (0.0, 1.0), eps, time_steps=16, solver_tol=1e-10)
        sol = solve_epsilon_geodesic(p)
        from mal.geodesics import jacobi_field

        xi = jacobi_field(p, d_a, d_b, delta=1e-3)
        for spec in (Power(1.0), Power(2.0), LorentzWeak(0.5), quadratic_lagrangian()):
            report = verify_jacobi_convexity(
                spec, p, d_a, d_b, tol=1e-4, solution=sol, field=xi
            )
            assert report.passed, spec.label

    def test_concave_family_negative_control(self):
        g = Grid(16)
        rng = np.random.default_rng(11)
        u_a = random_potential(g, rng)
        u_b = random_potential(g, rng)
        p = EpsGeodesicProblem(u_a, u_b, (0.0, 1.0), 0.1, time_steps=16)
        sol = solve_epsilon_geodesic(p)
        xs, _ = g.coords()
        bump = np.sin(np.pi * (p.times - p.times[0]) / (p.times[-1] - p.times[0]))
        family = bump[:, None, None] * (1.0 + 0.1 * np.cos(2.0 * np.pi * xs))[None]
        assert midpoint_convexity_margin(Power(1.0), sol.path, family) > 1e-2

    def test_field_shape_mismatch(self):
        g = Grid(8)
        p = EpsGeodesicProblem(
            constant_potential(g, 0.0), constant_potential(g, 0.5), (0.0, 1.0), 0.5, time_steps=8
        )
        sol = solve_epsilon_geodesic(p)
        with pytest.raises(ValueError):
            midpoint_convexity_margin(Power(1.0), sol.path, np.zeros((3, g.n, g.n)))


class TestActionConvexity:
    def test_identical_geodesics_flat(self):
        g = Grid(8)
        path = linear_path(constant_potential(g, 0.0), constant_potential(g, 1.0), 0.0, 1.0, 4)
        report = verify_action_convexity(
            Power(1.0), path, path, 1.0, path.times, tol=1e-6, time_steps=8
        )
        assert report.passed
        assert max(abs(v) for v in report.provenance["values"]) < 1e-4

    def test_linear_constant_geodesics_closed_form(self):
        """Quadratic Lagrangian between affine families: squared gap over S."""
        g = Grid(8)
        u_path = linear_path(constant_potential(g, 0.0), constant_potential(g, 1.0), 0.0, 1.0, 8)
        v_path = linear_path(constant_potential(g, 0.5), constant_potential(g, -0.3), 0.0, 1.0, 8)
        s_duration = 2.0
        report = verify_action_convexity(
            quadratic_lagrangian(),
            u_path,
            v_path,
            s_duration,
            u_path.times[::2],
            tol=1e-6,
            time_steps=8,
            continuation_tol=1e-6,
        )
        assert report.passed
        gap = lambda t: (0.5 - 0.8 * t) - t
        for t, value in zip(u_path.times[::2], report.provenance["values"]):
            assert value == pytest.approx(gap(t) ** 2 / s_duration, abs=1e-6)

    def test_generic_weak_geodesics(self):
        g = Grid(16)
        rng = np.random.default_rng(21)
        u_path = weak_geodesic(
            random_potential(g, rng), random_potential(g, rng), (0.0, 1.0), 1e-5, 16
        )
        v_path = weak_geodesic(
            random_potential(g, rng), random_potential(g, rng), (0.0, 1.0), 1e-5, 16
        )
        report = verify_action_convexity(
            Power(2.0), u_path, v_path, 1.0, u_path.times[::4], tol=5e-3
        )
        assert report.passed

    def test_sample_validation(self):
        g = Grid(8)
        path = linear_path(constant_potential(g, 0.0), constant_potential(g, 1.0), 0.0, 1.0, 4)
        other = linear_path(constant_potential(g, 0.0), constant_potential(g, 1.0), 0.0, 2.0, 4)
        with pytest.raises(ValueError):
            verify_action_convexity(Power(1.0), path, other, 1.0, path.times)
        with pytest.raises(ValueError):
            verify_action_convexity(Power(1.0), path, path, 1.0, path.times[:2])
        with pytest.raises(ValueError):
            verify_action_convexity(Power(1.0), path, path, 1.0, [0.0, 0.25, 0.8])
        with pytest.raises(ValueError):
            verify_action_convexity(Power(1.0), path, path, 1.0, [0.0, 0.3, 0.6])


class TestLeastActionContinuity:
    def test_stationary_sequences(self):
        g = Grid(8)
        u_a = constant_potential(g, 0.0)
        u_b = constant_potential(g, 0.6)
        report = verify_least_action_continuity(
            Power(1.0), [u_a, u_a], [u_b, u_b], u_a, u_b, time_steps=8
        )
        assert report.passed
        assert report.worst < 1e-9

    def test_equal_shifts_leave_action_invariant(self):
        """Shifting both endpoints by one constant leaves the velocity alone."""
        g = Grid(16)
        rng = np.random.default_rng(40)
        u_a = random_potential(g, rng)
        u_b = random_potential(g, rng)
        shifts = [0.2, 0.1, 0.05]
        seq_a = [make_potential(u_a.field + s, g) for s in shifts]
        seq_b = [make_potential(u_b.field + s, g) for s in shifts]
        report = verify_least_action_continuity(
            Power(1.0), seq_a, seq_b, u_a, u_b, time_steps=16
        )
        assert report.passed
        assert report.worst < 1e-9

    def test_decreasing_shifts_converge(self):
        g = Grid(16)
        rng = np.random.default_rng(40)
        u_a = random_potential(g, rng)
        u_b = random_potential(g, rng)
        shifts = [0.04, 0.01, 0.0025]
        seq_a = [make_potential(u_a.field + s, g) for s in shifts]
        report = verify_least_action_continuity(
            Power(1.0), seq_a, [u_b] * 3, u_a, u_b, tol=5e-3, time_steps=16
        )
        assert report.passed
        disc = report.provenance["discrepancies"]
        assert disc[0] > disc[1] > disc[2]

    def test_non_decreasing_sequence_rejected(self):
        g = Grid(8)
        u_a = constant_potential(g, 0.0)
        u_b = constant_potential(g, 0.6)
        rising = [make_potential(u_a.field + s, g) for s in (0.1, 0.2)]
        with pytest.raises(ValueError):
            verify_least_action_continuity(Power(1.0), rising, [u_b] * 2, u_a, u_b)

    def test_sequence_below_limit_rejected(self):
        g = Grid(8)
        u_a = constant_potential(g, 0.0)
        u_b = constant_potential(g, 0.6)
        below = [make_potential(u_a.field - 0.1, g)]
        with pytest.raises(ValueError):
            verify_least_action_continuity(Power(1.0), below, [u_b], u_a, u_b)

    def test_length_mismatch_rejected(self):
        g = Grid(8)
        u = constant_potential(g, 0.0)
        with pytest.raises(ValueError):
            verify_least_action_continuity(Power(1.0), [u], [], u, u)
