"""Fibration checks: discriminant clouds, fibers, triviality probing."""

import numpy as np
import pytest

from perplex.algebra import Perplex, PerplexAlgebra
from perplex.errors import DegenerateAlgebra, EmptyFiber, MaskTooCoarse
from perplex.fibration import (
    critical_values,
    fiber_cloud,
    fiber_solve,
    local_triviality_check,
)
from perplex.multivar import PerplexPolyN

ONE = Perplex(1.0, 0.0)


def square_map():
    return PerplexPolyN.from_terms(1, [((2,), ONE)])


def identity_map():
    return PerplexPolyN.from_terms(1, [((1,), ONE)])


def sum_of_squares():
    return PerplexPolyN.from_terms(2, [((2, 0), ONE), ((0, 2), ONE)])


@pytest.fixture(scope="module")
def complex_square_report():
    from perplex.algebra import COMPLEX_PARAMS

    return local_triviality_check(
        square_map(), PerplexAlgebra(COMPLEX_PARAMS), seed=3
    )


@pytest.fixture(scope="module")
def hyperbolic_square_report():
    from perplex.algebra import HYPERBOLIC_PARAMS

    return local_triviality_check(
        square_map(), PerplexAlgebra(HYPERBOLIC_PARAMS), seed=3
    )


class TestCriticalValues:
    def test_complex_square_discriminant_is_origin(self, complex_alg):
        disc = critical_values(square_map(), complex_alg)
        assert disc.shape == (1, 2)
        assert np.abs(disc).max() <= 1e-9

    def test_hyperbolic_square_discriminant_on_rays(self, hyperbolic_alg):
        disc = critical_values(square_map(), hyperbolic_alg)
        assert len(disc) > 1000
        # image of the critical lines x2 = +-x1 is the pair of rays
        # c1 = |c2| >= 0; traced samples must sit on them
        assert disc[:, 0].min() >= -1e-12
        off_ray = np.abs(disc[:, 0] - np.abs(disc[:, 1]))
        assert off_ray.max() <= 1e-9
        assert np.abs(disc).max() <= 1.35 * 0.05 + 1e-12

    def test_linear_map_has_empty_discriminant(self, complex_alg):
        disc = critical_values(identity_map(), complex_alg)
        assert disc.shape == (0, 2)

    def test_two_variable_discriminant_near_origin(self, complex_alg):
        disc = critical_values(sum_of_squares(), complex_alg, seed=2)
        assert len(disc) > 0
        assert np.abs(disc).max() <= 1e-6

    def test_degenerate_algebra_rejected(self, dual_alg):
        with pytest.raises(DegenerateAlgebra):
            critical_values(square_map(), dual_alg)


class TestFiberSolve:
    def test_complex_square_roots_of_unity(self, complex_alg):
        roots = fiber_solve(square_map(), complex_alg, Perplex(1.0, 0.0))
        got = sorted(r.as_tuple() for r in roots)
        assert len(got) == 2
        assert abs(got[0][0] + 1.0) <= 1e-9 and abs(got[0][1]) <= 1e-9
        assert abs(got[1][0] - 1.0) <= 1e-9 and abs(got[1][1]) <= 1e-9

    def test_complex_square_double_root_collapses(self, complex_alg):
        roots = fiber_solve(square_map(), complex_alg, Perplex(0.0, 0.0))
        assert len(roots) == 1
        assert roots[0].max_norm() <= 1e-5

    def test_hyperbolic_square_four_roots_closed_form(self, hyperbolic_alg):
        c = Perplex(1.0, 0.5)
        roots = fiber_solve(square_map(), hyperbolic_alg, c)
        s, t = np.sqrt(1.5), np.sqrt(0.5)
        a, b = (s + t) / 2.0, (s - t) / 2.0
        want = sorted([(-a, -b), (-b, -a), (b, a), (a, b)])
        got = sorted(r.as_tuple() for r in roots)
        assert len(got) == 4
        for g, w in zip(got, want):
            assert abs(g[0] - w[0]) <= 1e-9 and abs(g[1] - w[1]) <= 1e-9

    def test_hyperbolic_left_wedge_is_empty(self, hyperbolic_alg):
        roots = fiber_solve(square_map(), hyperbolic_alg, Perplex(-0.03, 0.01))
        assert roots == []

    def test_residuals_and_separation(self, hyperbolic_alg):
        alg = hyperbolic_alg
        f = square_map()
        rng = np.random.Generator(np.random.Philox(41))
        for _ in range(10):
            c2 = rng.uniform(-0.02, 0.02)
            c = Perplex(abs(c2) + rng.uniform(0.005, 0.03), c2)
            roots = fiber_solve(f, alg, c)
            assert len(roots) == 4
            for r in roots:
                assert (alg.mul(r, r) - c).max_norm() <= 1e-10
            pts = np.array([r.as_tuple() for r in roots])
            d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
            assert d[~np.eye(4, dtype=bool)].min() >= 1e-6

    def test_two_variable_input_rejected(self, complex_alg):
        with pytest.raises(ValueError):
            fiber_solve(sum_of_squares(), complex_alg, Perplex(0.1, 0.0))


class TestLocalTriviality:
    def test_complex_square_single_component_count_two(
        self, complex_square_report
    ):
        rep = complex_square_report
        assert len(rep.components) == 1
        assert rep.fiber_counts() == [[2] * 8]
        assert rep.consistent
        assert rep.halvings == 0
        assert rep.algebra_kind == "Field"

    def test_hyperbolic_square_four_sectors(self, hyperbolic_square_report):
        rep = hyperbolic_square_report
        assert len(rep.components) == 4
        majorities = sorted(c.majority for c in rep.components)
        assert majorities == [0, 0, 0, 4]
        assert all(c.constant for c in rep.components)
        assert rep.consistent
        assert rep.algebra_kind == "Hyperbolic"

    def test_linear_map_single_sheet(self, complex_alg):
        rep = local_triviality_check(identity_map(), complex_alg, seed=3)
        assert len(rep.components) == 1
        assert rep.fiber_counts() == [[1] * 8]

    def test_counts_do_not_depend_on_probe_seed(
        self, hyperbolic_alg, hyperbolic_square_report
    ):
        other = local_triviality_check(square_map(), hyperbolic_alg, seed=11)
        a = sorted(tuple(c.counts) for c in hyperbolic_square_report.components)
        b = sorted(tuple(c.counts) for c in other.components)
        assert a == b

    def test_eta_too_large_rejected(self, complex_alg):
        with pytest.raises(ValueError):
            local_triviality_check(square_map(), complex_alg, eta=0.2)

    def test_degenerate_algebra_rejected(self, dual_alg):
        with pytest.raises(DegenerateAlgebra):
            local_triviality_check(square_map(), dual_alg)

    def test_impossible_probe_demand_raises(self, complex_alg):
        with pytest.raises(MaskTooCoarse):
            local_triviality_check(
                square_map(), complex_alg, probes_per_component=10**6, seed=3
            )

    def test_report_serialization(self, hyperbolic_square_report):
        d = hyperbolic_square_report.to_dict()
        for key in (
            "algebraKind",
            "discriminantSamples",
            "componentLabels",
            "fiberCounts",
            "constant",
            "epsilon",
            "eta",
        ):
            assert key in d
        assert len(d["fiberCounts"]) == 4
        assert all(len(pair) == 2 for comp in d["fiberCounts"] for pair in comp)


class TestFiberCloud:
    def test_complex_level_set_is_connected(self, complex_alg):
        cloud = fiber_cloud(sum_of_squares(), complex_alg, Perplex(0.05, 0.0), seed=5)
        assert cloud.connectivity == 1
        assert cloud.residual_max <= 1e-10
        assert not cloud.on_discriminant
        assert len(cloud.points) > 1000

    def test_hyperbolic_torus_connected_across_seeds(self, hyperbolic_alg):
        a = fiber_cloud(sum_of_squares(), hyperbolic_alg, Perplex(0.05, 0.01), seed=5)
        b = fiber_cloud(sum_of_squares(), hyperbolic_alg, Perplex(0.05, 0.01), seed=17)
        assert a.connectivity == 1
        assert b.connectivity == a.connectivity
        assert a.residual_max <= 1e-10 and b.residual_max <= 1e-10

    def test_split_level_set_reports_two_sheets(self, complex_alg):
        sheets = PerplexPolyN.from_terms(2, [((2, 0), ONE)])
        cloud = fiber_cloud(sheets, complex_alg, Perplex(0.05, 0.0), seed=5)
        assert cloud.connectivity == 2

    def test_critical_target_is_flagged(self, complex_alg):
        cloud = fiber_cloud(sum_of_squares(), complex_alg, Perplex(0.0, 0.0), seed=5)
        assert cloud.on_discriminant

    def test_unreachable_target_raises(self, complex_alg):
        with pytest.raises(EmptyFiber):
            fiber_cloud(sum_of_squares(), complex_alg, Perplex(5.0, 0.0), seed=5)

    def test_one_variable_input_rejected(self, complex_alg):
        with pytest.raises(ValueError):
            fiber_cloud(square_map(), complex_alg, Perplex(0.05, 0.0), seed=5)
