"""Tests for domains, boundary distances, balls and approach regions."""

import math

import numpy as np
import pytest

from tracelab.errors import DomainError
from tracelab.geometry import (
    ApproachParams,
    Containment,
    DomainKind,
    Point2,
    Polyline,
    SQRT3_HALF,
    approach_contains,
    as_point,
    classify,
    contains,
    contains_many,
    deepest_point_in_annulus,
    distance_to_boundary,
    distances,
    inside_mask,
    interval_domain,
    phi_ball,
    psi_ball,
    signed_distances,
    unit_square,
    wedge_domain,
)


class TestPoints:
    """Tests for Point2 and coercion."""

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            Point2(math.nan, 0.0)

    def test_float_becomes_1d_point(self):
        assert as_point(0.25) == Point2(0.25, 0.0)

    def test_tuple_becomes_point(self):
        assert as_point((1.0, 2.0)) == Point2(1.0, 2.0)


class TestPolyline:
    """Tests for Polyline."""

    def test_rejects_repeated_vertices(self):
        with pytest.raises(DomainError):
            Polyline(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]))

    def test_from_points_drops_repeats(self):
        line = Polyline.from_points(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]))
        assert len(line) == 3

    def test_closed_length(self):
        assert unit_square().boundary.length == pytest.approx(4.0)

    def test_to_csv(self, tmp_path):
        path = tmp_path / "square.csv"
        unit_square().boundary.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x,y"
        assert len(lines) == 5


class TestIntervalDomain:
    """1D domains have exact distances."""

    def test_distances(self):
        d = interval_domain(0.0, 2.0)
        np.testing.assert_allclose(distances(d, [0.5, 1.5, 1.0]), [0.5, 0.5, 1.0])

    def test_inside_mask(self):
        d = interval_domain(0.0, 2.0)
        assert inside_mask(d, [0.5, 2.5, 0.0]).tolist() == [True, False, False]

    def test_rejects_empty_interval(self):
        with pytest.raises(DomainError):
            interval_domain(1.0, 1.0)

    def test_dimension_and_depth_bound(self):
        d = interval_domain(0.0, 2.0)
        assert d.dimension == 1
        assert d.max_depth_bound() == pytest.approx(1.0)


class TestSquare:
    """Planar distance oracle on the unit square."""

    def test_center_distance(self):
        assert distance_to_boundary(unit_square(), (0.5, 0.5)) == pytest.approx(0.5)

    def test_signed_distance_outside(self):
        d = unit_square()
        np.testing.assert_allclose(signed_distances(d, [(0.2, 0.5), (2.0, 0.5)]), [0.2, -1.0])

    def test_classify(self):
        d = unit_square()
        assert classify(d, (0.5, 0.5)) is Containment.INSIDE
        assert classify(d, (1.5, 0.5)) is Containment.OUTSIDE
        assert classify(d, (1.0, 0.5)) is Containment.INDETERMINATE
        assert d.kind is DomainKind.POLYGON


class TestBalls:
    """Psi and Phi balls."""

    def test_psi_and_phi_radii(self):
        d = unit_square()
        assert psi_ball(d, (0.5, 0.5)).radius == pytest.approx(0.25)
        assert phi_ball(d, (0.5, 0.5)).radius == pytest.approx(1.0 / 12.0)

    def test_boundary_center_rejected(self):
        with pytest.raises(DomainError):
            psi_ball(unit_square(), (0.0, 0.5))

    def test_interval_ball(self):
        ball = psi_ball(interval_domain(0.0, 2.0), 0.5)
        assert ball.as_interval() == pytest.approx((0.25, 0.75))

    def test_phi_is_a_third_of_psi(self):
        d = wedge_domain(2.0, 0.8, tolerance=1e-5, slit=False)
        for x in [(0.4, 0.0), (0.6, 0.05), (0.2, 0.0)]:
            assert psi_ball(d, x).radius == pytest.approx(3.0 * phi_ball(d, x).radius, rel=1e-12)

    @pytest.mark.parametrize("x", [(0.5, 0.0), (0.7, 0.1), (0.3, 0.0)])
    def test_psi_ball_stays_inside(self, x):
        d = wedge_domain(2.0, 0.8, tolerance=1e-5, slit=False)
        ball = psi_ball(d, x)
        rng = np.random.default_rng(5)
        r = ball.radius * np.sqrt(rng.uniform(0.0, 1.0, 400))
        phi = rng.uniform(0.0, 2.0 * np.pi, 400)
        pts = ball.center.as_array() + np.column_stack([r * np.cos(phi), r * np.sin(phi)])
        assert contains_many(d, pts).all()


class TestApproachRegion:
    """Membership in Q^theta_{lambda,delta}."""

    def test_invalid_parameters(self):
        with pytest.raises(DomainError):
            ApproachParams(Point2(0.5, 0.0), lam=1.0, theta=1.0, delta=1.0)
        with pytest.raises(DomainError):
            ApproachParams(Point2(0.5, 0.0), lam=0.5, theta=0.5, delta=1.0)

    def test_membership(self):
        d = unit_square()
        a = ApproachParams(Point2(0.5, 0.0), lam=0.5, theta=1.0, delta=1.0)
        assert approach_contains(a, d, (0.5, 0.3))
        assert not approach_contains(a, d, (0.9, 0.05))

    def test_outside_delta(self):
        d = unit_square()
        a = ApproachParams(Point2(0.5, 0.0), lam=0.5, theta=1.0, delta=0.2)
        assert not approach_contains(a, d, (0.5, 0.3))

    def test_monotone_in_lambda_and_theta(self):
        d = unit_square()
        base = Point2(0.5, 0.0)
        grid = [(x, y) for x in np.linspace(0.05, 0.95, 10) for y in np.linspace(0.02, 0.6, 10)]
        strict = ApproachParams(base, lam=0.6, theta=1.0, delta=1.0)
        looser = [
            ApproachParams(base, lam=0.4, theta=1.0, delta=1.0),
            ApproachParams(base, lam=0.6, theta=1.5, delta=1.0),
            ApproachParams(base, lam=0.3, theta=2.0, delta=1.0),
        ]
        inside = [x for x in grid if approach_contains(strict, d, x)]
        assert inside
        for params in looser:
            assert all(approach_contains(params, d, x) for x in inside)

    @pytest.mark.parametrize("lam", [0.1, 0.5, 0.9])
    def test_no_cone_fits_in_a_cusp(self, lam):
        d = wedge_domain(2.0, 0.8, tolerance=1e-5, slit=False)
        a = ApproachParams(Point2(0.0, 0.0), lam=lam, theta=1.0, delta=0.05)
        xs = np.geomspace(1e-3, 0.045, 12)
        pts = np.array([(x, f * 0.5 * (x / 0.8) ** 2) for x in xs for f in (-0.5, 0.0, 0.5)])
        interior = pts[contains_many(d, pts)]
        assert len(interior) > 0
        assert not any(approach_contains(a, d, x) for x in interior)

    def test_cusp_admits_its_own_exponent(self):
        d = wedge_domain(2.0, 0.8, tolerance=1e-5, slit=False)
        a = ApproachParams(Point2(0.0, 0.0), lam=0.5, theta=2.0, delta=0.5)
        assert approach_contains(a, d, (0.3, 0.0))


class TestWedge:
    """Cusped wedge construction."""

    def test_slit_axis_is_boundary(self):
        d = wedge_domain(2.0, 0.8, tolerance=1e-5, slit=True)
        assert len(d.rings) == 2
        assert contains(d, (0.4, 0.06))
        assert contains(d, (0.4, -0.06))
        assert distance_to_boundary(d, (0.4, 0.0)) == pytest.approx(0.0, abs=1e-12)

    def test_unslit_axis_is_interior(self):
        d = wedge_domain(2.0, 0.8, tolerance=1e-5, slit=False)
        assert len(d.rings) == 1
        assert contains(d, (0.4, 0.0))
        assert distance_to_boundary(d, (0.4, 0.0)) > 0.09

    def test_chord_error_within_tolerance(self):
        d = wedge_domain(3.0, SQRT3_HALF, tolerance=1e-4)
        assert 0.0 < d.distance_error <= 1e-4

    def test_straight_wedge_is_exact(self):
        assert wedge_domain(1.0, 0.8).distance_error == 0.0

    def test_straight_wedge_example_points(self):
        d = wedge_domain(1.0, SQRT3_HALF)
        assert contains(d, (0.5, 0.1))
        assert not contains(d, (0.5, 0.0))
        assert distance_to_boundary(d, (SQRT3_HALF, 0.0)) == 0.0

    def test_cusped_wedge_example_points(self):
        d = wedge_domain(2.0, 0.6)
        assert contains(d, (0.3, 0.05))
        assert not contains(d, (0.3, 0.2))

    @pytest.mark.parametrize("slit", [True, False])
    def test_distance_is_one_lipschitz(self, slit):
        d = wedge_domain(2.0, 0.8, tolerance=1e-5, slit=slit)
        rng = np.random.default_rng(11)
        a = rng.uniform([0.0, -0.3], [0.9, 0.3], size=(300, 2))
        b = a + rng.normal(scale=0.05, size=a.shape)
        gap = np.abs(distances(d, a) - distances(d, b))
        assert np.all(gap <= np.linalg.norm(a - b, axis=1) + 1e-12)

    @pytest.mark.parametrize("theta0,H", [(0.5, 0.8), (2.0, 0.4), (2.0, 0.9)])
    def test_rejects_bad_parameters(self, theta0, H):
        with pytest.raises(DomainError):
            wedge_domain(theta0, H)


class TestAnnulusSearch:
    """Deepest-point search in annuli."""

    def test_square_finds_deep_point(self):
        search = deepest_point_in_annulus(unit_square(), (0.5, 0.0), 0.1, 0.4, n_candidates=64, seed=1)
        best = search.best()
        assert best is not None
        assert 0.1 < search.separations[best] < 0.4
        assert search.depths[best] > 0.35

    def test_threshold_can_reject_everything(self):
        search = deepest_point_in_annulus(unit_square(), (0.5, 0.0), 0.1, 0.4, n_candidates=64, seed=1)
        assert search.best(lambda sep: np.full_like(sep, 1.0)) is None

    def test_interval_search(self):
        search = deepest_point_in_annulus(interval_domain(0.0, 2.0), 0.0, 0.1, 0.5, n_candidates=32)
        best = search.best()
        assert best is not None
        assert search.points[best][0] > 0.0
        assert search.depths[best] == pytest.approx(search.separations[best])

    def test_rejects_bad_radii(self):
        with pytest.raises(DomainError):
            deepest_point_in_annulus(unit_square(), (0.5, 0.0), 0.4, 0.1)

    def test_reproducible(self):
        first = deepest_point_in_annulus(unit_square(), (0.5, 0.0), 0.1, 0.4, n_candidates=64, seed=3)
        second = deepest_point_in_annulus(unit_square(), (0.5, 0.0), 0.1, 0.4, n_candidates=64, seed=3)
        np.testing.assert_array_equal(first.points, second.points)
