"""Tests for the prickly snowflake construction."""

import math

import numpy as np
import pytest
import shapely

from tracelab.errors import DomainError, ResourceError
from tracelab.fractal import (
    L_MAX,
    L_MIN,
    T1,
    CompositeIndex,
    L_from_geometry,
    Index,
    SimilarityMap,
    boundary_polyline,
    cantor_interval,
    compose,
    domain_approx,
    enumerate_indices,
    generator_curve,
    group_diameter,
    group_level,
    grouped_family,
    hausdorff_dimension,
    open_set_audit,
    partial_order_leq,
    prickly_domain,
    ratio,
    similarity_for_index,
    tile_polygon,
    upper_dimension_bound,
)
from tracelab.geometry import SQRT3_HALF, DomainKind, Point2, contains, distance_to_boundary


@pytest.fixture(scope="module")
def koch():
    return prickly_domain(1.0, SQRT3_HALF, resolution=8)


@pytest.fixture(scope="module")
def cusped():
    return prickly_domain(2.0, SQRT3_HALF, resolution=8)


class TestIndices:
    """Index algebra."""

    def test_parse_and_str(self):
        istar = CompositeIndex.parse("3.12|4")
        assert str(istar) == "3.12|4"
        assert istar.length == 2
        assert istar.norm == 4

    def test_rejects_bad_digits(self):
        with pytest.raises(DomainError):
            Index(5)
        with pytest.raises(DomainError):
            Index(3, (1, 3))
        with pytest.raises(DomainError):
            Index.parse("x.1")

    def test_successors_add_one_norm_unit(self):
        istar = CompositeIndex.parse("4.2")
        children = istar.successors()
        assert [str(c) for c in children] == ["4.21", "4.22", "4.2|3", "4.2|4"]
        assert all(c.norm == istar.norm + 1 for c in children)

    @pytest.mark.parametrize("norm", [1, 2, 3, 4])
    def test_enumeration_count(self, norm):
        assert len(enumerate_indices(norm)) == 2 * 4 ** (norm - 1)

    def test_grouped_family(self):
        root = CompositeIndex.single(3)
        family = grouped_family(root, 3)
        assert len(family) == 1 + 4 + 16
        assert all(partial_order_leq(root, member) for member in family)

    def test_partial_order(self):
        assert partial_order_leq(CompositeIndex.parse("3"), CompositeIndex.parse("3.1|4"))
        assert not partial_order_leq(CompositeIndex.parse("4"), CompositeIndex.parse("3.1"))
        assert not partial_order_leq(CompositeIndex.parse("3.1"), CompositeIndex.parse("3.2"))

    def test_truncate_out_of_range(self):
        with pytest.raises(DomainError):
            CompositeIndex.parse("3|4").truncate(3)


class TestCantorIntervals:
    """Removed middle thirds."""

    def test_first_levels(self):
        assert cantor_interval(()) == pytest.approx((1 / 3, 2 / 3))
        assert cantor_interval((1,)) == pytest.approx((1 / 9, 2 / 9))
        assert cantor_interval((2,)) == pytest.approx((7 / 9, 8 / 9))
        assert cantor_interval((1, 2)) == pytest.approx((7 / 27, 8 / 27))
        assert cantor_interval((2, 1)) == pytest.approx((19 / 27, 20 / 27))


class TestSimilarity:
    """Similarity maps and ratios."""

    def test_identity_compose(self):
        f = SimilarityMap(2 + 1j, 0.5j)
        g = f.compose(SimilarityMap.identity())
        assert g.a == f.a and g.b == f.b

    def test_reflection_compose(self):
        r = SimilarityMap(1 + 0j, 0j, reflection=True)
        twice = r.compose(r)
        assert not twice.reflection
        np.testing.assert_allclose(twice.apply(np.array([[0.3, 0.7]])), [[0.3, 0.7]])

    def test_ratio(self):
        assert ratio(CompositeIndex.parse("3.1|4"), 1.2) == pytest.approx(3.0**-3 * 1.44)

    def test_single_map_scale_is_L_over_3(self, cusped):
        f = similarity_for_index(Index(4), cusped)
        assert f.scale == pytest.approx(cusped.L / 3.0, rel=1e-12)

    def test_single_map_endpoints(self, cusped):
        f = similarity_for_index(Index(4), cusped)
        lo, hi = cantor_interval(())
        assert f.apply_point(Point2(-0.5, 0.0)).distance_to(cusped.right.sample(lo)) < 1e-12
        assert f.apply_point(Point2(0.5, 0.0)).distance_to(cusped.right.sample(hi)) < 1e-12

    def test_composite_scale(self, cusped):
        istar = CompositeIndex.parse("4.1|3.2")
        assert compose(istar, cusped).scale == pytest.approx(ratio(istar, cusped.L), rel=1e-9)


class TestDimension:
    """The dimension equation 2 (L^t + 1) = 3^t."""

    def test_koch_value(self):
        assert hausdorff_dimension(1.0) == pytest.approx(T1, abs=1e-12)

    def test_solves_equation(self):
        t = hausdorff_dimension(1.2)
        assert 2.0 * (1.2**t + 1.0) == pytest.approx(3.0**t, rel=1e-12)

    def test_koch_value_matches_log_ratio(self):
        assert hausdorff_dimension(1.0) == pytest.approx(math.log(4.0) / math.log(3.0), abs=1e-10)

    def test_supremum_value(self):
        assert hausdorff_dimension((1.0 + math.sqrt(3.0)) / 2.0) == pytest.approx(1.49936, abs=5e-5)

    def test_increasing_on_a_grid(self):
        ts = [hausdorff_dimension(L) for L in np.linspace(0.51, L_MAX, 50)]
        assert all(a < b for a, b in zip(ts, ts[1:]))
        assert ts[0] > 1.0

    def test_monotone(self):
        assert 1.0 < hausdorff_dimension(0.6) < T1 < hausdorff_dimension(1.3) < upper_dimension_bound() < 2.0

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            hausdorff_dimension(0.4)


class TestGeneratorCurve:
    """Chord scaling of the generator chains."""

    @pytest.mark.parametrize("theta0,H", [(1.0, SQRT3_HALF), (2.0, SQRT3_HALF), (2.0, 0.6)])
    def test_middle_third_chord_is_L_over_3(self, theta0, H):
        curve = generator_curve(4, theta0, H, resolution=6)
        gap = curve.sample(1 / 3).distance_to(curve.sample(2 / 3))
        assert gap == pytest.approx(curve.L / 3.0, rel=1e-9)

    def test_chord_ratio_three_at_first_level(self, cusped):
        curve = cusped.right
        assert curve.chord(()) / curve.chord((1,)) == pytest.approx(3.0, rel=1e-9)
        assert curve.chord((2,)) == pytest.approx(cusped.L / 9.0, rel=1e-9)
        assert curve.chord((1, 2)) == pytest.approx(cusped.L / 27.0, rel=1e-9)

    def test_ends(self, cusped):
        assert cusped.right.corner.distance_to(Point2(0.5, 0.0)) < 1e-12
        assert abs(cusped.right.cusp.x) < 1e-12
        assert cusped.left.corner.distance_to(Point2(-0.5, 0.0)) < 1e-12

    def test_rejects_bad_side(self):
        with pytest.raises(DomainError):
            generator_curve(2, 2.0, SQRT3_HALF, resolution=4)


class TestLFromGeometry:
    """The similarity ratio read off the realized curve."""

    @pytest.mark.parametrize("theta0,H", [(1.0, SQRT3_HALF), (2.0, SQRT3_HALF), (2.0, 0.6)])
    def test_within_bounds(self, theta0, H):
        L = L_from_geometry(theta0, H, resolution=6)
        assert L_MIN < L < L_MAX
        assert 1.0 < hausdorff_dimension(L) <= upper_dimension_bound()

    def test_koch_dimension_in_cusped_range(self):
        t = hausdorff_dimension(L_from_geometry(1.0, SQRT3_HALF, resolution=6))
        assert T1 - 1e-9 <= t <= upper_dimension_bound()

    def test_dimension_in_range_exactly_when_L_at_least_one(self, cusped):
        t = hausdorff_dimension(cusped.L)
        assert (T1 <= t <= upper_dimension_bound()) == (cusped.L >= 1.0)
        assert cusped.in_cusped_range == (cusped.L >= 1.0)


class TestPricklyDomain:
    """Realized geometry."""

    def test_koch_case(self, koch):
        assert koch.L == pytest.approx(1.0, abs=1e-9)
        assert koch.t == pytest.approx(T1, abs=1e-9)
        assert koch.is_koch
        assert koch.in_cusped_range

    def test_cusped_case(self, cusped):
        assert L_MIN < cusped.L < L_MAX
        assert cusped.t == pytest.approx(hausdorff_dimension(cusped.L))
        assert cusped.r0 > 0 and cusped.D0 >= 1.0
        assert 0.0 < cusped.apex_height <= SQRT3_HALF + 1e-12

    def test_rejects_bad_profile(self):
        with pytest.raises(DomainError):
            prickly_domain(0.5, SQRT3_HALF, resolution=4)
        with pytest.raises(DomainError):
            prickly_domain(2.0, 1.0, resolution=4)

    def test_group_level(self, cusped):
        level = group_level(cusped, 3)
        assert len(level.A) == 2 * 4**2
        np.testing.assert_allclose(group_level(cusped, 1).scale, cusped.L / 3.0, rtol=1e-12)
        assert level.corners().shape == (32, 2)

    def test_group_level_rejects_zero(self, cusped):
        with pytest.raises(DomainError):
            group_level(cusped, 0)


class TestGroups:
    """Grouped tiles: diameter bound and nesting."""

    @pytest.mark.parametrize("text", ["4", "3.1", "4|3", "3.2|4"])
    def test_diameter_bound(self, cusped, text):
        istar = CompositeIndex.parse(text)
        assert group_diameter(cusped, istar, extra_norm=2) <= 3.0 * ratio(istar, cusped.L) * cusped.D0

    def test_koch_diameter_bound(self, koch):
        istar = CompositeIndex.parse("4.1")
        assert group_diameter(koch, istar, extra_norm=3) <= 3.0 * ratio(istar, koch.L) * koch.D0

    @pytest.mark.parametrize("text", ["4", "3.2"])
    def test_successor_groups_nest(self, cusped, text):
        istar = CompositeIndex.parse(text)
        max_norm = istar.norm + 2
        parent = grouped_family(istar, max_norm)
        hull = shapely.union_all([tile_polygon(cusped, m, max_norm + 1) for m in parent]).buffer(1e-9)
        for child in istar.successors():
            family = grouped_family(child, max_norm)
            assert set(map(str, family)) <= set(map(str, parent))
            region = shapely.union_all([tile_polygon(cusped, m, max_norm + 1) for m in family])
            assert hull.covers(region)


class TestOutline:
    """Boundary polylines and the domain approximation."""

    def test_base_is_boundary(self, cusped):
        d = domain_approx(cusped, 3)
        assert distance_to_boundary(d, (0.2, 0.0)) == pytest.approx(0.0, abs=1e-12)
        assert contains(d, cusped.x0)
        assert d.kind is DomainKind.PRICKLY_SNOWFLAKE

    def test_koch_kind(self, koch):
        assert domain_approx(koch, 1).kind is DomainKind.KOCH

    def test_deeper_outline_is_finer(self, cusped):
        shallow = domain_approx(cusped, 1)
        deep = domain_approx(cusped, 3)
        assert deep.n_vertices > shallow.n_vertices
        assert deep.distance_error < shallow.distance_error

    def test_vertex_budget(self, cusped):
        with pytest.raises(ResourceError):
            boundary_polyline(cusped, 3, vertex_budget=10)

    def test_negative_depth(self, cusped):
        with pytest.raises(DomainError):
            boundary_polyline(cusped, -1)


class TestOpenSetAudit:
    """Tiles do not overlap."""

    def test_koch_tiles_disjoint(self, koch):
        audit = open_set_audit(koch, max_norm=2)
        assert audit.tiles == 1 + 2 + 8
        assert audit.max_overlap < 1e-6

    def test_cusped_tiles_disjoint(self, cusped):
        assert open_set_audit(cusped, max_norm=2).max_overlap < 1e-6


def test_upper_bound_constant():
    assert math.isclose(2.0 * (L_MAX ** upper_dimension_bound() + 1.0), 3.0 ** upper_dimension_bound(), rel_tol=1e-12)
