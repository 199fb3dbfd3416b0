"""Tests for the hypothesis checkers and the counterexample verification."""

import math

import pytest

from tracelab.errors import DomainError, ResolutionError
from tracelab.fields import CounterexampleSpec, constant_field, variable_exponent_field
from tracelab.geometry import polygon_domain, unit_square, wedge_domain
from tracelab.seminorm import QuadratureSpec
from tracelab.verify import (
    Hypothesis,
    Verdict,
    check_h1,
    check_h2,
    check_h3,
    counterexample_quadrature,
    counterexample_series,
    replay_h1,
)

DELTAS = [0.2, 0.1, 0.05]


@pytest.fixture(scope="module")
def cusp():
    return wedge_domain(2.0, 0.8, tolerance=1e-4, slit=False)


@pytest.fixture
def split_squares():
    return polygon_domain(
        [
            [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
            [(1.02, 0.0), (2.02, 0.0), (2.02, 1.0), (1.02, 1.0)],
        ]
    )


class TestH1:
    """Uniform corkscrew condition."""

    def test_cusp_needs_its_own_exponent(self, cusp):
        report = check_h1(cusp, [(0.0, 0.0)], 1.0, 0.5, 0.5, DELTAS, seed=3)
        assert not report.passed
        assert report.failures == [0]

    def test_cusp_passes_with_theta0(self, cusp):
        report = check_h1(cusp, [(0.0, 0.0)], 2.0, 0.5, 0.5, DELTAS, seed=3)
        assert report.passed
        assert len(report.evidence) == len(DELTAS)
        assert all(r["depth"] > (0.5 * r["separation"]) ** 2 for r in report.evidence)

    def test_flat_boundary_with_theta_one(self):
        report = check_h1(unit_square(), [(0.5, 0.0), (0.0, 0.5)], lambda _x: 1.0, 0.5, 0.5, DELTAS, seed=1)
        assert report.passed
        assert report.to_dict()["samples"] == 2

    def test_replay_with_smaller_constants(self, cusp):
        report = check_h1(cusp, [(0.0, 0.0)], 2.0, 0.5, 0.5, DELTAS, seed=3)
        replayed = replay_h1(report, 0.4, 0.4)
        assert replayed.passed
        assert replayed.constants["eta0"] == 0.4

    def test_rejects_bad_constants(self, cusp):
        with pytest.raises(DomainError):
            check_h1(cusp, [(0.0, 0.0)], 2.0, 1.0, 0.5, DELTAS)


class TestH2:
    """Connectedness of the deep part of the approach region."""

    def test_half_disk_is_connected(self):
        report = check_h2(unit_square(), [(0.5, 0.0)], 1.0, 3.0, [0.5], [0.2])
        assert report.passed
        assert report.constants["eps_lambda"]["0.5"] == 0.5
        assert not report.constants["monotone_corrected"]

    def test_cusp_is_connected(self, cusp):
        report = check_h2(cusp, [(0.0, 0.0)], 2.0, 3.0, [0.5], [0.4])
        assert report.passed
        assert 0.0 < report.constants["eps_lambda"]["0.5"] <= 0.5
        assert report.evidence[0]["path_length"] <= 3.0 * 0.4

    def test_split_domain_fails(self, split_squares):
        report = check_h2(split_squares, [(1.01, 0.0)], 1.0, 3.0, [0.5], [0.5], grid_res=2000)
        assert not report.passed
        assert report.evidence[0]["eps"] is None
        assert report.constants["eps_lambda"]["0.5"] is None

    def test_node_budget_too_small(self):
        with pytest.raises(ResolutionError):
            check_h2(unit_square(), [(0.5, 0.0)], 1.0, 3.0, [0.5], [0.2], grid_res=10)


class TestH3:
    """alpha above -t near the boundary."""

    def test_constant_exponent_passes(self):
        s = variable_exponent_field("constant", s0=2.0)
        h3p, h3pp = check_h3(s, unit_square(), [(0.5, 0.0)], 2.0, 2.0, 2, 1.3, 0.1)
        assert h3p.hypothesis is Hypothesis.H3_PRIME
        assert h3p.passed and h3pp.passed
        assert h3pp.constants["alpha_gamma"] == pytest.approx(1.0)
        assert h3p.evidence[0]["alpha_limit"] == pytest.approx(1.0)

    def test_small_exponent_fails(self):
        s = variable_exponent_field("constant", s0=0.5)
        h3p, h3pp = check_h3(s, unit_square(), [(0.5, 0.0)], 2.0, 2.0, 2, 1.3, 0.1)
        assert not h3p.passed
        assert not h3pp.passed
        assert h3pp.constants["alpha_gamma"] == pytest.approx(-4.0)


class TestCounterexampleSeries:
    """sum_j a_j^(p/q) 4^(j (s0 p - 1)) in log space."""

    def test_q_equal_p_converges(self):
        result = counterexample_series(CounterexampleSpec(1.0, 1.0), 1.0)
        assert result.verdict is Verdict.CONVERGENT
        assert result.growth < 0.1
        last, before = result.tail_corrected[-1], result.tail_corrected[-2]
        assert abs(last - before) < 1e-3 * last
        assert result.envelope == pytest.approx(result.partial_sums[-1][1], rel=1e-9)

    def test_terms_grow_like_four_to_the_j(self):
        result = counterexample_series(CounterexampleSpec(2.0, 2.0), 1.5, [10, 20, 40])
        assert result.verdict is Verdict.DIVERGENT
        assert result.term_ratio == pytest.approx(4.0, rel=0.05)
        sums = dict(result.partial_sums)
        assert sums[40] / sums[20] > 2.0

    def test_q_above_one_diverges_slowly(self):
        result = counterexample_series(CounterexampleSpec(1.0, 1.0), 2.0, [100, 1_000, 10_000])
        assert result.verdict is Verdict.DIVERGENT
        sums = dict(result.partial_sums)
        assert sums[10_000] / sums[1_000] > 2.0
        assert result.tail_corrected == [None, None, None]
        assert result.envelope is None

    def test_partial_sums_increase(self):
        result = counterexample_series(CounterexampleSpec(1.0, 1.0), 1.0, [1, 5, 25])
        values = [v for _, v in result.partial_sums]
        assert values == sorted(values)
        assert all(b > 0 for b in result.increments)
        assert result.log10_partial_sums[0][1] == pytest.approx(math.log10(values[0]))

    def test_rejects_small_q(self):
        with pytest.raises(DomainError):
            counterexample_series(CounterexampleSpec(1.0, 1.0), 0.5)


class TestCounterexampleQuadrature:
    """nu over (eps, 1] against the truncated series."""

    def test_comparison_shape(self):
        spec = CounterexampleSpec(1.0, 1.0, J_max=8)
        result = counterexample_quadrature(spec, 1.0, [1e-2, 1e-1, 1e-3], QuadratureSpec(cutoff=1e-6, seed=2))
        assert result.cutoffs == [1e-1, 1e-2, 1e-3]
        assert len(result.values) == 3
        assert result.truncated_series == sorted(result.truncated_series)
        assert result.series_growth is not None
        assert set(result.to_dict()) >= {"ratios", "strict_sandwich", "relaxed_sandwich", "inconsistent"}

    def test_sanity_field_is_never_inconsistent(self):
        spec = CounterexampleSpec(1.0, 1.0, J_max=8)
        result = counterexample_quadrature(
            spec, 1.0, [1e-1, 1e-2], QuadratureSpec(cutoff=1e-6), u=constant_field(1.0)
        )
        assert result.values == [0.0, 0.0]
        assert not result.inconsistent

    def test_J_max_too_small(self):
        with pytest.raises(DomainError):
            counterexample_quadrature(CounterexampleSpec(1.0, 1.0, J_max=2), 1.0, [1e-3])

    def test_cutoffs_in_unit_interval(self):
        with pytest.raises(DomainError):
            counterexample_quadrature(CounterexampleSpec(1.0, 1.0, J_max=8), 1.0, [1.5])
