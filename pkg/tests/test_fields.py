"""Tests for scalar fields, exponent fields and the counterexample field."""

import math

import numpy as np
import pytest

from tracelab.errors import DomainError
from tracelab.fields import (
    CounterexampleSpec,
    PiecewiseConstant,
    Regularity,
    amplitude_a,
    boundary_power_field,
    constant_field,
    counterexample_field,
    counterexample_intervals,
    linear_field,
    log_amplitude_a,
    scaled,
    support_measure,
    variable_exponent_field,
)
from tracelab.geometry import unit_square


class TestPiecewiseConstant:
    """1D step functions."""

    def test_evaluate(self):
        step = PiecewiseConstant(np.array([0.0, 1.0, 2.0]), np.array([1.0, 3.0]))
        np.testing.assert_allclose(step.evaluate(np.array([-0.5, 0.5, 1.5, 2.5])), [0.0, 1.0, 3.0, 0.0])

    def test_rejects_unsorted_breakpoints(self):
        with pytest.raises(DomainError):
            PiecewiseConstant(np.array([0.0, 2.0, 1.0]), np.array([1.0, 1.0]))

    def test_merge_caps_overlaps(self):
        merged = PiecewiseConstant.from_intervals([(0.0, 2.0), (1.0, 3.0)], [1.0, 1.0], merge=True)
        summed = PiecewiseConstant.from_intervals([(0.0, 2.0), (1.0, 3.0)], [1.0, 1.0], merge=False)
        assert merged.evaluate(np.array([1.5]))[0] == 1.0
        assert summed.evaluate(np.array([1.5]))[0] == 2.0

    def test_mirrored(self):
        step = PiecewiseConstant(np.array([0.1, 0.3]), np.array([1.0]))
        np.testing.assert_allclose(step.mirrored(1.0).breakpoints, [1.7, 1.9])

    def test_support_measure(self):
        step = PiecewiseConstant(np.array([0.0, 1.0, 2.0, 4.0]), np.array([1.0, 0.0, 2.0]))
        assert step.support_measure() == pytest.approx(3.0)

    def test_mean_power_deviation(self):
        step = PiecewiseConstant(np.array([0.0, 1.0]), np.array([1.0]))
        means = step.mean_power_deviation(np.array([-1.0, -1.0]), np.array([1.0, 1.0]), np.array([0.0, 1.0]), 2.0)
        np.testing.assert_allclose(means, [0.5, 0.5])


class TestSimpleFields:
    """Constant, linear and boundary-power fields."""

    def test_constant(self):
        u = constant_field(3.0)
        assert u((0.2, 0.7)) == 3.0
        assert u.is_constant

    def test_linear(self):
        u = linear_field(1.0, 1.0)
        assert u((0.25, 0.5)) == pytest.approx(0.75)
        assert u.regularity is Regularity.SMOOTH

    def test_boundary_power(self):
        u = boundary_power_field(unit_square(), -0.1)
        assert u((0.5, 0.5)) == pytest.approx(0.5**-0.1)

    def test_scaled_keeps_steps(self):
        u = counterexample_field(CounterexampleSpec(1.0, 1.0, J_max=5))
        v = scaled(u, 2.0)
        assert v.support is not None
        assert v(0.2) == pytest.approx(2.0 * u(0.2))
        assert v.regularity is Regularity.PIECEWISE_CONSTANT


class TestExponentFields:
    """Variable exponents s(x)."""

    def test_constant(self):
        s = variable_exponent_field("constant", s0=0.7)
        assert s((0.3, 0.3)) == 0.7
        assert s.bound == 0.7

    def test_negative_constant(self):
        with pytest.raises(DomainError):
            variable_exponent_field("constant", s0=-0.1)

    def test_distance_power(self):
        d = unit_square()
        s = variable_exponent_field("distance_power", base=0.5, exponent=1.0, domain=d)
        assert s((0.5, 0.25)) == pytest.approx(0.75)
        assert s.bound == pytest.approx(1.0)

    def test_distance_power_needs_domain(self):
        with pytest.raises(DomainError):
            variable_exponent_field("distance_power", base=0.5, exponent=1.0)

    def test_negative_somewhere(self):
        with pytest.raises(DomainError):
            variable_exponent_field("distance_power", base=0.1, exponent=-1.0, domain=unit_square())


class TestCounterexample:
    """u = sum_j chi_{E_j} on (0, 2)."""

    def test_spec_validation(self):
        with pytest.raises(DomainError):
            CounterexampleSpec(0.5, 2.0)
        with pytest.raises(DomainError):
            CounterexampleSpec(2.0, 0.4)
        with pytest.raises(DomainError):
            CounterexampleSpec(1.0, 1.0, convention="other")  # type: ignore[arg-type]

    def test_log_amplitude_matches(self):
        spec = CounterexampleSpec(2.0, 1.0)
        for j in (1, 5, 20):
            assert log_amplitude_a(spec, j) == pytest.approx(math.log(amplitude_a(spec, j)), rel=1e-12)

    def test_log_amplitude_stays_finite(self):
        spec = CounterexampleSpec(1.0, 3.0)
        assert np.isfinite(log_amplitude_a(spec, np.array([10**6])))[0]

    def test_first_amplitude(self):
        spec = CounterexampleSpec(1.0, 1.0)
        assert amplitude_a(spec, 1) == pytest.approx(1.0 / (5.0 * math.log(3.0) ** 2))

    def test_minmax_reverses_every_interval(self):
        spec = CounterexampleSpec(1.0, 1.0, J_max=10)
        intervals, degenerate = counterexample_intervals(spec)
        assert degenerate == list(range(1, 11))
        lo, hi = intervals[0]
        assert hi == pytest.approx(0.25)
        assert lo == pytest.approx(0.25 * amplitude_a(spec, 1))

    def test_minmax_field_values(self):
        u = counterexample_field(CounterexampleSpec(1.0, 1.0, J_max=10))
        assert u(0.2) == 1.0
        assert u(1.8) == 1.0
        assert u(0.5) == 0.0
        assert u(1.0) == 0.0
        assert u.params["degenerate"] == 10

    def test_offset_field(self):
        spec = CounterexampleSpec(1.0, 1.0, J_max=10, convention="offset")
        u = counterexample_field(spec)
        assert counterexample_intervals(spec)[1] == []
        assert u(0.26) == 1.0
        assert u(0.2) == 0.0

    def test_log_decay_weights(self):
        spec = CounterexampleSpec(1.0, 1.0, J_max=10, convention="offset", amplitude="log_decay")
        u = counterexample_field(spec)
        assert u(0.26) == pytest.approx(1.0 / math.log(2.0))
        assert u.regularity is Regularity.PIECEWISE_CONSTANT

    def test_support_measure(self):
        u = counterexample_field(CounterexampleSpec(1.0, 1.0, J_max=10))
        first = 0.25 * (1.0 - amplitude_a(CounterexampleSpec(1.0, 1.0), 1))
        assert 2.0 * first < support_measure(u) < 2.0 / 3.0

    def test_support_measure_needs_steps(self):
        with pytest.raises(DomainError):
            support_measure(linear_field(1.0))
