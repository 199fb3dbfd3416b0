"""Scalar fields u and exponent fields s, including the strict-containment counterexample."""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Literal, Sequence

import numpy as np

from .errors import DomainError
from .geometry import DomainApprox, PointLike, as_point, as_points_array, distances

logger = logging.getLogger("tracelab.fields")

Evaluator = Callable[[np.ndarray], np.ndarray]

DEFAULT_J_MAX = 60


class Regularity(str, Enum):
    SMOOTH = "smooth"
    PIECEWISE_CONSTANT = "piecewise_constant"
    INDICATOR_SUM = "indicator_sum"


@dataclass(frozen=True, eq=False)
class PiecewiseConstant:
    """A 1D step function: ``values[k]`` on [breakpoints[k], breakpoints[k+1]), 0 elsewhere."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if len(bp) != len(vals) + 1:
            raise DomainError("Need one more breakpoint than values", f"{len(bp)} vs {len(vals)}")
        if len(bp) and np.any(np.diff(bp) <= 0):
            raise DomainError("Breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_intervals(
        cls, intervals: Sequence[tuple[float, float]], amplitudes: Sequence[float], merge: bool
    ) -> "PiecewiseConstant":
        """Sum of amplitude-weighted indicators; ``merge`` caps the sum at 1 (indicator of the union)."""
        pairs = [(lo, hi, amp) for (lo, hi), amp in zip(intervals, amplitudes) if hi > lo]
        if not pairs:
            return cls(np.zeros(1), np.zeros(0))
        bp = np.unique(np.array([x for lo, hi, _ in pairs for x in (lo, hi)]))
        mids = 0.5 * (bp[:-1] + bp[1:])
        vals = np.zeros(len(mids))
        for lo, hi, amp in pairs:
            vals[(mids > lo) & (mids < hi)] += amp
        if merge:
            vals = np.minimum(vals, 1.0)
        return cls(bp, vals)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        xs = np.asarray(x, dtype=float)
        if len(self.values) == 0:
            return np.zeros_like(xs)
        k = np.searchsorted(self.breakpoints, xs, side="right") - 1
        inside = (k >= 0) & (k < len(self.values))
        out = np.zeros_like(xs)
        out[inside] = self.values[k[inside]]
        return out

    def mirrored(self, axis: float) -> "PiecewiseConstant":
        """x -> 2 axis - x."""
        return PiecewiseConstant((2.0 * axis - self.breakpoints)[::-1], self.values[::-1])

    def combined(self, other: "PiecewiseConstant") -> "PiecewiseConstant":
        """Pointwise sum of two step functions."""
        bp = np.union1d(self.breakpoints, other.breakpoints)
        if len(bp) < 2:
            return self
        mids = 0.5 * (bp[:-1] + bp[1:])
        return PiecewiseConstant(bp, self.evaluate(mids) + other.evaluate(mids))

    def scaled(self, c: float) -> "PiecewiseConstant":
        return PiecewiseConstant(self.breakpoints, c * self.values)

    def support_measure(self) -> float:
        widths = np.diff(self.breakpoints)
        return float(widths[self.values != 0].sum())

    def mean_power_deviation(
        self, lo: np.ndarray, hi: np.ndarray, center_value: np.ndarray, q: float
    ) -> np.ndarray:
        """Exact mean of |v(y) - c|^q over y in (lo, hi), vectorized over intervals."""
        lo = np.asarray(lo, dtype=float)[:, None]
        hi = np.asarray(hi, dtype=float)[:, None]
        c = np.asarray(center_value, dtype=float)[:, None]
        width = (hi - lo)[:, 0]
        if len(self.values) == 0:
            return np.abs(c[:, 0]) ** q
        left, right = self.breakpoints[:-1][None, :], self.breakpoints[1:][None, :]
        overlap = np.clip(np.minimum(hi, right) - np.maximum(lo, left), 0.0, None)
        covered = overlap.sum(axis=1)
        total = (overlap * np.abs(self.values[None, :] - c) ** q).sum(axis=1)
        total += (width - covered) * np.abs(c[:, 0]) ** q
        return total / width


@dataclass(frozen=True, eq=False)
class ScalarField:
    """An evaluable u with a declared regularity class.

    ``evaluator`` maps an (N, 2) array to N values. Piecewise-constant 1D
    fields also carry their step function so inner means can be exact.
    """

    evaluator: Evaluator
    regularity: Regularity = Regularity.SMOOTH
    support: PiecewiseConstant | None = None
    name: str = "field"
    params: dict[str, float | str] = field(default_factory=dict)

    def values(self, points: np.ndarray | Sequence[PointLike]) -> np.ndarray:
        return np.asarray(self.evaluator(as_points_array(points)), dtype=float)

    def __call__(self, x: PointLike) -> float:
        return float(self.values([as_point(x)])[0])

    @property
    def is_constant(self) -> bool:
        return self.name == "constant"


@dataclass(frozen=True, eq=False)
class ExponentField:
    """An evaluable s >= 0 with a uniform upper bound."""

    evaluator: Evaluator
    bound: float
    name: str = "exponent"
    params: dict[str, float] = field(default_factory=dict)

    def values(self, points: np.ndarray | Sequence[PointLike]) -> np.ndarray:
        return np.asarray(self.evaluator(as_points_array(points)), dtype=float)

    def __call__(self, x: PointLike) -> float:
        return float(self.values([as_point(x)])[0])


@dataclass(frozen=True)
class CounterexampleSpec:
    """Parameters of u = sum_j chi_{E_j} on (0, 2), mirrored about x = 1.

    ``convention`` decides how E_j is realized from its written endpoints
    (4^-j, a_j 4^-j): ``minmax`` takes the interval between them, ``offset``
    uses (4^-j, (1 + a_j) 4^-j). ``amplitude`` is ``unit`` or ``log_decay``
    (weights 1/ln(j+1)).
    """

    p: float
    s0: float
    J_max: int = DEFAULT_J_MAX
    convention: Literal["minmax", "offset"] = "minmax"
    amplitude: Literal["unit", "log_decay"] = "unit"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.p) and self.p >= 1.0):
            raise DomainError("p must be >= 1", f"p={self.p}")
        if not (math.isfinite(self.s0) and self.s0 * self.p >= 1.0 - 1e-12):
            raise DomainError("s0 must satisfy s0 * p >= 1", f"s0={self.s0}, p={self.p}")
        if self.J_max < 1:
            raise DomainError("J_max must be >= 1", f"J_max={self.J_max}")
        if self.convention not in ("minmax", "offset"):
            raise DomainError("Unknown interval convention", self.convention)
        if self.amplitude not in ("unit", "log_decay"):
            raise DomainError("Unknown amplitude switch", self.amplitude)


def log_amplitude_a(spec: CounterexampleSpec, j: np.ndarray | int) -> np.ndarray:
    """ln a_j, vectorized; stays finite where a_j itself underflows."""
    jj = np.asarray(j, dtype=float)
    if np.any(jj < 1):
        raise DomainError("j must be >= 1")
    return (
        -jj * (spec.s0 - 1.0 / spec.p) * math.log(4.0)
        - math.log(5.0)
        - np.log(jj) / spec.p
        - 2.0 * np.log(np.log(jj + 2.0)) / spec.p
    )


def amplitude_a(spec: CounterexampleSpec, j: int) -> float:
    """a_j = 4^(-j (s0 - 1/p)) / (5 j^(1/p) ln(j+2)^(2/p))."""
    if j < 1:
        raise DomainError("j must be >= 1", f"j={j}")
    return float(
        4.0 ** (-j * (spec.s0 - 1.0 / spec.p))
        / (5.0 * j ** (1.0 / spec.p) * math.log(j + 2.0) ** (2.0 / spec.p))
    )


def counterexample_intervals(spec: CounterexampleSpec) -> tuple[list[tuple[float, float]], list[int]]:
    """Realized E_j for j = 1..J_max, and the j whose written endpoints are reversed."""
    intervals: list[tuple[float, float]] = []
    degenerate: list[int] = []
    for j in range(1, spec.J_max + 1):
        a = amplitude_a(spec, j)
        base = 4.0**-j
        if spec.convention == "offset":
            intervals.append((base, (1.0 + a) * base))
            continue
        if a < 1.0:
            degenerate.append(j)
        intervals.append((min(base, a * base), max(base, a * base)))
    return intervals, degenerate


def counterexample_field(spec: CounterexampleSpec) -> ScalarField:
    """u = sum_j w_j chi_{E_j} on (0, 1], extended by u(x) = u(2 - x)."""
    intervals, degenerate = counterexample_intervals(spec)
    if degenerate:
        logger.warning(
            "E_j has reversed endpoints for %d of %d indices (first j=%d); using the minmax convention",
            len(degenerate), spec.J_max, degenerate[0],
        )
    if spec.amplitude == "log_decay":
        weights = [1.0 / math.log(j + 1.0) for j in range(1, spec.J_max + 1)]
    else:
        weights = [1.0] * spec.J_max
    left = PiecewiseConstant.from_intervals(intervals, weights, merge=spec.amplitude == "unit")
    steps = left.combined(left.mirrored(1.0))

    def evaluate(pts: np.ndarray) -> np.ndarray:
        return steps.evaluate(pts[:, 0])

    regularity = Regularity.INDICATOR_SUM if spec.amplitude == "unit" else Regularity.PIECEWISE_CONSTANT
    return ScalarField(
        evaluate,
        regularity,
        support=steps,
        name="counterexample",
        params={
            "p": spec.p,
            "s0": spec.s0,
            "J_max": spec.J_max,
            "convention": spec.convention,
            "amplitude": spec.amplitude,
            "degenerate": len(degenerate),
        },
    )


def support_measure(u: ScalarField) -> float:
    """Lebesgue measure of {u != 0} for 1D step fields."""
    if u.support is None:
        raise DomainError("Support measure needs a 1D step field", u.name)
    return u.support.support_measure()


def constant_field(c: float) -> ScalarField:
    return ScalarField(lambda pts: np.full(len(pts), float(c)), name="constant", params={"c": float(c)})


def linear_field(a: float, b: float = 0.0, c: float = 0.0) -> ScalarField:
    """u(x, y) = a x + b y + c."""
    return ScalarField(
        lambda pts: a * pts[:, 0] + b * pts[:, 1] + c,
        name="linear",
        params={"a": a, "b": b, "c": c},
    )


def boundary_power_field(d: DomainApprox, exponent: float) -> ScalarField:
    """u(x) = d(x)^exponent; blows up at the boundary for negative exponents."""

    def evaluate(pts: np.ndarray) -> np.ndarray:
        dist = distances(d, pts)
        with np.errstate(divide="ignore"):
            return np.power(dist, exponent)

    return ScalarField(evaluate, name="boundary_power", params={"exponent": exponent})


def scaled(u: ScalarField, c: float) -> ScalarField:
    """c * u, keeping the regularity tag and step data."""
    support = None if u.support is None else u.support.scaled(c)
    params = dict(u.params)
    params["scale"] = c
    regularity = Regularity.PIECEWISE_CONSTANT if u.regularity is Regularity.INDICATOR_SUM else u.regularity
    return ScalarField(
        lambda pts: c * u.evaluator(pts), regularity, support=support, name=u.name, params=params
    )


def variable_exponent_field(
    kind: Literal["constant", "distance_power"],
    *,
    s0: float | None = None,
    base: float | None = None,
    exponent: float | None = None,
    domain: DomainApprox | None = None,
) -> ExponentField:
    """s(x) = s0, or s(x) = base + exponent * d(x) on ``domain``.

    Raises:
        DomainError: missing or non-finite parameters, or a field that would
            go negative somewhere on the domain.
    """
    if kind == "constant":
        if s0 is None or not math.isfinite(s0) or s0 < 0:
            raise DomainError("constant exponent needs a finite s0 >= 0", f"s0={s0}")
        value = float(s0)
        return ExponentField(lambda pts: np.full(len(pts), value), value, "constant", {"s0": value})
    if kind == "distance_power":
        if base is None or exponent is None or domain is None:
            raise DomainError("distance_power needs base, exponent and a domain")
        if not (math.isfinite(base) and math.isfinite(exponent)):
            raise DomainError("distance_power parameters must be finite")
        depth = domain.max_depth_bound()
        lowest, highest = sorted((base, base + exponent * depth))
        if lowest < 0:
            raise DomainError("Exponent field would be negative", f"min={lowest}")
        return ExponentField(
            lambda pts: base + exponent * distances(domain, pts),
            highest,
            "distance_power",
            {"base": base, "exponent": exponent},
        )
    raise DomainError("Unknown exponent formula", str(kind))
