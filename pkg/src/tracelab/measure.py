"""Conformal masses on the attractor, Ahlfors-regularity scans and box counting.

Masses use the closed form m(Gamma_{i*}) = sigma_{i*}^t, normalized so the two
root groups carry total mass 1. Hausdorff measure is only ever used through
ratios, so the unknown factor H^t(Gamma) never enters a verdict.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.spatial import ConvexHull

from .config import get_config_value
from .errors import DomainError, EstimationError, ResolutionError
from .fractal import CompositeIndex, PricklyDomain, group_level, ratio
from .geometry import Point2, PointLike, as_point, as_points_array
from .workers import parallel_map

logger = logging.getLogger("tracelab.measure")


def _ratio_from_dimension(t: float) -> float:
    """Invert 2 (L^t + 1) = 3^t for L."""
    if not 1.0 < t < 2.0:
        raise DomainError("Dimension t must lie in (1, 2)", f"t={t}")
    return ((3.0**t - 2.0) / 2.0) ** (1.0 / t)


def group_constant(t: float) -> float:
    """3^t / (3^t - 2), the mass of a group relative to its leading set."""
    return 3.0**t / (3.0**t - 2.0)


def group_mass(istar: CompositeIndex, t: float, L: float | None = None) -> float:
    """m(Gamma-hat_{i*}) = (3^t / (3^t - 2)) sigma_{i*}^t.

    L defaults to the ratio whose dimension is ``t``.
    """
    ratio_L = _ratio_from_dimension(t) if L is None else L
    return group_constant(t) * ratio(istar, ratio_L) ** t


@dataclass(frozen=True)
class ConformalMeasure:
    """The self-similar measure with m(f_{i*}(Gamma)) = sigma_{i*}^t."""

    L: float
    t: float

    @classmethod
    def for_domain(cls, p: PricklyDomain) -> "ConformalMeasure":
        return cls(p.L, p.t)

    def mass(self, istar: CompositeIndex) -> float:
        return ratio(istar, self.L) ** self.t

    def group_mass(self, istar: CompositeIndex) -> float:
        return group_mass(istar, self.t, self.L)


@dataclass(frozen=True)
class BallMass:
    """Two-sided estimate of m(Gamma intersected with B_rho(center))."""

    lower: float
    upper: float
    witness_mass: float
    groups_inside: int
    groups_boundary: int

    @property
    def estimate(self) -> float:
        return math.sqrt(self.lower * self.upper)


def _mass_digits(p: PricklyDomain, rho: float, resolution: float) -> int:
    return max(2, math.ceil(math.log(p.D0 * resolution / rho) / math.log(3.0)) + 2)


def ball_mass(
    p: PricklyDomain,
    center: PointLike,
    rho: float,
    t: float | None = None,
    resolution: float | None = None,
) -> BallMass:
    """Sandwich m(Gamma intersected with B_rho(center)) between covers of grouped sets.

    Groups are visited from the two roots down. A group whose bounding ball
    B_{3 sigma D0}(f(x0)) lies inside B_rho counts toward both bounds; one that
    only meets B_rho is split until sigma D0 <= rho / resolution, and then
    counts toward the upper bound alone.

    Raises:
        DomainError: nonpositive radius.
        ResolutionError: no group fits inside the ball.
    """
    if not rho > 0:
        raise DomainError("Ball radius must be positive", f"rho={rho}")
    dim = p.t if t is None else t
    res = float(get_config_value("mass_resolution")) if resolution is None else resolution
    c = as_point(center)
    x = complex(c.x, c.y)
    x0 = complex(p.x0.x, p.x0.y)
    table = p.index_table(_mass_digits(p, rho, res))
    const = group_constant(dim)
    stop = rho / res

    lower = upper = witness = 0.0
    inside = boundary = 0
    root3, root4 = table.root[3], table.root[4]
    stack: list[tuple[complex, complex, int]] = [(1 + 0j, 0j, root3), (1 + 0j, 0j, root4)]
    while stack:
        pa, pb, last = stack.pop()
        A = pa * table.a[last]
        B = pa * table.b[last] + pb
        sigma = abs(A)
        reach = 3.0 * sigma * p.D0
        gap = abs(A * x0 + B - x)
        if gap - reach >= rho:
            continue
        mass = const * sigma**dim
        if gap + reach < rho:
            lower += mass
            upper += mass
            witness = max(witness, mass)
            inside += 1
            continue
        if sigma * p.D0 <= stop:
            upper += mass
            boundary += 1
            continue
        child = table.child[last]
        if child[0] < 0:
            raise ResolutionError(f"Index table too shallow for rho={rho:.3e}")
        stack.extend(
            [(pa, pb, int(child[0])), (pa, pb, int(child[1])), (A, B, root3), (A, B, root4)]
        )
    if inside == 0:
        raise ResolutionError(
            f"No grouped set fits in B_rho at rho={rho:.3e} around ({c.x:.6g}, {c.y:.6g})"
        )
    return BallMass(lower, upper, witness, inside, boundary)


def attractor_diameter(p: PricklyDomain, norm: int = 6) -> float:
    pts = np.vstack([group_level(p, norm).corners(), [[-0.5, 0.0], [0.5, 0.0]]])
    hull = pts[ConvexHull(pts).vertices]
    gaps = hull[:, None, :] - hull[None, :, :]
    return float(np.sqrt((gaps**2).sum(axis=2)).max())


def attractor_samples(p: PricklyDomain, count: int, norm: int = 6, seed: int | None = None) -> list[Point2]:
    """``count`` distinct attractor points, drawn reproducibly from a norm level."""
    pts = group_level(p, norm).corners()
    if count > len(pts):
        raise DomainError("Not enough attractor points at this norm", f"{count} > {len(pts)}")
    rng = np.random.default_rng(int(get_config_value("seed")) if seed is None else seed)
    pick = np.sort(rng.choice(len(pts), size=count, replace=False))
    return [Point2(float(x), float(y)) for x, y in pts[pick]]


@dataclass(frozen=True)
class AhlforsSample:
    center: Point2
    rho: float
    lower: float
    upper: float
    estimate: float
    ratio: float
    lower_checked: bool


@dataclass
class AhlforsReport:
    """Per-(center, radius) mass ratios and the extracted regularity constants."""

    t: float
    diameter: float
    max_spread: float
    samples: list[AhlforsSample] = field(default_factory=list)

    @property
    def upper_const(self) -> float:
        """max over samples of upper / rho^t (H4')."""
        return max(s.upper / s.rho**self.t for s in self.samples)

    @property
    def lower_const(self) -> float:
        """min over the H4''-checked samples of lower / rho^t."""
        checked = [s.lower / s.rho**self.t for s in self.samples if s.lower_checked]
        return min(checked) if checked else math.nan

    @property
    def spread(self) -> float:
        """max / min of the estimated mass ratios over H4''-checked samples."""
        ratios = [s.ratio for s in self.samples if s.lower_checked]
        if not ratios:
            return 1.0
        return max(ratios) / min(ratios)

    @property
    def certified_spread(self) -> float:
        return self.upper_const / self.lower_const

    @property
    def passed(self) -> bool:
        return math.isfinite(self.spread) and self.spread <= self.max_spread

    def summary(self) -> dict[str, Any]:
        return {
            "t": self.t,
            "A_upper": self.upper_const,
            "A_lower": self.lower_const,
            "spread": self.spread,
            "certified_spread": self.certified_spread,
            "max_spread": self.max_spread,
            "passed": self.passed,
            "samples": len(self.samples),
        }

    def to_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(
                ["center_x", "center_y", "rho", "lower", "upper", "lower_over_rho_t", "upper_over_rho_t"]
            )
            for s in self.samples:
                scale = s.rho**self.t
                writer.writerow(
                    [
                        repr(s.center.x),
                        repr(s.center.y),
                        repr(s.rho),
                        repr(s.lower),
                        repr(s.upper),
                        repr(s.lower / scale),
                        repr(s.upper / scale),
                    ]
                )


def ahlfors_scan(
    p: PricklyDomain,
    centers: Sequence[PointLike],
    radii: Sequence[float],
    t: float | None = None,
    max_spread: float | None = None,
    resolution: float | None = None,
    jobs: int | None = 1,
) -> AhlforsReport:
    """Ratios m(Gamma intersected with B_rho)/rho^t over centers x radii.

    Radii larger than diam(Gamma) are checked against the upper bound only.

    Raises:
        ResolutionError: propagated from :func:`ball_mass`.
    """
    if not centers or not radii:
        raise DomainError("Ahlfors scan needs at least one center and one radius")
    dim = p.t if t is None else t
    spread_limit = float(get_config_value("ahlfors_max_spread")) if max_spread is None else max_spread
    res = float(get_config_value("mass_resolution")) if resolution is None else resolution
    pts = [as_point(c) for c in centers]
    diameter = attractor_diameter(p)
    # Build the shared index table once before fanning out
    p.index_table(_mass_digits(p, min(radii), res))
    pairs = [(c, float(rho)) for c in pts for rho in radii]

    def run(pair: tuple[Point2, float]) -> AhlforsSample:
        c, rho = pair
        mass = ball_mass(p, c, rho, dim, res)
        return AhlforsSample(
            center=c,
            rho=rho,
            lower=mass.lower,
            upper=mass.upper,
            estimate=mass.estimate,
            ratio=mass.estimate / rho**dim,
            lower_checked=rho <= diameter,
        )

    report = AhlforsReport(t=dim, diameter=diameter, max_spread=spread_limit)
    report.samples.extend(parallel_map(run, pairs, jobs))
    logger.info(
        "Ahlfors scan: %d samples, spread %.4g (limit %.4g), certified %.4g",
        len(report.samples), report.spread, spread_limit, report.certified_spread,
    )
    return report


def box_counting_dimension(
    points: np.ndarray | Sequence[PointLike], scales: Sequence[float]
) -> float:
    """Least-squares slope of log N(eps) against log(1/eps).

    Raises:
        EstimationError: fewer than 1000 points, fewer than 4 scales, scales
            spanning under two decades, or a point set with no spatial extent.
    """
    pts = as_points_array(points)
    eps = np.asarray(sorted(scales), dtype=float)
    if len(pts) < 1000:
        raise EstimationError(f"Box counting needs at least 1000 points, got {len(pts)}")
    if len(eps) < 4 or np.any(eps <= 0):
        raise EstimationError("Box counting needs at least 4 positive scales")
    if eps[-1] / eps[0] < 100.0:
        raise EstimationError("Box-counting scales must span at least two decades")
    if np.ptp(pts, axis=0).max() == 0.0:
        raise EstimationError("Point set is degenerate (all points coincide)")
    origin = pts.min(axis=0)
    counts = []
    for e in eps:
        cells = np.floor((pts - origin) / e).astype(np.int64)
        counts.append(len(np.unique(cells, axis=0)))
    slope, _ = np.polyfit(np.log(1.0 / eps), np.log(np.asarray(counts, dtype=float)), 1)
    logger.debug("Box counts %s at scales %s", counts, eps.tolist())
    return float(slope)
