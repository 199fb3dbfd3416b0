"""Boundary traces along corkscrew sequences and the quantities built on them.

A trace value Tu(xbar) is the limit of g(x_j; u) along interior points x_j
approaching xbar inside the approach region. Non-convergence is a reported
state (``TraceSample.limit is None``), not an error.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.stats import kendalltau

from .artifacts import write_csv
from .config import get_config_value
from .errors import CutoffError, DegeneratePairError, DomainError, ResolutionError
from .fields import ExponentField, ScalarField
from .fractal import PricklyDomain, group_level
from .geometry import (
    DomainApprox,
    Point2,
    PointLike,
    as_point,
    as_points_array,
    deepest_point_in_annulus,
    distances,
    inside_mask,
)
from .seminorm import QuadratureSpec, alpha, alpha_lower_envelope, g_mean

logger = logging.getLogger("tracelab.trace")


@dataclass(frozen=True)
class CorkscrewPoint:
    j: int
    point: Point2
    rho: float
    depth: float


@dataclass
class CorkscrewSequence:
    """Witnesses x_j with rho_{j+1} <= |xbar - x_j| < rho_j and d(x_j) > (lambda |xbar - x_j|)^theta."""

    base: Point2
    lam: float
    eta: float
    theta: float
    rho0: float
    j_max: int
    points: list[CorkscrewPoint] = field(default_factory=list)
    missing: list[int] = field(default_factory=list)

    @property
    def violated(self) -> bool:
        """No level produced a witness."""
        return not self.points

    def to_dict(self) -> dict[str, Any]:
        return {
            "base": [self.base.x, self.base.y],
            "lambda": self.lam,
            "eta": self.eta,
            "theta": self.theta,
            "rho0": self.rho0,
            "points": [
                {"j": c.j, "x": [c.point.x, c.point.y], "rho": c.rho, "depth": c.depth}
                for c in self.points
            ],
            "missing": list(self.missing),
        }


def corkscrew_sequence(
    d: DomainApprox,
    xbar: PointLike,
    lam: float,
    eta: float,
    theta: float,
    j_max: int,
    rho0: float | None = None,
    n_candidates: int | None = None,
    seed: int | None = None,
) -> CorkscrewSequence:
    """Search each annulus rho_{j+1} < |x - xbar| < rho_j, rho_j = eta^j rho0, for a witness.

    The deepest admissible candidate is kept, ties going to the one closer to
    xbar. Levels without a witness are recorded in ``missing``.
    """
    if not (0.0 < lam < 1.0 and 0.0 < eta < 1.0 and theta >= 1.0):
        raise DomainError(
            "Corkscrew parameters need 0 < lambda, eta < 1 <= theta",
            f"lambda={lam}, eta={eta}, theta={theta}",
        )
    if j_max < 0:
        raise DomainError("j_max must be nonnegative", f"j_max={j_max}")
    base = as_point(xbar)
    start = min(0.5, d.max_depth_bound() * 2.0) if rho0 is None else rho0
    if not start > 0:
        raise DomainError("rho0 must be positive", f"rho0={start}")
    base_seed = int(get_config_value("seed")) if seed is None else seed

    seq = CorkscrewSequence(base, lam, eta, theta, start, j_max)
    for j in range(j_max + 1):
        outer = start * eta**j
        search = deepest_point_in_annulus(d, base, eta * outer, outer, n_candidates, seed=base_seed + j)
        best = search.best(lambda sep: (lam * sep) ** theta)
        if best is None:
            seq.missing.append(j)
            continue
        x = search.points[best]
        seq.points.append(CorkscrewPoint(j, Point2(float(x[0]), float(x[1])), outer, float(search.depths[best])))
    if seq.missing:
        logger.debug("Corkscrew at (%g, %g): no witness at levels %s", base.x, base.y, seq.missing)
    return seq


@dataclass
class TraceSample:
    base: Point2
    sequence: CorkscrewSequence
    g_values: list[tuple[int, float]]
    limit: float | None
    cauchy_tail: float
    tolerance: float
    skipped: list[int] = field(default_factory=list)

    @property
    def has_trace(self) -> bool:
        return self.limit is not None

    def to_dict(self) -> dict[str, Any]:
        return {
            "base": [self.base.x, self.base.y],
            "g_values": [[j, g] for j, g in self.g_values],
            "limit": self.limit,
            "cauchy_tail": self.cauchy_tail,
            "tolerance": self.tolerance,
            "skipped": list(self.skipped),
            "sequence": self.sequence.to_dict(),
        }


def trace_at(
    u: ScalarField,
    d: DomainApprox,
    seq: CorkscrewSequence,
    spec: QuadratureSpec | None = None,
    tolerance: float | None = None,
    tail: int = 3,
) -> TraceSample:
    """Evaluate g along a corkscrew sequence and decide whether it is Cauchy.

    The tail spread max |g_j - g_k| over the last ``tail`` values is compared
    with ``tolerance`` times max(1, |g_last|). Witnesses inside the cutoff
    layer are skipped.
    """
    if seq.violated:
        raise DomainError("Corkscrew sequence has no points", f"base=({seq.base.x}, {seq.base.y})")
    qs = spec or QuadratureSpec.from_config()
    tol = float(get_config_value("cauchy_tolerance")) if tolerance is None else tolerance
    values: list[tuple[int, float]] = []
    skipped: list[int] = []
    for c in seq.points:
        try:
            values.append((c.j, g_mean(u, d, c.point, qs)))
        except CutoffError:
            skipped.append(c.j)

    limit: float | None = None
    spread = math.inf
    if len(values) >= 2:
        last = np.array([g for _, g in values[-tail:]])
        spread = float(np.ptp(last)) if np.all(np.isfinite(last)) else math.inf
        if spread <= tol * max(1.0, abs(float(last[-1]))):
            limit = float(last[-1])
    if limit is None:
        logger.info(
            "No trace at (%g, %g): tail spread %.3e over %d values",
            seq.base.x, seq.base.y, spread, len(values),
        )
    return TraceSample(seq.base, seq, values, limit, spread, tol, skipped)


@dataclass(frozen=True)
class HolderFit:
    beta_hat: float
    C_hat: float
    r2: float
    predicted_beta: float
    scales: int
    noise_limited: bool = False

    @property
    def meets_prediction(self) -> bool:
        return not self.noise_limited and self.beta_hat >= self.predicted_beta

    def to_dict(self) -> dict[str, Any]:
        return {
            "beta_hat": self.beta_hat,
            "C_hat": self.C_hat,
            "r2": self.r2,
            "predicted_beta": self.predicted_beta,
            "scales": self.scales,
            "noise_limited": self.noise_limited,
            "meets_prediction": self.meets_prediction,
        }


_MIN_SCALES = 5
_NOISE = 1e-13


def fit_power_law(
    separations: Sequence[float], residuals: Sequence[float], predicted_beta: float, noise_floor: float = 0.0
) -> HolderFit:
    """Least squares of log residual against log separation.

    Residuals at or below ``noise_floor`` are dropped; fewer than five
    surviving scales give a noise-limited fit.
    """
    sep = np.asarray(separations, dtype=float)
    res = np.asarray(residuals, dtype=float)
    keep = (res > noise_floor) & (sep > 0) & np.isfinite(res)
    if int(keep.sum()) < _MIN_SCALES:
        logger.warning("Hoelder fit is noise-limited: %d usable scales", int(keep.sum()))
        return HolderFit(math.nan, math.nan, math.nan, predicted_beta, int(keep.sum()), True)
    x, y = np.log(sep[keep]), np.log(res[keep])
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    total = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(((y - fitted) ** 2).sum()) / total if total > 0 else 1.0
    return HolderFit(float(slope), float(math.exp(intercept)), r2, predicted_beta, int(keep.sum()))


def holder_fit(sample: TraceSample, predicted_beta: float) -> HolderFit:
    """Fit |Tu(xbar) - g(x_j)| ~ C |xbar - x_j|^beta along the sequence.

    The last value defines the limit, so it is left out of the fit.
    """
    if sample.limit is None:
        raise DomainError("Trace limit is undefined at this point", f"({sample.base.x}, {sample.base.y})")
    by_level = {c.j: c for c in sample.sequence.points}
    used = sample.g_values[:-1]
    sep = [sample.base.distance_to(by_level[j].point) for j, _ in used]
    res = [abs(sample.limit - g) for _, g in used]
    return fit_power_law(sep, res, predicted_beta, _NOISE * max(1.0, abs(sample.limit)))


@dataclass(frozen=True)
class RegionMeanLadder:
    rhos: list[float]
    means: list[float]
    kendall_tau: float

    def to_dict(self) -> dict[str, Any]:
        return {"rho": self.rhos, "mean": self.means, "kendall_tau": self.kendall_tau}


def _ball_nodes(d: DomainApprox, center: Point2, rho: float, spec: QuadratureSpec) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(2 * spec.inner_samples)
    t, w = 0.5 * (t + 1.0), 0.5 * w
    if d.dimension == 1:
        xs = np.concatenate([center.x - rho * t, center.x + rho * t])
        return np.column_stack([xs, np.zeros_like(xs)]), np.concatenate([w, w])
    n_phi = 4 * spec.inner_samples
    phi = 2.0 * math.pi * (np.arange(n_phi) + 0.5) / n_phi
    rr, pp = np.meshgrid(rho * t, phi, indexing="ij")
    pts = np.column_stack([(center.x + rr * np.cos(pp)).ravel(), (center.y + rr * np.sin(pp)).ravel()])
    return pts, np.repeat(w * t, n_phi)


def _region_means(
    u: ScalarField,
    d: DomainApprox,
    xbar: PointLike,
    Tu_value: float,
    p: float,
    rho_ladder: Sequence[float],
    spec: QuadratureSpec | None,
    approach: tuple[float, float] | None,
) -> RegionMeanLadder:
    qs = spec or QuadratureSpec.from_config()
    center = as_point(xbar)
    rhos = sorted((float(r) for r in rho_ladder), reverse=True)
    means: list[float] = []
    for rho in rhos:
        pts, w = _ball_nodes(d, center, rho, qs)
        mask = inside_mask(d, pts)
        if approach is not None:
            lam, theta = approach
            sep = np.hypot(pts[:, 0] - center.x, pts[:, 1] - center.y)
            mask &= distances(d, pts) > (lam * sep) ** theta
        if not np.any(mask):
            raise ResolutionError(f"No interior nodes within rho={rho:.3e} of ({center.x}, {center.y})")
        dev = np.abs(Tu_value - u.values(pts[mask])) ** p
        means.append(float((dev * w[mask]).sum() / w[mask].sum()))
    tau = 0.0
    if len(means) >= 2 and np.ptp(means) > 0:
        tau = float(kendalltau(rhos, means).statistic)
    return RegionMeanLadder(rhos, means, tau)


def lebesgue_point_check(
    u: ScalarField,
    d: DomainApprox,
    xbar: PointLike,
    Tu_value: float,
    p: float,
    rho_ladder: Sequence[float],
    spec: QuadratureSpec | None = None,
) -> RegionMeanLadder:
    """Means of |Tu - u|^p over Omega intersected with B_rho(xbar), largest rho first.

    A positive Kendall tau means the deviation shrinks with rho.

    Raises:
        ResolutionError: the region is empty at some rho.
    """
    return _region_means(u, d, xbar, Tu_value, p, rho_ladder, spec, None)


def corkscrew_region_means(
    u: ScalarField,
    d: DomainApprox,
    xbar: PointLike,
    lam: float,
    rho_ladder: Sequence[float],
    p: float,
    Tu_value: float,
    spec: QuadratureSpec | None = None,
    theta: float = 1.0,
) -> RegionMeanLadder:
    """As :func:`lebesgue_point_check`, restricted to the approach region Q_{lambda, rho}(xbar)."""
    if not 0.0 < lam < 1.0:
        raise DomainError("lambda must lie in (0, 1)", f"lambda={lam}")
    return _region_means(u, d, xbar, Tu_value, p, rho_ladder, spec, (lam, theta))


def sobolev_slobodeckij_seminorm(
    boundary_samples: Sequence[tuple[PointLike, float, float]],
    beta: float,
    p: float,
    t: float,
) -> float:
    """Sum over i != j of w_i w_j |Tu_i - Tu_j|^p / |x_i - x_j|^(t + beta p).

    Raises:
        DegeneratePairError: two samples share a location.
    """
    if len(boundary_samples) < 100:
        logger.warning("Seminorm estimate from only %d samples", len(boundary_samples))
    pts = as_points_array([s[0] for s in boundary_samples])
    vals = np.array([s[1] for s in boundary_samples], dtype=float)
    weights = np.array([s[2] for s in boundary_samples], dtype=float)
    power = t + beta * p
    total = 0.0
    chunk = 512
    for start in range(0, len(pts), chunk):
        block = slice(start, start + chunk)
        gaps = np.hypot(pts[block, None, 0] - pts[None, :, 0], pts[block, None, 1] - pts[None, :, 1])
        rows = np.arange(start, min(start + chunk, len(pts)))
        gaps[rows - start, rows] = np.inf
        if np.any(gaps == 0):
            i, j = np.argwhere(gaps == 0)[0]
            raise DegeneratePairError(int(i + start), int(j))
        diff = np.abs(vals[block, None] - vals[None, :]) ** p
        total += float((weights[block, None] * weights[None, :] * diff / gaps**power).sum())
    return total


def boundary_samples_with_weights(p: PricklyDomain, norm: int) -> list[tuple[Point2, float]]:
    """Attractor points of one norm level, weighted by their share of the conformal mass."""
    level = group_level(p, norm)
    weights = level.scale**p.t
    weights = weights / weights.sum()
    return [
        (Point2(float(x), float(y)), float(w)) for (x, y), w in zip(level.corners(), weights)
    ]


@dataclass(frozen=True)
class BetaPrediction:
    beta: float
    delta: float
    alpha: float


def predicted_beta(
    s: ExponentField,
    theta: float,
    xbar: PointLike,
    delta: float,
    p: float,
    n: int,
    t: float,
    d: DomainApprox,
    spec: QuadratureSpec | None = None,
) -> BetaPrediction:
    """The Hoelder exponent bound (alpha_delta(xbar) + t) / p at a resolvable delta."""
    a = alpha_lower_envelope(s, theta, xbar, delta, p, n, d, spec)
    return BetaPrediction((a + t) / p, delta, a)


class RegionMode(str, Enum):
    TRACE_WBP = "trace_wbp"
    LEBESGUE = "lebesgue"


def _threshold(mode: RegionMode | str, theta0: float, t: float, n: int) -> float:
    if RegionMode(mode) is RegionMode.TRACE_WBP:
        return -t
    return n * (theta0 - 1.0) - t


def admissible_region(
    p: float, s0: float, theta0: float, t: float, n: int, mode: RegionMode | str
) -> bool:
    """alpha(s0, theta0) > -t for traces, > n(theta0 - 1) - t for Lebesgue points."""
    return bool(alpha(s0, theta0, p, n) > _threshold(mode, theta0, t, n))


def region_boundary(p: np.ndarray, theta0: float, level: float, n: int) -> np.ndarray:
    """s solving alpha(s, theta0) = level for each p."""
    p = np.asarray(p, dtype=float)
    x = (level - p * (1.0 - theta0)) / theta0
    x = np.where(x <= p - 1.0, x, level - (1.0 - theta0))
    return (x + n) / p


@dataclass
class RegionGrid:
    ps: np.ndarray
    ss: np.ndarray
    theta0: float
    t: float
    n: int
    trace_mask: np.ndarray
    lebesgue_mask: np.ndarray

    @property
    def trace_curve(self) -> np.ndarray:
        return np.column_stack([self.ps, region_boundary(self.ps, self.theta0, -self.t, self.n)])

    @property
    def lebesgue_curve(self) -> np.ndarray:
        level = self.n * (self.theta0 - 1.0) - self.t
        return np.column_stack([self.ps, region_boundary(self.ps, self.theta0, level, self.n)])

    def to_csv(self, directory: Path) -> list[Path]:
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for name, mask in (("trace_wbp", self.trace_mask), ("lebesgue", self.lebesgue_mask)):
            path = directory / f"region_{name}.csv"
            rows = [[repr(float(pv)), repr(float(sv)), int(mask[i, k])]
                    for i, pv in enumerate(self.ps) for k, sv in enumerate(self.ss)]
            write_csv(path, ["p", "s0", "admissible"], rows)
            written.append(path)
        for name, curve in (("trace_wbp", self.trace_curve), ("lebesgue", self.lebesgue_curve)):
            path = directory / f"boundary_{name}.csv"
            write_csv(path, ["p", "s0"], [[repr(float(a)), repr(float(b))] for a, b in curve])
            written.append(path)
        return written


def region_grid(
    p_range: tuple[float, float],
    s_range: tuple[float, float],
    theta0: float,
    t: float,
    n: int,
    resolution: int,
) -> RegionGrid:
    """Admissibility masks on a (p, s0) grid, rows indexed by p."""
    if resolution < 32:
        raise DomainError("Region grids need resolution >= 32", f"resolution={resolution}")
    if p_range[0] < 1.0 or p_range[1] <= p_range[0] or s_range[1] <= s_range[0]:
        raise DomainError("Invalid (p, s0) ranges", f"p={p_range}, s0={s_range}")
    ps = np.linspace(p_range[0], p_range[1], resolution)
    ss = np.linspace(s_range[0], s_range[1], resolution)
    values = np.vstack([alpha(ss, theta0, float(pv), n) for pv in ps])
    return RegionGrid(
        ps=ps,
        ss=ss,
        theta0=theta0,
        t=t,
        n=n,
        trace_mask=values > _threshold(RegionMode.TRACE_WBP, theta0, t, n),
        lebesgue_mask=values > _threshold(RegionMode.LEBESGUE, theta0, t, n),
    )
