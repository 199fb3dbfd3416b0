"""Quadrature for the nonlocal semi-norm nu^{s,p}, its (p, q) variant and the mean field g.

Outer integrals run over {x in Omega intersected with E : d(x) > cutoff} on a
mesh graded toward the boundary: geometric shells in 1D, a boundary-refined
quadtree in 2D, with Gauss-Legendre nodes per cell. Inner means over Psi(x)
are exact for 1D step fields, Gauss-Legendre on each half-ball for smooth
fields, and polar rules (stratified-jittered for indicator fields) in 2D.

A cutoff ladder is evaluated on the single mesh of its smallest cutoff, so
values are monotone in the cutoff by construction.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import get_config_value
from .errors import CutoffError, DomainError, ResolutionError, ResourceError
from .fields import ExponentField, Regularity, ScalarField
from .geometry import (
    PHI_RATIO,
    PSI_RATIO,
    DomainApprox,
    DomainKind,
    Point2,
    PointLike,
    as_point,
    as_points_array,
    distances,
    inside_mask,
    signed_distances,
)

logger = logging.getLogger("tracelab.seminorm")

_CHUNK = 2048


@dataclass(frozen=True)
class QuadratureSpec:
    grading: float = 1.0
    cells_per_decade: int = 8
    cutoff: float = 1e-6
    inner_samples: int = 16
    order: int = 8
    seed: int = 0
    max_cells: int = 200_000

    def __post_init__(self) -> None:
        if not (self.cutoff > 0 and math.isfinite(self.cutoff)):
            raise DomainError("Quadrature cutoff must be positive", f"cutoff={self.cutoff}")
        if self.inner_samples < 8:
            raise DomainError("Inner sample count must be >= 8", f"got {self.inner_samples}")
        if self.cells_per_decade < 1 or self.order < 2:
            raise DomainError("Need >= 1 cell per decade and >= 2 nodes per cell")
        if not 0.0 <= self.grading <= 2.0:
            raise DomainError("Grading exponent must lie in [0, 2]", f"grading={self.grading}")

    @classmethod
    def from_config(cls, **overrides: float) -> "QuadratureSpec":
        values = {
            "grading": float(get_config_value("grading")),
            "cells_per_decade": int(get_config_value("cells_per_decade")),
            "cutoff": float(get_config_value("cutoff")),
            "inner_samples": int(get_config_value("inner_samples")),
            "seed": int(get_config_value("seed")),
            "max_cells": int(get_config_value("max_cells")),
        }
        values.update(overrides)
        return cls(**values)  # type: ignore[arg-type]


@dataclass(frozen=True)
class WholeDomain:
    def mask(self, pts: np.ndarray) -> np.ndarray:
        return np.ones(len(pts), dtype=bool)

    def clip(self, lo: float, hi: float) -> tuple[float, float]:
        return lo, hi


@dataclass(frozen=True)
class Box:
    xmin: float
    xmax: float
    ymin: float = -math.inf
    ymax: float = math.inf

    def mask(self, pts: np.ndarray) -> np.ndarray:
        return (
            (pts[:, 0] >= self.xmin)
            & (pts[:, 0] <= self.xmax)
            & (pts[:, 1] >= self.ymin)
            & (pts[:, 1] <= self.ymax)
        )

    def clip(self, lo: float, hi: float) -> tuple[float, float]:
        return max(lo, self.xmin), min(hi, self.xmax)


@dataclass(frozen=True)
class Ball:
    center: Point2
    radius: float

    def mask(self, pts: np.ndarray) -> np.ndarray:
        return np.hypot(pts[:, 0] - self.center.x, pts[:, 1] - self.center.y) < self.radius

    def clip(self, lo: float, hi: float) -> tuple[float, float]:
        return max(lo, self.center.x - self.radius), min(hi, self.center.x + self.radius)


Region = WholeDomain | Box | Ball


@dataclass(frozen=True)
class NuResult:
    value: float
    error: float
    cutoff: float
    cells: int
    divergent: bool = False
    growth_exponent: float | None = None

    def to_dict(self) -> dict[str, float | int | bool | None]:
        return {
            "value": self.value,
            "error": self.error,
            "cutoff": self.cutoff,
            "cells": self.cells,
            "divergent": self.divergent,
            "growth_exponent": self.growth_exponent,
        }


@dataclass(frozen=True)
class NuLadder:
    """nu^{(p,q)} at a decreasing cutoff ladder, all on one mesh."""

    results: list[NuResult]
    growth_exponent: float | None
    divergent: bool

    @property
    def cutoffs(self) -> list[float]:
        return [r.cutoff for r in self.results]

    @property
    def values(self) -> list[float]:
        return [r.value for r in self.results]


@dataclass(frozen=True)
class InnerMean:
    value: float
    error: float

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class _OuterRule:
    points: np.ndarray
    weights: np.ndarray
    depth: np.ndarray
    cells: int


def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _effective_cutoff(d: DomainApprox, cutoff: float) -> float:
    return max(cutoff, d.distance_error)


# -- inner means -------------------------------------------------------------


def _polar_template(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Offsets in the unit disk and weights summing to 1 (radial Gauss, uniform angle)."""
    r, wr = _gauss(max(n // 2, 4))
    phi = 2.0 * math.pi * (np.arange(n) + 0.5) / n
    rr, pp = np.meshgrid(r, phi, indexing="ij")
    weights = np.repeat(wr * r, n) / n
    offsets = np.column_stack([(rr * np.cos(pp)).ravel(), (rr * np.sin(pp)).ravel()])
    return offsets, weights / weights.sum()


def _jittered_offsets(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """One area-uniform point per (radius, angle) stratum, for ``count`` balls."""
    n_r = max(n // 2, 4)
    i_r, i_p = np.meshgrid(np.arange(n_r), np.arange(n), indexing="ij")
    jitter = rng.random((count, n_r * n, 2))
    r = np.sqrt((i_r.ravel()[None, :] + jitter[:, :, 0]) / n_r)
    phi = 2.0 * math.pi * (i_p.ravel()[None, :] + jitter[:, :, 1]) / n
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=2)


def _inner_1d(
    u: ScalarField,
    centers: np.ndarray,
    radii: np.ndarray,
    q: float | None,
    n: int,
) -> np.ndarray:
    """Means over (c - r, c + r) of |u(y) - u(c)|^q, or of u(y) when ``q`` is None."""
    if u.support is not None:
        lo, hi = centers - radii, centers + radii
        if q is None:
            return _step_mean(u, lo, hi)
        own = u.support.evaluate(centers)
        return u.support.mean_power_deviation(lo, hi, own, q)
    t, w = _gauss(n)
    own = u.values(centers) if q is not None else None
    total = np.zeros(len(centers))
    for sign in (-1.0, 1.0):
        ys = centers[:, None] + sign * radii[:, None] * t[None, :]
        vals = u.values(ys.ravel()).reshape(ys.shape)
        if q is not None:
            assert own is not None
            vals = np.abs(vals - own[:, None]) ** q
        total += 0.5 * (vals * w[None, :]).sum(axis=1)
    return total


def _step_mean(u: ScalarField, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    assert u.support is not None
    steps = u.support
    if len(steps.values) == 0:
        return np.zeros(len(lo))
    left, right = steps.breakpoints[:-1][None, :], steps.breakpoints[1:][None, :]
    overlap = np.clip(np.minimum(hi[:, None], right) - np.maximum(lo[:, None], left), 0.0, None)
    return (overlap * steps.values[None, :]).sum(axis=1) / (hi - lo)


def _inner_2d(
    u: ScalarField,
    centers: np.ndarray,
    radii: np.ndarray,
    q: float | None,
    n: int,
    rng: np.random.Generator | None,
) -> np.ndarray:
    out = np.empty(len(centers))
    jitter = rng is not None and u.regularity is not Regularity.SMOOTH
    offsets, weights = _polar_template(n)
    for start in range(0, len(centers), _CHUNK):
        c = centers[start : start + _CHUNK]
        r = radii[start : start + _CHUNK]
        if jitter:
            assert rng is not None
            local = _jittered_offsets(n, len(c), rng)
            w = np.full(local.shape[1], 1.0 / local.shape[1])
        else:
            local = np.broadcast_to(offsets, (len(c),) + offsets.shape)
            w = weights
        ys = c[:, None, :] + r[:, None, None] * local
        vals = u.values(ys.reshape(-1, 2)).reshape(len(c), -1)
        if q is not None:
            vals = np.abs(vals - u.values(c)[:, None]) ** q
        out[start : start + _CHUNK] = vals @ w
    return out


def _inner_means(
    u: ScalarField,
    d: DomainApprox,
    centers: np.ndarray,
    radii: np.ndarray,
    q: float | None,
    spec: QuadratureSpec,
    n: int | None = None,
) -> np.ndarray:
    samples = spec.inner_samples if n is None else n
    if d.dimension == 1:
        return _inner_1d(u, centers[:, 0], radii, q, samples)
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    return _inner_2d(u, centers, radii, q, samples, rng)


def _interior_depth(d: DomainApprox, x: PointLike, spec: QuadratureSpec) -> tuple[Point2, float]:
    pt = as_point(x)
    if not bool(inside_mask(d, [pt])[0]):
        raise DomainError("Point is not inside the domain", f"({pt.x}, {pt.y})")
    depth = float(distances(d, [pt])[0])
    if depth <= spec.cutoff:
        raise CutoffError(depth, spec.cutoff)
    return pt, depth


def mean_oscillation_estimate(
    u: ScalarField, d: DomainApprox, x: PointLike, spec: QuadratureSpec | None = None, q: float = 1.0
) -> InnerMean:
    """Mean of |u(y) - u(x)|^q over Psi(x), with a half-resolution error estimate.

    Raises:
        DomainError: x outside the domain.
        CutoffError: d(x) at or below the cutoff.
    """
    qs = spec or QuadratureSpec.from_config()
    pt, depth = _interior_depth(d, x, qs)
    centers = pt.as_array()[None, :]
    radii = np.array([PSI_RATIO * depth])
    fine = float(_inner_means(u, d, centers, radii, q, qs)[0])
    if d.dimension == 1 and u.support is not None:
        return InnerMean(fine, 0.0)
    coarse = float(_inner_means(u, d, centers, radii, q, qs, max(qs.inner_samples // 2, 8))[0])
    return InnerMean(fine, abs(fine - coarse))


def mean_oscillation(
    u: ScalarField, d: DomainApprox, x: PointLike, spec: QuadratureSpec | None = None, q: float = 1.0
) -> float:
    """Mean of |u(y) - u(x)|^q over Psi(x)."""
    return mean_oscillation_estimate(u, d, x, spec, q).value


def g_mean(u: ScalarField, d: DomainApprox, x: PointLike, spec: QuadratureSpec | None = None) -> float:
    """g(x; u), the mean of u over Phi(x).

    Raises:
        DomainError: x outside the domain.
        CutoffError: d(x) at or below the cutoff.
    """
    qs = spec or QuadratureSpec.from_config()
    pt, depth = _interior_depth(d, x, qs)
    centers = pt.as_array()[None, :]
    return float(_inner_means(u, d, centers, np.array([PHI_RATIO * depth]), None, qs)[0])


# -- outer meshes ------------------------------------------------------------


def _graded_distances(near: float, far: float, spec: QuadratureSpec) -> np.ndarray:
    """Breakpoints in boundary distance, cell size growing like distance^grading."""
    if far <= near:
        return np.array([near])
    decades = math.log10(far / near)
    count = max(int(math.ceil(spec.cells_per_decade * decades)), 1)
    k = np.arange(count + 1) / count
    g = spec.grading
    if abs(g - 1.0) < 1e-12:
        return near * (far / near) ** k
    e = 1.0 - g
    return (near**e + (far**e - near**e) * k) ** (1.0 / e)


def _kinks_1d(u: ScalarField, a: float, b: float) -> np.ndarray:
    """Outer points where Psi(x) or x itself crosses a step of u."""
    if u.support is None or len(u.support.values) == 0:
        return np.zeros(0)
    e = u.support.breakpoints
    return np.concatenate([e, 2.0 * e - a, (2.0 * e + a) / 3.0, (2.0 * e + b) / 3.0, 2.0 * e - b])


def _rule_1d(
    u: ScalarField,
    d: DomainApprox,
    region: Region,
    cutoffs: Sequence[float],
    spec: QuadratureSpec,
    refine: bool,
) -> _OuterRule:
    assert d.interval is not None
    a, b = d.interval
    mid = 0.5 * (a + b)
    near = min(cutoffs)
    lo, hi = region.clip(a + near, b - near)
    if hi <= lo:
        return _OuterRule(np.zeros((0, 2)), np.zeros(0), np.zeros(0), 0)
    shells = _graded_distances(near, mid - a, spec)
    cuts = np.asarray(cutoffs, dtype=float)
    breaks = np.concatenate([a + shells, b - shells, [mid, lo, hi], a + cuts, b - cuts, _kinks_1d(u, a, b)])
    breaks = np.unique(breaks[(breaks >= lo) & (breaks <= hi)])
    if refine:
        breaks = np.unique(np.concatenate([breaks, 0.5 * (breaks[:-1] + breaks[1:])]))
    t, w = _gauss(spec.order)
    widths = np.diff(breaks)
    xs = (breaks[:-1, None] + widths[:, None] * t[None, :]).ravel()
    ws = (widths[:, None] * w[None, :]).ravel()
    pts = np.column_stack([xs, np.zeros_like(xs)])
    return _OuterRule(pts, ws, np.minimum(xs - a, b - xs), len(widths))


def _quadtree_cells(
    d: DomainApprox, region: Region, cutoff: float, spec: QuadratureSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Lower-left corners and sides of the accepted cells."""
    xmin, ymin, xmax, ymax = d.bounds
    if isinstance(region, Box):
        xmin, xmax = max(xmin, region.xmin), min(xmax, region.xmax)
        ymin, ymax = max(ymin, region.ymin), min(ymax, region.ymax)
    elif isinstance(region, Ball):
        c, r = region.center, region.radius
        xmin, xmax = max(xmin, c.x - r), min(xmax, c.x + r)
        ymin, ymax = max(ymin, c.y - r), min(ymax, c.y + r)
    side = max(xmax - xmin, ymax - ymin)
    if side <= 0:
        return np.zeros((0, 2)), np.zeros(0)
    corners = np.array([[xmin, ymin]])
    h = side
    h_min = cutoff / 2.0
    scale = 4.0 / spec.cells_per_decade
    accepted: list[np.ndarray] = []
    sizes: list[np.ndarray] = []
    while len(corners):
        active = sum(len(a) for a in accepted) + len(corners)
        if active > spec.max_cells:
            raise ResourceError("quadrature cells", active, spec.max_cells)
        centers = corners + 0.5 * h
        half_diag = h * math.sqrt(0.5)
        signed = signed_distances(d, centers)
        keep = (signed > -half_diag) & (signed + half_diag > cutoff)
        if isinstance(region, Ball):
            gap = np.hypot(centers[:, 0] - region.center.x, centers[:, 1] - region.center.y)
            keep &= gap - half_diag < region.radius
        corners, signed = corners[keep], signed[keep]
        clearance = signed - half_diag
        done = (clearance > 0) & (h <= scale * np.maximum(clearance, 0.0) ** spec.grading)
        if h <= h_min:
            done[:] = True
        accepted.append(corners[done])
        sizes.append(np.full(int(done.sum()), h))
        rest = corners[~done]
        h *= 0.5
        corners = np.concatenate(
            [rest, rest + [h, 0.0], rest + [0.0, h], rest + [h, h]]
        ) if len(rest) else np.zeros((0, 2))
    return np.concatenate(accepted), np.concatenate(sizes)


def _rule_2d(
    d: DomainApprox, region: Region, cutoff: float, spec: QuadratureSpec, refine: bool
) -> _OuterRule:
    corners, sizes = _quadtree_cells(d, region, cutoff, spec)
    if refine and len(corners):
        half = 0.5 * sizes[:, None]
        corners = np.concatenate(
            [corners, corners + half * [1.0, 0.0], corners + half * [0.0, 1.0], corners + half]
        )
        sizes = np.tile(0.5 * sizes, 4)
    t, w = _gauss(max(spec.order // 2, 2))
    tx, ty = np.meshgrid(t, t, indexing="ij")
    wxy = np.outer(w, w).ravel()
    local = np.column_stack([tx.ravel(), ty.ravel()])
    pts = (corners[:, None, :] + sizes[:, None, None] * local[None, :, :]).reshape(-1, 2)
    ws = (sizes[:, None] ** 2 * wxy[None, :]).ravel()
    keep = inside_mask(d, pts) & region.mask(pts)
    pts, ws = pts[keep], ws[keep]
    return _OuterRule(pts, ws, distances(d, pts), len(sizes))


def _outer_rule(
    u: ScalarField,
    d: DomainApprox,
    region: Region,
    cutoffs: Sequence[float],
    spec: QuadratureSpec,
    refine: bool,
) -> _OuterRule:
    if d.kind is DomainKind.INTERVAL_1D:
        return _rule_1d(u, d, region, cutoffs, spec, refine)
    return _rule_2d(d, region, min(cutoffs), spec, refine)


def _integrand(
    u: ScalarField, s: ExponentField, p: float, q: float, d: DomainApprox, rule: _OuterRule, spec: QuadratureSpec
) -> np.ndarray:
    """(mean of |u(y)-u(x)|^q / d^{qs})^{p/q} at the outer nodes."""
    if len(rule.depth) == 0 or u.is_constant:
        return np.zeros(len(rule.depth))
    radii = PSI_RATIO * rule.depth
    means = _inner_means(u, d, rule.points, radii, q, spec)
    exps = s.values(rule.points)
    return np.power(means, p / q) * np.power(rule.depth, -p * exps)


def _growth(cutoffs: Sequence[float], values: Sequence[float]) -> float | None:
    pairs = [(c, v) for c, v in zip(cutoffs, values) if v > 0]
    tail = pairs[-4:]
    if len(tail) < 2:
        return None
    x = np.log([1.0 / c for c, _ in tail])
    y = np.log([v for _, v in tail])
    if np.ptp(x) == 0:
        return None
    return float(np.polyfit(x, y, 1)[0])


def _check_exponents(p: float, q: float) -> None:
    if not (math.isfinite(p) and p >= 1.0):
        raise DomainError("p must be >= 1", f"p={p}")
    if not (math.isfinite(q) and q >= 1.0):
        raise DomainError("q must be >= 1", f"q={q}")


def nu_pq_ladder(
    u: ScalarField,
    s: ExponentField,
    p: float,
    q: float,
    E: Region,
    d: DomainApprox,
    cutoffs: Sequence[float],
    spec: QuadratureSpec | None = None,
) -> NuLadder:
    """nu^{s,(p,q)} for each cutoff, sorted from largest to smallest.

    Divergence (growth as the cutoff shrinks) is reported through the
    growth exponent, the slope of log nu against log(1/cutoff).
    """
    _check_exponents(p, q)
    qs = spec or QuadratureSpec.from_config()
    ladder = sorted({_effective_cutoff(d, c) for c in cutoffs}, reverse=True)
    if not ladder or ladder[-1] <= 0:
        raise DomainError("Cutoff ladder must contain positive values")
    coarse = _outer_rule(u, d, E, ladder, qs, refine=False)
    fine = _outer_rule(u, d, E, ladder, qs, refine=True)
    f_coarse = coarse.weights * _integrand(u, s, p, q, d, coarse, qs)
    f_fine = fine.weights * _integrand(u, s, p, q, d, fine, qs)

    results: list[NuResult] = []
    for c in ladder:
        value = float(f_fine[fine.depth > c].sum())
        rough = float(f_coarse[coarse.depth > c].sum())
        results.append(NuResult(value, abs(value - rough), c, fine.cells))
    growth = _growth(ladder, [r.value for r in results])
    divergent = False
    if growth is not None and len(results) >= 2:
        last, prev = results[-1], results[-2]
        divergent = growth > 1e-2 and last.value - prev.value > 10.0 * (last.error + prev.error)
    logger.debug("nu ladder p=%g q=%g: %s", p, q, [r.value for r in results])
    if divergent:
        results[-1] = NuResult(
            results[-1].value, results[-1].error, results[-1].cutoff, results[-1].cells, True, growth
        )
    return NuLadder(results, growth, divergent)


def nu_pq(
    u: ScalarField,
    s: ExponentField,
    p: float,
    q: float,
    E: Region,
    d: DomainApprox,
    spec: QuadratureSpec | None = None,
) -> NuResult:
    """nu^{s,(p,q)}(E; u) at the quadrature cutoff (raised to the domain's distance error)."""
    qs = spec or QuadratureSpec.from_config()
    return nu_pq_ladder(u, s, p, q, E, d, [qs.cutoff], qs).results[0]


def nu(
    u: ScalarField,
    s: ExponentField,
    p: float,
    E: Region,
    d: DomainApprox,
    spec: QuadratureSpec | None = None,
) -> NuResult:
    """nu^{s,p}(E; u), the q = 1 case."""
    return nu_pq(u, s, p, 1.0, E, d, spec)


# -- exponent function alpha -------------------------------------------------


def alpha(s: float | np.ndarray, theta: float, p: float, n: int) -> float | np.ndarray:
    """The piecewise bilinear exponent alpha(s, theta).

    p(1 - theta) + (ps - n) theta where ps - n <= p - 1, else (1 - theta) + (ps - n).
    """
    if theta < 1.0 or p < 1.0:
        raise DomainError("alpha needs theta >= 1 and p >= 1", f"theta={theta}, p={p}")
    x = p * np.asarray(s, dtype=float) - n
    value = np.where(x <= p - 1.0, p * (1.0 - theta) + x * theta, (1.0 - theta) + x)
    return float(value) if value.ndim == 0 else value


def _envelope_candidates(d: DomainApprox, xbar: Point2) -> np.ndarray:
    """Fixed rings around xbar, so candidate sets are nested in the radius."""
    xmin, ymin, xmax, ymax = d.bounds
    top = 2.0 * max(xmax - xmin, ymax - ymin, 1e-12)
    radii = top * 2.0 ** (-np.arange(0, 160) / 4.0)
    if d.dimension == 1:
        xs = np.concatenate([xbar.x - radii, xbar.x + radii])
        pts = np.column_stack([xs, np.zeros_like(xs)])
    else:
        golden = math.pi * (3.0 - math.sqrt(5.0))
        k = np.arange(64)
        angles = 2.0 * math.pi * k[None, :] / 64 + golden * np.arange(len(radii))[:, None]
        pts = np.column_stack(
            [
                (xbar.x + radii[:, None] * np.cos(angles)).ravel(),
                (xbar.y + radii[:, None] * np.sin(angles)).ravel(),
            ]
        )
    keep = inside_mask(d, pts)
    pts = pts[keep]
    return pts[distances(d, pts) > 0]


def s_lower_envelope(
    s: ExponentField,
    d: DomainApprox,
    xbar: PointLike,
    delta: float,
    spec: QuadratureSpec | None = None,
) -> float:
    """Sampled inf of s over Omega intersected with B_delta(xbar).

    Raises:
        ResolutionError: no sample point falls in the set.
    """
    if not delta > 0:
        raise DomainError("delta must be positive", f"delta={delta}")
    center = as_point(xbar)
    pts = _envelope_candidates(d, center)
    near = pts[np.hypot(pts[:, 0] - center.x, pts[:, 1] - center.y) < delta]
    if len(near) == 0:
        raise ResolutionError(f"No interior samples within delta={delta:.3e} of ({center.x}, {center.y})")
    return float(s.values(near).min())


def alpha_lower_envelope(
    s: ExponentField,
    theta_gamma: float,
    xbar: PointLike,
    delta: float,
    p: float,
    n: int,
    d: DomainApprox,
    spec: QuadratureSpec | None = None,
) -> float:
    """alpha(s_lower_delta(xbar), theta_gamma)."""
    return float(alpha(s_lower_envelope(s, d, xbar, delta, spec), theta_gamma, p, n))


@dataclass(frozen=True)
class EnvelopeLadder:
    deltas: list[float]
    values: list[float]
    limit: float = field(default=math.nan)


def alpha_lower_limit(
    s: ExponentField,
    theta_gamma: float,
    xbar: PointLike,
    deltas: Sequence[float],
    p: float,
    n: int,
    d: DomainApprox,
    spec: QuadratureSpec | None = None,
) -> EnvelopeLadder:
    """alpha envelopes along a decreasing delta ladder and the extrapolated delta -> 0 value.

    Geometric decay of the increments is extrapolated; otherwise the value at
    the smallest delta is reported.
    """
    ladder = sorted(deltas, reverse=True)
    values = [alpha_lower_envelope(s, theta_gamma, xbar, dl, p, n, d, spec) for dl in ladder]
    limit = values[-1]
    if len(values) >= 3:
        step_prev = values[-2] - values[-3]
        step_last = values[-1] - values[-2]
        if step_prev > 0 and 0 < step_last < step_prev:
            r = step_last / step_prev
            limit = values[-1] + step_last * r / (1.0 - r)
    return EnvelopeLadder(list(ladder), values, limit)
