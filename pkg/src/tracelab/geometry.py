"""Planar domains, boundary distance, balls and approach regions.

A :class:`DomainApprox` is either a 1D interval with exact distances or a
planar domain bounded by one or more closed polylines. Distance queries on
planar domains go through a shapely STRtree over the boundary segments, so
the answer is exact for the polygonal approximation; ``distance_error``
bounds how far that approximation is from the true boundary.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import shapely
from scipy.stats import qmc

from .config import get_config_value
from .errors import DomainError

logger = logging.getLogger("tracelab.geometry")

SQRT3_HALF = math.sqrt(3.0) / 2.0

# Ball ratios for Psi(x) and Phi(x)
PSI_RATIO = 0.5
PHI_RATIO = 1.0 / 6.0


@dataclass(frozen=True)
class Point2:
    """A point of the plane; 1D domains use ``y == 0``."""

    x: float
    y: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError("Point coordinates must be finite", f"({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    def distance_to(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


PointLike = Point2 | float | tuple[float, float]


def as_point(x: PointLike) -> Point2:
    """Coerce a float (1D) or pair into a :class:`Point2`."""
    if isinstance(x, Point2):
        return x
    if isinstance(x, tuple):
        return Point2(float(x[0]), float(x[1]))
    return Point2(float(x), 0.0)


def as_points_array(points: np.ndarray | Sequence[PointLike]) -> np.ndarray:
    """Return an (N, 2) float array; 1D input gets a zero y column."""
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
        if arr.ndim == 1:
            return np.column_stack([arr, np.zeros_like(arr)])
        return arr.reshape(-1, 2)
    return np.array([as_point(p).as_array() for p in points], dtype=float).reshape(-1, 2)


def _drop_repeats(vertices: np.ndarray, closed: bool) -> np.ndarray:
    keep = np.ones(len(vertices), dtype=bool)
    keep[1:] = np.any(vertices[1:] != vertices[:-1], axis=1)
    out = vertices[keep]
    if closed and len(out) > 2 and np.array_equal(out[0], out[-1]):
        out = out[:-1]
    return out


@dataclass(frozen=True, eq=False)
class Polyline:
    """Ordered vertex list, optionally closed (last vertex joins the first)."""

    vertices: np.ndarray
    closed: bool = True

    def __post_init__(self) -> None:
        verts = np.ascontiguousarray(np.asarray(self.vertices, dtype=float).reshape(-1, 2))
        if len(verts) < 2:
            raise DomainError("A polyline needs at least 2 vertices", f"got {len(verts)}")
        if not np.all(np.isfinite(verts)):
            raise DomainError("Polyline vertices must be finite")
        if np.any(np.all(verts[1:] == verts[:-1], axis=1)):
            raise DomainError("Consecutive polyline vertices must be distinct")
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def from_points(cls, points: np.ndarray, closed: bool = True) -> "Polyline":
        """Build a polyline, dropping repeated consecutive vertices."""
        return cls(_drop_repeats(np.asarray(points, dtype=float).reshape(-1, 2), closed), closed)

    def __len__(self) -> int:
        return len(self.vertices)

    def segments(self) -> np.ndarray:
        """Segments as an (M, 2, 2) array."""
        starts = self.vertices
        ends = np.roll(self.vertices, -1, axis=0)
        if not self.closed:
            starts, ends = starts[:-1], ends[:-1]
        return np.stack([starts, ends], axis=1)

    @property
    def length(self) -> float:
        segs = self.segments()
        return float(np.sum(np.linalg.norm(segs[:, 1] - segs[:, 0], axis=1)))

    def to_csv(self, path: Path) -> None:
        """Write one ``x,y`` row per vertex."""
        np.savetxt(path, self.vertices, delimiter=",", header="x,y", comments="", fmt="%.17g")


class DomainKind(str, Enum):
    WEDGE = "wedge"
    PRICKLY_SNOWFLAKE = "prickly_snowflake"
    INTERVAL_1D = "interval_1d"
    KOCH = "koch"
    POLYGON = "polygon"


class Containment(Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True, eq=False)
class DomainApprox:
    """A domain with a distance-to-boundary oracle.

    Planar domains are the union of the regions bounded by ``rings`` (each a
    simple closed polyline; components may touch along edges). 1D domains
    set ``interval`` and have no rings.
    """

    kind: DomainKind
    rings: tuple[Polyline, ...] = ()
    depth: int = 0
    distance_error: float = 0.0
    interval: tuple[float, float] | None = None
    metadata: dict[str, float] = field(default_factory=dict)
    _polygons: tuple[shapely.Polygon, ...] = field(init=False, repr=False, default=())
    _tree: shapely.STRtree | None = field(init=False, repr=False, default=None)

    def __post_init__(self) -> None:
        if self.distance_error < 0 or not math.isfinite(self.distance_error):
            raise DomainError("distance_error must be finite and nonnegative")
        if self.depth < 0:
            raise DomainError("depth must be nonnegative")
        if self.kind is DomainKind.INTERVAL_1D:
            if self.interval is None:
                raise DomainError("1D domains need an interval")
            return
        if not self.rings:
            raise DomainError("Planar domains need at least one boundary ring")
        polygons = tuple(shapely.Polygon(ring.vertices) for ring in self.rings)
        for polygon in polygons:
            shapely.prepare(polygon)
        segments = np.concatenate([ring.segments() for ring in self.rings])
        tree = shapely.STRtree(shapely.linestrings(segments))
        object.__setattr__(self, "_polygons", polygons)
        object.__setattr__(self, "_tree", tree)

    @property
    def boundary(self) -> Polyline:
        """Outer boundary polyline (the first ring)."""
        if not self.rings:
            raise DomainError("1D domains have no boundary polyline")
        return self.rings[0]

    @property
    def dimension(self) -> int:
        return 1 if self.kind is DomainKind.INTERVAL_1D else 2

    @property
    def polygons(self) -> tuple[shapely.Polygon, ...]:
        return self._polygons

    @property
    def n_vertices(self) -> int:
        return sum(len(ring) for ring in self.rings)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax)."""
        if self.interval is not None:
            return (self.interval[0], 0.0, self.interval[1], 0.0)
        allv = np.concatenate([ring.vertices for ring in self.rings])
        return (
            float(allv[:, 0].min()),
            float(allv[:, 1].min()),
            float(allv[:, 0].max()),
            float(allv[:, 1].max()),
        )

    def max_depth_bound(self) -> float:
        """Upper bound on sup d(x) over the domain."""
        xmin, ymin, xmax, ymax = self.bounds
        if self.dimension == 1:
            return (xmax - xmin) / 2.0
        return min(xmax - xmin, ymax - ymin) / 2.0


def distances(d: DomainApprox, points: np.ndarray | Sequence[PointLike]) -> np.ndarray:
    """Vectorized distance to the (approximate) boundary."""
    pts = as_points_array(points)
    if d.kind is DomainKind.INTERVAL_1D:
        assert d.interval is not None
        a, b = d.interval
        x = pts[:, 0]
        return np.minimum(np.abs(x - a), np.abs(b - x))
    out = np.empty(len(pts), dtype=float)
    if len(pts) == 0:
        return out
    assert d._tree is not None
    idx, dist = d._tree.query_nearest(
        shapely.points(pts), return_distance=True, all_matches=False
    )
    out[idx[0]] = dist
    return out


def inside_mask(d: DomainApprox, points: np.ndarray | Sequence[PointLike]) -> np.ndarray:
    """Raw point-in-domain test, ignoring the indeterminate band."""
    pts = as_points_array(points)
    if d.kind is DomainKind.INTERVAL_1D:
        assert d.interval is not None
        a, b = d.interval
        return (pts[:, 0] > a) & (pts[:, 0] < b)
    mask = np.zeros(len(pts), dtype=bool)
    for polygon in d.polygons:
        mask |= shapely.contains_xy(polygon, pts[:, 0], pts[:, 1])
    return mask


def signed_distances(d: DomainApprox, points: np.ndarray | Sequence[PointLike]) -> np.ndarray:
    """Distance to the boundary, negated for points outside the domain."""
    pts = as_points_array(points)
    dist = distances(d, pts)
    return np.where(inside_mask(d, pts), dist, -dist)


def contains_many(d: DomainApprox, points: np.ndarray | Sequence[PointLike]) -> np.ndarray:
    """True where a point is inside and farther than ``distance_error`` from the boundary."""
    pts = as_points_array(points)
    return inside_mask(d, pts) & (distances(d, pts) > d.distance_error)


def distance_to_boundary(d: DomainApprox, x: PointLike) -> float:
    """Distance from ``x`` to the boundary of ``d``."""
    return float(distances(d, [as_point(x)])[0])


def classify(d: DomainApprox, x: PointLike) -> Containment:
    """Three-way containment; points within ``distance_error`` are indeterminate."""
    p = as_point(x)
    dist = distance_to_boundary(d, p)
    if dist <= d.distance_error:
        return Containment.INDETERMINATE
    return Containment.INSIDE if bool(inside_mask(d, [p])[0]) else Containment.OUTSIDE


def contains(d: DomainApprox, x: PointLike) -> bool:
    """Point-in-domain test; indeterminate points count as boundary."""
    return classify(d, x) is Containment.INSIDE


@dataclass(frozen=True)
class BallSpec:
    center: Point2
    radius: float

    def __post_init__(self) -> None:
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise DomainError("Ball radius must be positive", f"radius={self.radius}")

    def contains(self, x: PointLike) -> bool:
        return self.center.distance_to(as_point(x)) < self.radius

    def as_interval(self) -> tuple[float, float]:
        """The 1D ball (center - r, center + r)."""
        return (self.center.x - self.radius, self.center.x + self.radius)


def _interior_ball(d: DomainApprox, x: PointLike, ratio: float) -> BallSpec:
    p = as_point(x)
    if not contains(d, p):
        raise DomainError("Ball center must be an interior point", f"({p.x}, {p.y})")
    return BallSpec(center=p, radius=ratio * distance_to_boundary(d, p))


def psi_ball(d: DomainApprox, x: PointLike) -> BallSpec:
    """Psi(x): the ball of radius d(x)/2 around an interior point."""
    return _interior_ball(d, x, PSI_RATIO)


def phi_ball(d: DomainApprox, x: PointLike) -> BallSpec:
    """Phi(x): the ball of radius d(x)/6 around an interior point."""
    return _interior_ball(d, x, PHI_RATIO)


@dataclass(frozen=True)
class ApproachParams:
    """Parameters of the approach region Q^theta_{lambda,delta}(base_point).

    ``lam`` is the lambda of the definition (``lambda`` is a keyword).
    """

    base_point: Point2
    lam: float
    theta: float
    delta: float

    def __post_init__(self) -> None:
        if not (0.0 < self.lam < 1.0 <= self.theta):
            raise DomainError(
                "Approach parameters need 0 < lambda < 1 <= theta",
                f"lambda={self.lam}, theta={self.theta}",
            )
        if not self.delta > 0:
            raise DomainError("Approach radius delta must be positive", f"delta={self.delta}")


def approach_inequality(lam: float, theta: float, separation: float, depth: float) -> bool:
    """d(x) > (lambda * |xbar - x|)^theta."""
    return depth > (lam * separation) ** theta


def approach_contains(a: ApproachParams, d: DomainApprox, x: PointLike) -> bool:
    """Membership of an interior point in Q^theta_{lambda,delta}(xbar)."""
    p = as_point(x)
    if not contains(d, p):
        raise DomainError("Point is not inside the domain", f"({p.x}, {p.y})")
    separation = a.base_point.distance_to(p)
    if separation >= a.delta:
        return False
    return approach_inequality(a.lam, a.theta, separation, distance_to_boundary(d, p))


def interval_domain(a: float, b: float) -> DomainApprox:
    """The open interval (a, b) with exact distances."""
    if not (math.isfinite(a) and math.isfinite(b)) or a >= b:
        raise DomainError("Interval needs finite a < b", f"a={a}, b={b}")
    return DomainApprox(kind=DomainKind.INTERVAL_1D, interval=(float(a), float(b)))


def polygon_domain(rings: Sequence[Sequence[tuple[float, float]]]) -> DomainApprox:
    """A planar domain from explicit vertex rings (exact, distance_error 0)."""
    polylines = tuple(Polyline.from_points(np.asarray(ring, dtype=float)) for ring in rings)
    return DomainApprox(kind=DomainKind.POLYGON, rings=polylines)


def unit_square() -> DomainApprox:
    return polygon_domain([[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]])


def _cusp_profile_samples(theta0: float, H: float, tolerance: float) -> tuple[np.ndarray, float]:
    """Abscissae on [0, H] so that chords of x2 = (x1/H)^theta0 / 2 stay within ``tolerance``.

    The profile is convex, so the largest vertical gap between a chord and the
    curve is reached where the slope matches the chord slope; the vertical gap
    bounds the Euclidean one.
    """

    def f(x: float) -> float:
        return 0.5 * (x / H) ** theta0

    if theta0 == 1.0:
        return np.array([0.0, H]), 0.0

    def chord_gap(a: float, b: float) -> float:
        slope = (f(b) - f(a)) / (b - a)
        try:
            x_star = H * (2.0 * H * slope / theta0) ** (1.0 / (theta0 - 1.0))
        except OverflowError:
            x_star = b
        x_star = min(max(x_star, a), b)
        return f(a) + slope * (x_star - a) - f(x_star)

    accepted: list[tuple[float, float, float]] = []
    stack = [(0.0, H)]
    while stack:
        a, b = stack.pop()
        gap = chord_gap(a, b)
        if gap > tolerance:
            mid = 0.5 * (a + b)
            stack.extend([(mid, b), (a, mid)])
        else:
            accepted.append((a, b, gap))
    accepted.sort()
    xs = np.array([a for a, _, _ in accepted] + [H])
    return xs, max(gap for _, _, gap in accepted)


def wedge_domain(
    theta0: float, H: float, tolerance: float | None = None, slit: bool = True
) -> DomainApprox:
    """The cusped wedge with cusp vertex at the origin.

    With ``slit`` the region is 0 < |x2| < (x1/H)^theta0 / 2 for 0 < x1 < H: two
    horns meeting at the cusp, the positive x1 axis being boundary. Without it
    the axis is interior and the region is a single cusp.

    Raises:
        DomainError: theta0 < 1 or H outside (1/2, sqrt(3)/2].
    """
    if not (math.isfinite(theta0) and theta0 >= 1.0):
        raise DomainError("Wedge exponent theta0 must be >= 1", f"theta0={theta0}")
    if not (0.5 < H <= SQRT3_HALF + 1e-15):
        raise DomainError("Wedge height H must lie in (1/2, sqrt(3)/2]", f"H={H}")
    tol = float(get_config_value("wedge_tolerance")) if tolerance is None else tolerance
    if not tol > 0:
        raise DomainError("Wedge tolerance must be positive", f"tolerance={tol}")

    xs, achieved = _cusp_profile_samples(theta0, H, tol)
    ys = 0.5 * (xs / H) ** theta0
    upper = np.column_stack([xs, ys])
    lower = np.column_stack([xs, -ys])

    if slit:
        upper_ring = np.vstack([[[0.0, 0.0], [H, 0.0]], upper[::-1][:-1]])
        lower_ring = np.vstack([[[0.0, 0.0]], lower[1:], [[H, 0.0]]])
        rings = (Polyline.from_points(upper_ring), Polyline.from_points(lower_ring))
    else:
        ring = np.vstack([lower, upper[::-1][:-1]])
        rings = (Polyline.from_points(ring),)

    logger.debug(
        "Wedge theta0=%g H=%g slit=%s: %d profile vertices, chord error %.3e",
        theta0, H, slit, len(xs), achieved,
    )
    return DomainApprox(
        kind=DomainKind.WEDGE,
        rings=rings,
        distance_error=achieved,
        metadata={"theta0": theta0, "H": H, "slit": 1.0 if slit else 0.0},
    )


ThresholdFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class AnnulusSearch:
    """Candidates examined in an annulus search, with their depths."""

    points: np.ndarray
    depths: np.ndarray
    separations: np.ndarray

    def best(self, threshold_fn: ThresholdFn | None = None) -> int | None:
        """Index of the deepest admissible candidate, ties broken by smaller separation."""
        ok = self.depths > 0
        if threshold_fn is not None:
            ok &= self.depths > threshold_fn(self.separations)
        if not np.any(ok):
            return None
        idx = np.flatnonzero(ok)
        order = np.lexsort((self.separations[idx], -self.depths[idx]))
        return int(idx[order[0]])


_DIRECTIONS = np.array(
    [[math.cos(k * math.pi / 4.0), math.sin(k * math.pi / 4.0)] for k in range(8)]
)


def deepest_point_in_annulus(
    d: DomainApprox,
    center: PointLike,
    r_in: float,
    r_out: float,
    n_candidates: int | None = None,
    seed: int = 0,
    refine: int = 8,
) -> AnnulusSearch:
    """Search the open annulus r_in < |x - center| < r_out for deep interior points.

    Candidates are a scrambled Sobol set mapped area-uniformly onto the
    annulus plus a regular polar grid; the best few are then improved by a
    pattern search on the signed distance that stays inside the annulus.
    """
    c = as_point(center)
    if not (0.0 <= r_in < r_out):
        raise DomainError("Annulus needs 0 <= r_in < r_out", f"r_in={r_in}, r_out={r_out}")
    count = int(get_config_value("witness_candidates")) if n_candidates is None else n_candidates

    if d.dimension == 1:
        frac = (np.arange(count) + 0.5) / count
        offsets = r_in + frac * (r_out - r_in)
        xs = np.concatenate([c.x - offsets, c.x + offsets])
        pts = np.column_stack([xs, np.zeros_like(xs)])
        return AnnulusSearch(pts, signed_distances(d, pts), np.abs(xs - c.x))

    sobol = qmc.Sobol(d=2, scramble=True, seed=seed)
    u = sobol.random_base2(max(1, math.ceil(math.log2(max(count, 2)))))
    radii = np.sqrt(r_in**2 + u[:, 0] * (r_out**2 - r_in**2))
    angles = 2.0 * math.pi * u[:, 1]
    grid_angles = np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False)
    grid_fracs = np.array([0.2, 0.45, 0.7, 0.95])
    ga, gf = np.meshgrid(grid_angles, grid_fracs)
    radii = np.concatenate([radii, r_in + gf.ravel() * (r_out - r_in)])
    angles = np.concatenate([angles, ga.ravel()])
    pts = np.column_stack([c.x + radii * np.cos(angles), c.y + radii * np.sin(angles)])
    depth = signed_distances(d, pts)

    order = np.argsort(-depth, kind="stable")[:refine]
    current = pts[order].copy()
    current_depth = depth[order].copy()
    step = np.full(len(current), (r_out - r_in) / 4.0)
    min_step = 1e-4 * (r_out - r_in)
    for _ in range(60):
        active = step > min_step
        if not np.any(active):
            break
        trial = current[:, None, :] + step[:, None, None] * _DIRECTIONS[None, :, :]
        flat = trial.reshape(-1, 2)
        sep = np.hypot(flat[:, 0] - c.x, flat[:, 1] - c.y)
        trial_depth = np.full(len(flat), -np.inf)
        ok = (sep > r_in) & (sep < r_out)
        if np.any(ok):
            trial_depth[ok] = signed_distances(d, flat[ok])
        trial_depth = trial_depth.reshape(len(current), 8)
        pick = np.argmax(trial_depth, axis=1)
        gain = trial_depth[np.arange(len(current)), pick]
        improved = active & (gain > current_depth)
        current[improved] = trial[improved, pick[improved]]
        current_depth[improved] = gain[improved]
        step = np.where(improved | ~active, step, step / 2.0)

    all_pts = np.vstack([pts, current])
    all_depth = np.concatenate([depth, current_depth])
    sep = np.hypot(all_pts[:, 0] - c.x, all_pts[:, 1] - c.y)
    return AnnulusSearch(all_pts, all_depth, sep)
