"""The prickly snowflake: index algebra, generator curves, similarities, attractor.

Indices follow the appendix construction. A single index ``i = (i', i'')``
has ``i'`` in {3, 4} (left or right side of U0) and ``i''`` a word over
{1, 2} naming a removed middle-third interval of [0, 1]. A composite index is
a nonempty sequence of those; its map is the composition of the single maps
and its ratio is 3^-norm * L^length.

The generator curves are exact polygonal chains. Every removed interval up
to the generator resolution is a straight segment of length exactly
3^-(1+|i''|) L, every remaining Cantor interval one level deeper is a single
straight segment, and the segment directions follow the secants of the
cusped wedge profile. Chords of deeper intervals lie on straight pieces, so
the scaling law holds for every word.
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np
import shapely
from scipy.optimize import minimize_scalar
from scipy.spatial import ConvexHull

from .config import get_config_value
from .errors import ConstructionError, DomainError, ResourceError
from .geometry import SQRT3_HALF, DomainApprox, DomainKind, Point2, Polyline

logger = logging.getLogger("tracelab.fractal")

L_MIN = 0.5
L_MAX = (1.0 + math.sqrt(3.0)) / 2.0
T1 = math.log(4.0) / math.log(3.0)

_I_PRIMES = (3, 4)


@dataclass(frozen=True)
class Index:
    """A single index (i', i'')."""

    i_prime: int
    i_dprime: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.i_prime not in _I_PRIMES:
            raise DomainError("i' must be 3 or 4", f"got {self.i_prime}")
        if any(digit not in (1, 2) for digit in self.i_dprime):
            raise DomainError("i'' digits must be 1 or 2", f"got {self.i_dprime}")
        object.__setattr__(self, "i_dprime", tuple(self.i_dprime))

    @property
    def length(self) -> int:
        """|i| = 1 + |i''|."""
        return 1 + len(self.i_dprime)

    def extend(self, digit: int) -> "Index":
        return Index(self.i_prime, self.i_dprime + (digit,))

    def __str__(self) -> str:
        if not self.i_dprime:
            return str(self.i_prime)
        return f"{self.i_prime}." + "".join(str(digit) for digit in self.i_dprime)

    @classmethod
    def parse(cls, text: str) -> "Index":
        head, _, digits = text.strip().partition(".")
        try:
            return cls(int(head), tuple(int(ch) for ch in digits))
        except ValueError as e:
            raise DomainError("Malformed index", repr(text)) from e


@dataclass(frozen=True)
class CompositeIndex:
    """A finite sequence of indices i* = (i_1, ..., i_j*)."""

    entries: tuple[Index, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise DomainError("A composite index needs at least one entry")
        object.__setattr__(self, "entries", tuple(self.entries))

    @classmethod
    def single(cls, i_prime: int, i_dprime: Sequence[int] = ()) -> "CompositeIndex":
        return cls((Index(i_prime, tuple(i_dprime)),))

    @property
    def length(self) -> int:
        """|i*|, the number of entries."""
        return len(self.entries)

    @property
    def norm(self) -> int:
        """||i*||, the sum of the entry lengths."""
        return sum(entry.length for entry in self.entries)

    @property
    def last(self) -> Index:
        return self.entries[-1]

    def append(self, i_prime: int) -> "CompositeIndex":
        """i* ++ (i'): a new entry with empty i''."""
        return CompositeIndex(self.entries + (Index(i_prime),))

    def extend_last(self, digit: int) -> "CompositeIndex":
        """i* ++ (i''): one more digit on the last entry."""
        return CompositeIndex(self.entries[:-1] + (self.last.extend(digit),))

    def successors(self) -> tuple["CompositeIndex", ...]:
        """The four successors i* ++ i for i = 1..4, each one norm unit deeper."""
        return (
            self.extend_last(1),
            self.extend_last(2),
            self.append(3),
            self.append(4),
        )

    def truncate(self, k: int) -> "CompositeIndex":
        if not 1 <= k <= self.length:
            raise DomainError("Truncation length out of range", f"k={k}, |i*|={self.length}")
        return CompositeIndex(self.entries[:k])

    def __str__(self) -> str:
        return "|".join(str(entry) for entry in self.entries)

    @classmethod
    def parse(cls, text: str) -> "CompositeIndex":
        return cls(tuple(Index.parse(part) for part in text.split("|")))


def partial_order_leq(i1: CompositeIndex, i2: CompositeIndex) -> bool:
    """The grouping order: i2 lies in the family generated from i1."""
    j1 = i1.length
    if j1 > i2.length:
        return False
    if i1.entries[: j1 - 1] != i2.entries[: j1 - 1]:
        return False
    last, other = i1.entries[j1 - 1], i2.entries[j1 - 1]
    if last.length > other.length:
        return False
    return (
        other.i_prime == last.i_prime
        and other.i_dprime[: len(last.i_dprime)] == last.i_dprime
    )


def roots() -> tuple[CompositeIndex, CompositeIndex]:
    """The two norm-1 indices whose groups cover the whole attractor."""
    return (CompositeIndex.single(3), CompositeIndex.single(4))


def grouped_family(istar: CompositeIndex, max_norm: int) -> list[CompositeIndex]:
    """All indices at or above ``istar`` in the grouping order with norm <= max_norm."""
    if max_norm < istar.norm:
        raise DomainError("max_norm must be at least the norm of i*", f"{max_norm} < {istar.norm}")
    family = [istar]
    frontier = [istar]
    for _ in range(max_norm - istar.norm):
        frontier = [child for node in frontier for child in node.successors()]
        family.extend(frontier)
    return family


def enumerate_indices(norm: int) -> list[CompositeIndex]:
    """All composite indices of a given norm (2 * 4^(norm-1) of them)."""
    if norm < 1:
        raise DomainError("Composite indices have norm >= 1", f"norm={norm}")
    level = list(roots())
    for _ in range(norm - 1):
        level = [child for node in level for child in node.successors()]
    return level


def cantor_interval(i_dprime: Sequence[int]) -> tuple[float, float]:
    """Endpoints (x-, x+) of the removed middle-third interval I_{i''}."""
    left = Fraction(0)
    width = Fraction(1)
    for digit in i_dprime:
        width /= 3
        if digit == 2:
            left += 2 * width
        elif digit != 1:
            raise DomainError("i'' digits must be 1 or 2", f"got {digit}")
    third = width / 3
    return float(left + third), float(left + 2 * third)


@dataclass(frozen=True)
class SimilarityMap:
    """z -> a * z + b (or a * conj(z) + b when reflecting), z = x + iy."""

    a: complex
    b: complex = 0j
    reflection: bool = False

    @property
    def scale(self) -> float:
        return abs(self.a)

    @property
    def rotation(self) -> float:
        return cmath.phase(self.a)

    @property
    def translation(self) -> Point2:
        return Point2(self.b.real, self.b.imag)

    @classmethod
    def identity(cls) -> "SimilarityMap":
        return cls(1 + 0j, 0j)

    def compose(self, inner: "SimilarityMap") -> "SimilarityMap":
        """self after inner."""
        if self.reflection:
            return SimilarityMap(
                self.a * inner.a.conjugate(),
                self.a * inner.b.conjugate() + self.b,
                not inner.reflection,
            )
        return SimilarityMap(self.a * inner.a, self.a * inner.b + self.b, inner.reflection)

    def apply_complex(self, z: np.ndarray) -> np.ndarray:
        return self.a * (np.conj(z) if self.reflection else z) + self.b

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map an (N, 2) array of points."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        w = self.apply_complex(pts[:, 0] + 1j * pts[:, 1])
        return np.column_stack([w.real, w.imag])

    def apply_point(self, p: Point2) -> Point2:
        w = self.a * (complex(p.x, -p.y) if self.reflection else complex(p.x, p.y)) + self.b
        return Point2(w.real, w.imag)


@lru_cache(maxsize=64)
def _pieces(resolution: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Partition of [0, 1] into removed intervals up to ``resolution`` and
    Cantor intervals of level ``resolution + 1``.

    Returns (xa, xb, level, position) sorted by xa; ``level`` is -1 for the
    Cantor intervals, otherwise the word length of the removed interval, and
    ``position`` the word read as a binary number (digit 1 -> 0, digit 2 -> 1).
    """
    xa: list[np.ndarray] = []
    xb: list[np.ndarray] = []
    levels: list[np.ndarray] = []
    positions: list[np.ndarray] = []
    lefts = np.zeros(1)
    for m in range(resolution + 1):
        width = 3.0**-m
        xa.append(lefts + width / 3.0)
        xb.append(lefts + 2.0 * width / 3.0)
        levels.append(np.full(len(lefts), m))
        positions.append(np.arange(len(lefts)))
        children = np.empty(2 * len(lefts))
        children[0::2] = lefts
        children[1::2] = lefts + 2.0 * width / 3.0
        lefts = children
    xa.append(lefts)
    xb.append(lefts + 3.0 ** -(resolution + 1))
    levels.append(np.full(len(lefts), -1))
    positions.append(np.arange(len(lefts)))
    all_xa = np.concatenate(xa)
    order = np.argsort(all_xa, kind="stable")
    return (
        all_xa[order],
        np.concatenate(xb)[order],
        np.concatenate(levels)[order],
        np.concatenate(positions)[order],
    )


def _word(level: int, position: int) -> tuple[int, ...]:
    return tuple(1 + ((position >> (level - 1 - k)) & 1) for k in range(level))


def _wedge_profile(theta0: float, H: float, samples: int = 20001) -> Callable[[np.ndarray], np.ndarray]:
    """Right side of the rotated wedge, corner (1/2, 0) to apex (0, H), by arc fraction."""
    s = np.linspace(1.0, 0.0, samples)
    pts = np.column_stack([0.5 * s**theta0, H * (1.0 - s)])
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
    tau = arc / arc[-1]

    def at(tau_q: np.ndarray) -> np.ndarray:
        s_q = np.interp(tau_q, tau, s)
        return np.column_stack([0.5 * s_q**theta0, H * (1.0 - s_q)])

    return at


def _right_chain(theta0: float, H: float, resolution: int) -> tuple[float, np.ndarray, np.ndarray]:
    """Exact chain for the right side. Returns (L, params ascending, points)."""
    xa, xb, _, _ = _pieces(resolution)
    order = np.argsort(-xa, kind="stable")  # corner (x = 1) first
    xa, xb = xa[order], xb[order]
    profile = _wedge_profile(theta0, H)
    chords = profile(1.0 - xa) - profile(1.0 - xb)
    units = chords / np.linalg.norm(chords, axis=1)[:, None]
    walk = np.vstack([[0.0, 0.0], np.cumsum((xb - xa)[:, None] * units, axis=0)])
    if walk[-1, 0] >= 0.0:
        raise ConstructionError(float("nan"), theta0, H)
    L = 0.5 / -walk[-1, 0]
    points = np.array([0.5, 0.0]) + L * walk
    points[-1, 0] = 0.0
    params = np.concatenate([[1.0], xa])
    return float(L), params[::-1].copy(), points[::-1].copy()


@dataclass(frozen=True, eq=False)
class GeneratorCurve:
    """gamma_{i'}: [0, 1] -> plane, gamma(1) at a base corner, gamma(0) at the cusp."""

    i_prime: int
    theta0: float
    H: float
    L: float
    resolution: int
    params: np.ndarray
    points: np.ndarray

    def sample_many(self, xs: np.ndarray | Sequence[float]) -> np.ndarray:
        q = np.asarray(xs, dtype=float)
        return np.column_stack(
            [np.interp(q, self.params, self.points[:, 0]), np.interp(q, self.params, self.points[:, 1])]
        )

    def sample(self, x: float) -> Point2:
        if not 0.0 <= x <= 1.0:
            raise DomainError("Curve parameter must lie in [0, 1]", f"x={x}")
        px, py = self.sample_many([x])[0]
        return Point2(float(px), float(py))

    def chord(self, i_dprime: Sequence[int]) -> float:
        """||gamma(x+) - gamma(x-)|| for the removed interval I_{i''}."""
        lo, hi = cantor_interval(i_dprime)
        ends = self.sample_many([lo, hi])
        return float(np.linalg.norm(ends[1] - ends[0]))

    @property
    def corner(self) -> Point2:
        return self.sample(1.0)

    @property
    def cusp(self) -> Point2:
        return self.sample(0.0)


def _validate_profile(theta0: float, H: float) -> None:
    if not (math.isfinite(theta0) and theta0 >= 1.0):
        raise DomainError("theta0 must be >= 1", f"theta0={theta0}")
    if not (0.0 < H <= SQRT3_HALF + 1e-15):
        raise DomainError("U0 height must lie in (0, sqrt(3)/2]", f"H={H}")


def generator_curve(
    i_prime: int, theta0: float, H: float, resolution: int | None = None
) -> GeneratorCurve:
    """Build gamma_3 (left side) or gamma_4 (right side) of U0.

    Raises:
        DomainError: theta0 < 1, H outside (0, sqrt(3)/2] or i' not in {3, 4}.
    """
    _validate_profile(theta0, H)
    if i_prime not in _I_PRIMES:
        raise DomainError("i' must be 3 or 4", f"got {i_prime}")
    res = int(get_config_value("generator_resolution")) if resolution is None else resolution
    L, params, points = _right_chain(theta0, H, res)
    if i_prime == 3:
        points = points * np.array([-1.0, 1.0])
    return GeneratorCurve(i_prime, theta0, H, L, res, params, points)


def L_from_geometry(theta0: float, H: float, resolution: int | None = None) -> float:
    """L = 3 ||gamma(1/3) - gamma(2/3)|| for the realized U0.

    Raises:
        ConstructionError: the ratio falls outside (1/2, (1+sqrt 3)/2).
    """
    curve = generator_curve(4, theta0, H, resolution)
    L = 3.0 * curve.chord(())
    if not (L_MIN < L < L_MAX):
        raise ConstructionError(L, theta0, H)
    return L


def hausdorff_dimension(L: float) -> float:
    """Solve 2 (L^t + 1) = 3^t for t in [1, 2] by bisection.

    Raises:
        DomainError: L outside (1/2, (1+sqrt 3)/2].
    """
    if not (L_MIN < L <= L_MAX + 1e-15):
        raise DomainError("L must lie in (1/2, (1+sqrt(3))/2]", f"L={L}")
    lo, hi = 1.0, 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 3.0**mid - 2.0 * L**mid - 2.0 < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return 0.5 * (lo + hi)


def lower_dimension_bound() -> float:
    """t1 = ln 4 / ln 3, attained at L = 1 (the Koch case)."""
    return T1


def upper_dimension_bound() -> float:
    """t2, the dimension at the supremum L = (1 + sqrt 3)/2."""
    return hausdorff_dimension(L_MAX)


@dataclass(frozen=True, eq=False)
class IndexTable:
    """Flat arrays of the single-index maps with |i''| <= max_digits.

    Entry ``k`` has map z -> a[k] z + b[k]; ``child[k]`` holds the ids of the
    entries with one more digit (1, 2), -1 at the last level.
    """

    max_digits: int
    a: np.ndarray
    b: np.ndarray
    child: np.ndarray
    i_prime: np.ndarray
    level: np.ndarray
    root: dict[int, int]


@dataclass(frozen=True, eq=False)
class PricklyDomain:
    """The realized prickly snowflake for given (theta0, H)."""

    theta0: float
    H: float
    L: float
    t: float
    max_norm: int
    left: GeneratorCurve
    right: GeneratorCurve
    u0_vertices: np.ndarray
    r0: float
    D0: float
    x0: Point2
    _maps: dict[Index, SimilarityMap] = field(default_factory=dict, init=False, repr=False)
    _tables: dict[int, IndexTable] = field(default_factory=dict, init=False, repr=False)

    @property
    def apex_height(self) -> float:
        return float(self.right.points[0, 1])

    @property
    def in_cusped_range(self) -> bool:
        """t lies in [t1, t2]; true exactly when L >= 1."""
        return T1 - 1e-12 <= self.t <= upper_dimension_bound() + 1e-12

    @property
    def is_koch(self) -> bool:
        return self.theta0 == 1.0 and abs(self.H - SQRT3_HALF) < 1e-12

    def curve(self, i_prime: int) -> GeneratorCurve:
        return self.left if i_prime == 3 else self.right

    def similarity(self, index: Index) -> SimilarityMap:
        cached = self._maps.get(index)
        if cached is None:
            cached = similarity_for_index(index, self)
            self._maps[index] = cached
        return cached

    def index_table(self, max_digits: int) -> IndexTable:
        """Vectorized single-index maps, rebuilt when deeper words are needed."""
        for built, table in self._tables.items():
            if built >= max_digits:
                return table
        table = _build_index_table(self, max_digits)
        self._tables.clear()
        self._tables[max_digits] = table
        return table


def similarity_for_index(i: Index, p: PricklyDomain) -> SimilarityMap:
    """The orientation-preserving similarity f_i.

    f_{3,i''} sends (1/2, 0) to gamma_3(x-) and (-1/2, 0) to gamma_3(x+);
    f_{4,i''} sends (-1/2, 0) to gamma_4(x-) and (1/2, 0) to gamma_4(x+).
    Both place the image of U0 outside U0, against the side.
    """
    lo, hi = cantor_interval(i.i_dprime)
    ends = p.curve(i.i_prime).sample_many([lo, hi])
    z_minus = complex(ends[0, 0], ends[0, 1])
    z_plus = complex(ends[1, 0], ends[1, 1])
    a = z_minus - z_plus if i.i_prime == 3 else z_plus - z_minus
    return SimilarityMap(a, 0.5 * (z_minus + z_plus))


def compose(istar: CompositeIndex, p: PricklyDomain) -> SimilarityMap:
    """f_{i*} = f_{i_1} o ... o f_{i_j*}."""
    result = SimilarityMap.identity()
    for entry in istar.entries:
        result = result.compose(p.similarity(entry))
    return result


def ratio(istar: CompositeIndex, L: float) -> float:
    """sigma_{i*} = 3^-||i*|| L^|i*|."""
    return 3.0 ** (-istar.norm) * L**istar.length


def _build_index_table(p: PricklyDomain, max_digits: int) -> IndexTable:
    a_parts: list[np.ndarray] = []
    b_parts: list[np.ndarray] = []
    child_parts: list[np.ndarray] = []
    prime_parts: list[np.ndarray] = []
    level_parts: list[np.ndarray] = []
    root: dict[int, int] = {}
    offset = 0
    for i_prime in _I_PRIMES:
        curve = p.curve(i_prime)
        root[i_prime] = offset
        lefts = np.zeros(1)
        for m in range(max_digits + 1):
            width = 3.0**-m
            ends_lo = curve.sample_many(lefts + width / 3.0)
            ends_hi = curve.sample_many(lefts + 2.0 * width / 3.0)
            z_minus = ends_lo[:, 0] + 1j * ends_lo[:, 1]
            z_plus = ends_hi[:, 0] + 1j * ends_hi[:, 1]
            a_parts.append(z_minus - z_plus if i_prime == 3 else z_plus - z_minus)
            b_parts.append(0.5 * (z_minus + z_plus))
            n = len(lefts)
            if m < max_digits:
                first_child = offset + n + 2 * np.arange(n)
                child_parts.append(np.column_stack([first_child, first_child + 1]))
            else:
                child_parts.append(np.full((n, 2), -1))
            prime_parts.append(np.full(n, i_prime))
            level_parts.append(np.full(n, m))
            offset += n
            children = np.empty(2 * n)
            children[0::2] = lefts
            children[1::2] = lefts + 2.0 * width / 3.0
            lefts = children
    return IndexTable(
        max_digits=max_digits,
        a=np.concatenate(a_parts),
        b=np.concatenate(b_parts),
        child=np.concatenate(child_parts).astype(np.int64),
        i_prime=np.concatenate(prime_parts),
        level=np.concatenate(level_parts),
        root=root,
    )


@dataclass(frozen=True)
class GroupLevel:
    """All groups at one norm level, as arrays.

    The full map of group ``k`` is z -> A[k] z + B[k]; ``length`` is |i*|.
    """

    norm: int
    A: np.ndarray
    B: np.ndarray
    length: np.ndarray

    @property
    def scale(self) -> np.ndarray:
        return np.abs(self.A)

    def corners(self) -> np.ndarray:
        """Images of the base corner (-1/2, 0), points of the attractor."""
        w = -0.5 * self.A + self.B
        return np.column_stack([w.real, w.imag])

    def centers(self, x0: Point2) -> np.ndarray:
        w = self.A * complex(x0.x, x0.y) + self.B
        return np.column_stack([w.real, w.imag])


def group_level(p: PricklyDomain, norm: int) -> GroupLevel:
    """Vectorized enumeration of the 2 * 4^(norm-1) groups of a norm level."""
    if norm < 1:
        raise DomainError("Group levels start at norm 1", f"norm={norm}")
    table = p.index_table(max(norm - 1, 1))
    pa = np.ones(2, dtype=complex)
    pb = np.zeros(2, dtype=complex)
    last = np.array([table.root[3], table.root[4]], dtype=np.int64)
    length = np.ones(2, dtype=np.int64)
    for _ in range(norm - 1):
        full_a = pa * table.a[last]
        full_b = pa * table.b[last] + pb
        n = len(last)
        pa = np.concatenate([pa, pa, full_a, full_a])
        pb = np.concatenate([pb, pb, full_b, full_b])
        last = np.concatenate(
            [table.child[last, 0], table.child[last, 1], np.full(n, table.root[3]), np.full(n, table.root[4])]
        )
        length = np.concatenate([length, length, length + 1, length + 1])
    return GroupLevel(norm, pa * table.a[last], pa * table.b[last] + pb, length)


def attractor_points(p: PricklyDomain, norm: int) -> np.ndarray:
    """A 3*sigma*D0-net of the attractor: corner images of every group at ``norm``."""
    return group_level(p, norm).corners()


def _inradius(polygon: shapely.Polygon, top: float) -> tuple[float, float]:
    """Largest distance to the boundary along the symmetry axis, and where."""
    ring = polygon.exterior
    ys = np.linspace(0.0, top, 513)[1:-1]
    depth = shapely.distance(ring, shapely.points(np.column_stack([np.zeros_like(ys), ys])))
    k = int(np.argmax(depth))
    lo = ys[max(k - 1, 0)]
    hi = ys[min(k + 1, len(ys) - 1)]
    result = minimize_scalar(
        lambda y: -float(shapely.distance(ring, shapely.Point(0.0, y))),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(-result.fun), float(result.x)


def prickly_domain(
    theta0: float,
    H: float,
    max_norm: int = 6,
    resolution: int | None = None,
) -> PricklyDomain:
    """Realize U0, the generator curves, L, t, r0 and D0 for (theta0, H).

    Raises:
        DomainError: theta0 < 1 or H outside (0, sqrt(3)/2].
        ConstructionError: the realized ratio L is out of range.
    """
    left = generator_curve(3, theta0, H, resolution)
    right = generator_curve(4, theta0, H, resolution)
    L = L_from_geometry(theta0, H, right.resolution)
    t = hausdorff_dimension(L)
    u0 = np.vstack([[[-0.5, 0.0]], right.points[::-1], left.points[1:]])
    u0 = u0[:-1] if np.allclose(u0[-1], u0[0]) else u0
    hull = u0[ConvexHull(u0).vertices]
    gaps = hull[:, None, :] - hull[None, :, :]
    D0 = float(np.sqrt((gaps**2).sum(axis=2)).max())
    r0, y0 = _inradius(shapely.Polygon(u0), float(right.points[0, 1]))
    p = PricklyDomain(
        theta0=theta0,
        H=H,
        L=L,
        t=t,
        max_norm=max_norm,
        left=left,
        right=right,
        u0_vertices=u0,
        r0=r0,
        D0=D0,
        x0=Point2(0.0, y0),
    )
    logger.info(
        "Prickly domain theta0=%g H=%g: L=%.12g t=%.12g r0=%.6g D0=%.6g",
        theta0, H, L, t, r0, D0,
    )
    if not p.in_cusped_range:
        logger.info("L=%.6g < 1, so t=%.6g lies below ln4/ln3", L, t)
    return p


@dataclass(frozen=True)
class _SideEvents:
    """Piece endpoints of one side in traversal order, in U0 coordinates."""

    points: np.ndarray
    level: np.ndarray
    position: np.ndarray


def _side_events(p: PricklyDomain, side: int, resolution: int) -> _SideEvents:
    xa, xb, level, position = _pieces(resolution)
    if side == 3:
        # Left side: corner (x = 1) up to the cusp (x = 0)
        order = np.argsort(-xa, kind="stable")
        ends = xa[order]
    else:
        order = np.arange(len(xa))
        ends = xb[order]
    pts = p.curve(side).sample_many(ends)
    return _SideEvents(pts[:, 0] + 1j * pts[:, 1], level[order], position[order])


class _OutlineBuilder:
    """Recursive outline of a tile and its descendants, budgeted by norm."""

    def __init__(self, p: PricklyDomain, curve_resolution: int):
        self.p = p
        self.curve_resolution = curve_resolution
        self._events: dict[tuple[int, int], _SideEvents] = {}
        self._counts: dict[int, int] = {}

    def events(self, side: int, resolution: int) -> _SideEvents:
        key = (side, resolution)
        if key not in self._events:
            self._events[key] = _side_events(self.p, side, resolution)
        return self._events[key]

    def resolution(self, budget: int) -> int:
        return max(budget - 1, self.curve_resolution)

    def count(self, budget: int) -> int:
        """Vertices emitted for a tile, excluding its first corner."""
        if budget not in self._counts:
            resolution = self.resolution(budget)
            total = 0
            for side in _I_PRIMES:
                total += len(self.events(side, resolution).points)
                for m in range(0, budget):
                    total += 2**m * (self.count(budget - 1 - m) - 1)
            self._counts[budget] = total
        return self._counts[budget]

    def emit(self, a: complex, b: complex, budget: int, chunks: list[np.ndarray]) -> None:
        resolution = self.resolution(budget)
        for side in _I_PRIMES:
            ev = self.events(side, resolution)
            mapped = a * ev.points + b
            expand = np.flatnonzero((ev.level >= 0) & (ev.level + 1 <= budget))
            start = 0
            for k in expand:
                chunks.append(mapped[start:k])
                level = int(ev.level[k])
                child = self.p.similarity(Index(side, _word(level, int(ev.position[k]))))
                self.emit(a * child.a, a * child.b + b, budget - 1 - level, chunks)
                start = k + 1
            chunks.append(mapped[start:])


def truncation_error(p: PricklyDomain, depth: int, curve_resolution: int) -> float:
    """Bound on the Hausdorff distance between the depth outline and the attractor.

    An undrawn child of ratio sigma contributes 3 sigma D0 (the diameter bound
    of its group); a straight Cantor piece of length l contributes l/2 plus the
    group bound of the largest child inside it.
    """
    err = 0.0
    for n in range(depth + 1):
        budget = depth - n
        sigma = 1.0 if n == 0 else max((p.L / 3.0) ** n, p.L * 3.0**-n)
        resolution = max(budget - 1, curve_resolution)
        if budget <= resolution:
            err = max(err, 3.0 * sigma * 3.0 ** -(1 + budget) * p.L * p.D0)
        err = max(err, sigma * p.L * 3.0 ** -(resolution + 1) * (0.5 + p.D0))
    return err


def boundary_polyline(
    p: PricklyDomain,
    depth: int,
    curve_resolution: int | None = None,
    vertex_budget: int | None = None,
) -> Polyline:
    """Closed outline: the base from (1/2, 0) back to (-1/2, 0) plus the depth-truncated Gamma.

    Tiles with norm <= depth are drawn; every other removed interval is drawn
    as its chord.

    Raises:
        DomainError: negative depth.
        ResourceError: the outline would exceed the vertex budget.
    """
    if depth < 0:
        raise DomainError("depth must be nonnegative", f"depth={depth}")
    res = int(get_config_value("curve_resolution")) if curve_resolution is None else curve_resolution
    budget = int(get_config_value("vertex_budget")) if vertex_budget is None else vertex_budget
    builder = _OutlineBuilder(p, res)
    needed = 1 + builder.count(depth)
    if needed > budget:
        raise ResourceError("prickly boundary vertices", needed, budget)
    chunks: list[np.ndarray] = [np.array([-0.5 + 0j])]
    builder.emit(1 + 0j, 0j, depth, chunks)
    z = np.concatenate(chunks)
    logger.debug("Outline depth %d: %d vertices", depth, len(z))
    return Polyline.from_points(np.column_stack([z.real, z.imag]))


def domain_approx(p: PricklyDomain, depth: int, curve_resolution: int | None = None) -> DomainApprox:
    """The prickly domain as a :class:`DomainApprox` with certified distance error."""
    res = int(get_config_value("curve_resolution")) if curve_resolution is None else curve_resolution
    outline = boundary_polyline(p, depth, res)
    return DomainApprox(
        kind=DomainKind.KOCH if p.is_koch else DomainKind.PRICKLY_SNOWFLAKE,
        rings=(outline,),
        depth=depth,
        distance_error=truncation_error(p, depth, res),
        metadata={"theta0": p.theta0, "H": p.H, "L": p.L, "t": p.t},
    )


def tile_polygon(p: PricklyDomain, istar: CompositeIndex | None, resolution: int) -> shapely.Polygon:
    """f_{i*}(U0) with sides drawn at a chain resolution (U0 itself for None)."""
    right = _side_events(p, 4, resolution).points
    left = _side_events(p, 3, resolution).points
    z = np.concatenate([[-0.5 + 0j], left, right])
    if istar is not None:
        z = compose(istar, p).apply_complex(z)
    pts = np.column_stack([z.real, z.imag])
    return shapely.Polygon(Polyline.from_points(pts).vertices)


def _all_indices(max_norm: int) -> Iterator[CompositeIndex]:
    for norm in range(1, max_norm + 1):
        yield from enumerate_indices(norm)


@dataclass(frozen=True)
class OpenSetAudit:
    """Largest interior overlap between two distinct tiles, relative to the U0 area."""

    max_norm: int
    tiles: int
    max_overlap: float
    worst_pair: tuple[str, str] | None


def open_set_audit(p: PricklyDomain, max_norm: int = 3) -> OpenSetAudit:
    """Pairwise overlap of U0 and every tile f_{i*}(U0) with ||i*|| <= max_norm.

    The tiles are drawn with exact chords up to the deepest removed interval
    in use, so shared edges contribute zero area.
    """
    names = ["U0"]
    polygons = [tile_polygon(p, None, max_norm + 1)]
    for istar in _all_indices(max_norm):
        names.append(str(istar))
        polygons.append(tile_polygon(p, istar, max_norm + 1))
    base_area = polygons[0].area
    tree = shapely.STRtree(polygons)
    left_idx, right_idx = tree.query(polygons, predicate="intersects")
    worst = 0.0
    worst_pair: tuple[str, str] | None = None
    for i, j in zip(left_idx, right_idx):
        if i >= j:
            continue
        overlap = polygons[i].intersection(polygons[j]).area / base_area
        if overlap > worst:
            worst, worst_pair = overlap, (names[i], names[j])
    return OpenSetAudit(max_norm, len(polygons), worst, worst_pair)


def group_diameter(p: PricklyDomain, istar: CompositeIndex, extra_norm: int = 3) -> float:
    """Diameter of the tiles of the group of i* down to ||i*|| + extra_norm."""
    resolution = 2
    right = _side_events(p, 4, resolution).points
    left = _side_events(p, 3, resolution).points
    outline = np.concatenate([[-0.5 + 0j], left, right])
    images = [compose(member, p).apply_complex(outline) for member in grouped_family(istar, istar.norm + extra_norm)]
    z = np.concatenate(images)
    pts = np.column_stack([z.real, z.imag])
    hull = pts[ConvexHull(pts).vertices]
    gaps = hull[:, None, :] - hull[None, :, :]
    return float(np.sqrt((gaps**2).sum(axis=2)).max())
