"""Hypothesis checkers and the strict-containment counterexample.

Checks return reports; a failed hypothesis is data. Only unresolvable
requests (grids too coarse, empty samples) raise.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Sequence

import networkx as nx
import numpy as np
from scipy.integrate import quad

from .config import get_config_value
from .errors import DomainError, ResolutionError
from .fields import (
    CounterexampleSpec,
    ExponentField,
    ScalarField,
    counterexample_field,
    log_amplitude_a,
    variable_exponent_field,
)
from .geometry import (
    DomainApprox,
    Point2,
    PointLike,
    as_point,
    deepest_point_in_annulus,
    distances,
    inside_mask,
    interval_domain,
)
from .seminorm import Box, QuadratureSpec, alpha_lower_envelope, alpha_lower_limit, nu_pq_ladder
from .workers import parallel_map

logger = logging.getLogger("tracelab.verify")

ThetaFn = Callable[[Point2], float]


class Hypothesis(str, Enum):
    H1 = "H1"
    H2 = "H2"
    H3_PRIME = "H3prime"
    H3_DPRIME = "H3dprime"


@dataclass
class HypothesisReport:
    hypothesis: Hypothesis
    passed: bool
    constants: dict[str, Any] = field(default_factory=dict)
    evidence: list[dict[str, Any]] = field(default_factory=list)

    @property
    def failures(self) -> list[int]:
        """Sample indices with at least one failing record."""
        return sorted({e["sample"] for e in self.evidence if not e["ok"]})

    def to_dict(self) -> dict[str, Any]:
        return {
            "hypothesis": self.hypothesis.value,
            "pass": self.passed,
            "samples": len({e["sample"] for e in self.evidence}),
            "failures": self.failures,
            "constants": self.constants,
            "evidence": self.evidence,
        }


def _theta_of(theta_fn: ThetaFn | float) -> ThetaFn:
    if callable(theta_fn):
        return theta_fn
    value = float(theta_fn)
    return lambda _x: value


# -- H1 ----------------------------------------------------------------------


def check_h1(
    d: DomainApprox,
    boundary_samples: Sequence[PointLike],
    theta_fn: ThetaFn | float,
    eta0: float,
    lambda0: float,
    delta_ladder: Sequence[float],
    n_candidates: int | None = None,
    seed: int | None = None,
    jobs: int | None = 1,
) -> HypothesisReport:
    """Corkscrew condition: at every delta a witness with eta delta < |xbar - x| < delta,
    d(x) > (eta delta)^theta, lying in Q_{lambda0}(xbar).
    """
    if not (0.0 < eta0 < 1.0 and 0.0 < lambda0 < 1.0):
        raise DomainError("H1 needs 0 < eta0, lambda0 < 1", f"eta0={eta0}, lambda0={lambda0}")
    theta_of = _theta_of(theta_fn)
    base_seed = int(get_config_value("seed")) if seed is None else seed
    samples = [as_point(x) for x in boundary_samples]

    def run(indexed: tuple[int, Point2]) -> list[dict[str, Any]]:
        k, xbar = indexed
        theta = theta_of(xbar)
        records = []
        for m, delta in enumerate(delta_ladder):
            floor = (eta0 * delta) ** theta
            search = deepest_point_in_annulus(
                d, xbar, eta0 * delta, delta, n_candidates, seed=base_seed + 97 * k + m
            )
            best = search.best(lambda sep: np.maximum(floor, (lambda0 * sep) ** theta))
            ok = best is not None
            pick = best if best is not None else search.best()
            record: dict[str, Any] = {
                "sample": k,
                "xbar": [xbar.x, xbar.y],
                "theta": theta,
                "delta": float(delta),
                "ok": ok,
                "witness": None,
                "separation": None,
                "depth": None,
            }
            if pick is not None:
                record["witness"] = search.points[pick].tolist()
                record["separation"] = float(search.separations[pick])
                record["depth"] = float(search.depths[pick])
            records.append(record)
        return records

    evidence = [r for batch in parallel_map(run, list(enumerate(samples)), jobs) for r in batch]
    passed = all(r["ok"] for r in evidence)
    report = HypothesisReport(
        Hypothesis.H1, passed, {"eta0": eta0, "lambda0": lambda0, "deltas": list(delta_ladder)}, evidence
    )
    logger.info("H1: %s over %d samples, failing samples %s", passed, len(samples), report.failures)
    return report


def replay_h1(report: HypothesisReport, eta: float, lam: float) -> HypothesisReport:
    """Re-judge the stored witnesses under (eta, lambda); no new search is made."""
    evidence = []
    for r in report.evidence:
        ok = False
        if r["witness"] is not None:
            delta, theta, sep, depth = r["delta"], r["theta"], r["separation"], r["depth"]
            ok = eta * delta < sep < delta and depth > max((eta * delta) ** theta, (lam * sep) ** theta)
        evidence.append({**r, "ok": ok})
    passed = all(r["ok"] for r in evidence)
    return HypothesisReport(Hypothesis.H1, passed, {**report.constants, "eta0": eta, "lambda0": lam}, evidence)


# -- H2 ----------------------------------------------------------------------


@dataclass(frozen=True)
class _Grid:
    points: np.ndarray
    depth: np.ndarray
    shape: tuple[int, int]
    spacing: float


def _grid(d: DomainApprox, center: Point2, radius: float, spacing: float) -> _Grid:
    xmin, ymin, xmax, ymax = d.bounds
    x0, x1 = max(xmin, center.x - radius), min(xmax, center.x + radius)
    y0, y1 = max(ymin, center.y - radius), min(ymax, center.y + radius)
    xs = np.arange(x0 + 0.5 * spacing, x1, spacing)
    ys = np.arange(y0 + 0.5 * spacing, y1, spacing)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    depth = np.where(inside_mask(d, pts), distances(d, pts), -1.0)
    return _Grid(pts, depth, (len(xs), len(ys)), spacing)


def _grid_graph(grid: _Grid, valid: np.ndarray) -> nx.Graph:
    """8-neighbor graph on the valid nodes, edges weighted by length."""
    nx_, ny_ = grid.shape
    ix, iy = np.meshgrid(np.arange(nx_), np.arange(ny_), indexing="ij")
    ix, iy = ix.ravel(), iy.ravel()
    graph = nx.Graph()
    graph.add_nodes_from(np.flatnonzero(valid).tolist())
    for dx, dy in ((1, 0), (0, 1), (1, 1), (1, -1)):
        jx, jy = ix + dx, iy + dy
        inside = (jx < nx_) & (jy >= 0) & (jy < ny_)
        a = ix[inside] * ny_ + iy[inside]
        b = jx[inside] * ny_ + jy[inside]
        both = valid[a] & valid[b]
        w = grid.spacing * math.hypot(dx, dy)
        graph.add_weighted_edges_from((int(u), int(v), w) for u, v in zip(a[both], b[both]))
    return graph


def _spread_out(points: np.ndarray, candidates: np.ndarray, depth: np.ndarray, count: int) -> list[int]:
    """Farthest-point selection starting from the deepest candidate."""
    if len(candidates) == 0:
        return []
    chosen = [int(candidates[np.argmax(depth[candidates])])]
    gap = np.hypot(*(points[candidates] - points[chosen[0]]).T)
    while len(chosen) < min(count, len(candidates)):
        nxt = int(np.argmax(gap))
        if gap[nxt] == 0:
            break
        chosen.append(int(candidates[nxt]))
        gap = np.minimum(gap, np.hypot(*(points[candidates] - points[chosen[-1]]).T))
    return chosen


def _connected_within(graph: nx.Graph, nodes: list[int], limit: float) -> tuple[bool, float]:
    longest = 0.0
    for i, source in enumerate(nodes):
        if source not in graph:
            return False, math.inf
        lengths = nx.single_source_dijkstra_path_length(graph, source, cutoff=limit, weight="weight")
        for target in nodes[i + 1 :]:
            if target not in lengths:
                return False, math.inf
            longest = max(longest, float(lengths[target]))
    return True, longest


def check_h2(
    d: DomainApprox,
    boundary_samples: Sequence[PointLike],
    theta_fn: ThetaFn | float,
    C_gamma: float,
    lambda_ladder: Sequence[float],
    rho_ladder: Sequence[float],
    grid_res: int | None = None,
    pairs: int = 8,
    jobs: int | None = 1,
) -> HypothesisReport:
    """(C, theta)-connectedness of the deep part of E_rho(xbar), on a grid graph.

    For each lambda the epsilon ladder lambda, lambda/2, ... is walked until
    the deep points {x in B_rho(xbar): d(x) >= (lambda rho)^theta} are joined
    by paths of length <= C rho inside {d >= epsilon rho^theta}. The fitted
    epsilon_lambda is made monotone in lambda by a running minimum.

    Raises:
        ResolutionError: the node budget cannot resolve even the first epsilon.
    """
    if C_gamma <= 0:
        raise DomainError("C_gamma must be positive", f"C={C_gamma}")
    theta_of = _theta_of(theta_fn)
    budget = int(get_config_value("h2_max_nodes")) if grid_res is None else grid_res
    lambdas = sorted(float(lam) for lam in lambda_ladder)
    samples = [as_point(x) for x in boundary_samples]
    jobs_list = [(k, xbar, float(rho)) for k, xbar in enumerate(samples) for rho in rho_ladder]

    def run(item: tuple[int, Point2, float]) -> list[dict[str, Any]]:
        k, xbar, rho = item
        theta = theta_of(xbar)
        radius = rho * (1.0 + C_gamma / 2.0)
        xmin, ymin, xmax, ymax = d.bounds
        area = max(min(xmax, xbar.x + radius) - max(xmin, xbar.x - radius), 0.0) * max(
            min(ymax, xbar.y + radius) - max(ymin, xbar.y - radius), 0.0
        )
        finest = math.sqrt(area / budget)
        records = []
        for lam in lambdas:
            eps = lam
            fitted: float | None = None
            longest = math.inf
            tried = 0
            while True:
                target = eps * rho**theta / 4.0
                if target < finest:
                    if tried == 0:
                        raise ResolutionError(
                            f"Grid of {budget} nodes cannot resolve eps rho^theta = {eps * rho**theta:.3e}"
                        )
                    break
                grid = _grid(d, xbar, radius, target)
                sep = np.hypot(grid.points[:, 0] - xbar.x, grid.points[:, 1] - xbar.y)
                deep = np.flatnonzero((sep < rho) & (grid.depth >= (lam * rho) ** theta))
                tried += 1
                if len(deep) < 2:
                    fitted, longest = eps, 0.0
                    break
                valid = grid.depth >= eps * rho**theta
                graph = _grid_graph(grid, valid)
                chosen = _spread_out(grid.points, deep, grid.depth, pairs)
                ok, length = _connected_within(graph, chosen, C_gamma * rho)
                if ok:
                    fitted, longest = eps, length
                    break
                eps /= 2.0
            records.append(
                {
                    "sample": k,
                    "xbar": [xbar.x, xbar.y],
                    "rho": rho,
                    "lambda": lam,
                    "theta": theta,
                    "eps": fitted,
                    "path_length": longest if math.isfinite(longest) else None,
                    "ok": fitted is not None,
                }
            )
        return records

    evidence = [r for batch in parallel_map(run, jobs_list, jobs) for r in batch]
    raw: dict[float, float | None] = {}
    for lam in lambdas:
        found = [r["eps"] for r in evidence if r["lambda"] == lam]
        raw[lam] = None if any(e is None for e in found) or not found else min(found)
    fitted_eps = dict(raw)
    corrected = False
    running = math.inf
    for lam in reversed(lambdas):
        value = fitted_eps[lam]
        if value is None:
            continue
        if value > running:
            fitted_eps[lam] = value = running
            corrected = True
        running = value
    if corrected:
        logger.warning("eps_lambda was not monotone in lambda; applied a running minimum")
    passed = all(r["ok"] for r in evidence)
    constants = {
        "C_gamma": C_gamma,
        "eps_lambda": {str(lam): fitted_eps[lam] for lam in lambdas},
        "eps_lambda_raw": {str(lam): raw[lam] for lam in lambdas},
        "monotone_corrected": corrected,
    }
    return HypothesisReport(Hypothesis.H2, passed, constants, evidence)


# -- H3 ----------------------------------------------------------------------


def check_h3(
    s: ExponentField,
    d: DomainApprox,
    boundary_samples: Sequence[PointLike],
    theta_fn: ThetaFn | float,
    p: float,
    n: int,
    t: float,
    delta_gamma: float,
    levels: int = 6,
    spec: QuadratureSpec | None = None,
) -> tuple[HypothesisReport, HypothesisReport]:
    """Return the (H3', H3'') reports.

    H3'' compares alpha at delta_gamma with -t at every sample. H3' uses the
    extrapolated delta -> 0 envelope along delta_gamma * 2^-k, k < levels.
    Both quantifiers are over the given samples only.
    """
    theta_of = _theta_of(theta_fn)
    deltas = [delta_gamma * 2.0**-k for k in range(levels)]
    prime: list[dict[str, Any]] = []
    dprime: list[dict[str, Any]] = []
    for k, x in enumerate(boundary_samples):
        xbar = as_point(x)
        theta = theta_of(xbar)
        at_gamma = alpha_lower_envelope(s, theta, xbar, delta_gamma, p, n, d, spec)
        ladder = alpha_lower_limit(s, theta, xbar, deltas, p, n, d, spec)
        dprime.append({"sample": k, "xbar": [xbar.x, xbar.y], "alpha": at_gamma, "ok": at_gamma > -t})
        prime.append(
            {
                "sample": k,
                "xbar": [xbar.x, xbar.y],
                "deltas": ladder.deltas,
                "alpha": ladder.values,
                "alpha_limit": ladder.limit,
                "ok": ladder.limit > -t,
            }
        )
    alpha_gamma = min((r["alpha"] for r in dprime), default=math.nan)
    h3p = HypothesisReport(
        Hypothesis.H3_PRIME,
        all(r["ok"] for r in prime),
        {"t": t, "samples": len(prime), "quantifier": f"all {len(prime)} samples"},
        prime,
    )
    h3pp = HypothesisReport(
        Hypothesis.H3_DPRIME,
        all(r["ok"] for r in dprime),
        {"t": t, "delta_gamma": delta_gamma, "alpha_gamma": alpha_gamma},
        dprime,
    )
    return h3p, h3pp


# -- counterexample ----------------------------------------------------------


class Verdict(str, Enum):
    CONVERGENT = "convergent"
    DIVERGENT = "divergent"


DEFAULT_J_LADDER = (10, 100, 1_000, 10_000, 100_000, 1_000_000)


def _log_terms(spec: CounterexampleSpec, q: float, j: np.ndarray) -> np.ndarray:
    """ln of a_j^(p/q) 4^(j (s0 p - 1))."""
    return (spec.p / q) * log_amplitude_a(spec, j) + j * (spec.s0 * spec.p - 1.0) * math.log(4.0)


@dataclass
class SeriesVerdict:
    q: float
    p: float
    s0: float
    partial_sums: list[tuple[int, float]]
    log10_partial_sums: list[tuple[int, float]]
    verdict: Verdict
    growth: float
    increments: list[float]
    tail_corrected: list[float | None]
    term_ratio: float
    envelope: float | None = None
    lower_envelope: list[float] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "q": self.q,
            "p": self.p,
            "s0": self.s0,
            "partial_sums": [[J, v] for J, v in self.partial_sums],
            "log10_partial_sums": [[J, v] for J, v in self.log10_partial_sums],
            "verdict": self.verdict.value,
            "growth": self.growth,
            "increments": self.increments,
            "tail_corrected": self.tail_corrected,
            "term_ratio": self.term_ratio,
            "envelope": self.envelope,
            "lower_envelope": self.lower_envelope,
        }


def _tail(spec: CounterexampleSpec, q: float, J: int) -> float | None:
    """Euler-Maclaurin estimate of sum_{j > J} T_j, or None if the tail diverges."""
    if q != 1.0:
        return None
    # For q = 1 the terms are 5^-p / (j ln^2(j + 2)); integrate in w = ln(x + 2)
    integral, _ = quad(lambda w: 1.0 / ((1.0 - 2.0 * math.exp(-w)) * w * w), math.log(J + 2.0), math.inf)
    last = math.exp(float(_log_terms(spec, q, np.array([float(J)]))[0]))
    return 5.0**-spec.p * integral - 0.5 * last


def counterexample_series(
    spec: CounterexampleSpec, q: float, J_ladder: Sequence[int] | None = None
) -> SeriesVerdict:
    """Partial sums of sum_j a_j^(p/q) 4^(j (s0 p - 1)) at each J in the ladder.

    Sums are accumulated in log space. The verdict is convergent when the
    log-log growth of the partial sums is below 0.1 and the tail-corrected
    values agree to 1e-3; otherwise divergent.
    """
    if not (math.isfinite(q) and q >= 1.0):
        raise DomainError("q must be >= 1", f"q={q}")
    ladder = sorted(int(J) for J in (J_ladder or DEFAULT_J_LADDER))
    if ladder[0] < 1:
        raise DomainError("J values must be >= 1")
    j = np.arange(1, ladder[-1] + 1, dtype=float)
    log_terms = _log_terms(spec, q, j)
    log_sums = np.logaddexp.accumulate(log_terms)
    picked = np.array([log_sums[J - 1] for J in ladder])
    log10 = picked / math.log(10.0)
    values = [float(math.exp(v)) if v < 700 else math.inf for v in picked]

    growth = 0.0
    if len(ladder) >= 2:
        growth = float(np.polyfit(np.log(ladder), picked, 1)[0])
    increments = [b - a for a, b in zip(values, values[1:])]
    tails = [_tail(spec, q, J) for J in ladder]
    corrected = [None if tl is None else v + tl for v, tl in zip(values, tails)]
    cauchy = (
        len(corrected) >= 2
        and corrected[-1] is not None
        and corrected[-2] is not None
        and abs(corrected[-1] - corrected[-2]) < 1e-3 * abs(corrected[-1])
    )
    verdict = Verdict.CONVERGENT if growth < 0.1 and cauchy else Verdict.DIVERGENT
    ratio = float(math.exp(log_terms[-1] - log_terms[-2])) if len(log_terms) >= 2 else math.nan

    envelope = None
    if q == 1.0:
        jj = j
        envelope = float(5.0**-spec.p * (1.0 / (jj * np.log(jj + 2.0) ** 2)).sum())
    lower = [(1.0 / 8.0) ** (spec.s0 * spec.p + spec.p / q) * v for v in values]
    logger.info("Series q=%g: %s, growth %.4g, log10 S=%s", q, verdict.value, growth, log10.round(4).tolist())
    return SeriesVerdict(
        q=q,
        p=spec.p,
        s0=spec.s0,
        partial_sums=list(zip(ladder, values)),
        log10_partial_sums=list(zip(ladder, log10.tolist())),
        verdict=verdict,
        growth=growth,
        increments=increments,
        tail_corrected=corrected,
        term_ratio=ratio,
        envelope=envelope,
        lower_envelope=lower,
    )


@dataclass
class QuadratureComparison:
    q: float
    convention: str
    cutoffs: list[float]
    values: list[float]
    errors: list[float]
    truncated_series: list[float]
    ratios: list[float]
    strict_sandwich: list[bool]
    relaxed_sandwich: list[bool]
    growth_exponent: float | None
    series_growth: float | None
    inconsistent: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "q": self.q,
            "convention": self.convention,
            "cutoffs": self.cutoffs,
            "values": self.values,
            "errors": self.errors,
            "truncated_series": self.truncated_series,
            "ratios": self.ratios,
            "strict_sandwich": self.strict_sandwich,
            "relaxed_sandwich": self.relaxed_sandwich,
            "growth_exponent": self.growth_exponent,
            "series_growth": self.series_growth,
            "inconsistent": self.inconsistent,
        }


RELAXED_UPPER = 4.0


def counterexample_quadrature(
    spec: CounterexampleSpec,
    q: float,
    epsilon_ladder: Sequence[float],
    quadrature: QuadratureSpec | None = None,
    u: ScalarField | None = None,
) -> QuadratureComparison:
    """nu^{s0,(p,q)} over (eps, 1] on Omega = (0, 2) against the series truncated at J = floor(log4(1/eps)).

    ``u`` replaces the counterexample field (for sanity runs).
    """
    if not (math.isfinite(q) and q >= 1.0):
        raise DomainError("q must be >= 1", f"q={q}")
    eps = sorted((float(e) for e in epsilon_ladder), reverse=True)
    if not eps or eps[-1] <= 0 or eps[0] >= 1:
        raise DomainError("Cutoffs must lie in (0, 1)")
    J_needed = int(math.floor(math.log(1.0 / eps[-1], 4.0)))
    if J_needed > spec.J_max:
        raise DomainError("J_max too small for the cutoff ladder", f"need {J_needed}, have {spec.J_max}")
    qs = quadrature or QuadratureSpec.from_config()
    d = interval_domain(0.0, 2.0)
    field_u = u or counterexample_field(spec)
    s = variable_exponent_field("constant", s0=spec.s0)
    ladder = nu_pq_ladder(field_u, s, spec.p, q, Box(0.0, 1.0), d, eps, qs)

    Js = [max(int(math.floor(math.log(1.0 / e, 4.0))), 1) for e in eps]
    j = np.arange(1, max(Js) + 1, dtype=float)
    log_sums = np.logaddexp.accumulate(_log_terms(spec, q, j))
    series = [float(math.exp(min(log_sums[J - 1], 700.0))) for J in Js]
    low_const = (1.0 / 8.0) ** (spec.s0 * spec.p + spec.p / q)

    values = [r.value for r in ladder.results]
    errors = [r.error for r in ladder.results]
    ratios = [v / S if S > 0 else math.nan for v, S in zip(values, series)]
    strict = [low_const * S - e <= v <= S + e for v, S, e in zip(values, series, errors)]
    relaxed = [low_const * S - e <= v <= RELAXED_UPPER * S + e for v, S, e in zip(values, series, errors)]
    series_growth = None
    if len(eps) >= 2:
        series_growth = float(np.polyfit(np.log([1.0 / e for e in eps]), np.log(series), 1)[0])
    inconsistent = u is None and not all(relaxed)
    if inconsistent:
        logger.warning(
            "Quadrature leaves the series sandwich (convention %s): ratios %s", spec.convention, ratios
        )
    return QuadratureComparison(
        q=q,
        convention=spec.convention,
        cutoffs=eps,
        values=values,
        errors=errors,
        truncated_series=series,
        ratios=ratios,
        strict_sandwich=strict,
        relaxed_sandwich=relaxed,
        growth_exponent=ladder.growth_exponent,
        series_growth=series_growth,
        inconsistent=inconsistent,
    )
