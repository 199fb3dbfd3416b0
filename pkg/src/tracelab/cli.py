"""Command-line front end: tracelab <command> writes JSON/CSV artifacts.

Exit codes: 0 ok, 2 usage or invalid parameters, 3 resolution problems,
4 resource budgets, 5 an inconsistency report.
"""

import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Literal, NoReturn

import click
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import setup_logging
from .artifacts import to_jsonable, write_csv, write_json, write_polyline_csv
from .config import DEFAULTS, OUTPUT_DIR_ENV, default_output_dir, get_config, reset_config, set_config_value
from .config import get_config_value
from .errors import (
    ConstructionError,
    CutoffError,
    DegeneratePairError,
    DomainError,
    EstimationError,
    ResolutionError,
    ResourceError,
    TracelabError,
)
from .fields import (
    DEFAULT_J_MAX,
    CounterexampleSpec,
    ExponentField,
    ScalarField,
    boundary_power_field,
    constant_field,
    counterexample_field,
    linear_field,
    variable_exponent_field,
)
from .fractal import PricklyDomain, domain_approx, group_level, prickly_domain
from .geometry import SQRT3_HALF, DomainApprox, Point2, interval_domain, unit_square, wedge_domain
from .measure import ahlfors_scan, attractor_samples
from .seminorm import QuadratureSpec, WholeDomain, nu_pq_ladder
from .trace import (
    corkscrew_sequence,
    holder_fit,
    lebesgue_point_check,
    predicted_beta,
    region_grid,
    trace_at,
)
from .verify import check_h1, check_h2, check_h3, counterexample_quadrature, counterexample_series

logger = logging.getLogger("tracelab.cli")

EXIT_USAGE = 2
EXIT_RESOLUTION = 3
EXIT_RESOURCE = 4
EXIT_INCONSISTENT = 5

_EXIT_CODES: list[tuple[type[TracelabError], int]] = [
    (DomainError, EXIT_USAGE),
    (ConstructionError, EXIT_USAGE),
    (DegeneratePairError, EXIT_USAGE),
    (CutoffError, EXIT_RESOLUTION),
    (ResolutionError, EXIT_RESOLUTION),
    (EstimationError, EXIT_RESOLUTION),
    (ResourceError, EXIT_RESOURCE),
]


def exit_code_for(exc: TracelabError) -> int:
    for cls, code in _EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 1


# Run configuration
class DomainSpec(BaseModel):
    """Which domain to build."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["prickly", "wedge", "interval", "square"] = "prickly"
    theta0: float = Field(2.0, ge=1.0)
    H: float = Field(SQRT3_HALF, gt=0.0)
    depth: int = Field(4, ge=0)
    slit: bool = True
    tolerance: float | None = Field(None, gt=0.0)
    a: float = 0.0
    b: float = 2.0


class FieldSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant", "linear", "boundary_power", "counterexample"] = "linear"
    c: float = 0.0
    a: float = 1.0
    b: float = 1.0
    exponent: float = -0.1
    J_max: int = Field(DEFAULT_J_MAX, ge=1)
    convention: Literal["minmax", "offset"] = "minmax"
    amplitude: Literal["unit", "log_decay"] = "unit"


class ExponentSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant", "distance_power"] = "constant"
    s0: float = Field(1.0, ge=0.0)
    base: float = 1.0
    exponent: float = 1.0


class QuadratureOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    grading: float | None = None
    cells_per_decade: int | None = Field(None, ge=1)
    cutoff: float | None = Field(None, gt=0.0)
    inner_samples: int | None = Field(None, ge=8)


class RunConfig(BaseModel):
    """Everything besides command flags that determines a run."""

    model_config = ConfigDict(extra="forbid")

    domain: DomainSpec = DomainSpec()
    field: FieldSpec = FieldSpec()
    exponent: ExponentSpec = ExponentSpec()
    quadrature: QuadratureOptions = QuadratureOptions()
    seed: int | None = None
    jobs: int | None = None
    output_dir: str | None = None


def json_pointer(loc: tuple[int | str, ...]) -> str:
    return "/" + "/".join(str(part) for part in loc)


def load_run_config(path: Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        _fail(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})", EXIT_USAGE)
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        for err in exc.errors():
            click.echo(click.style(f"Error: {json_pointer(err['loc'])}: {err['msg']}", fg="red"), err=True)
        sys.exit(EXIT_USAGE)


def _fail(message: str, code: int) -> NoReturn:
    click.echo(click.style(f"Error: {message}", fg="red"), err=True)
    sys.exit(code)


@dataclass
class Settings:
    run: RunConfig
    seed: int
    jobs: int
    output_dir: Path
    as_json: bool

    def quadrature(self) -> QuadratureSpec:
        overrides = {k: v for k, v in self.run.quadrature.model_dump().items() if v is not None}
        return QuadratureSpec.from_config(seed=self.seed, **overrides)

    def emit(self, name: str, command: str, payload: Any, extra: dict[str, Any] | None = None) -> Path:
        config = {"run": self.run.model_dump(), "command": command, **(extra or {})}
        path = write_json(self.output_dir / name, command, config, self.seed, payload)
        if self.as_json:
            click.echo(json.dumps(to_jsonable(payload), sort_keys=True, indent=2))
        else:
            click.echo(f"Wrote {path}")
        return path


def _guarded(fn: Callable[[], int | None]) -> None:
    """Run a command body, mapping library errors to exit codes."""
    try:
        code = fn()
    except TracelabError as exc:
        _fail(str(exc), exit_code_for(exc))
    if code:
        sys.exit(code)


def _domain(spec: DomainSpec) -> tuple[DomainApprox, PricklyDomain | None]:
    if spec.kind == "prickly":
        p = prickly_domain(spec.theta0, spec.H)
        return domain_approx(p, spec.depth), p
    if spec.kind == "wedge":
        return wedge_domain(spec.theta0, spec.H, spec.tolerance, spec.slit), None
    if spec.kind == "interval":
        return interval_domain(spec.a, spec.b), None
    return unit_square(), None


def _field(spec: FieldSpec, d: DomainApprox, p: float, s0: float) -> ScalarField:
    if spec.kind == "constant":
        return constant_field(spec.c)
    if spec.kind == "linear":
        return linear_field(spec.a, spec.b, spec.c)
    if spec.kind == "counterexample":
        if d.dimension != 1:
            raise DomainError("The counterexample field needs the interval domain", f"kind={d.kind.value}")
        cx = CounterexampleSpec(p, s0, J_max=spec.J_max, convention=spec.convention, amplitude=spec.amplitude)
        return counterexample_field(cx)
    return boundary_power_field(d, spec.exponent)


def _exponent(spec: ExponentSpec, d: DomainApprox) -> ExponentField:
    if spec.kind == "constant":
        return variable_exponent_field("constant", s0=spec.s0)
    return variable_exponent_field("distance_power", base=spec.base, exponent=spec.exponent, domain=d)


def _boundary_samples(d: DomainApprox, p: PricklyDomain | None, count: int, seed: int) -> list[Point2]:
    """Apex and base point plus seeded attractor points (prickly), or polyline vertices."""
    if p is not None:
        fixed = [Point2(0.0, p.apex_height), Point2(0.2, 0.0)]
        if count <= len(fixed):
            return fixed[:count]
        norm = max(1, min(d.depth, 4))
        available = len(group_level(p, norm).A)
        return fixed + attractor_samples(p, min(count - len(fixed), available), norm=norm, seed=seed)
    if d.dimension == 1:
        assert d.interval is not None
        return [Point2(d.interval[0], 0.0), Point2(d.interval[1], 0.0)][:count]
    vertices = d.boundary.vertices
    step = max(1, len(vertices) // max(count, 1))
    return [Point2(float(x), float(y)) for x, y in vertices[::step][:count]]


def _apply_domain_flags(run: RunConfig, **flags: Any) -> RunConfig:
    updates = {k: v for k, v in flags.items() if v is not None}
    if not updates:
        return run
    try:
        domain = DomainSpec.model_validate({**run.domain.model_dump(), **updates})
    except ValidationError as exc:
        for err in exc.errors():
            _fail(f"{json_pointer(('domain',) + tuple(err['loc']))}: {err['msg']}", EXIT_USAGE)
        raise
    return run.model_copy(update={"domain": domain})


def domain_options(fn: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option("--kind", type=click.Choice(["prickly", "wedge", "interval", "square"]), default=None),
        click.option("--theta0", type=float, default=None, help="Cusp exponent theta0 >= 1"),
        click.option("--H", "H", type=float, default=None, help="Wedge height"),
        click.option("--depth", type=int, default=None, help="Prickly outline depth"),
        click.option("--slit/--no-slit", default=None, help="Wedge with the axis removed"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="RunConfig JSON file")
@click.option("--seed", type=int, default=None, help="Seed for all stochastic sampling")
@click.option("--output-dir", type=click.Path(file_okay=False, path_type=Path), envvar=OUTPUT_DIR_ENV,
              default=None, help="Artifact directory")
@click.option("--jobs", type=int, default=None, help="Worker threads (0 = all CPUs)")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
              case_sensitive=False), default=None)
@click.option("--json", "as_json", is_flag=True, help="Echo the payload as JSON")
@click.version_option(package_name="tracelab")
@click.pass_context
def main(
    ctx: click.Context,
    config_path: Path | None,
    seed: int | None,
    output_dir: Path | None,
    jobs: int | None,
    log_level: str | None,
    as_json: bool,
) -> None:
    """tracelab - nonlocal semi-norms and traces on cusped and fractal domains."""
    if log_level:
        setup_logging(log_level)
    if ctx.invoked_subcommand == "config":
        return
    run = load_run_config(config_path)
    ctx.obj = Settings(
        run=run,
        seed=seed if seed is not None else (run.seed if run.seed is not None else int(get_config_value("seed"))),
        jobs=jobs if jobs is not None else (run.jobs if run.jobs is not None else int(get_config_value("jobs"))),
        output_dir=output_dir or (Path(run.output_dir) if run.output_dir else default_output_dir()),
        as_json=as_json,
    )


@main.command("build-domain")
@domain_options
@click.pass_obj
def build_domain(settings: Settings, kind: str | None, theta0: float | None, H: float | None,
                 depth: int | None, slit: bool | None) -> None:
    """Build a domain, write its boundary polyline(s) and parameters."""
    settings.run = _apply_domain_flags(settings.run, kind=kind, theta0=theta0, H=H, depth=depth, slit=slit)

    def body() -> None:
        d, p = _domain(settings.run.domain)
        payload: dict[str, Any] = {
            "kind": d.kind.value,
            "depth": d.depth,
            "distance_error": d.distance_error,
            "vertices": d.n_vertices,
            "bounds": list(d.bounds),
        }
        if p is not None:
            payload.update(
                {"L": p.L, "t": p.t, "in_cusped_range": p.in_cusped_range, "r0": p.r0, "D0": p.D0,
                 "x0": p.x0, "apex_height": p.apex_height}
            )
        for k, ring in enumerate(d.rings):
            suffix = "" if len(d.rings) == 1 else f"_{k}"
            write_polyline_csv(settings.output_dir / f"domain_polyline{suffix}.csv", ring)
        settings.emit("domain.json", "build-domain", payload)

    _guarded(body)


@main.command("check-hypotheses")
@domain_options
@click.option("--hypothesis", "which", type=click.Choice(["h1", "h2", "h3"]), multiple=True,
              help="Hypotheses to check (default: all)")
@click.option("--theta", type=float, default=None, help="theta_Gamma (default theta0)")
@click.option("--eta0", type=float, default=0.5)
@click.option("--lambda0", type=float, default=0.5)
@click.option("--delta", "deltas", type=float, multiple=True, help="H1 delta ladder")
@click.option("--samples", type=int, default=8)
@click.option("--C", "C_gamma", type=float, default=3.0)
@click.option("--lambda", "lambdas", type=float, multiple=True, help="H2 lambda ladder")
@click.option("--rho", "rhos", type=float, multiple=True, help="H2 rho ladder")
@click.option("--p", "p_exp", type=float, default=2.0)
@click.option("--delta-gamma", type=float, default=0.1)
@click.pass_obj
def check_hypotheses(settings: Settings, kind: str | None, theta0: float | None, H: float | None,
                     depth: int | None, slit: bool | None, which: tuple[str, ...], theta: float | None,
                     eta0: float, lambda0: float, deltas: tuple[float, ...], samples: int, C_gamma: float,
                     lambdas: tuple[float, ...], rhos: tuple[float, ...], p_exp: float,
                     delta_gamma: float) -> None:
    """Check the corkscrew (H1), connectedness (H2) and exponent (H3) hypotheses."""
    settings.run = _apply_domain_flags(settings.run, kind=kind, theta0=theta0, H=H, depth=depth, slit=slit)
    selected = set(which or ("h1", "h2", "h3"))

    def body() -> None:
        d, p = _domain(settings.run.domain)
        theta_gamma = theta if theta is not None else settings.run.domain.theta0
        points = _boundary_samples(d, p, samples, settings.seed)
        t = p.t if p is not None else 1.0
        payload: dict[str, Any] = {"theta": theta_gamma, "samples": points}
        if "h1" in selected:
            h1 = check_h1(d, points, theta_gamma, eta0, lambda0, deltas or (0.2, 0.1, 0.05, 0.025),
                          seed=settings.seed, jobs=settings.jobs)
            payload["H1"] = h1
            write_csv(
                settings.output_dir / "h1_evidence.csv",
                ["sample", "delta", "ok", "separation", "depth"],
                [[r["sample"], r["delta"], int(r["ok"]), r["separation"], r["depth"]] for r in h1.evidence],
            )
        if "h2" in selected:
            payload["H2"] = check_h2(d, points, theta_gamma, C_gamma, lambdas or (0.5, 0.25),
                                     rhos or (0.2,), jobs=settings.jobs)
        if "h3" in selected:
            s = _exponent(settings.run.exponent, d)
            h3p, h3pp = check_h3(s, d, points, theta_gamma, p_exp, 2, t, delta_gamma,
                                 spec=settings.quadrature())
            payload["H3prime"], payload["H3dprime"] = h3p, h3pp
        settings.emit("hypotheses.json", "check-hypotheses", payload,
                      {"which": sorted(selected), "theta": theta_gamma})

    _guarded(body)


@main.command("ahlfors-scan")
@click.option("--theta0", type=float, default=2.0)
@click.option("--H", "H", type=float, default=SQRT3_HALF)
@click.option("--centers", type=int, default=20)
@click.option("--k-min", type=int, default=2)
@click.option("--k-max", type=int, default=7)
@click.option("--max-spread", type=float, default=None)
@click.pass_obj
def ahlfors(settings: Settings, theta0: float, H: float, centers: int, k_min: int, k_max: int,
            max_spread: float | None) -> None:
    """Mass ratios m(Gamma intersected with B_rho)/rho^t over seeded centers and rho = 3^-k."""

    def body() -> None:
        p = prickly_domain(theta0, H)
        pts = attractor_samples(p, centers, seed=settings.seed)
        radii = [3.0**-k for k in range(k_min, k_max + 1)]
        report = ahlfors_scan(p, pts, radii, max_spread=max_spread, jobs=settings.jobs)
        settings.output_dir.mkdir(parents=True, exist_ok=True)
        report.to_csv(settings.output_dir / "ahlfors.csv")
        settings.emit("ahlfors.json", "ahlfors-scan", {"L": p.L, **report.summary()},
                      {"theta0": theta0, "H": H, "centers": centers, "radii": radii})

    _guarded(body)


@main.command("eval-seminorm")
@domain_options
@click.option("--field", "field_kind",
              type=click.Choice(["constant", "linear", "boundary_power", "counterexample"]), default=None)
@click.option("--s0", type=float, default=None)
@click.option("--p", "p_exp", type=float, required=True)
@click.option("--q", "q_exp", type=float, default=1.0)
@click.option("--cutoff", "cutoffs", type=float, multiple=True, help="Cutoff ladder")
@click.option("--J-max", "J_max", type=int, default=None, help="Blocks E_j of the counterexample field")
@click.option("--convention", type=click.Choice(["minmax", "offset"]), default=None,
              help="Realization of reversed E_j endpoints")
@click.pass_obj
def eval_seminorm(settings: Settings, kind: str | None, theta0: float | None, H: float | None,
                  depth: int | None, slit: bool | None, field_kind: str | None, s0: float | None,
                  p_exp: float, q_exp: float, cutoffs: tuple[float, ...], J_max: int | None,
                  convention: str | None) -> None:
    """nu^{s,(p,q)} over the whole domain, optionally along a cutoff ladder."""
    settings.run = _apply_domain_flags(settings.run, kind=kind, theta0=theta0, H=H, depth=depth, slit=slit)
    if field_kind is not None:
        settings.run.field.kind = field_kind  # type: ignore[assignment]
    if J_max is not None:
        if J_max < 1:
            _fail(f"/field/J_max: must be >= 1, got {J_max}", EXIT_USAGE)
        settings.run.field.J_max = J_max
    if convention is not None:
        settings.run.field.convention = convention  # type: ignore[assignment]
    if s0 is not None:
        settings.run.exponent.s0 = s0

    def body() -> None:
        d, _ = _domain(settings.run.domain)
        qs = settings.quadrature()
        u = _field(settings.run.field, d, p_exp, settings.run.exponent.s0)
        s = _exponent(settings.run.exponent, d)
        ladder = nu_pq_ladder(u, s, p_exp, q_exp, WholeDomain(), d, cutoffs or (qs.cutoff,), qs)
        payload = {
            "p": p_exp,
            "q": q_exp,
            "results": [r.to_dict() for r in ladder.results],
            "divergent": ladder.divergent,
            "growth_exponent": ladder.growth_exponent,
        }
        settings.emit("seminorm.json", "eval-seminorm", payload, {"p": p_exp, "q": q_exp, "cutoffs": cutoffs})

    _guarded(body)


@main.command("extract-trace")
@domain_options
@click.option("--field", "field_kind", type=click.Choice(["constant", "linear", "boundary_power"]), default=None)
@click.option("--samples", type=int, default=8)
@click.option("--lambda", "lambdas", type=float, multiple=True)
@click.option("--eta", type=float, default=0.5)
@click.option("--theta", type=float, default=None)
@click.option("--j-max", type=int, default=20)
@click.option("--rho0", type=float, default=0.05)
@click.option("--p", "p_exp", type=float, default=2.0)
@click.option("--s0", type=float, default=None)
@click.pass_obj
def extract_trace(settings: Settings, kind: str | None, theta0: float | None, H: float | None,
                  depth: int | None, slit: bool | None, field_kind: str | None, samples: int,
                  lambdas: tuple[float, ...], eta: float, theta: float | None, j_max: int, rho0: float,
                  p_exp: float, s0: float | None) -> None:
    """Trace values, Hoelder fits and Lebesgue ladders at boundary samples."""
    settings.run = _apply_domain_flags(settings.run, kind=kind, theta0=theta0, H=H, depth=depth, slit=slit)
    if field_kind is not None:
        settings.run.field.kind = field_kind  # type: ignore[assignment]
    if s0 is not None:
        settings.run.exponent.s0 = s0

    def body() -> None:
        d, p = _domain(settings.run.domain)
        qs = settings.quadrature()
        u = _field(settings.run.field, d, p_exp, settings.run.exponent.s0)
        s = _exponent(settings.run.exponent, d)
        theta_gamma = theta if theta is not None else settings.run.domain.theta0
        t = p.t if p is not None else 1.0
        points = _boundary_samples(d, p, samples, settings.seed)
        rho_ladder = [rho0 * 2.0**-k for k in range(5)]
        records = []
        for k, xbar in enumerate(points):
            record: dict[str, Any] = {"xbar": xbar, "traces": []}
            for lam in lambdas or (0.4,):
                seq = corkscrew_sequence(d, xbar, lam, eta, theta_gamma, j_max, rho0, seed=settings.seed + k)
                if seq.violated:
                    record["traces"].append({"lambda": lam, "violated": True})
                    continue
                sample = trace_at(u, d, seq, qs)
                entry: dict[str, Any] = {"lambda": lam, "sample": sample.to_dict()}
                if sample.limit is not None:
                    beta = predicted_beta(s, theta_gamma, xbar, rho0, p_exp, d.dimension, t, d, qs)
                    entry["predicted_beta"] = beta
                    entry["holder"] = holder_fit(sample, beta.beta).to_dict()
                    entry["lebesgue"] = lebesgue_point_check(u, d, xbar, sample.limit, p_exp, rho_ladder, qs)
                record["traces"].append(entry)
            records.append(record)
        settings.emit("traces.json", "extract-trace", {"samples": records},
                      {"lambdas": lambdas, "eta": eta, "theta": theta_gamma, "j_max": j_max, "rho0": rho0})

    _guarded(body)


@main.command("verify-counterexample")
@click.option("--p", "p_exp", type=float, required=True)
@click.option("--s0", type=float, required=True)
@click.option("--q", "qs", type=float, multiple=True, required=True)
@click.option("--convention", type=click.Choice(["minmax", "offset"]), default="minmax")
@click.option("--amplitude", type=click.Choice(["unit", "log_decay"]), default="unit")
@click.option("--J", "J_ladder", type=int, multiple=True, help="Partial-sum ladder")
@click.option("--epsilon", "epsilons", type=float, multiple=True,
              help="Cutoff ladder for the direct quadrature (skipped when absent)")
@click.pass_obj
def verify_counterexample(settings: Settings, p_exp: float, s0: float, qs: tuple[float, ...], convention: str,
                          amplitude: str, J_ladder: tuple[int, ...], epsilons: tuple[float, ...]) -> None:
    """Series verdicts (and optionally quadrature comparisons) for the strict-containment example."""

    def body() -> int | None:
        spec = CounterexampleSpec(p_exp, s0, convention=convention, amplitude=amplitude)  # type: ignore[arg-type]
        verdicts = [counterexample_series(spec, q, J_ladder or None) for q in qs]
        payload: dict[str, Any] = {"series": verdicts}
        inconsistent = False
        if epsilons:
            comparisons = [counterexample_quadrature(spec, q, epsilons, settings.quadrature()) for q in qs]
            payload["quadrature"] = comparisons
            inconsistent = any(c.inconsistent for c in comparisons)
        field = counterexample_field(spec)
        payload["degenerate_intervals"] = field.params.get("degenerate", 0)
        settings.emit("counterexample.json", "verify-counterexample", payload,
                      {"p": p_exp, "s0": s0, "q": qs, "convention": convention, "amplitude": amplitude,
                       "J": J_ladder, "epsilon": epsilons})
        if inconsistent:
            click.echo(click.style("Quadrature and series disagree beyond the sandwich", fg="yellow"), err=True)
            return EXIT_INCONSISTENT
        return None

    _guarded(body)


@main.command("emit-region-plot")
@click.option("--theta0", type=float, default=2.0)
@click.option("--t", "t_dim", type=float, default=1.3)
@click.option("--n", "n_dim", type=int, default=2)
@click.option("--p-range", type=(float, float), default=(1.0, 4.0))
@click.option("--s-range", type=(float, float), default=(0.0, 3.0))
@click.option("--resolution", type=int, default=128)
@click.pass_obj
def emit_region_plot(settings: Settings, theta0: float, t_dim: float, n_dim: int, p_range: tuple[float, float],
                     s_range: tuple[float, float], resolution: int) -> None:
    """(p, s0) admissibility masks and boundary curves as CSV."""

    def body() -> None:
        grid = region_grid(p_range, s_range, theta0, t_dim, n_dim, resolution)
        files = grid.to_csv(settings.output_dir)
        payload = {
            "theta0": theta0,
            "t": t_dim,
            "n": n_dim,
            "trace_wbp_fraction": float(grid.trace_mask.mean()),
            "lebesgue_fraction": float(grid.lebesgue_mask.mean()),
            "files": [f.name for f in files],
        }
        settings.emit("regions.json", "emit-region-plot", payload,
                      {"p_range": p_range, "s_range": s_range, "resolution": resolution})

    _guarded(body)


@main.group("config")
def config_group() -> None:
    """Show or change stored settings."""


@config_group.command("show")
def config_show() -> None:
    click.echo(json.dumps(get_config(), indent=2, sort_keys=True))


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


@config_group.command("set")
@click.argument("key")
@click.argument("value")
def config_set(key: str, value: str) -> None:
    """Set KEY to VALUE (parsed as JSON when possible)."""
    parsed = _parse_value(value)
    default = DEFAULTS.get(key)
    if isinstance(default, (int, float)) and not isinstance(default, bool):
        if not isinstance(parsed, (int, float)) or isinstance(parsed, bool) or not math.isfinite(parsed):
            _fail(f"{key} expects a number, got {value!r}", EXIT_USAGE)
    try:
        set_config_value(key, parsed)
    except ValueError as exc:
        _fail(str(exc), EXIT_USAGE)
    click.echo(click.style(f"{key} = {json.dumps(parsed)}", fg="green"))


@config_group.command("reset")
def config_reset() -> None:
    reset_config()
    click.echo(click.style("Configuration reset to defaults", fg="green"))


if __name__ == "__main__":
    main()
