"""Experiment configuration, the comparison runner and the file outputs of every command."""
import asyncio
import json
import logging
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures.process import BrokenProcessPool
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

import mpmath
import numpy as np
from mpmath import mp
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import __version__
from .asymptotics import (
    DensityKind,
    c_r,
    cdf_g,
    cdf_u,
    cdf_v,
    density_table,
    limit_log_derivative,
    moment_target,
    stieltjes_transform,
)
from .config import settings
from .errors import MultiOpError, ParameterError
from .exact import ExactPolynomial, MultiIndex, as_rational, to_mpf
from .families import Family, FamilyParams, build_meijer_stepline
from .recurrence import RecurrenceBuilder, diagonal_constants, diagonal_surface, solve_z, stepline_path
from .zeros import HALF_LINE, UNIT_INTERVAL, ZeroSet, empirical_cdf, interlacing_check, isolate_zeros, ks_distance, log_derivative, ratio_at, refine

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MOMENT_ORDERS = (1, 2, 3, 4)
DEFAULT_POINTS = {
    Family.JACOBI_PINEIRO: ("-1", "1/2+i"),
    Family.MULTIPLE_LAGUERRE: ("-1",),
    Family.MEIJER_G: ("-1",),
}


def _split(value) -> List[str]:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return [str(v).strip() for v in value]


def parse_point(text: str) -> Tuple[Fraction, Fraction]:
    """Parse "-1", "1/2+i" or "3-2i" into exact real and imaginary parts"""
    s = text.replace(" ", "")
    try:
        if not s.endswith("i"):
            return as_rational(s), Fraction(0)
        body = s[:-1]
        cut = max(body.rfind("+"), body.rfind("-"))
        real_text, imag_text = (body[:cut], body[cut:]) if cut > 0 else ("0", body)
        if imag_text in ("", "+"):
            imag = Fraction(1)
        elif imag_text == "-":
            imag = Fraction(-1)
        else:
            imag = as_rational(imag_text)
        return as_rational(real_text), imag
    except (MultiOpError, ValueError) as exc:
        raise ParameterError(f"not a point: {text!r}; use forms like -1 or 1/2+i") from exc


def point_value(point: Tuple[Fraction, Fraction]):
    """A Fraction for real points, an mpc at the working precision otherwise"""
    real, imag = point
    if imag == 0:
        return real
    return mp.mpc(to_mpf(real), to_mpf(imag))


class ExperimentConfig(BaseModel):
    """Everything a command needs, parsed from flags or a key = value file"""

    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True, frozen=True)

    family: Family = Family.JACOBI_PINEIRO
    r: int = Field(default=1, ge=1)
    alpha: Tuple[Fraction, ...] = ()
    beta: Optional[Fraction] = None
    nu: Tuple[int, ...] = ()
    n: Tuple[str, ...] = ()
    kind: DensityKind = DensityKind.V
    out: Optional[str] = None
    bits: int = Field(default_factory=lambda: settings.bits, ge=53)
    grid: int = Field(default_factory=lambda: settings.grid, ge=2)
    tol: float = Field(default_factory=lambda: settings.tol, gt=0)
    points: Tuple[str, ...] = ()
    workers: int = Field(default_factory=lambda: settings.workers, ge=1)
    timeout: int = Field(default_factory=lambda: settings.timeout, ge=0)
    timing: bool = False

    @field_validator("alpha", mode="before")
    @classmethod
    def parse_alpha(cls, value):
        if value is None:
            return ()
        return tuple(as_rational(v) for v in _split(value))

    @field_validator("beta", mode="before")
    @classmethod
    def parse_beta(cls, value):
        if value is None or value == "":
            return None
        return as_rational(value if not isinstance(value, str) else value.strip())

    @field_validator("nu", mode="before")
    @classmethod
    def parse_nu(cls, value):
        if value is None:
            return ()
        nu = []
        for v in _split(value):
            q = as_rational(v)
            if q.denominator != 1:
                raise ParameterError(f"nu entries must be integers, got {v}")
            nu.append(int(q))
        return tuple(nu)

    @field_validator("n", mode="before")
    @classmethod
    def parse_n(cls, value):
        if value is None:
            return ()
        if isinstance(value, int):
            value = [value]
        labels = []
        for item in (value.split(",") if isinstance(value, str) else value):
            if isinstance(item, (tuple, list)):
                item = ":".join(str(v) for v in item)
            parts = str(item).strip().split(":")
            if not parts or not all(p.strip().isdigit() for p in parts):
                raise ParameterError(f"index {item!r} must be an integer or entries joined by ':'")
            labels.append(":".join(str(int(p)) for p in parts))
        return tuple(labels)

    @field_validator("points", mode="before")
    @classmethod
    def parse_points(cls, value):
        if value is None:
            return ()
        points = []
        for text in _split(value):
            real, imag = parse_point(text)
            points.append(_format_point(real, imag))
        return tuple(points)

    @model_validator(mode="before")
    @classmethod
    def infer_r(cls, values):
        if isinstance(values, dict) and values.get("r") in (None, ""):
            values = dict(values)
            values["r"] = len(_split(values.get("alpha") or ())) or len(_split(values.get("nu") or ())) or 1
        return values

    @model_validator(mode="after")
    def check_family(self):
        if self.alpha or self.nu or self.beta is not None:
            self.params()
        for label in self.n:
            if ":" in label and len(label.split(":")) != self.r:
                raise ParameterError(f"index {label} needs {self.r} entries")
        return self

    def params(self) -> FamilyParams:
        return FamilyParams.create(family=self.family, r=self.r, alpha=self.alpha, beta=self.beta, nu=self.nu)

    def index_for(self, label: str) -> MultiIndex:
        """Multi-index for one entry of n; a bare integer means the diagonal (stepline for meijer)"""
        if ":" in label:
            return MultiIndex(tuple(int(v) for v in label.split(":")))
        size = int(label)
        if self.family == Family.MEIJER_G:
            return MultiIndex.stepline(size, self.r)
        return MultiIndex.diagonal(size, self.r)

    def indices(self) -> List[MultiIndex]:
        return [self.index_for(label) for label in self.n]

    def single_index(self) -> MultiIndex:
        if len(self.n) != 1:
            raise ParameterError(f"this command needs exactly one index in n, got {len(self.n)}")
        return self.index_for(self.n[0])

    def test_points(self) -> List[Tuple[Fraction, Fraction]]:
        return [parse_point(text) for text in (self.points or DEFAULT_POINTS[self.family])]


def _format_point(real: Fraction, imag: Fraction) -> str:
    if imag == 0:
        return str(real)
    sign = "+" if imag > 0 else "-"
    imag_text = sign + ("" if abs(imag) == 1 else str(abs(imag))) + "i"
    return str(real) + imag_text if real != 0 else imag_text.lstrip("+")


def parse_config_text(text: str) -> Dict[str, str]:
    """key = value lines; blank lines and # comments are ignored"""
    values = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {number}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def load_config(text: str, overrides: Optional[Dict] = None) -> ExperimentConfig:
    """Config from file text; the file wins over overrides taken from flags"""
    values = dict(overrides or {})
    values.update(parse_config_text(text))
    return ExperimentConfig(**values)


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical text: sorted keys, exact fractions, one key per line"""
    fields = {
        "family": config.family.value,
        "r": str(config.r),
        "alpha": ",".join(str(a) for a in config.alpha),
        "beta": "" if config.beta is None else str(config.beta),
        "nu": ",".join(str(v) for v in config.nu),
        "n": ",".join(config.n),
        "kind": config.kind.value,
        "out": config.out or "",
        "bits": str(config.bits),
        "grid": str(config.grid),
        "tol": repr(config.tol),
        "points": ",".join(config.points),
        "workers": str(config.workers),
        "timeout": str(config.timeout),
        "timing": "true" if config.timing else "false",
    }
    return "".join(f"{key} = {value}\n" for key, value in sorted(fields.items()) if value != "")


def scale_for(family: Family, index: MultiIndex) -> Fraction:
    """1 for jp, 1/|n| for ml and 1/|n|^r for meijer"""
    if family == Family.JACOBI_PINEIRO or index.size == 0:
        return Fraction(1)
    if family == Family.MULTIPLE_LAGUERRE:
        return Fraction(1, index.size)
    return Fraction(1, index.size ** index.r)


def support_for(family: Family):
    return UNIT_INTERVAL if family == Family.JACOBI_PINEIRO else HALF_LINE


def limit_cdf(family: Family, r: int) -> Callable[[float], float]:
    if family == Family.JACOBI_PINEIRO:
        return lambda x: float(cdf_v(r, x))
    if family == Family.MULTIPLE_LAGUERRE:
        return lambda x: float(cdf_u(r, r * x))
    return lambda x: float(cdf_g(r, x))


def limit_moment(family: Family, r: int, m: int) -> Fraction:
    if family == Family.JACOBI_PINEIRO:
        return moment_target(DensityKind.V, r, m)
    if family == Family.MULTIPLE_LAGUERRE:
        return moment_target(DensityKind.U, r, m) / r ** m
    return moment_target(DensityKind.G, r, m)


def limit_stieltjes(family: Family, r: int, x):
    """Stieltjes transform of the limit law of the scaled zeros"""
    if family == Family.JACOBI_PINEIRO:
        return limit_log_derivative(r, x)
    if family == Family.MULTIPLE_LAGUERRE:
        return stieltjes_transform(DensityKind.U, r, x, Fraction(1, r))
    return stieltjes_transform(DensityKind.G, r, x)


def construct(params: FamilyParams, index: MultiIndex, builder: Optional[RecurrenceBuilder] = None) -> ExactPolynomial:
    """Exact polynomial for index; jp and ml follow the stepline path of the recurrence"""
    params.check_index(index)
    if params.family == Family.MEIJER_G:
        return build_meijer_stepline(params.nu, index.size)
    builder = builder or RecurrenceBuilder(params)
    return builder.follow(stepline_path(index))


def compute_zeros(config: ExperimentConfig, index: MultiIndex, p: Optional[ExactPolynomial] = None) -> ZeroSet:
    params = config.params()
    p = p or construct(params, index)
    zeros = isolate_zeros(p, support_for(params.family), bits=config.bits)
    return refine(zeros, config.tol).with_scale(scale_for(params.family, index), index)


def _format_float(value) -> str:
    return f"{float(value):.17g}"


def cmd_poly(config: ExperimentConfig) -> str:
    """Exact coefficients, one fraction per line, ascending powers"""
    p = construct(config.params(), config.single_index())
    return "".join(f"{c}\n" for c in p.coeffs)


def cmd_zeros(config: ExperimentConfig) -> str:
    zeros = compute_zeros(config, config.single_index())
    lines = ["k,midpoint,width,scaled,lower,upper"]
    with mp.workprec(config.bits):
        for k, ((lower, upper), mid, scaled) in enumerate(zip(zeros.enclosures, zeros.midpoints, zeros.scaled), start=1):
            lines.append(
                f"{k},{_format_float(mid)},{_format_float(upper - lower)},{_format_float(scaled)},{lower},{upper}"
            )
    return "\n".join(lines) + "\n"


def cmd_density(config: ExperimentConfig) -> str:
    curve = density_table(config.kind, config.r, config.grid)
    return _density_csv(curve.kind.value, config.r, curve.samples)


def _density_csv(kind: str, r: int, samples) -> str:
    lines = [f"# kind={kind},r={r},c_r={c_r(r)}", "phi,x,density,cdf"]
    for s in samples:
        lines.append(",".join(_format_float(v) for v in (s.phi, s.x, s.density, s.cdf)))
    return "\n".join(lines) + "\n"


class RatioError(BaseModel):
    point: str
    k: int
    error: float


class ComparisonRecord(BaseModel):
    """Results for one index of a comparison run"""

    n: str
    index: List[int]
    degree: int
    ks: Optional[float] = None
    moment_errors: Dict[str, float] = {}
    interlacing: Optional[bool] = None
    ratio_errors: List[RatioError] = []
    log_derivative_error: Optional[float] = None
    wall_time: Optional[float] = None
    error: Optional[str] = None


class ComparisonReport(BaseModel):
    schema_version: int = Field(default=SCHEMA_VERSION, serialization_alias="schema")
    config: str
    versions: Dict[str, str]
    records: List[ComparisonRecord]
    partial: bool = False

    def to_json(self) -> str:
        return json.dumps(self.model_dump(by_alias=True), sort_keys=True, indent=2) + "\n"


def _ratio_errors(config: ExperimentConfig, params: FamilyParams, index: MultiIndex,
                  builder: RecurrenceBuilder, p: ExactPolynomial) -> List[RatioError]:
    """|P_{n+e_k}(x)/P_n(x) - (z(x) - centre)| on the diagonal, scaled by |n| for ml"""
    if params.family == Family.MEIJER_G or len(set(index.entries)) != 1:
        return []
    r = params.r
    surface = diagonal_surface(r, params.family)
    centre, _ = diagonal_constants(r, params.family)
    size = index.size
    errors = []
    with mp.workprec(config.bits):
        for point in config.test_points():
            x = point_value(point)
            target = solve_z(x, surface, config.bits) - to_mpf(centre)
            for k in range(r):
                following = builder.get(index.raised(k))
                if params.family == Family.JACOBI_PINEIRO:
                    ratio = ratio_at(following, p, x, config.bits)
                else:
                    ratio = ratio_at(following, p, x * size, config.bits) / size
                value = to_mpf(ratio) if isinstance(ratio, Fraction) else ratio
                errors.append(RatioError(point=_format_point(*point), k=k, error=float(abs(value - target))))
    return errors


def compare_one(config: ExperimentConfig, label: str) -> dict:
    """One comparison record; numerical failures are reported in the record"""
    start = time.perf_counter()
    index = config.index_for(label)
    record = {"n": label, "index": list(index.entries), "degree": index.size}
    try:
        params = config.params()
        builder = RecurrenceBuilder(params) if params.family != Family.MEIJER_G else None
        p = construct(params, index, builder)
        zeros = compute_zeros(config, index, p)
        empirical = empirical_cdf(zeros)
        record["ks"] = ks_distance(empirical, limit_cdf(params.family, params.r))

        samples = np.asarray([float(v) for v in zeros.scaled])
        record["moment_errors"] = {
            str(m): abs(float(np.mean(samples ** m)) - float(limit_moment(params.family, params.r, m)))
            for m in MOMENT_ORDERS
        }

        if builder is not None:
            following = builder.get(index.raised(0))
            record["interlacing"] = interlacing_check(zeros, isolate_zeros(following, support_for(params.family)))
            record["ratio_errors"] = [e.model_dump() for e in _ratio_errors(config, params, index, builder, p)]

        diagonal = params.family == Family.MEIJER_G or len(set(index.entries)) == 1
        if diagonal and index.size > 0:
            with mp.workprec(config.bits):
                scale = scale_for(params.family, index)
                empirical_transform = log_derivative(p, -1, scale, config.bits)
                limit = limit_stieltjes(params.family, params.r, -1)
                record["log_derivative_error"] = float(abs(to_mpf(empirical_transform) - limit))
    except MultiOpError as exc:
        logger.warning(f"[COMPARE] n={label} failed: {exc}")
        record["error"] = str(exc)
    except (ArithmeticError, ValueError, TypeError) as exc:
        logger.exception(f"[COMPARE] n={label} failed unexpectedly")
        record["error"] = f"numerical failure: {type(exc).__name__}: {exc}"
    if config.timing:
        record["wall_time"] = time.perf_counter() - start
    return record


def versions() -> Dict[str, str]:
    return {
        "multiop": __version__,
        "mpmath": mpmath.__version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


def _stop_workers(pool: ProcessPoolExecutor):
    """Kill the worker of an abandoned job so it does not outlive its timeout"""
    terminate = getattr(pool, "terminate_workers", None)
    if terminate is not None:
        terminate()
        return
    # no public terminate before Python 3.14
    for process in list((pool._processes or {}).values()):
        process.terminate()


def _failed(config: ExperimentConfig, label: str, error: str) -> dict:
    index = config.index_for(label)
    return {"n": label, "index": list(index.entries), "degree": index.size, "error": error}


async def _run_isolated(config: ExperimentConfig, label: str) -> dict:
    """One index in its own worker process, killed when config.timeout runs out"""
    loop = asyncio.get_running_loop()
    pool = ProcessPoolExecutor(max_workers=1)
    try:
        job = loop.run_in_executor(pool, compare_one, config, label)
        if config.timeout > 0:
            return await asyncio.wait_for(job, timeout=config.timeout)
        return await job
    except asyncio.TimeoutError:
        logger.warning(f"[COMPARE] n={label} timed out after {config.timeout}s, stopping its worker")
        _stop_workers(pool)
        return _failed(config, label, f"timed out after {config.timeout}s")
    except asyncio.CancelledError:
        _stop_workers(pool)
        raise
    except BrokenProcessPool as exc:
        logger.error(f"[COMPARE] n={label} lost its worker: {exc}")
        return _failed(config, label, f"worker process died: {exc}")
    finally:
        pool.shutdown(wait=False, cancel_futures=True)


async def run_compare(config: ExperimentConfig, feedback_callback=None) -> ComparisonReport:
    """Run compare_one for every index.

    With workers > 1 or a timeout every index runs in its own worker process,
    at most `workers` at a time. A job's timeout starts when its process does,
    and a job that overruns is killed and reported as a timed out record.
    """

    async def send_feedback(message: str, level: str = "info"):
        if feedback_callback:
            await feedback_callback({"type": "feedback", "message": message, "level": level})

    if not config.n:
        raise ParameterError("compare needs at least one index in n")
    sizes = [config.index_for(label).size for label in config.n]
    if sizes != sorted(sizes):
        raise ParameterError("compare needs the index list in ascending order")

    isolated = config.workers > 1 or config.timeout > 0
    slots = asyncio.Semaphore(config.workers)

    async def run_job(label: str) -> dict:
        async with slots:
            if isolated:
                return await _run_isolated(config, label)
            return await asyncio.get_running_loop().run_in_executor(None, compare_one, config, label)

    jobs = [asyncio.ensure_future(run_job(label)) for label in config.n]
    records: List[ComparisonRecord] = []
    try:
        for label, job in zip(config.n, jobs):
            await send_feedback(f"⚡ Comparing n={label}...")
            record = ComparisonRecord(**(await job))
            if record.error:
                await send_feedback(f"❌ n={label}: {record.error}", "error")
            else:
                await send_feedback(f"✓ n={label}: ks={record.ks:.6g}", "success")
            records.append(record)
    finally:
        for job in jobs:
            job.cancel()

    return ComparisonReport(
        config=serialize_config(config),
        versions=versions(),
        records=records,
        partial=any(record.error for record in records),
    )


def cmd_compare(config: ExperimentConfig, feedback_callback=None) -> str:
    report = asyncio.run(run_compare(config, feedback_callback))
    return report.to_json()


def cmd_report(config: ExperimentConfig, r_values=range(1, 6), feedback_callback=None) -> str:
    """Figure tables for v_r and u_r (scaled to [0, c_r/r]) plus a readable summary"""
    out_dir = config.out or "report"
    os.makedirs(out_dir, exist_ok=True)
    lines = ["Limit zero densities", ""]
    for r in r_values:
        v_curve = density_table(DensityKind.V, r, config.grid)
        u_curve = density_table(DensityKind.U, r, config.grid).scaled(1 / r)
        write_text(os.path.join(out_dir, f"figure_v_r{r}.csv"), _density_csv("v", r, v_curve.samples))
        write_text(os.path.join(out_dir, f"figure_u_r{r}.csv"), _density_csv("u", r, u_curve.samples))
        lines.append(
            f"r={r} c_r={c_r(r)} v on [{v_curve.support[0]:g}, {v_curve.support[1]:g}] mass={v_curve.samples[-1].cdf:.12f}"
            f" | u scaled on [{u_curve.support[0]:g}, {u_curve.support[1]:.6g}] mass={u_curve.samples[-1].cdf:.12f}"
        )

    if config.n:
        report = asyncio.run(run_compare(config, feedback_callback))
        write_text(os.path.join(out_dir, "compare.json"), report.to_json())
        lines += ["", f"Comparison for {config.family.value} r={config.r}", "n,degree,ks,max_moment_error"]
        for record in report.records:
            if record.error:
                lines.append(f"{record.n},{record.degree},error: {record.error}")
                continue
            worst = max(record.moment_errors.values()) if record.moment_errors else float("nan")
            lines.append(f"{record.n},{record.degree},{record.ks:.6g},{worst:.3g}")
    summary = "\n".join(lines) + "\n"
    write_text(os.path.join(out_dir, "summary.txt"), summary)
    return summary


def write_text(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
