"""Sweeps along the inward normal: bounds per depth, exponent fits and verdicts."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import stats

from . import bounds
from .domains import Domain, DomainError, get_domain, normal_ray

log = logging.getLogger(__name__)

COLUMNS = ("delta", "lower1", "lower2", "upper_lin", "upper_search", "exact")
ESTIMATORS = COLUMNS[1:]
REFERENCE_EXPONENTS = {
    "fu_tangential": 2 / 3,
    "fu_normal": 5 / 6,
    "stage1": 3 / 4,
    "stage2": 7 / 8,
    "linear": 1.0,
}
SLOPE_TOL = 0.01
REL_TOL = 1e-9


class ConfigError(ValueError):
    pass


class FitError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    domain: str = "quadric"
    point: list | None = None
    direction: str = "normal"
    delta0: float = 0.1
    factor: float = 10 ** -0.5
    count: int = 9
    grid: list | None = None
    estimators: tuple = ESTIMATORS
    R_U: float | None = None
    kappa_geom: float = bounds.KAPPA_GEOM
    degree: int = bounds.DEFAULT_DEGREE
    samples: int = bounds.DEFAULT_SAMPLES
    budget: int = 2000
    restarts: int = 3
    seed: int = 0
    workers: int = 4
    out_dir: str = "out"
    prefix: str | None = None
    plot: bool = True

    def __post_init__(self):
        self.estimators = tuple(self.estimators)
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise ConfigError(f"unknown estimators {sorted(unknown)}")
        if self.direction != "normal":
            raise ConfigError("only the normal direction policy is supported")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.grid is None and not 0 < self.factor < 1:
            raise ConfigError("grid factor must lie in (0, 1)")
        d = self.deltas()
        if np.any(d <= 0) or np.any(np.diff(d) >= 0):
            raise ConfigError("depth grid must be positive and strictly decreasing")

    def deltas(self) -> np.ndarray:
        if self.grid is not None:
            return np.asarray(self.grid, dtype=float)
        return self.delta0 * self.factor ** np.arange(self.count)

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        return cls(**data)

    @property
    def name(self) -> str:
        if self.prefix:
            return self.prefix
        return "".join(c if c.isalnum() or c in "-_" else "_" for c in self.domain)[:60]


@dataclass
class SampleRow:
    delta: float
    lower1: float | None = None
    lower2: float | None = None
    upper_lin: float | None = None
    upper_search: float | None = None
    exact: float | None = None

    def sandwich_ok(self, rel: float = REL_TOL) -> bool:
        lows = [v for v in (self.lower1, self.lower2) if v is not None]
        highs = [v for v in (self.upper_search, self.upper_lin, self.exact) if v is not None]
        if self.exact is not None:
            lows_exact = [v for v in (self.upper_search, self.upper_lin) if v is not None]
            if any(self.exact > h * (1 + rel) for h in lows_exact):
                return False
        return all(lo <= hi * (1 + rel) for lo in lows for hi in highs)


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    residual: float
    half_width: float
    n: int


def _column(rows, column: str) -> tuple[np.ndarray, np.ndarray]:
    d, v = [], []
    for row in rows:
        val = row[column] if isinstance(row, dict) else getattr(row, column)
        delta = row["delta"] if isinstance(row, dict) else row.delta
        if val is None:
            continue
        d.append(delta)
        v.append(val)
    return np.asarray(d, dtype=float), np.asarray(v, dtype=float)


def fit_exponent_arrays(delta, values) -> ExponentFit:
    delta = np.asarray(delta, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(delta) < 4:
        raise FitError("need at least four rows")
    if np.any(values <= 0) or np.any(delta <= 0):
        raise FitError("values and depths must be positive")
    x = np.log(1.0 / delta)
    if np.ptp(x) == 0:
        raise FitError("degenerate depth grid")
    y = np.log(values)
    res = stats.linregress(x, y)
    resid = y - (res.intercept + res.slope * x)
    t = stats.t.ppf(0.975, len(x) - 2)
    return ExponentFit(float(res.slope), float(res.intercept), float(np.linalg.norm(resid)),
                       float(t * res.stderr), len(x))


def fit_exponent(rows, column: str) -> ExponentFit:
    """Least-squares slope of log(value) against log(1/delta)."""
    return fit_exponent_arrays(*_column(rows, column))


def fit_log_correction(rows, column: str, alpha_grid=None) -> float:
    """alpha minimizing the residual of ``log(value delta) = c - alpha log(-log delta)``."""
    delta, values = _column(rows, column)
    if len(delta) < 4:
        raise FitError("need at least four rows")
    if np.any(values <= 0):
        raise FitError("values must be positive")
    if np.any(delta >= 1 / math.e):
        raise FitError("log correction needs delta < 1/e")
    alpha_grid = np.arange(0.0, 5.0 + 1e-9, 0.01) if alpha_grid is None else np.asarray(alpha_grid)
    y = np.log(values * delta)
    x = np.log(-np.log(delta))
    best, best_res = None, np.inf
    for a in alpha_grid:
        e = y + a * x
        res = float(np.sum((e - e.mean()) ** 2))
        if res < best_res:
            best, best_res = float(a), res
    return best


# -- running a sweep -----------------------------------------------------------------

@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    fits: dict
    verdicts: dict
    constants: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.verdicts.values())

    def summary(self) -> dict:
        return {
            "config": asdict(self.config),
            "fits": {k: asdict(v) for k, v in self.fits.items()},
            "verdicts": self.verdicts,
            "constants": self.constants,
            "reference_exponents": REFERENCE_EXPONENTS,
        }


def _resolve(config: ExperimentConfig) -> tuple[Domain, np.ndarray]:
    try:
        domain = get_domain(config.domain)
    except Exception as exc:
        raise ConfigError(f"cannot build domain {config.domain!r}: {exc}") from exc
    P = domain.boundary_point if config.point is None else np.asarray(
        [complex(v) if not isinstance(v, (list, tuple)) else complex(*v) for v in config.point])
    if P is None:
        raise ConfigError("domain has no default boundary point; set 'point'")
    return domain, P


def _lower_context(config, domain, P, constants):
    try:
        ctx = bounds.LowerBoundContext.build(domain, P, R_U=config.R_U, seed=config.seed,
                                             kappa_geom=config.kappa_geom)
    except Exception as exc:
        constants["lower_unavailable"] = f"{type(exc).__name__}: {exc}"
        log.warning("lower bounds unavailable: %s", exc)
        return None
    m = ctx.model
    constants.update(C1=m.C1, C2=m.C2, C3=m.C3, R_U=m.R_U, C4=2 * ctx.diam, C7=2 * ctx.diam,
                     delta_max=ctx.delta_max, frame_scale=ctx.frame.scale)
    return ctx


def compute_row(config, domain, ctx, z, X, delta, notes) -> SampleRow:
    row = SampleRow(delta=float(delta))
    est = config.estimators
    for stage, name in ((1, "lower1"), (2, "lower2")):
        if name in est and ctx is not None:
            try:
                setattr(row, name, float(bounds.normal_lower_bound(ctx, delta, X, stage).value))
            except bounds.BoundError as exc:
                notes.append(f"{name} at {delta:.3g}: {exc}")
    if "upper_lin" in est:
        row.upper_lin = bounds.linear_disc_upper(domain, z, X, config.samples).value
    if "upper_search" in est:
        row.upper_search = bounds.disc_search_upper(
            domain, z, X, degree=config.degree, n_samples=config.samples,
            budget=config.budget, restarts=config.restarts, seed=config.seed,
        ).value
    if "exact" in est and domain.exact is not None:
        row.exact = float(domain.exact(z, X))
    return row


def _verdicts(rows, fits) -> dict:
    sandwich = all(r.sandwich_ok() for r in rows)
    out = {"sandwich": {"pass": sandwich}}
    for col, ref in (("lower1", "stage1"), ("lower2", "stage2")):
        if col in fits:
            target = REFERENCE_EXPONENTS[ref]
            slope = fits[col].slope
            out[ref] = {"pass": bool(slope >= target - SLOPE_TOL and sandwich),
                        "slope": slope, "reference": target}
    return out


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Compute every requested estimator along the normal ray; deterministic given the seed."""
    domain, P = _resolve(config)
    deltas = config.deltas()
    try:
        ray = normal_ray(domain, P, deltas)
    except DomainError as exc:
        raise ConfigError(f"{config.domain}: {exc}") from exc
    X = ray.normal
    constants: dict = {"normal": [[v.real, v.imag] for v in X]}
    ctx = _lower_context(config, domain, P, constants) if {"lower1", "lower2"} & set(config.estimators) else None
    row_notes = [[] for _ in deltas]

    def task(i):
        return compute_row(config, domain, ctx, ray.points()[i], X, deltas[i], row_notes[i])

    # rows are independent; map() keeps grid order and each row owns its notes
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        rows = list(pool.map(task, range(len(deltas))))
    notes = [n for ns in row_notes for n in ns]
    if notes:
        constants["notes"] = notes
    fits = {}
    for col in ESTIMATORS:
        d, v = _column(rows, col)
        if len(v) >= 4 and np.all(v > 0):
            fits[col] = fit_exponent_arrays(d, v)
    return ExperimentResult(config, rows, fits, _verdicts(rows, fits), constants)


# -- output ----------------------------------------------------------------------

def _fmt(v) -> str:
    return "" if v is None else "%.17g" % v


def write_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        return [SampleRow(*[float(x) if x != "" else None for x in rec]) for rec in reader]


def write_plot_data(rows, directory, prefix) -> list:
    paths = []
    for col in ESTIMATORS:
        d, v = _column(rows, col)
        if not len(v):
            continue
        p = Path(directory) / f"{prefix}_{col}.dat"
        with open(p, "w") as fh:
            fh.write(f"# delta {col}\n")
            for a, b in zip(d, v):
                fh.write(f"{a:.17g} {b:.17g}\n")
        paths.append(p)
    return paths


def write_outputs(result: ExperimentResult, out_dir=None) -> dict:
    out = Path(out_dir or result.config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prefix = result.config.name
    paths = {"csv": out / f"{prefix}.csv", "json": out / f"{prefix}.json"}
    write_csv(result.rows, paths["csv"])
    with open(paths["json"], "w") as fh:
        json.dump(result.summary(), fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    paths["dat"] = write_plot_data(result.rows, out, prefix)
    if result.config.plot:
        from .plotting import plot_sweep

        paths["png"] = plot_sweep(result.rows, result.fits, out / f"{prefix}.png", title=result.config.domain)
    return paths


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not serializable: {type(obj).__name__}")
