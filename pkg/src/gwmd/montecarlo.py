"""Reproducible Monte Carlo estimates of tail ratios, KS distance and coverage.

Replicate ``r`` always draws from ``derive_stream(master_seed, r)`` and the
per-replicate results are reassembled in index order, so a report does not
depend on how many worker processes produced it.  ``GWMD_THREADS`` caps the
number of workers.
"""

import csv
import io
import json
import math
import multiprocessing
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import SCHEMA_VERSION
from .errors import GWMDError, InvalidLaw, NoRealInterval, ValidationError
from .gaussian import normal_cdf, normal_sf
from .inference import confidence_interval
from .offspring import law_from_dict, law_label, resolve_law
from .rng import derive_stream
from .simulate import simulate_generation_observation, simulate_trajectory
from .stats import compute_statistic

STAT_KINDS = ("M", "H", "T", "Ttilde")
TRAJECTORY_METHODS = ("TimeTypeQuadratic", "KnownVariance", "Infectious")
OBSERVATION_METHODS = ("SpaceType", "SpaceTypeLargeDev")
MIN_TAIL_COUNT = 50
DKW_ALPHA = 0.01

# interval outcome codes
_OK, _DEGENERATE, _NO_INTERVAL = 0, 1, 2


@dataclass
class McConfig:
    """One Monte Carlo experiment.

    ``n`` is the window length for M/H and trajectory-based intervals, and the
    observed generation for T/Ttilde and space-type intervals.
    """

    law: object
    stat: str = "M"
    n: int = 15
    n0: int = 0
    reps: int = 10_000
    master_seed: int = 0
    x_grid: tuple = (0.0, 0.5, 1.0, 1.5, 2.0)
    kappa: Optional[float] = None
    method: Optional[str] = None

    def __post_init__(self):
        self.law = resolve_law(self.law)
        self.x_grid = tuple(float(x) for x in self.x_grid)
        if self.stat not in STAT_KINDS:
            raise ValidationError(f"unknown statistic {self.stat!r}", flag="--stat")
        if self.reps < 100:
            raise ValidationError("reps must be >= 100", flag="--reps")
        if self.n < 1:
            raise ValidationError("n must be >= 1", flag="--n")
        if self.n0 < 0:
            raise ValidationError("n0 must be >= 0", flag="--n0")
        if any(x < 0 for x in self.x_grid):
            raise ValidationError("x grid values must be non-negative", flag="--x-grid")
        if any(b <= a for a, b in zip(self.x_grid, self.x_grid[1:])):
            raise ValidationError("x grid must be strictly increasing", flag="--x-grid")
        if self.kappa is not None and not 0.0 < self.kappa < 1.0:
            raise ValidationError(f"kappa must lie in (0, 1), got {self.kappa}", flag="--kappa")
        if not self.law.v2 > 0:
            raise InvalidLaw(f"{self.law.law_id} has zero offspring variance")

    @property
    def uses_observation(self):
        if self.method is not None:
            return self.method in OBSERVATION_METHODS
        return self.stat in ("T", "Ttilde")

    def to_dict(self):
        return {
            "law": self.law.to_dict(),
            "law_label": law_label(self.law),
            "stat": self.stat,
            "n": self.n,
            "n0": self.n0,
            "reps": self.reps,
            "master_seed": self.master_seed,
            "x_grid": list(self.x_grid),
            "kappa": self.kappa,
            "method": self.method,
        }

    @classmethod
    def from_dict(cls, obj):
        obj = dict(obj)
        obj.pop("law_label", None)
        obj["law"] = law_from_dict(obj["law"]) if isinstance(obj["law"], dict) else obj["law"]
        return cls(**obj)


@dataclass
class McReport:
    kind: str  # "tail_ratio", "ks" or "coverage"
    config: dict
    used_count: int
    degenerate_count: int
    rows: list = field(default_factory=list)
    ks_distance: Optional[float] = None
    dkw_bound: Optional[float] = None
    coverage: Optional[float] = None
    coverage_se: Optional[float] = None
    no_interval_count: int = 0
    mean_width: Optional[float] = None
    trend: Optional[list] = None
    run_config: Optional[dict] = None
    wall_time: float = 0.0
    schema_version: int = SCHEMA_VERSION

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, obj):
        return cls(**obj)


def worker_count(workers=None):
    if workers is None:
        env = os.environ.get("GWMD_THREADS")
        if env is None:
            return os.cpu_count() or 1
        try:
            workers = int(env)
        except ValueError:
            raise ValidationError(f"GWMD_THREADS must be an integer, got {env!r}") from None
    if workers < 1:
        raise ValidationError("worker count must be >= 1")
    return workers


def _statistic_replicate(cfg, r):
    rng = derive_stream(cfg.master_seed, r)
    law = cfg.law
    if cfg.uses_observation:
        data = simulate_generation_observation(law, cfg.n, rng)
    else:
        data = simulate_trajectory(law, cfg.n0, cfg.n, rng)
    try:
        return compute_statistic(cfg.stat, data, law.m, law.v).value
    except GWMDError:
        return math.nan


def _interval_replicate(cfg, r):
    rng = derive_stream(cfg.master_seed, r)
    law = cfg.law
    if cfg.uses_observation:
        data = simulate_generation_observation(law, cfg.n, rng)
    else:
        data = simulate_trajectory(law, cfg.n0, cfg.n, rng)
    try:
        ci = confidence_interval(cfg.method, data, cfg.kappa, v=law.v)
    except NoRealInterval:
        return (math.nan, math.nan, _NO_INTERVAL)
    except GWMDError:
        return (math.nan, math.nan, _DEGENERATE)
    return (ci.a, ci.b, _DEGENERATE if ci.degenerate else _OK)


def _run_chunk(fn, cfg, start, stop):
    return [fn(cfg, r) for r in range(start, stop)]


def _map_replicates(fn, cfg, workers=None):
    """Apply ``fn(cfg, r)`` for r in range(reps), returning results in index order."""
    workers = min(worker_count(workers), cfg.reps)
    if workers == 1:
        return _run_chunk(fn, cfg, 0, cfg.reps)
    bounds = np.linspace(0, cfg.reps, 4 * workers + 1).astype(int)
    ctx = multiprocessing.get_context("fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        futures = [pool.submit(_run_chunk, fn, cfg, int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]
        out = []
        for fut in futures:
            out.extend(fut.result())
    return out


def replicate_statistics(cfg, workers=None):
    """Statistic value per replicate; NaN marks a degenerate replicate."""
    return np.array(_map_replicates(_statistic_replicate, cfg, workers), dtype=float)


def replicate_intervals(cfg, workers=None):
    """``(reps, 3)`` array of interval endpoints and outcome code per replicate."""
    if cfg.method is None or cfg.kappa is None:
        raise ValidationError("coverage runs need both method and kappa", flag="--kappa")
    return np.array(_map_replicates(_interval_replicate, cfg, workers), dtype=float).reshape(-1, 3)


def coverage_target(cfg):
    return cfg.law.m - 1.0 if cfg.method == "Infectious" else cfg.law.m


def binomial_se(p, n):
    return math.sqrt(p * (1.0 - p) / n) if n > 0 else math.nan


def tail_rows(values, x_grid):
    """Upper/lower tail frequencies and their ratios to the Gaussian tail."""
    n = len(values)
    rows = []
    for x in x_grid:
        k_up = int(np.count_nonzero(values >= x))
        k_lo = int(np.count_nonzero(values <= -x))
        p_up, p_lo = k_up / n, k_lo / n
        tail = normal_sf(x)
        se_up, se_lo = binomial_se(p_up, n), binomial_se(p_lo, n)
        rows.append({
            "x": x,
            "p_hat_upper": p_up,
            "p_hat_lower": p_lo,
            "ratio_upper": p_up / tail,
            "ratio_lower": p_lo / tail,
            "mc_se": se_up,
            "mc_se_lower": se_lo,
            "ratio_se_upper": se_up / tail,
            "ratio_se_lower": se_lo / tail,
            "insufficient_tail_count": min(k_up, k_lo) < MIN_TAIL_COUNT,
        })
    return rows


def ks_distance_to_normal(values):
    """Exact ``sup_x |F_N(x) - Phi(x)|`` for the empirical CDF of ``values``."""
    s = np.sort(np.asarray(values, dtype=float))
    n = len(s)
    cdf = np.array([normal_cdf(v) for v in s])
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def dkw_bound(n, alpha=DKW_ALPHA):
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def _split(values):
    ok = ~np.isnan(values)
    return values[ok], int(np.count_nonzero(~ok))


def mc_tail_ratio(cfg, workers=None):
    t0 = time.perf_counter()
    used, n_bad = _split(replicate_statistics(cfg, workers))
    return McReport(kind="tail_ratio", config=cfg.to_dict(), used_count=len(used), degenerate_count=n_bad,
                    rows=tail_rows(used, cfg.x_grid), wall_time=time.perf_counter() - t0)


def mc_ks_distance(cfg, workers=None):
    t0 = time.perf_counter()
    used, n_bad = _split(replicate_statistics(cfg, workers))
    return McReport(kind="ks", config=cfg.to_dict(), used_count=len(used), degenerate_count=n_bad,
                    ks_distance=ks_distance_to_normal(used), dkw_bound=dkw_bound(len(used)),
                    wall_time=time.perf_counter() - t0)


def coverage_indicators(cfg, intervals=None, workers=None):
    """Per-replicate containment of the true parameter, and the outcome codes."""
    if intervals is None:
        intervals = replicate_intervals(cfg, workers)
    target = coverage_target(cfg)
    covered = (intervals[:, 0] <= target) & (target <= intervals[:, 1]) & (intervals[:, 2] == _OK)
    return covered, intervals[:, 2].astype(int)


def mc_coverage(cfg, method=None, workers=None):
    if method is not None:
        cfg = McConfig.from_dict({**cfg.to_dict(), "method": method, "law": cfg.law})
    if cfg.method not in TRAJECTORY_METHODS + OBSERVATION_METHODS:
        raise ValidationError(f"unknown CI method {cfg.method!r}", flag="--method")
    t0 = time.perf_counter()
    intervals = replicate_intervals(cfg, workers)
    covered, codes = coverage_indicators(cfg, intervals)
    ok = codes == _OK
    used = int(np.count_nonzero(ok))
    cov = float(np.count_nonzero(covered)) / used if used else math.nan
    widths = intervals[ok, 1] - intervals[ok, 0]
    return McReport(kind="coverage", config=cfg.to_dict(), used_count=used,
                    degenerate_count=int(np.count_nonzero(codes == _DEGENERATE)),
                    no_interval_count=int(np.count_nonzero(codes == _NO_INTERVAL)),
                    coverage=cov, coverage_se=binomial_se(cov, used),
                    mean_width=float(widths.mean()) if used else None,
                    wall_time=time.perf_counter() - t0)


def mc_trend(cfg, ns, workers=None):
    """Tail ratios and KS distance at each window length in ``ns``."""
    table = []
    for n in ns:
        sub = McConfig.from_dict({**cfg.to_dict(), "n": int(n), "law": cfg.law})
        used, n_bad = _split(replicate_statistics(sub, workers))
        table.append({"n": int(n), "ks_distance": ks_distance_to_normal(used), "dkw_bound": dkw_bound(len(used)),
                      "degenerate_count": n_bad, "rows": tail_rows(used, sub.x_grid)})
    return table


CSV_HEADER = ["x", "p_upper", "ratio_upper", "p_lower", "ratio_lower", "se"]


def report_to_csv(report):
    """One row per x-grid point, preceded by ``#``-prefixed provenance lines."""
    buf = io.StringIO()
    buf.write(f"# schema_version={report.schema_version}\n")
    buf.write(f"# kind={report.kind}\n")
    buf.write("# config=" + json.dumps(report.config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in report.rows:
        w.writerow([repr(row["x"]), repr(row["p_hat_upper"]), repr(row["ratio_upper"]),
                    repr(row["p_hat_lower"]), repr(row["ratio_lower"]), repr(row["mc_se"])])
    return buf.getvalue()


def report_to_json(report):
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def write_report(report, path, fmt="json"):
    if fmt == "json":
        text = report_to_json(report)
    elif fmt == "csv":
        text = report_to_csv(report)
    else:
        raise ValidationError(f"unknown report format {fmt!r}", flag="--format")
    with open(path, "w") as fh:
        fh.write(text)


def read_report(path):
    with open(path) as fh:
        return McReport.from_dict(json.load(fh))
