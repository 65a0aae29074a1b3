"""Latency box statistics, load sweeps and CSV rows.

Quartiles use linear interpolation between order statistics (numpy's default
``linear`` method, Hyndman-Fan type 7). Whiskers reach the most extreme
sample within 1.5 IQR of the quartiles; when that sample falls inside the box
(possible with interpolated quartiles) the whisker sits on the quartile, as in
matplotlib.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import SimConfig, max_throughput, validate_config
from .engine import RunResult, run
from .rng import derive_seed64
from .traffic import spatial_weights

ZERO_LOAD = 0.01
# sweep grid as fractions of capacity; the last point keeps every queue backlogged
DEFAULT_FRACTIONS = (0.04, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0, 1.5)
# largest per-node rate a grid point may ask of one source
MAX_NODE_RATE = 0.99

CSV_COLUMNS = (
    "protocol", "assignment", "n_channels", "n_nodes", "sigma", "hurst", "offered_load",
    "delivered_throughput", "lat_mean", "lat_min", "lat_q1", "lat_median", "lat_q3",
    "lat_whisker_high", "lat_p99", "outlier_count", "collisions", "token_jumps", "backlog", "seed",
)
SUMMARY_COLUMNS = (
    "protocol", "assignment", "n_channels", "n_nodes", "sigma", "hurst",
    "zero_load_latency", "saturation_throughput", "pareto", "seed",
)


@dataclass(frozen=True)
class BoxStats:
    n: int
    mean: float
    min: float
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float
    outlier_count: int
    p99: float
    max: float


def box_stats(samples: Iterable[float]) -> BoxStats:
    x = np.sort(np.asarray(samples if isinstance(samples, np.ndarray) else list(samples), dtype=float))
    if x.size == 0:
        raise ValueError("box_stats needs at least one sample")
    q1, med, q3, p99 = np.quantile(x, [0.25, 0.5, 0.75, 0.99])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = x[(x >= lo_fence) & (x <= hi_fence)]
    return BoxStats(
        n=int(x.size),
        mean=float(x.mean()),
        min=float(x[0]),
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        whisker_low=float(min(inside[0], q1)),
        whisker_high=float(max(inside[-1], q3)),
        outlier_count=int(x.size - inside.size),
        p99=float(p99),
        max=float(x[-1]),
    )


@dataclass(frozen=True)
class SweepPoint:
    offered_load: float
    delivered_throughput: float
    latency: BoxStats | None  # None when nothing generated in the window was delivered
    collisions: int
    token_jumps: int
    backlog: int
    seed: int


@dataclass(frozen=True)
class Sweep:
    config: SimConfig
    points: tuple[SweepPoint, ...]

    @property
    def saturation(self) -> float:
        return max(p.delivered_throughput for p in self.points)


def point_seed(seed: int, index: int) -> int:
    """Seed of sweep point ``index``; a plain 63-bit int so it prints cleanly."""
    return derive_seed64(seed, ("sweep", index)) >> 1


def load_grid(config: SimConfig, fractions: Sequence[float] = DEFAULT_FRACTIONS) -> list[float]:
    """Offered loads for a sweep, capped so no single source exceeds ``MAX_NODE_RATE``.

    The cap only bites for strongly concentrated traffic, where the hottest
    source saturates its own injection before the channels do.
    """
    cfg = validate_config(config)
    cap = max_throughput(cfg)
    w_max = float(spatial_weights(cfg.n_nodes, cfg.sigma, cfg.hotspot_node).weights.max())
    ceiling = MAX_NODE_RATE / w_max
    loads: list[float] = []
    for f in fractions:
        load = round(min(f * cap, ceiling), 6)
        if not loads or load > loads[-1]:
            loads.append(load)
    return loads


def summarize(result: RunResult, seed: int) -> SweepPoint:
    lat = box_stats(result.latencies) if len(result.latencies) else None
    return SweepPoint(
        offered_load=result.config.offered_load,
        delivered_throughput=result.throughput,
        latency=lat,
        collisions=result.counters["collisions"],
        token_jumps=result.counters["token_jumps"],
        backlog=result.backlog,
        seed=seed,
    )


def _run_point(args: tuple[SimConfig, int, str | None]) -> SweepPoint:
    cfg, seed, backend = args
    return summarize(run(cfg, backend=backend), seed)


def run_many(jobs: Sequence[SimConfig], workers: int = 1, backend: str | None = None) -> list[SweepPoint]:
    """Run configs and return points in job order, whatever the worker count."""
    args = [(cfg, cfg.seed, backend) for cfg in jobs]
    if workers <= 1 or len(args) <= 1:
        return [_run_point(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_point, args))


def sweep_jobs(config: SimConfig, loads: Sequence[float] | None = None) -> list[SimConfig]:
    cfg = validate_config(config)
    loads = list(loads) if loads is not None else load_grid(cfg)
    if any(b <= a for a, b in zip(loads, loads[1:])):
        raise ValueError("load grid must be strictly increasing")
    return [cfg.replace(offered_load=load, seed=point_seed(cfg.seed, i)) for i, load in enumerate(loads)]


def saturation_sweep(config: SimConfig, loads: Sequence[float] | None = None, workers: int = 1,
                     backend: str | None = None) -> Sweep:
    """One run per offered load; saturation is the largest delivered throughput."""
    jobs = sweep_jobs(config, loads)
    return Sweep(validate_config(config), tuple(run_many(jobs, workers, backend)))


def zero_load_config(config: SimConfig) -> SimConfig:
    return validate_config(config).replace(offered_load=ZERO_LOAD, seed=point_seed(config.seed, 1 << 20))


def zero_load_latency(config: SimConfig, backend: str | None = None) -> float:
    """Mean latency at an aggregate offered load of 0.01 packets/cycle."""
    result = run(zero_load_config(config), backend=backend)
    if not len(result.latencies):
        raise ValueError("no packets delivered at zero load; lengthen the measurement window")
    return float(result.latencies.mean())


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(round(v, 6))
    return str(v)


def csv_row(config: SimConfig, point: SweepPoint) -> list[str]:
    lat = point.latency
    stats = ([lat.mean, lat.min, lat.q1, lat.median, lat.q3, lat.whisker_high, lat.p99, lat.outlier_count]
             if lat else [None] * 7 + [0])
    values = [config.protocol.value, config.assignment.value, config.n_channels, config.n_nodes,
              float(config.sigma), float(config.hurst), point.offered_load, point.delivered_throughput,
              *stats, point.collisions, point.token_jumps, point.backlog, point.seed]
    return [_fmt(v) for v in values]


def pareto_flags(latency: Sequence[float], throughput: Sequence[float]) -> list[bool]:
    """True where no other point has strictly lower latency and strictly higher throughput."""
    lat = np.asarray(latency, dtype=float)
    thr = np.asarray(throughput, dtype=float)
    return [not bool(np.any((lat < lat[i]) & (thr > thr[i]))) for i in range(lat.size)]
