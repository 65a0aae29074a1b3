"""Synthetic traffic: spatial concentration (sigma) and burstiness (Hurst H).

Spatial weights follow a Gaussian kernel over the circular distance from a
hotspot node, measured as a fraction of the ring (0 to 0.5). Small sigma
concentrates injection around the hotspot (sigma=0.05 keeps 95% of it within
0.1 N of the hotspot); sigma >= 1 is close to even for any N.

Temporal behaviour per node:

* ``H == 0.5``: Bernoulli injection, drawn as geometric inter-arrival gaps.
* ``H > 0.5``: Pareto ON/OFF source with shape ``alpha = 3 - 2H`` for both
  periods. ON emits one packet per cycle and lasts at least ``ON_MIN_CYCLES``;
  the OFF minimum is picked so the long-run rate equals the node's share.
  The source starts in equilibrium (phase and residual period drawn from the
  stationary distribution), so the expected rate is exact over any window.

Both modes are expressed as a sequence of ON intervals on a continuous time
axis; a packet is generated at every integer cycle covered by an ON interval.
Period lengths are drawn in fixed-size batches so the arrival sequence depends
only on the stream, never on how far ahead it has been consumed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np
from scipy.special import gammaln

from .core import ConfigError, SimConfig
from .rng import StreamRegistry

ON_MIN_CYCLES = 4
_BATCH = 256
_TIME_CAP = float(2**53)


@dataclass(frozen=True)
class SpatialProfile:
    weights: np.ndarray
    sigma: float
    hotspot_node: int

    def rates(self, offered_load: float) -> np.ndarray:
        return offered_load * self.weights


def circular_distance(n_nodes: int, hotspot: int) -> np.ndarray:
    idx = np.arange(n_nodes)
    d = np.abs(idx - hotspot)
    return np.minimum(d, n_nodes - d)


def spatial_weights(n_nodes: int, sigma: float, hotspot: int = 0) -> SpatialProfile:
    """Normalized injection weights ``exp(-x^2 / 2 sigma^2)``, ``x = d / n_nodes``."""
    if sigma <= 0:
        raise ConfigError("sigma", f"must be > 0, got {sigma}")
    d = circular_distance(n_nodes, hotspot) / n_nodes
    w = np.exp(-(d * d) / (2.0 * sigma * sigma))
    w /= w.sum()
    w.flags.writeable = False
    return SpatialProfile(w, float(sigma), hotspot)


def pareto_shape(hurst: float) -> float:
    return 3.0 - 2.0 * hurst


class ArrivalProcess:
    """Arrival cycles of one node.

    Call :meth:`next_arrivals` with strictly increasing cycles, or pull whole
    windows with :meth:`arrivals_until`; the two views never disagree.
    """

    def __init__(self, rate: float, hurst: float, rng: np.random.Generator,
                 on_min: float = ON_MIN_CYCLES) -> None:
        if rate < 0:
            raise ConfigError("offered_load", f"per-node rate must be >= 0, got {rate}")
        if rate >= 1:
            raise ConfigError("offered_load", f"per-node rate {rate:.4g} is not below 1 packet/cycle")
        self.rate = rate
        self.hurst = hurst
        self.bursty = hurst > 0.5
        self.rng = rng
        self.on_min = float(on_min)
        self.alpha = pareto_shape(hurst) if self.bursty else 2.0
        self.off_min = self.on_min * (1.0 - rate) / rate if rate > 0 else math.inf
        self._time = 0.0
        self._on_first: bool | None = None
        self._starts = np.empty(0, dtype=np.int64)
        self._stops = np.empty(0, dtype=np.int64)
        self._cursor = 0
        self._pending: np.ndarray = np.empty(0, dtype=np.int64)
        self._pending_pos = 0

    @property
    def mode(self) -> str:
        return "pareto_on_off" if self.bursty else "bernoulli"

    def _draw_batch(self) -> None:
        if self.bursty:
            first = None
            if self._on_first is None:
                self._on_first = bool(self.rng.random() < self.rate)
                first = self._residual(self.on_min if self._on_first else self.off_min)
            on = self.on_min * (1.0 + self.rng.pareto(self.alpha, _BATCH))
            off = self.off_min * (1.0 + self.rng.pareto(self.alpha, _BATCH))
            periods = np.empty(2 * _BATCH)
            if self._on_first:
                periods[0::2], periods[1::2] = on, off
            else:
                periods[0::2], periods[1::2] = off, on
            if first is not None:
                periods[0] = first
            edges = self._time + np.concatenate(([0.0], np.cumsum(periods)))
            first_on = 0 if self._on_first else 1
            a = np.ceil(edges[first_on:-1:2])
            b = np.ceil(edges[first_on + 1::2])
            end_time = float(edges[-1])
        else:
            # inverse-transform geometric gaps: cycles until the next success
            u = self.rng.random(_BATCH)
            # tiny rates overflow to inf, which the time cap below treats as silence
            with np.errstate(over="ignore"):
                gaps = np.maximum(np.ceil(np.log1p(-u) / math.log1p(-self.rate)), 1.0)
                a = self._time - 1.0 + np.cumsum(gaps)
            b = a + 1.0
            end_time = float(a[-1] + 1.0)
        # beyond _TIME_CAP nothing is representable exactly; such a source is silent
        keep = (a < _TIME_CAP) & (b > a)
        self._time = end_time if end_time < _TIME_CAP else math.inf
        self._starts = np.concatenate((self._starts[self._cursor:], a[keep].astype(np.int64)))
        self._stops = np.concatenate((self._stops[self._cursor:],
                                      np.minimum(b[keep], _TIME_CAP).astype(np.int64)))
        self._cursor = 0

    def _residual(self, x_min: float) -> float:
        """Remaining length of the period in progress at time 0 (equilibrium start).

        For Pareto(alpha, x_min) periods the residual is uniform below x_min with
        probability (alpha - 1) / alpha and Pareto(alpha - 1, x_min) otherwise.
        """
        u, v = self.rng.random(2)
        if u < (self.alpha - 1.0) / self.alpha:
            return x_min * v
        return x_min * (1.0 - v) ** (-1.0 / (self.alpha - 1.0))

    def arrivals_until(self, end: int) -> np.ndarray:
        """Arrival cycles below ``end`` not yet returned, ascending."""
        if self.rate == 0:
            return np.empty(0, dtype=np.int64)
        while self._time < end:
            self._draw_batch()
        starts = self._starts[self._cursor:]
        stops = self._stops[self._cursor:]
        n_take = int(np.searchsorted(starts, end, side="left"))
        if n_take == 0:
            return np.empty(0, dtype=np.int64)
        s = starts[:n_take]
        e = np.minimum(stops[:n_take], end)
        counts = e - s
        total = int(counts.sum())
        offsets = np.repeat(s - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
        out = offsets + np.arange(total, dtype=np.int64)
        if stops[n_take - 1] > end:
            self._starts[self._cursor + n_take - 1] = end
            self._cursor += n_take - 1
        else:
            self._cursor += n_take
        return out

    def next_arrivals(self, cycle: int) -> int:
        """Number of packets (0 or 1) generated at ``cycle``."""
        while self._pending_pos >= len(self._pending):
            self._pending = self.arrivals_until(cycle + 4096)
            self._pending_pos = 0
            if len(self._pending) == 0:
                return 0
        nxt = self._pending[self._pending_pos]
        if nxt < cycle:
            raise ValueError(f"cycle {cycle} requested after arrival at {nxt} was skipped")
        if nxt == cycle:
            self._pending_pos += 1
            return 1
        return 0


@dataclass
class Arrivals:
    """Network-wide arrivals sorted by (cycle, node); index = packet id."""

    cycles: np.ndarray
    nodes: np.ndarray

    def __len__(self) -> int:
        return len(self.cycles)

    def per_cycle_counts(self, n_cycles: int) -> np.ndarray:
        return np.bincount(self.cycles, minlength=n_cycles)[:n_cycles]


def _sorted(cycles: np.ndarray, nodes: np.ndarray) -> Arrivals:
    order = np.lexsort((nodes, cycles))
    return Arrivals(np.ascontiguousarray(cycles[order], dtype=np.int64),
                    np.ascontiguousarray(nodes[order], dtype=np.int64))


def node_rates(config: SimConfig) -> np.ndarray:
    profile = spatial_weights(config.n_nodes, config.sigma, config.hotspot_node)
    return profile.rates(config.offered_load)


def check_rates(config: SimConfig) -> np.ndarray:
    rates = node_rates(config)
    worst = int(np.argmax(rates))
    if rates[worst] >= 1.0:
        raise ConfigError("offered_load",
                          f"node {worst} would need {rates[worst]:.4g} packets/cycle (must be < 1); "
                          f"lower offered_load or raise sigma")
    return rates


def generate_arrivals(config: SimConfig, registry: StreamRegistry, n_cycles: int | None = None) -> Arrivals:
    """All arrivals of a run in ``[0, n_cycles)``."""
    if n_cycles is None:
        n_cycles = config.total_cycles
    if config.traffic_trace:
        return read_trace(config.traffic_trace, config.n_nodes, n_cycles)
    rates = check_rates(config)
    cyc_parts, node_parts = [], []
    for node, rate in enumerate(rates):
        rng = registry.stream(("traffic", node))
        if rate <= 0:
            continue
        cyc = ArrivalProcess(float(rate), config.hurst, rng).arrivals_until(n_cycles)
        cyc_parts.append(cyc)
        node_parts.append(np.full(len(cyc), node, dtype=np.int64))
    if not cyc_parts:
        return Arrivals(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))
    return _sorted(np.concatenate(cyc_parts), np.concatenate(node_parts))


def draw_destinations(arrivals: Arrivals, n_nodes: int, registry: StreamRegistry) -> np.ndarray:
    """Uniform destination among the other nodes, one stream per source."""
    dest = np.empty(len(arrivals), dtype=np.int64)
    for node in np.unique(arrivals.nodes):
        mask = arrivals.nodes == node
        d = registry.stream(("destination", int(node))).integers(0, n_nodes - 1, int(mask.sum()))
        dest[mask] = d + (d >= node)
    return dest


def write_trace(out: TextIO, arrivals: Arrivals, destinations: np.ndarray) -> None:
    out.write("# cycle source destination\n")
    for c, s, d in zip(arrivals.cycles.tolist(), arrivals.nodes.tolist(), destinations.tolist()):
        out.write(f"{c} {s} {d}\n")


def read_trace(path: str | Path, n_nodes: int, n_cycles: int) -> Arrivals:
    """Replay a trace written by :func:`write_trace`; lines past ``n_cycles`` are ignored."""
    cycles, nodes = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ConfigError("traffic_trace", f"{path}:{lineno}: expected 'cycle source [destination]'")
            try:
                c, s = int(parts[0]), int(parts[1])
            except ValueError:
                raise ConfigError("traffic_trace", f"{path}:{lineno}: non-integer field") from None
            if c < 0 or not 0 <= s < n_nodes:
                raise ConfigError("traffic_trace", f"{path}:{lineno}: cycle or source out of range")
            if c < n_cycles:
                cycles.append(c)
                nodes.append(s)
    return _sorted(np.asarray(cycles, dtype=np.int64), np.asarray(nodes, dtype=np.int64))


def _expected_rs(sizes: np.ndarray) -> np.ndarray:
    """Anis-Lloyd expected R/S of an iid series, with Peters' small-n factor."""
    out = np.empty(len(sizes))
    for k, m in enumerate(sizes):
        i = np.arange(1, m)
        tail = np.sum(np.sqrt((m - i) / i))
        if m <= 340:
            lead = math.exp(gammaln((m - 1) / 2) - gammaln(m / 2)) / math.sqrt(math.pi)
        else:
            lead = 1.0 / math.sqrt(m * math.pi / 2)
        out[k] = (m - 0.5) / m * lead * tail
    return out


def rescaled_range(series: np.ndarray, size: int) -> float:
    """Mean R/S over non-overlapping blocks of ``size``; flat blocks are skipped."""
    n_blocks = len(series) // size
    blocks = series[: n_blocks * size].reshape(n_blocks, size)
    dev = np.cumsum(blocks - blocks.mean(axis=1, keepdims=True), axis=1)
    r = dev.max(axis=1) - dev.min(axis=1)
    s = blocks.std(axis=1)
    ok = s > 0
    if not np.any(ok):
        return math.nan
    return float(np.mean(r[ok] / s[ok]))


def estimate_hurst(series: Iterable[float], min_size: int = 2**6, min_blocks: int = 16) -> float:
    """Corrected rescaled-range estimate of the Hurst exponent.

    R/S is averaged over dyadic block sizes from ``min_size`` up to the size
    that still leaves ``min_blocks`` blocks, and the iid expectation is
    subtracted in log space before fitting the slope, so an iid series gives 0.5.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or len(x) < 2**14:
        raise ValueError(f"need a 1-d series of at least {2**14} samples, got {x.shape}")
    if not np.var(x) > 0:
        raise ValueError("series has zero variance; Hurst exponent is undefined")
    max_size = len(x) // min_blocks
    sizes = 2 ** np.arange(int(math.log2(min_size)), int(math.log2(max_size)) + 1)
    rs = np.array([rescaled_range(x, int(m)) for m in sizes])
    ok = np.isfinite(rs) & (rs > 0)
    if ok.sum() < 3:
        raise ValueError("too few usable block sizes for a Hurst fit")
    y = np.log(rs[ok]) - np.log(_expected_rs(sizes[ok]))
    slope = np.polyfit(np.log(sizes[ok]), y, 1)[0]
    return float(0.5 + slope)
