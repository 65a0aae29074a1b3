"""Deterministic cycle loop: traffic -> MAC -> PHY, with warmup and measurement.

Two interchangeable backends run the loop. ``compiled`` is a Cython extension
built with the package; ``python`` is the reference assembled from the phy
and MAC modules. The compiled one is used when importable, unless the
``WNOCMAC_BACKEND`` environment variable says ``python``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from ..assign import ChannelPlan, plan_for
from ..core import Protocol, SimConfig, SimulationError, max_throughput, validate_config
from ..mac_token import TokenRingState, build_rings
from ..rng import StreamRegistry
from ..traffic import Arrivals, generate_arrivals, spatial_weights
from . import _reference
from ._common import COUNTER_NAMES, KernelOutput

try:
    from . import _kernel
except ImportError:  # pragma: no cover - exercised only without a compiler
    _kernel = None

BACKENDS = ("compiled", "python") if _kernel is not None else ("python",)


def default_backend() -> str:
    wanted = os.environ.get("WNOCMAC_BACKEND", "").strip().lower()
    if wanted:
        if wanted not in ("compiled", "python"):
            raise ValueError(f"WNOCMAC_BACKEND must be 'compiled' or 'python', got {wanted!r}")
        if wanted == "compiled" and _kernel is None:
            raise ImportError("WNOCMAC_BACKEND=compiled but the extension is not built")
        return wanted
    return BACKENDS[0]


@dataclass
class RunResult:
    config: SimConfig
    generated: int
    delivered_total: int
    backlog: int
    delivered: int  # deliveries completing inside the measurement window
    measure_cycles: int
    latencies: np.ndarray  # packets generated in the window and delivered, by id
    single_cycles: np.ndarray
    collision_cycles: np.ndarray
    counters: dict
    packet_cycles: np.ndarray = field(repr=False)
    packet_nodes: np.ndarray = field(repr=False)
    delivered_at: np.ndarray = field(repr=False)
    packet_channel: np.ndarray = field(repr=False)
    plan: ChannelPlan | None = field(default=None, repr=False)

    @property
    def throughput(self) -> float:
        return self.delivered / self.measure_cycles

    @property
    def utilization(self) -> np.ndarray:
        return self.single_cycles / self.measure_cycles

    def same_as(self, other: RunResult) -> bool:
        """Field-by-field equality, arrays included."""
        return (
            self.config == other.config
            and (self.generated, self.delivered_total, self.backlog, self.delivered)
            == (other.generated, other.delivered_total, other.backlog, other.delivered)
            and self.counters == other.counters
            and all(np.array_equal(getattr(self, f), getattr(other, f))
                    for f in ("latencies", "single_cycles", "collision_cycles", "packet_cycles",
                              "packet_nodes", "delivered_at", "packet_channel"))
        )


@dataclass
class Prepared:
    config: SimConfig
    arrivals: Arrivals
    plan: ChannelPlan
    seeds: list[int]
    rings: TokenRingState | None


def prepare(config: SimConfig) -> Prepared:
    registry = StreamRegistry(config.seed)
    weights = spatial_weights(config.n_nodes, config.sigma, config.hotspot_node).weights
    arrivals = generate_arrivals(config, registry)
    plan = plan_for(config, weights)
    seeds, rings = [], None
    if config.protocol is Protocol.BRS:
        seeds = [registry.seed64(("mac", i)) for i in range(config.n_nodes)]
    else:
        rings = build_rings(config, weights)
    return Prepared(config, arrivals, plan, seeds, rings)


def _ring_arrays(state: TokenRingState):
    members = np.concatenate([np.asarray(r.members, dtype=np.int64) for r in state.rings])
    offsets = np.concatenate(([0], np.cumsum([len(r.members) for r in state.rings]))).astype(np.int64)
    tok_ring = np.array([t.ring for t in state.tokens], dtype=np.int64)
    tok_pos = np.array([t.position for t in state.tokens], dtype=np.int64)
    return members, offsets, tok_ring, tok_pos


def execute(prep: Prepared, backend: str, trace: TextIO | None = None) -> KernelOutput:
    cfg = prep.config
    if backend == "python":
        if cfg.protocol is Protocol.BRS:
            return _reference.run_brs(cfg, prep.arrivals, prep.plan, prep.seeds, trace)
        return _reference.run_token(cfg, prep.arrivals, prep.rings, trace)
    if backend != "compiled" or _kernel is None:
        raise ValueError(f"backend {backend!r} unavailable; have {BACKENDS}")
    if trace is not None:
        raise ValueError("per-cycle tracing is only available on the python backend")
    acyc, anode = prep.arrivals.cycles, prep.arrivals.nodes
    if cfg.protocol is Protocol.BRS:
        dynamic = prep.plan.channel_of is None
        static = np.zeros(0 if dynamic else cfg.n_nodes, dtype=np.int64)
        if not dynamic:
            static[:] = prep.plan.channel_of
        out = _kernel.run_brs(acyc, anode, cfg.n_nodes, cfg.n_channels, cfg.packet_cycles,
                              cfg.preamble_cycles, cfg.total_cycles, cfg.warmup_cycles, static,
                              dynamic, np.asarray(prep.seeds, dtype=np.uint64), cfg.brs_w0,
                              cfg.brs_cmax, cfg.collision_full_loss)
    else:
        members, offsets, tok_ring, tok_pos = _ring_arrays(prep.rings)
        try:
            out = _kernel.run_token(acyc, anode, cfg.n_nodes, cfg.n_channels, cfg.packet_cycles,
                                    cfg.total_cycles, cfg.warmup_cycles, members, offsets,
                                    tok_ring, tok_pos, cfg.token_hop_cycles, cfg.token_service_limit)
        except RuntimeError as exc:
            raise SimulationError(str(exc)) from exc
    return KernelOutput(*out)


def run(config: SimConfig, backend: str | None = None, trace: TextIO | None = None) -> RunResult:
    """Simulate ``config`` and collect measurement-window statistics.

    Latency runs from the generation cycle to the end of the packet's last
    transmission cycle, so an uncontended packet has latency equal to its
    duration. Only packets generated inside the window are sampled.
    """
    config = validate_config(config)
    prep = prepare(config)
    out = execute(prep, backend or default_backend(), trace)
    result = _assemble(config, prep, out)
    check_result(result)
    return result


def _assemble(config: SimConfig, prep: Prepared, out: KernelOutput) -> RunResult:
    w0, w1 = config.warmup_cycles, config.total_cycles
    cyc = prep.arrivals.cycles
    done = out.delivered_at >= 0
    in_window = (cyc >= w0) & (cyc < w1)
    sampled = in_window & done
    delivered_total = int(done.sum())
    return RunResult(
        config=config,
        generated=len(cyc),
        delivered_total=delivered_total,
        backlog=len(cyc) - delivered_total,
        delivered=int(((out.delivered_at > w0) & (out.delivered_at <= w1)).sum()),
        measure_cycles=config.measure_cycles,
        latencies=out.delivered_at[sampled] - cyc[sampled],
        single_cycles=out.single_cycles,
        collision_cycles=out.collision_cycles,
        counters={k: int(out.counters[k]) for k in COUNTER_NAMES},
        packet_cycles=cyc,
        packet_nodes=prep.arrivals.nodes,
        delivered_at=out.delivered_at,
        packet_channel=out.channel,
        plan=prep.plan,
    )


def fifo_violations(result: RunResult) -> int:
    """Packets delivered out of generation order at their source."""
    bad = 0
    done = result.delivered_at >= 0
    for node in np.unique(result.packet_nodes):
        mine = result.packet_nodes == node
        d = done[mine]
        at = result.delivered_at[mine][d]
        # delivered packets must be a prefix and complete in id order
        n_done = int(d.sum())
        bad += int(not d[:n_done].all()) + int(np.sum(np.diff(at) <= 0))
    return bad


def check_result(result: RunResult) -> None:
    """Post-run invariants that hold for every run on every backend."""
    cfg = result.config
    if result.generated != result.delivered_total + result.backlog:
        raise SimulationError("packet conservation violated")
    if len(result.latencies) and result.latencies.min() < cfg.packet_cycles:
        raise SimulationError("latency shorter than a packet duration")
    if result.delivered > max_throughput(cfg) * cfg.measure_cycles + cfg.n_channels:
        raise SimulationError("delivered more than channel capacity")
    if cfg.protocol is Protocol.TOKEN and (result.counters["collisions"] or result.collision_cycles.any()):
        raise SimulationError("collision under token passing")
    if np.any(result.single_cycles > cfg.measure_cycles):
        raise SimulationError("channel utilization above 1")
