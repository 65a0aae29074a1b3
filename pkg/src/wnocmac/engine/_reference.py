"""Pure-Python cycle loop built from the phy and MAC modules.

This is the readable reference and the fallback when the compiled kernel is
unavailable. It is slow (roughly a microsecond per node per cycle); the
compiled kernel reproduces its output exactly.
"""
from __future__ import annotations

from collections import deque
from typing import TextIO

import numpy as np

from ..assign import ChannelPlan, random_channel
from ..core import SimConfig, SimulationError
from ..mac_brs import BrsCounters, BrsNodeState, Feedback, brs_step
from ..mac_token import TokenRingState, token_step
from ..phy import ChannelState, Medium
from ..rng import SplitMix64
from ..traffic import Arrivals
from ._common import KernelOutput


def _tally(out, t, win_start, single, coll):
    if t >= win_start:
        for obs in out.observations:
            if obs.state is ChannelState.SINGLE:
                single[obs.channel] += 1
            elif obs.state is ChannelState.COLLISION:
                coll[obs.channel] += 1


def run_brs(config: SimConfig, arrivals: Arrivals, plan: ChannelPlan, seeds: list[int],
            trace: TextIO | None = None) -> KernelOutput:
    n, nc, dur = config.n_nodes, config.n_channels, config.packet_cycles
    total, win = config.total_cycles, config.warmup_cycles
    medium = Medium(nc, config.preamble_cycles, config.collision_full_loss)
    states = [BrsNodeState(i) for i in range(n)]
    rngs = [SplitMix64(s) for s in seeds]
    counters = BrsCounters()
    base = BrsCounters()
    feedback: dict[int, Feedback] = {}
    p = len(arrivals)
    delivered_at = np.full(p, -1, dtype=np.int64)
    channel = np.full(p, -1, dtype=np.int64)
    single = np.zeros(nc, dtype=np.int64)
    coll = np.zeros(nc, dtype=np.int64)
    acyc, anode = arrivals.cycles.tolist(), arrivals.nodes.tolist()
    ai = 0
    static = plan.channel_of

    for t in range(total):
        if t == win:
            base = BrsCounters(counters.collisions, counters.busy_senses, counters.backoffs, 0)
            counters.max_exponent = 0
        while ai < p and acyc[ai] == t:
            states[anode[ai]].queue.append(ai)
            ai += 1
        for st in states:
            node = st.node
            rng = rngs[node]
            if static is None:
                pick = lambda rng=rng: random_channel(rng, nc)
            else:
                pick = lambda node=node: static[node]
            ch = brs_step(st, t, lambda c, node=node: medium.sense(c, node, t), pick, rng.below,
                          config.brs_w0, config.brs_cmax, counters, feedback.pop(node, None))
            if ch is not None:
                medium.begin_tx(node, ch, t, dur, st.queue[0])
        out = medium.resolve_cycle(t)
        counters.collisions += out.new_collisions
        for tx in out.completed:
            delivered_at[tx.packet] = t + 1
            channel[tx.packet] = tx.channel
            feedback[tx.node] = Feedback.DELIVERED
        for tx in out.collided:
            feedback[tx.node] = Feedback.COLLISION
        _tally(out, t, win, single, coll)
        if trace is not None:
            for obs in out.observations:
                trace.write(obs.trace_line() + "\n")

    stats = {
        "collisions": counters.collisions - base.collisions,
        "busy_senses": counters.busy_senses - base.busy_senses,
        "backoffs": counters.backoffs - base.backoffs,
        "max_exponent": counters.max_exponent,
        "token_hops": 0,
        "token_jumps": 0,
        "token_idle_holds": 0,
    }
    return KernelOutput(delivered_at, channel, stats, single, coll)


def run_token(config: SimConfig, arrivals: Arrivals, state: TokenRingState,
              trace: TextIO | None = None) -> KernelOutput:
    n, nc, dur = config.n_nodes, config.n_channels, config.packet_cycles
    total, win = config.total_cycles, config.warmup_cycles
    medium = Medium(nc, config.preamble_cycles, config.collision_full_loss)
    queues: list[deque] = [deque() for _ in range(n)]
    p = len(arrivals)
    delivered_at = np.full(p, -1, dtype=np.int64)
    channel = np.full(p, -1, dtype=np.int64)
    single = np.zeros(nc, dtype=np.int64)
    coll = np.zeros(nc, dtype=np.int64)
    acyc, anode = arrivals.cycles.tolist(), arrivals.nodes.tolist()
    ai = 0
    c = state.counters
    base = (0, 0, 0)

    for t in range(total):
        if t == win:
            base = (c.hops, c.jumps, c.idle_holds)
        while ai < p and acyc[ai] == t:
            queues[anode[ai]].append(ai)
            ai += 1
        for node, ch in token_step(state, t, lambda node: bool(queues[node]), dur):
            medium.begin_tx(node, ch, t, dur, queues[node].popleft())
        out = medium.resolve_cycle(t)
        if out.new_collisions or out.collided:
            raise SimulationError(f"collision under token passing at cycle {t}")
        for tx in out.completed:
            delivered_at[tx.packet] = t + 1
            channel[tx.packet] = tx.channel
        _tally(out, t, win, single, coll)
        state.check_invariants(nc)
        if trace is not None:
            for obs in out.observations:
                trace.write(obs.trace_line() + "\n")

    stats = {
        "collisions": 0,
        "busy_senses": 0,
        "backoffs": 0,
        "max_exponent": 0,
        "token_hops": c.hops - base[0],
        "token_jumps": c.jumps - base[1],
        "token_idle_holds": c.idle_holds - base[2],
    }
    return KernelOutput(delivered_at, channel, stats, single, coll)

