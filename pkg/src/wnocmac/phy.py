"""Shared-medium arbitration at cycle granularity.

A transmission becomes visible to carrier sensing one cycle after it starts,
so nodes that start in the same cycle cannot hear each other and collide.
Colliding transmitters learn about it at the end of the preamble cycle and
their transmissions are truncated to the preamble, unless ``full_loss`` is set,
in which case the colliding packets occupy the channel for their full length.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .core import SimulationError


class Sense(enum.Enum):
    IDLE = 0
    BUSY = 1


class ChannelState(enum.Enum):
    IDLE = "idle"
    SINGLE = "single"
    COLLISION = "collision"


@dataclass
class Transmission:
    node: int
    channel: int
    start: int
    end: int
    packet: int
    collided: bool = False


@dataclass(frozen=True)
class ChannelObservation:
    channel: int
    cycle: int
    state: ChannelState
    nodes: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.state is ChannelState.SINGLE and len(self.nodes) != 1:
            raise ValueError("single observation needs exactly one node")
        if self.state is ChannelState.COLLISION and len(self.nodes) < 2:
            raise ValueError("collision observation needs at least two nodes")

    def trace_line(self) -> str:
        nodes = ",".join(map(str, self.nodes)) or "-"
        return f"{self.cycle} {self.channel} {self.state.value} {nodes}"


@dataclass
class CycleOutcome:
    observations: list[ChannelObservation]
    collided: list[Transmission] = field(default_factory=list)
    completed: list[Transmission] = field(default_factory=list)
    # channels where two or more transmissions started this cycle
    new_collisions: int = 0


class Medium:
    """Active transmissions per channel.

    Usage per cycle: any number of :meth:`sense` and :meth:`begin_tx` calls,
    then exactly one :meth:`resolve_cycle`.
    """

    def __init__(self, n_channels: int, preamble_cycles: int = 1, full_loss: bool = False) -> None:
        self.n_channels = n_channels
        self.preamble_cycles = preamble_cycles
        self.full_loss = full_loss
        self.active: list[list[Transmission]] = [[] for _ in range(n_channels)]
        self._transmitting: dict[int, Transmission] = {}

    def is_transmitting(self, node: int) -> bool:
        return node in self._transmitting

    def begin_tx(self, node: int, channel: int, cycle: int, duration: int, packet: int = -1) -> Transmission:
        if node in self._transmitting:
            raise SimulationError(f"node {node} started a second transmission at cycle {cycle}")
        if not 0 <= channel < self.n_channels:
            raise SimulationError(f"node {node} used nonexistent channel {channel}")
        tx = Transmission(node, channel, cycle, cycle + duration, packet)
        self.active[channel].append(tx)
        self._transmitting[node] = tx
        return tx

    def sense(self, channel: int, node: int, cycle: int) -> Sense:
        for tx in self.active[channel]:
            if tx.node != node and tx.start <= cycle - 1 and tx.end > cycle:
                return Sense.BUSY
        return Sense.IDLE

    def resolve_cycle(self, cycle: int) -> CycleOutcome:
        outcome = CycleOutcome([])
        for ch, txs in enumerate(self.active):
            starters = [tx for tx in txs if tx.start == cycle]
            if len(starters) >= 2:
                outcome.new_collisions += 1
                for tx in starters:
                    tx.collided = True
                    if not self.full_loss:
                        tx.end = tx.start + self.preamble_cycles
            live = [tx for tx in txs if tx.start <= cycle < tx.end]
            if not live:
                obs = ChannelObservation(ch, cycle, ChannelState.IDLE)
            elif len(live) == 1 and not live[0].collided:
                obs = ChannelObservation(ch, cycle, ChannelState.SINGLE, (live[0].node,))
            else:
                obs = ChannelObservation(ch, cycle, ChannelState.COLLISION,
                                         tuple(sorted(tx.node for tx in live)))
            outcome.observations.append(obs)

            finished = [tx for tx in txs if tx.end == cycle + 1]
            for tx in finished:
                (outcome.collided if tx.collided else outcome.completed).append(tx)
                del self._transmitting[tx.node]
            if finished:
                self.active[ch] = [tx for tx in txs if tx.end > cycle + 1]
        return outcome
