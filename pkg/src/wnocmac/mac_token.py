"""Token-passing MAC over one or more virtual rings.

Token ``k`` is bound to channel ``k`` for the whole run. A holder with a
queued packet transmits it on the token's channel and keeps the token until
the transmission ends; afterwards (or at once if it has nothing to send, or
once it has used its service limit) the token moves to the next ring member,
arriving ``hop_cycles`` later. On a ring carrying several tokens an arriving
token that finds its destination already holding one jumps to the following
member, one extra hop later.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .assign import plan_for
from .core import Assignment, SimConfig, SimulationError


@dataclass(frozen=True)
class Ring:
    members: tuple[int, ...]
    tokens: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("ring has no members")
        if len(set(self.members)) != len(self.members):
            raise ValueError("ring lists a node twice")


@dataclass
class TokenState:
    id: int
    ring: int
    channel: int
    position: int
    held: bool = False
    arrive: int = 0
    busy_until: int = 0
    served: int = 0


@dataclass
class TokenCounters:
    hops: int = 0
    jumps: int = 0
    idle_holds: int = 0


@dataclass
class TokenRingState:
    rings: list[Ring]
    tokens: list[TokenState]
    hop_cycles: int = 1
    service_limit: int = 1
    holder_of: dict[int, int] = field(default_factory=dict)
    counters: TokenCounters = field(default_factory=TokenCounters)

    def node_at(self, token: TokenState) -> int:
        return self.rings[token.ring].members[token.position]

    def check_invariants(self, n_channels: int) -> None:
        if len(self.tokens) != n_channels:
            raise SimulationError(f"{len(self.tokens)} tokens exist, expected {n_channels}")
        held = [t for t in self.tokens if t.held]
        if len(held) != len(self.holder_of):
            raise SimulationError("holder map out of sync with held tokens")
        for t in held:
            if self.holder_of.get(self.node_at(t)) != t.id:
                raise SimulationError(f"token {t.id} held at node {self.node_at(t)} twice or lost")
        for t in self.tokens:
            if t.channel != t.id:
                raise SimulationError(f"token {t.id} moved to channel {t.channel}")


def build_rings(config: SimConfig, loads: Sequence[float]) -> TokenRingState:
    """Rings and initial token placement for the configured assignment."""
    n, nc = config.n_nodes, config.n_channels
    if nc > n:
        raise ValueError(f"{nc} channels for {n} nodes")
    if config.assignment is Assignment.AS2:
        positions = [k * n // nc for k in range(nc)]
        rings = [Ring(tuple(range(n)), tuple(range(nc)))]
        tokens = [TokenState(k, 0, k, positions[k]) for k in range(nc)]
    else:
        groups = plan_for(config, loads).groups()
        rings = [Ring(tuple(g), (k,)) for k, g in enumerate(groups)]
        tokens = [TokenState(k, k, k, 0) for k in range(nc)]
    return TokenRingState(rings, tokens, config.token_hop_cycles, config.token_service_limit)


def token_jump(state: TokenRingState, token: TokenState, cycle: int) -> bool:
    """Skip a destination that already holds a token. Returns True if it jumped."""
    dest = state.node_at(token)
    if dest not in state.holder_of:
        return False
    token.position = (token.position + 1) % len(state.rings[token.ring].members)
    token.arrive = cycle + state.hop_cycles
    state.counters.jumps += 1
    return True


def _depart(state: TokenRingState, token: TokenState, cycle: int) -> None:
    del state.holder_of[state.node_at(token)]
    if token.served == 0:
        state.counters.idle_holds += 1
    token.held = False
    token.position = (token.position + 1) % len(state.rings[token.ring].members)
    token.arrive = cycle + state.hop_cycles
    state.counters.hops += 1


def token_step(state: TokenRingState, cycle: int, has_packet: Callable[[int], bool],
               duration: int) -> list[tuple[int, int]]:
    """Advance all tokens by one cycle; returns ``(node, channel)`` transmissions to start."""
    for token in state.tokens:
        if not token.held and token.arrive == cycle and not token_jump(state, token, cycle):
            token.held = True
            token.served = 0
            token.busy_until = cycle
            state.holder_of[state.node_at(token)] = token.id

    starts = []
    limit = state.service_limit
    for token in state.tokens:
        if not token.held or token.busy_until > cycle:
            continue
        node = state.node_at(token)
        if has_packet(node) and (limit == 0 or token.served < limit):
            token.served += 1
            token.busy_until = cycle + duration
            starts.append((node, token.channel))
        else:
            _depart(state, token, cycle)
    return starts
