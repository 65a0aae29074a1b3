"""Channel and ring assignment strategies.

BRS:   AS1 random channel per attempt, AS2 uniform static blocks, AS3 greedy
       load-balanced static map.
Token: AS1 one ring per channel from uniform blocks, AS2 one ring carrying all
       tokens, AS3 one ring per channel from the greedy partition.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Assignment as Strategy
from .core import Protocol, SimConfig


def uniform_static(n_nodes: int, n_channels: int) -> list[int]:
    """Contiguous blocks whose sizes differ by at most one, larger blocks first."""
    base, extra = divmod(n_nodes, n_channels)
    mapping: list[int] = []
    for ch in range(n_channels):
        mapping.extend([ch] * (base + (1 if ch < extra else 0)))
    return mapping


def greedy_balanced(loads: Sequence[float], n_channels: int) -> list[int]:
    """Longest-processing-time partition of nodes into ``n_channels`` groups.

    Nodes are taken heaviest first (ties: lower index) and each goes to the
    currently lightest group (ties: fewer members, then lower group index), so
    no group is left empty while ``n_nodes >= n_channels``. Returns node -> group.
    All-zero loads fall back to :func:`uniform_static`.
    """
    loads = np.asarray(loads, dtype=float)
    if np.any(loads < 0):
        raise ValueError("loads must be non-negative")
    if not np.any(loads > 0):
        return uniform_static(len(loads), n_channels)
    order = sorted(range(len(loads)), key=lambda i: (-loads[i], i))
    group_load = [0.0] * n_channels
    group_size = [0] * n_channels
    mapping = [0] * len(loads)
    for node in order:
        g = min(range(n_channels), key=lambda c: (group_load[c], group_size[c], c))
        mapping[node] = g
        group_load[g] += loads[node]
        group_size[g] += 1
    return mapping


def random_channel(rng, n_channels: int) -> int:
    """Uniform channel index; ``rng`` is anything with ``below(n)``."""
    if n_channels == 1:
        return 0
    return rng.below(n_channels)


def groups_of(mapping: Sequence[int], n_groups: int) -> list[list[int]]:
    groups: list[list[int]] = [[] for _ in range(n_groups)]
    for node, g in enumerate(mapping):
        groups[g].append(node)
    return groups


@dataclass(frozen=True)
class ChannelPlan:
    """Resolved assignment for one run.

    ``channel_of`` is the static node -> channel (BRS) or node -> ring (token)
    map; it is ``None`` for BRS AS1 (drawn per attempt) and token AS2 (one
    shared ring).
    """

    protocol: Protocol
    strategy: Strategy
    n_channels: int
    loads: tuple[float, ...]
    channel_of: tuple[int, ...] | None

    @property
    def dynamic(self) -> bool:
        return self.channel_of is None

    def groups(self) -> list[list[int]]:
        if self.channel_of is None:
            return [list(range(len(self.loads)))]
        return groups_of(self.channel_of, self.n_channels)

    def dump(self) -> str:
        """Text table: node, expected load, channel or ring."""
        if self.protocol is Protocol.TOKEN:
            head = "ring"
            dyn = "0 (shared)"
        else:
            head = "channel"
            dyn = "random"
        lines = [f"# {self.protocol.value} {self.strategy.value} n_channels={self.n_channels}",
                 f"node\tload\t{head}"]
        for node, load in enumerate(self.loads):
            where = dyn if self.channel_of is None else str(self.channel_of[node])
            lines.append(f"{node}\t{load:.6g}\t{where}")
        return "\n".join(lines) + "\n"


def plan_for(config: SimConfig, loads: Sequence[float]) -> ChannelPlan:
    strategy = config.assignment
    n, nc = config.n_nodes, config.n_channels
    if strategy is Strategy.AS1:
        mapping = None if config.protocol is Protocol.BRS else uniform_static(n, nc)
    elif strategy is Strategy.AS2:
        mapping = uniform_static(n, nc) if config.protocol is Protocol.BRS else None
    else:
        mapping = greedy_balanced(loads, nc)
    return ChannelPlan(config.protocol, strategy, nc, tuple(float(x) for x in loads),
                       None if mapping is None else tuple(mapping))
