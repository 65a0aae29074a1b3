from __future__ import annotations

from typing import NamedTuple

import numpy as np

COUNTER_NAMES = ("collisions", "busy_senses", "backoffs", "max_exponent",
                 "token_hops", "token_jumps", "token_idle_holds")


class KernelOutput(NamedTuple):
    """What a backend returns; identical across backends for the same inputs."""

    delivered_at: np.ndarray  # per packet id, exclusive end cycle or -1
    channel: np.ndarray  # per packet id, channel used or -1
    counters: dict
    single_cycles: np.ndarray  # per channel, in measurement window
    collision_cycles: np.ndarray
