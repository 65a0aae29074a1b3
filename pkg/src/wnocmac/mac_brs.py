"""Random-access MAC with carrier sensing and exponential backoff.

A node with a packet picks a channel, senses it and transmits at once if it
is idle. A busy channel sends the node into backoff with its current window;
a collision aborts the transmission and doubles the window (up to the cap).
Backoff counts down without sensing. A delivered packet resets the window.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .core import SimulationError
from .phy import Sense


class Phase(enum.Enum):
    IDLE = 0
    WAIT_BACKOFF = 1
    TRANSMITTING = 2


class Feedback(enum.Enum):
    COLLISION = "collision"
    DELIVERED = "delivered"


def backoff_window(c: int, w0: int, cmax: int) -> int:
    return w0 << min(c, cmax)


@dataclass
class BrsCounters:
    collisions: int = 0
    busy_senses: int = 0
    backoffs: int = 0
    max_exponent: int = 0


@dataclass
class BrsNodeState:
    node: int
    queue: deque = field(default_factory=deque)
    phase: Phase = Phase.IDLE
    c: int = 0
    backoff_remaining: int = 0
    current_channel: int = -1


def brs_step(state: BrsNodeState, cycle: int,
             sense_fn: Callable[[int], Sense],
             pick_channel: Callable[[], int],
             draw: Callable[[int], int],
             w0: int, cmax: int,
             counters: BrsCounters,
             feedback: Feedback | None = None) -> int | None:
    """Advance one node by one cycle.

    ``feedback`` carries the outcome of the node's transmission that ended in
    the previous cycle. ``pick_channel`` is called on every attempt, ``draw(n)``
    returns an integer in ``[0, n)`` from the node's stream. Returns the channel
    to start transmitting on this cycle, or ``None``.
    """
    if feedback is not None:
        if state.phase is not Phase.TRANSMITTING:
            raise SimulationError(f"node {state.node}: {feedback.value} feedback while not transmitting")
        if feedback is Feedback.DELIVERED:
            state.queue.popleft()
            state.c = 0
            state.phase = Phase.IDLE
        else:
            state.c += 1
            counters.max_exponent = max(counters.max_exponent, state.c)
            _start_backoff(state, draw, w0, cmax, counters)

    if state.phase is Phase.TRANSMITTING:
        return None
    if state.phase is Phase.WAIT_BACKOFF:
        state.backoff_remaining -= 1
        if state.backoff_remaining > 0:
            return None
        state.phase = Phase.IDLE
    if not state.queue:
        return None

    state.current_channel = pick_channel()
    if sense_fn(state.current_channel) is Sense.BUSY:
        counters.busy_senses += 1
        _start_backoff(state, draw, w0, cmax, counters)
        return None
    state.phase = Phase.TRANSMITTING
    return state.current_channel


def _start_backoff(state: BrsNodeState, draw, w0: int, cmax: int, counters: BrsCounters) -> None:
    state.backoff_remaining = 1 + draw(backoff_window(state.c, w0, cmax))
    state.phase = Phase.WAIT_BACKOFF
    counters.backoffs += 1
