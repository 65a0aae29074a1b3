"""Cycle-accurate simulation of multi-channel MAC protocols for wireless in-package networks."""
from .core import (
    Assignment,
    ConfigError,
    PacketRecord,
    Protocol,
    SimConfig,
    SimulationError,
    max_throughput,
    packet_duration_cycles,
    validate_config,
)
from .engine import RunResult, run

__all__ = [
    "Assignment",
    "ConfigError",
    "PacketRecord",
    "Protocol",
    "RunResult",
    "SimConfig",
    "SimulationError",
    "max_throughput",
    "packet_duration_cycles",
    "run",
    "validate_config",
]
