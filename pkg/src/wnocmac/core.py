"""Configuration, units and derived timing constants.

Time is an integer cycle counter. With a 1 GHz clock and a 20 Gb/s link every
quantity in the model is a whole number of cycles.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field


class ConfigError(ValueError):
    """Raised when a configuration value violates an invariant."""

    def __init__(self, field_name: str, message: str) -> None:
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class SimulationError(RuntimeError):
    """An internal protocol invariant was violated during a run."""


class Protocol(str, enum.Enum):
    BRS = "brs"
    TOKEN = "token"

    def __str__(self) -> str:
        return self.value


class Assignment(str, enum.Enum):
    AS1 = "AS1"
    AS2 = "AS2"
    AS3 = "AS3"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SimConfig:
    n_nodes: int = 64
    n_channels: int = 4
    protocol: Protocol = Protocol.BRS
    assignment: Assignment = Assignment.AS1
    packet_bits: int = 80
    preamble_bits: int = 20
    bits_per_cycle: int = 20
    offered_load: float = 0.1
    sigma: float = 1.0
    hurst: float = 0.5
    hotspot_node: int = 0
    warmup_cycles: int = 50_000
    measure_cycles: int = 500_000
    seed: int = 1
    brs_w0: int = 4
    brs_cmax: int = 8
    token_hop_cycles: int = 1
    # 0 means exhaustive service
    token_service_limit: int = 1
    collision_full_loss: bool = False
    traffic_trace: str | None = None
    packet_cycles: int = field(default=0, compare=False, repr=False)

    @property
    def total_cycles(self) -> int:
        return self.warmup_cycles + self.measure_cycles

    @property
    def preamble_cycles(self) -> int:
        return packet_duration_cycles(self.preamble_bits, self.bits_per_cycle)

    def replace(self, **changes) -> SimConfig:
        """Return a validated copy with ``changes`` applied."""
        changes.setdefault("packet_cycles", 0)
        return validate_config(dataclasses.replace(self, **changes))


def packet_duration_cycles(packet_bits: int, bits_per_cycle: int) -> int:
    """Cycles needed to put ``packet_bits`` on the air."""
    if packet_bits <= 0:
        raise ConfigError("packet_bits", f"must be > 0, got {packet_bits}")
    if bits_per_cycle <= 0:
        raise ConfigError("bits_per_cycle", f"must be > 0, got {bits_per_cycle}")
    return -(-packet_bits // bits_per_cycle)


def max_throughput(config: SimConfig) -> float:
    """Aggregate capacity in packets/cycle: one packet per duration per channel."""
    return config.n_channels / packet_duration_cycles(config.packet_bits, config.bits_per_cycle)


def _check(cond: bool, name: str, message: str) -> None:
    if not cond:
        raise ConfigError(name, message)


def _coerce_enum(value, enum_cls, name):
    if isinstance(value, enum_cls):
        return value
    for member in enum_cls:
        if str(value).lower() in (member.value.lower(), member.name.lower()):
            return member
    raise ConfigError(name, f"unknown value {value!r}; expected one of {[m.value for m in enum_cls]}")


def validate_config(raw: SimConfig) -> SimConfig:
    """Check every invariant of ``raw`` and return it with derived constants filled in.

    Each violation raises :class:`ConfigError` naming the offending field.
    """
    protocol = _coerce_enum(raw.protocol, Protocol, "protocol")
    assignment = _coerce_enum(raw.assignment, Assignment, "assignment")

    int_fields = ("n_nodes", "n_channels", "packet_bits", "preamble_bits", "bits_per_cycle",
                  "hotspot_node", "warmup_cycles", "measure_cycles", "seed", "brs_w0",
                  "brs_cmax", "token_hop_cycles", "token_service_limit")
    for name in int_fields:
        value = getattr(raw, name)
        _check(isinstance(value, int) and not isinstance(value, bool), name,
               f"must be an integer, got {value!r}")
    for name in ("offered_load", "sigma", "hurst"):
        value = getattr(raw, name)
        _check(isinstance(value, (int, float)) and not isinstance(value, bool)
               and math.isfinite(value), name, f"must be a finite number, got {value!r}")

    _check(raw.n_nodes >= 2, "n_nodes", f"must be >= 2, got {raw.n_nodes}")
    _check(1 <= raw.n_channels <= raw.n_nodes, "n_channels",
           f"must satisfy 1 <= n_channels <= n_nodes ({raw.n_nodes}), got {raw.n_channels}")
    _check(raw.offered_load >= 0, "offered_load", f"must be >= 0, got {raw.offered_load}")
    _check(raw.sigma > 0, "sigma", f"must be > 0, got {raw.sigma}")
    _check(0.5 <= raw.hurst < 1.0, "hurst", f"must satisfy 0.5 <= hurst < 1, got {raw.hurst}")
    _check(raw.packet_bits > 0, "packet_bits", f"must be > 0, got {raw.packet_bits}")
    _check(raw.bits_per_cycle > 0, "bits_per_cycle", f"must be > 0, got {raw.bits_per_cycle}")
    _check(0 < raw.preamble_bits <= raw.packet_bits, "preamble_bits",
           f"must satisfy 0 < preamble_bits <= packet_bits ({raw.packet_bits}), got {raw.preamble_bits}")
    _check(0 <= raw.hotspot_node < raw.n_nodes, "hotspot_node",
           f"must be a node index in [0, {raw.n_nodes}), got {raw.hotspot_node}")
    _check(raw.warmup_cycles >= 0, "warmup_cycles", f"must be >= 0, got {raw.warmup_cycles}")
    _check(raw.measure_cycles > 0, "measure_cycles", f"must be > 0, got {raw.measure_cycles}")
    _check(0 <= raw.seed < 2**64, "seed", f"must be a 64-bit unsigned integer, got {raw.seed}")
    _check(raw.brs_w0 >= 1, "brs_w0", f"must be >= 1, got {raw.brs_w0}")
    _check(0 <= raw.brs_cmax <= 30, "brs_cmax", f"must be in [0, 30], got {raw.brs_cmax}")
    _check(raw.token_hop_cycles >= 1, "token_hop_cycles", f"must be >= 1, got {raw.token_hop_cycles}")
    _check(raw.token_service_limit >= 0, "token_service_limit",
           f"must be >= 0 (0 = exhaustive), got {raw.token_service_limit}")

    duration = packet_duration_cycles(raw.packet_bits, raw.bits_per_cycle)
    return dataclasses.replace(
        raw,
        protocol=protocol,
        assignment=assignment,
        offered_load=float(raw.offered_load),
        sigma=float(raw.sigma),
        hurst=float(raw.hurst),
        collision_full_loss=bool(raw.collision_full_loss),
        packet_cycles=duration,
    )


@dataclass
class PacketRecord:
    id: int
    source: int
    generated_at: int
    channel: int = -1
    delivered_at: int | None = None

    @property
    def latency(self) -> int | None:
        if self.delivered_at is None:
            return None
        return self.delivered_at - self.generated_at
