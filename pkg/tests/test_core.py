import pytest

from wnocmac import (Assignment, ConfigError, PacketRecord, Protocol, SimConfig, max_throughput,
                     packet_duration_cycles, validate_config)


@pytest.mark.parametrize("bits,per_cycle,expected", [(80, 20, 4), (20, 20, 1), (81, 20, 5), (1, 20, 1)])
def test_packet_duration(bits, per_cycle, expected):
    assert packet_duration_cycles(bits, per_cycle) == expected


@pytest.mark.parametrize("bits,per_cycle", [(0, 20), (80, 0), (-1, 20)])
def test_packet_duration_rejects_nonpositive(bits, per_cycle):
    with pytest.raises(ConfigError):
        packet_duration_cycles(bits, per_cycle)


def test_defaults_are_table_one():
    cfg = validate_config(SimConfig())
    assert (cfg.n_nodes, cfg.n_channels, cfg.hurst, cfg.sigma) == (64, 4, 0.5, 1.0)
    assert cfg.packet_cycles == 4
    assert cfg.preamble_cycles == 1
    assert cfg.total_cycles == 550_000


@pytest.mark.parametrize("kw,expected", [
    (dict(n_channels=1), 0.25),
    (dict(n_channels=4), 1.0),
    (dict(n_channels=1, packet_bits=20), 1.0),
])
def test_max_throughput(kw, expected):
    assert max_throughput(SimConfig(**kw).replace()) == pytest.approx(expected)


@pytest.mark.parametrize("kw,field", [
    (dict(hurst=1.0), "hurst"),
    (dict(hurst=0.49), "hurst"),
    (dict(n_channels=0), "n_channels"),
    (dict(n_channels=65), "n_channels"),
    (dict(n_nodes=1, n_channels=1), "n_nodes"),
    (dict(sigma=0.0), "sigma"),
    (dict(offered_load=-0.1), "offered_load"),
    (dict(preamble_bits=100), "preamble_bits"),
    (dict(hotspot_node=64), "hotspot_node"),
    (dict(measure_cycles=0), "measure_cycles"),
    (dict(seed=-1), "seed"),
    (dict(seed=2**64), "seed"),
    (dict(token_hop_cycles=0), "token_hop_cycles"),
    (dict(token_service_limit=-1), "token_service_limit"),
    (dict(brs_w0=0), "brs_w0"),
    (dict(n_nodes=True), "n_nodes"),
    (dict(n_nodes=64.0), "n_nodes"),
    (dict(hurst=float("nan")), "hurst"),
    (dict(protocol="aloha"), "protocol"),
])
def test_validation_names_field(kw, field):
    with pytest.raises(ConfigError) as info:
        validate_config(SimConfig(**kw))
    assert info.value.field == field
    assert field in str(info.value)


def test_enum_strings_are_coerced():
    cfg = validate_config(SimConfig(protocol="token", assignment="as3"))
    assert cfg.protocol is Protocol.TOKEN and cfg.assignment is Assignment.AS3


def test_replace_revalidates():
    cfg = SimConfig().replace(packet_bits=100)
    assert cfg.packet_cycles == 5
    with pytest.raises(ConfigError):
        cfg.replace(hurst=2.0)


def test_packet_record_latency():
    rec = PacketRecord(0, 3, generated_at=10)
    assert rec.latency is None
    rec.delivered_at = 14
    assert rec.latency == 4
