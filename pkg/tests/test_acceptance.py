"""Acceptance criteria 1-10, each at its stated tolerance.

One line per criterion is printed in the terminal summary. The full preset
grid (every protocol, assignment and swept parameter) is simulated once at the
default run length and shared by the criteria that read saturation throughput
or zero-load latency from it.
"""
import csv
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from oracles import group_loads, optimal_makespan
from wnocmac import Assignment, Protocol, SimConfig, max_throughput, run
from wnocmac.assign import greedy_balanced
from wnocmac.cli import main, run_preset
from wnocmac.engine import fifo_violations
from wnocmac.rng import StreamRegistry
from wnocmac.traffic import estimate_hurst, generate_arrivals, spatial_weights

GRID_BUDGET_S = 600.0


def record(criterion, ok, detail):
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def grid(tmp_path_factory):
    """Summary preset over the full grid: {(protocol, assignment, param, value): row}."""
    out = tmp_path_factory.mktemp("summary")
    t0 = time.perf_counter()
    run_preset("summary", SimConfig().replace(), list(Protocol), list(Assignment), out)
    elapsed = time.perf_counter() - t0
    rows = list(csv.DictReader(open(out / "summary.csv")))
    return rows, elapsed


def select(rows, protocol, assignment, **fixed):
    defaults = dict(n_channels=4, n_nodes=64, sigma=1.0, hurst=0.5)
    defaults.update(fixed)
    for r in rows:
        if r["protocol"] == protocol and r["assignment"] == assignment and all(
                float(r[k]) == float(v) for k, v in defaults.items()):
            return r
    raise KeyError((protocol, assignment, fixed))


def sat(rows, protocol, assignment, **fixed):
    return float(select(rows, protocol, assignment, **fixed)["saturation_throughput"])


def zll(rows, protocol, assignment, **fixed):
    return float(select(rows, protocol, assignment, **fixed)["zero_load_latency"])


# 1 ---------------------------------------------------------------------------
def test_c1_capacity_ceiling(grid):
    rows, elapsed = grid
    worst = max(float(r["saturation_throughput"]) / (0.25 * int(r["n_channels"])) for r in rows)
    record(1, worst <= 1.0, f"max delivered/capacity over {len(rows)} configs = {worst:.4f} (<= 1)")


def test_c1_grid_runtime(grid):
    _, elapsed = grid
    record(1, elapsed < GRID_BUDGET_S, f"full grid in {elapsed:.0f} s (< {GRID_BUDGET_S:.0f} s)")


# 2 ---------------------------------------------------------------------------
def test_c2_token_backlogged_service():
    one = run(SimConfig(protocol="token", n_channels=1, offered_load=0.375).replace()).throughput
    four = run(SimConfig(protocol="token", n_channels=4, assignment="AS1", sigma=100.0,
                         offered_load=1.5).replace()).throughput
    ok = abs(one - 0.2) <= 0.002 and abs(four - 0.8) <= 0.02
    record(2, ok, f"Nc=1 {one:.4f} (0.200+-0.002), Nc=4 AS1 {four:.4f} (0.80+-0.02)")


# 3 ---------------------------------------------------------------------------
def test_c3_channel_scaling(grid):
    rows, _ = grid
    parts = []
    ok = True
    for a in ("AS1", "AS2", "AS3"):
        s1, s4 = sat(rows, "token", a, n_channels=1), sat(rows, "token", a)
        ok &= s4 >= 3.5 * s1
        parts.append(f"{a} {s4:.3f}/{s1:.3f}={s4 / s1:.2f}")
    record(3, ok, "token sat(Nc=4)/sat(Nc=1) >= 3.5: " + ", ".join(parts))


# 4 ---------------------------------------------------------------------------
@pytest.mark.parametrize("assignment", ["AS1", "AS2", "AS3"])
def test_c4_saturation_ordering(grid, assignment):
    rows, _ = grid
    b, t = sat(rows, "brs", assignment), sat(rows, "token", assignment)
    record(4, b < t, f"{assignment} saturation brs {b:.3f} vs token {t:.3f} (brs lower)")


@pytest.mark.parametrize("assignment", ["AS1", "AS2", "AS3"])
def test_c4_zero_load_ordering(grid, assignment):
    rows, _ = grid
    b, t = zll(rows, "brs", assignment), zll(rows, "token", assignment)
    record(4, b < t, f"{assignment} zero-load brs {b:.2f} vs token {t:.2f} (brs lower)")


# 5 ---------------------------------------------------------------------------
def test_c5_token_latency_grows_with_n(grid):
    rows, _ = grid
    parts, ok = [], True
    for n in (64, 128, 256):
        got = zll(rows, "token", "AS1", n_nodes=n)
        model = 4 + (n / 4) / 2
        ok &= abs(got / model - 1) <= 0.30
        parts.append(f"N={n} {got:.1f} vs {model:.0f}")
    record(5, ok, "token AS1 zero-load within 30% of 4+(N/Nc)/2: " + ", ".join(parts))


# 6 ---------------------------------------------------------------------------
@pytest.mark.parametrize("assignment", ["AS1", "AS2", "AS3"])
def test_c6_token_saturation_drops_with_h(grid, assignment):
    rows, _ = grid
    lo, hi = sat(rows, "token", assignment, hurst=0.5), sat(rows, "token", assignment, hurst=0.85)
    drop = 1 - hi / lo
    record(6, drop >= 0.10, f"token {assignment} saturation H=0.5 {lo:.3f} -> H=0.85 {hi:.3f}, "
                            f"drop {100 * drop:.1f}% (>= 10%)")


@pytest.mark.parametrize("assignment", ["AS1", "AS2", "AS3"])
def test_c6_brs_saturation_flat_in_h(grid, assignment):
    rows, _ = grid
    lo, hi = sat(rows, "brs", assignment, hurst=0.5), sat(rows, "brs", assignment, hurst=0.85)
    change = abs(hi / lo - 1)
    record(6, change <= 0.15, f"brs {assignment} saturation change across H {100 * change:.1f}% (<= 15%)")


def test_c6_brs_latency_rises_with_h():
    means = [run(SimConfig(hurst=h, offered_load=0.1).replace()).latencies.mean()
             for h in (0.5, 0.65, 0.75, 0.85)]
    ok = all(b > a for a, b in zip(means, means[1:]))
    record(6, ok, "brs AS1 mean latency at load 0.1 over H 0.5..0.85 (increasing): "
                  + ", ".join(f"{m:.1f}" for m in means))


# 7 ---------------------------------------------------------------------------
@pytest.mark.parametrize("hurst", [0.5, 0.75, 0.85])
def test_c7_hurst_estimate(hurst):
    n = 2**20
    cfg = SimConfig(hurst=hurst).replace()
    counts = generate_arrivals(cfg, StreamRegistry(cfg.seed), n).per_cycle_counts(n)
    est = estimate_hurst(counts)
    record(7, abs(est - hurst) <= 0.1, f"H={hurst} estimate {est:.3f} (+-0.1)")


@pytest.mark.parametrize("sigma", [0.05, 1.0, 100.0])
def test_c7_injection_rate(sigma):
    cfg = SimConfig(sigma=sigma).replace()
    arr = generate_arrivals(cfg, StreamRegistry(cfg.seed))
    rate = np.sum(arr.cycles >= cfg.warmup_cycles) / cfg.measure_cycles
    err = abs(rate / cfg.offered_load - 1)
    record(7, err <= 0.02, f"sigma={sigma} rate {rate:.5f} vs {cfg.offered_load} ({100 * err:.2f}% <= 2%)")


# 8 ---------------------------------------------------------------------------
def test_c8_greedy_oracle():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(1000):
        n = int(rng.integers(1, 13))
        nc = int(rng.integers(1, 4))
        # mix continuous loads with small integers, which produce many ties
        loads = rng.random(n) if i % 2 else rng.integers(1, 6, n).astype(float)
        got = group_loads(greedy_balanced(loads, nc), loads, nc).max()
        worst = max(worst, got / optimal_makespan(loads, nc) / (4 / 3 - 1 / (3 * nc)))
    elapsed = time.perf_counter() - t0
    record(8, worst <= 1 + 1e-12 and elapsed < 60,
           f"1000 instances, worst greedy/(bound*opt) = {worst:.3f} (<= 1), {elapsed:.1f} s (< 60 s)")


# 9 ---------------------------------------------------------------------------
def test_c9_protocol_invariants():
    rng = np.random.default_rng(9)
    runs = bad = 0
    for _ in range(60):
        protocol = ["brs", "token"][int(rng.integers(2))]
        n = int(rng.integers(2, 24))
        cfg = SimConfig(protocol=protocol, assignment=f"AS{int(rng.integers(1, 4))}", n_nodes=n,
                        n_channels=int(rng.integers(1, min(n, 4) + 1)), offered_load=float(rng.uniform(0, 1.2)),
                        hurst=float(rng.choice([0.5, 0.75, 0.85])), sigma=float(rng.choice([0.05, 1.0, 100.0])),
                        seed=int(rng.integers(2**62)), warmup_cycles=500, measure_cycles=4_000).replace()
        # the python backend checks token placement every cycle and raises on any collision
        w_max = spatial_weights(n, cfg.sigma).weights.max()
        cfg = cfg.replace(offered_load=min(cfg.offered_load, 0.95 / w_max))
        r = run(cfg, backend="python")
        runs += 1
        ok = (r.generated == r.delivered_total + r.backlog and fifo_violations(r) == 0
              and (protocol == "brs" or (r.counters["collisions"] == 0 and r.collision_cycles.sum() == 0)))
        bad += not ok
    record(9, bad == 0, f"{runs} randomized runs: token collisions 0, token conservation, FIFO, "
                        f"packet conservation; violations {bad}")


# 10 --------------------------------------------------------------------------
def test_c10_determinism(tmp_path):
    common = ["preset", "channels", "--warmup-cycles", "5000", "--measure-cycles", "20000", "--seed", "7"]
    outputs = []
    for tag, workers in (("a", "1"), ("b", "1"), ("c", "2")):
        out = tmp_path / tag
        assert main([*common, "--out", str(out), "--workers", workers]) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    ok = outputs[0] == outputs[1] == outputs[2] and len(outputs[0]) == 6
    record(10, ok, f"channels preset x3 (workers 1, 1, 2): {len(outputs[0])} CSVs byte-identical")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-rN"]))
