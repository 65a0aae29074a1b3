"""Compare the compiled and pure-Python engines on identical inputs.

    python benchmarks/bench_backends.py [--cycles N] [--repeat R]

Both backends run the same prepared inputs (traffic generation is outside the
timed region); outputs are checked for equality and the ratio of best
wall-clock times is reported.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from wnocmac import SimConfig
from wnocmac.engine import BACKENDS, execute, prepare

CASES = [
    ("brs AS1 N=64 load 0.5", dict(protocol="brs", assignment="AS1", offered_load=0.5)),
    ("brs AS3 N=64 load 1.5", dict(protocol="brs", assignment="AS3", offered_load=1.5)),
    ("token AS1 N=64 load 0.5", dict(protocol="token", assignment="AS1", offered_load=0.5)),
    ("token AS2 N=64 load 1.5", dict(protocol="token", assignment="AS2", offered_load=1.5)),
    ("brs AS1 N=256 load 0.5", dict(protocol="brs", assignment="AS1", n_nodes=256, offered_load=0.5)),
]


def best_time(cfg, backend, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        # token runs mutate ring state, so every call gets freshly prepared inputs
        prep = prepare(cfg)
        t0 = time.perf_counter()
        out = execute(prep, backend)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--cycles", type=int, default=20_000, help="measured cycles per run")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if "compiled" not in BACKENDS:
        raise SystemExit("compiled kernel not built; reinstall with a C compiler available")

    print(f"{'case':28s} {'python s':>9s} {'compiled s':>11s} {'speedup':>8s}  same")
    for name, kw in CASES:
        cfg = SimConfig(warmup_cycles=args.cycles // 10, measure_cycles=args.cycles, **kw).replace()
        t_py, out_py = best_time(cfg, "python", args.repeat)
        t_c, out_c = best_time(cfg, "compiled", args.repeat)
        same = (np.array_equal(out_py.delivered_at, out_c.delivered_at)
                and np.array_equal(out_py.channel, out_c.channel)
                and out_py.counters == out_c.counters)
        print(f"{name:28s} {t_py:9.3f} {t_c:11.4f} {t_py / t_c:8.1f}x  {same}")


if __name__ == "__main__":
    main()
