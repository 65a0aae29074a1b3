"""Command-line front end.

Subcommands::

    wnocmac run        one configuration, one CSV row
    wnocmac sweep      offered-load sweep of one configuration
    wnocmac preset     experiment families: channels, nodes, sigma, hurst, summary
    wnocmac hurst-check  R/S estimate of the generator's Hurst exponent

Configuration comes from built-in defaults, then an optional ``key=value``
file (``--config``), then ``WNOCMAC_SEED``, then command-line flags. Exit
status is 0 on success, 1 for configuration errors and 2 when a run trips an
internal invariant.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .assign import plan_for
from .core import Assignment, ConfigError, Protocol, SimConfig, SimulationError, validate_config
from .engine import BACKENDS, run
from .metrics import (
    CSV_COLUMNS,
    SUMMARY_COLUMNS,
    SweepPoint,
    csv_row,
    load_grid,
    pareto_flags,
    run_many,
    summarize,
    sweep_jobs,
    zero_load_config,
)
from .rng import StreamRegistry
from .traffic import draw_destinations, estimate_hurst, generate_arrivals, spatial_weights, write_trace

SEED_ENV = "WNOCMAC_SEED"

_INT_FIELDS = {"n_nodes", "n_channels", "packet_bits", "preamble_bits", "bits_per_cycle", "hotspot_node",
               "warmup_cycles", "measure_cycles", "seed", "brs_w0", "brs_cmax", "token_hop_cycles",
               "token_service_limit"}
_FLOAT_FIELDS = {"offered_load", "sigma", "hurst"}
_ENUM_FIELDS = {"protocol": Protocol, "assignment": Assignment}
_BOOL_FIELDS = {"collision_full_loss"}
_STR_FIELDS = {"traffic_trace"}
CONFIG_KEYS = tuple(f.name for f in dataclasses.fields(SimConfig) if f.name != "packet_cycles")

PRESETS = {
    "channels": ("n_channels", (1, 2, 3, 4)),
    "nodes": ("n_nodes", (64, 128, 256, 512)),
    "sigma": ("sigma", (0.05, 0.1, 1.0, 10.0, 100.0)),
    "hurst": ("hurst", (0.5, 0.65, 0.75, 0.85)),
}
PRESET_NAMES = (*PRESETS, "summary")


def flag_name(key: str) -> str:
    return "--" + key.replace("_", "-")


def convert(key: str, text: str):
    """Parse one textual config value; raises ValueError with a short reason."""
    text = text.strip()
    if key in _INT_FIELDS:
        try:
            return int(text, 0)
        except ValueError:
            raise ValueError(f"expected an integer, got {text!r}") from None
    if key in _FLOAT_FIELDS:
        try:
            return float(text)
        except ValueError:
            raise ValueError(f"expected a number, got {text!r}") from None
    if key in _ENUM_FIELDS:
        choices = [m.value for m in _ENUM_FIELDS[key]]
        for choice in choices:
            if text.lower() == choice.lower():
                return _ENUM_FIELDS[key](choice)
        raise ValueError(f"expected one of {choices}, got {text!r}")
    if key in _BOOL_FIELDS:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected true or false, got {text!r}")
    if key in _STR_FIELDS:
        return text or None
    raise ValueError(f"unknown key {key!r}")


def read_config_file(path: str | Path) -> dict[str, tuple[object, str]]:
    """Parse a ``key=value`` file into ``{key: (value, "path:line")}``."""
    values: dict[str, tuple[object, str]] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        where = f"{path}:{lineno}"
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(where, f"expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ConfigError(where, f"unknown key {key!r}")
        try:
            values[key] = (convert(key, value), where)
        except ValueError as exc:
            raise ConfigError(where, f"{key}: {exc}") from None
    return values


def parse_config(path: str | Path | None = None, flags: dict[str, str | None] | None = None,
                 env: dict[str, str] | None = None) -> SimConfig:
    """Defaults, then file, then the seed environment variable, then flags.

    Errors name the file line or flag that supplied the bad value.
    """
    sources: dict[str, tuple[object, str]] = {}
    if path:
        sources.update(read_config_file(path))
    env = os.environ if env is None else env
    if env.get(SEED_ENV, "").strip():
        try:
            sources["seed"] = (convert("seed", env[SEED_ENV]), SEED_ENV)
        except ValueError as exc:
            raise ConfigError(SEED_ENV, str(exc)) from None
    for key, text in (flags or {}).items():
        if text is None:
            continue
        try:
            sources[key] = (convert(key, text), flag_name(key))
        except ValueError as exc:
            raise ConfigError(flag_name(key), str(exc)) from None
    try:
        return validate_config(SimConfig(**{k: v for k, (v, _) in sources.items()}))
    except ConfigError as exc:
        where = sources.get(exc.field, (None, None))[1]
        if where is None:
            raise
        raise ConfigError(where, str(exc)) from None


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="key=value configuration file")
    g = p.add_argument_group("configuration (override the file)")
    for key in CONFIG_KEYS:
        g.add_argument(flag_name(key), dest=f"cfg_{key}", metavar="VALUE", default=None)


def _config_from_args(args) -> SimConfig:
    flags = {k: getattr(args, f"cfg_{k}") for k in CONFIG_KEYS}
    return parse_config(args.config, flags)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def prepare_outdir(path: str | Path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("--out", f"cannot create {out}: {exc.strerror}") from None
    if not os.access(out, os.W_OK | os.X_OK):
        raise ConfigError("--out", f"{out} is not writable")
    return out


def write_files(out: Path, files: dict[str, str]) -> None:
    """Write every file via a temporary sibling and rename, so none is left half-written."""
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.", suffix=".tmp")
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            staged.append((tmp, out / name))
        for tmp, dest in staged:
            os.replace(tmp, dest)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _emit(text: str, output: str | None) -> None:
    if output:
        path = Path(output)
        prepare_outdir(path.parent if str(path.parent) else ".")
        write_files(path.parent, {path.name: text})
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- subcommands

def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    if args.dump_assignment:
        weights = spatial_weights(cfg.n_nodes, cfg.sigma, cfg.hotspot_node).weights
        sys.stderr.write(plan_for(cfg, weights).dump())
    if args.export_traffic:
        registry = StreamRegistry(cfg.seed)
        arrivals = generate_arrivals(cfg, registry)
        dest = draw_destinations(arrivals, cfg.n_nodes, registry)
        buf = io.StringIO()
        write_trace(buf, arrivals, dest)
        path = Path(args.export_traffic)
        write_files(prepare_outdir(path.parent), {path.name: buf.getvalue()})
    if args.trace:
        path = Path(args.trace)
        buf = io.StringIO()
        result = run(cfg, backend="python", trace=buf)
        write_files(prepare_outdir(path.parent), {path.name: buf.getvalue()})
    else:
        result = run(cfg, backend=args.backend)
    _emit(_csv_text(CSV_COLUMNS, [csv_row(cfg, summarize(result, cfg.seed))]), args.output)
    return 0


def _parse_loads(text: str | None) -> list[float] | None:
    if not text:
        return None
    try:
        loads = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError("--loads", f"expected comma-separated numbers, got {text!r}") from None
    if not loads or any(b <= a for a, b in zip(loads, loads[1:])) or loads[0] < 0:
        raise ConfigError("--loads", "loads must be non-negative and strictly increasing")
    return loads


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    jobs = sweep_jobs(cfg, _parse_loads(args.loads))
    points = run_many(jobs, args.workers, args.backend)
    _emit(_csv_text(CSV_COLUMNS, [csv_row(cfg, p) for p in points]), args.output)
    return 0


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    parameter: str | None
    values: tuple

    def configs(self, base: SimConfig) -> list[SimConfig]:
        if self.parameter is None:
            seen, out = set(), []
            for param, values in PRESETS.values():
                for v in values:
                    cfg = base.replace(**{param: v})
                    if cfg not in seen:
                        seen.add(cfg)
                        out.append(cfg)
            return out
        return [base.replace(**{self.parameter: v}) for v in self.values]


def get_preset(name: str) -> ExperimentPreset:
    if name == "summary":
        return ExperimentPreset("summary", None, ())
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    return ExperimentPreset(name, *PRESETS[name])


def _split_choices(text: str, enum_cls, flag: str) -> list:
    out = []
    for part in text.split(","):
        part = part.strip()
        try:
            out.append(convert("protocol" if enum_cls is Protocol else "assignment", part))
        except ValueError as exc:
            raise ConfigError(flag, str(exc)) from None
    return out


def run_preset(name: str, base: SimConfig, protocols: Sequence[Protocol], assignments: Sequence[Assignment],
               out: Path, workers: int = 1, plot_script: bool = False, backend: str | None = None,
               fractions: Sequence[float] | None = None) -> list[str]:
    """Run a preset and write its files; returns the written file names."""
    preset = get_preset(name)
    groups = []  # (protocol, assignment, [(config, loads-job slice)])
    jobs: list[SimConfig] = []
    for proto in protocols:
        for asg in assignments:
            entries = []
            for cfg in preset.configs(base.replace(protocol=proto, assignment=asg)):
                loads = load_grid(cfg, fractions) if fractions else None
                sweep = sweep_jobs(cfg, loads)
                start = len(jobs)
                jobs.extend(sweep)
                zl = None
                if preset.name == "summary":
                    zl = len(jobs)
                    jobs.append(zero_load_config(cfg))
                entries.append((cfg, slice(start, start + len(sweep)), zl))
            groups.append((proto, asg, entries))
    points = run_many(jobs, workers, backend)

    files: dict[str, str] = {}
    if preset.name == "summary":
        rows, lat, sat = [], [], []
        for proto, asg, entries in groups:
            for cfg, sl, zl in entries:
                z: SweepPoint = points[zl]
                if z.latency is None:
                    raise SimulationError(f"no packets delivered at zero load for {cfg}")
                rows.append(cfg)
                lat.append(z.latency.mean)
                sat.append(max(p.delivered_throughput for p in points[sl]))
        flags = pareto_flags(lat, sat)
        body = [[c.protocol.value, c.assignment.value, str(c.n_channels), str(c.n_nodes), repr(c.sigma),
                 repr(c.hurst), repr(round(lz, 6)), repr(round(s, 6)), str(int(f)), str(c.seed)]
                for c, lz, s, f in zip(rows, lat, sat, flags)]
        files["summary.csv"] = _csv_text(SUMMARY_COLUMNS, body)
    else:
        for proto, asg, entries in groups:
            body = [csv_row(cfg, p) for cfg, sl, _ in entries for p in points[sl]]
            files[f"{preset.name}_{proto.value}_{asg.value}.csv"] = _csv_text(CSV_COLUMNS, body)
    if plot_script:
        files[f"plot_{preset.name}.py"] = plot_script_text(preset, sorted(files))
    write_files(out, files)
    return sorted(files)


def plot_script_text(preset: ExperimentPreset, csv_files: Sequence[str]) -> str:
    """Stand-alone matplotlib script for the CSVs of one preset."""
    files = [f for f in csv_files if f.endswith(".csv")]
    if preset.name == "summary":
        body = '''
rows = list(csv.DictReader(open(os.path.join(HERE, "summary.csv"))))
fig, ax = plt.subplots(figsize=(6, 4))
for proto, marker in (("brs", "o"), ("token", "s")):
    sel = [r for r in rows if r["protocol"] == proto]
    ax.scatter([float(r["zero_load_latency"]) for r in sel],
               [float(r["saturation_throughput"]) for r in sel], marker=marker, label=proto)
front = sorted((float(r["zero_load_latency"]), float(r["saturation_throughput"]))
               for r in rows if r["pareto"] == "1")
ax.plot(*zip(*front), "k--", lw=1, label="Pareto frontier")
ax.set_xscale("log")
ax.set_xlabel("zero-load latency (cycles)")
ax.set_ylabel("saturation throughput (packets/cycle)")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "summary.pdf"))
'''
    else:
        body = f'''
PARAM = {preset.parameter!r}
FILES = {files!r}
fig, axes = plt.subplots(2, len(FILES), figsize=(3 * len(FILES), 6), squeeze=False)
for col, name in enumerate(FILES):
    rows = list(csv.DictReader(open(os.path.join(HERE, name))))
    values = sorted({{float(r[PARAM]) for r in rows}})
    for v in values:
        sel = [r for r in rows if float(r[PARAM]) == v and r["lat_median"]]
        load = [float(r["offered_load"]) for r in sel]
        axes[0][col].plot(load, [float(r["lat_median"]) for r in sel], marker=".", label=f"{{PARAM}}={{v:g}}")
        axes[1][col].plot(load, [float(r["delivered_throughput"]) for r in sel], marker=".")
    axes[0][col].set_title(name[:-4])
    axes[0][col].set_yscale("log")
    axes[1][col].set_xlabel("offered load (packets/cycle)")
axes[0][0].set_ylabel("median latency (cycles)")
axes[1][0].set_ylabel("delivered throughput (packets/cycle)")
axes[0][0].legend(fontsize="small")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "{preset.name}.pdf"))
'''
    return ('"""Generated by wnocmac preset; plots the CSVs in this directory."""\n'
            "import csv\nimport os\n\nimport matplotlib.pyplot as plt\n\n"
            "HERE = os.path.dirname(os.path.abspath(__file__))\n" + body)


def cmd_preset(args) -> int:
    base = _config_from_args(args)
    protocols = _split_choices(args.protocols, Protocol, "--protocols")
    assignments = _split_choices(args.assignments, Assignment, "--assignments")
    get_preset(args.name)
    out = prepare_outdir(args.out)
    written = run_preset(args.name, base, protocols, assignments, out, args.workers,
                         args.plot_script, args.backend)
    for name in written:
        print(out / name)
    return 0


def cmd_hurst_check(args) -> int:
    base = _config_from_args(args)
    try:
        targets = [float(x) for x in args.hurst_values.split(",")]
    except ValueError:
        raise ConfigError("--hurst-values", f"expected comma-separated numbers, got {args.hurst_values!r}") from None
    n = 1 << args.log2_cycles
    rows, ok_all = [], True
    for h in targets:
        cfg = base.replace(hurst=h)
        arrivals = generate_arrivals(cfg, StreamRegistry(cfg.seed), n)
        est = estimate_hurst(arrivals.per_cycle_counts(n))
        rate = len(arrivals) / n / cfg.offered_load if cfg.offered_load else float("nan")
        ok = abs(est - h) <= args.tolerance
        ok_all &= ok
        rows.append([repr(h), repr(round(est, 4)), repr(round(rate, 4)), "pass" if ok else "FAIL"])
    _emit(_csv_text(("hurst", "estimate", "rate_ratio", "status"), rows), args.output)
    return 0 if ok_all or not args.strict else 2


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wnocmac", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="simulate one configuration")
    _add_config_flags(p)
    p.add_argument("--backend", choices=BACKENDS, default=None)
    p.add_argument("--output", "-o", help="CSV file (default stdout)")
    p.add_argument("--trace", metavar="FILE", help="per-cycle channel trace (python backend)")
    p.add_argument("--export-traffic", metavar="FILE", help="write the generated arrivals as a trace")
    p.add_argument("--dump-assignment", action="store_true", help="print the channel/ring plan to stderr")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="offered-load sweep of one configuration")
    _add_config_flags(p)
    p.add_argument("--loads", help="comma-separated offered loads (default: fractions of capacity)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--backend", choices=BACKENDS, default=None)
    p.add_argument("--output", "-o", help="CSV file (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("preset", help="run an experiment family")
    p.add_argument("name", choices=PRESET_NAMES)
    _add_config_flags(p)
    p.add_argument("--protocols", default="brs,token")
    p.add_argument("--assignments", default="AS1,AS2,AS3")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--plot-script", action="store_true", help="also write a matplotlib script")
    p.add_argument("--backend", choices=BACKENDS, default=None)
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("hurst-check", help="estimate the generator's Hurst exponent")
    _add_config_flags(p)
    p.add_argument("--hurst-values", default="0.5,0.65,0.75,0.85")
    p.add_argument("--log2-cycles", type=int, default=20)
    p.add_argument("--tolerance", type=float, default=0.1)
    p.add_argument("--strict", action="store_true", help="exit 2 if any estimate is out of tolerance")
    p.add_argument("--output", "-o", help="CSV file (default stdout)")
    p.set_defaults(func=cmd_hurst_check)
    return parser


class _Parser(argparse.ArgumentParser):
    # usage mistakes are configuration errors, not invariant violations
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error already reported
        return exc.code if isinstance(exc.code, int) else 1
    if getattr(args, "workers", 1) < 1:
        print("wnocmac: error: --workers must be >= 1", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"wnocmac: configuration error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"wnocmac: invariant violation: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
