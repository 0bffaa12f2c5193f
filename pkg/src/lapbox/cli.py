"""Command-line scenario runner.

    lapbox <scenario> --config <path> [--out <path>] [--format csv|json] [--seed N] [--threads N]

Exit codes: 0 all checks pass, 1 a numeric check failed, 2 config error,
3 runtime or budget error.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from . import __version__
from .config import SCHEMAS, ScenarioConfig, load_config, parse_config
from .errors import ConfigError, LapboxError
from .scenarios import RUNNERS

__all__ = ["run", "emit", "main", "EXIT_PASS", "EXIT_FAIL", "EXIT_CONFIG", "EXIT_RUNTIME"]

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def _native(o):
    """Convert numpy scalars/arrays, tuples and complex numbers to JSON-native values."""
    if isinstance(o, dict):
        return {str(k): _native(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_native(v) for v in o]
    if isinstance(o, np.ndarray):
        return _native(o.tolist())
    if isinstance(o, (bool, np.bool_)):
        return bool(o)
    if isinstance(o, (int, np.integer)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        return float(o)
    if isinstance(o, (complex, np.complexfloating)):
        return [float(o.real), float(o.imag)]
    if o is None or isinstance(o, str):
        return o
    return str(o)


def _threads(n):
    if n is None:
        env = os.environ.get("LAPBOX_THREADS")
        if env is None:
            return contextlib.nullcontext()
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"LAPBOX_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise ConfigError("thread count must be >= 1")
    return sfft.set_workers(n)


def run(config: ScenarioConfig, threads: int | None = None) -> dict:
    """Execute a validated scenario and return its result envelope.

    The envelope is ``{scenario, params, results, metadata}`` built from
    JSON-native types; ``results`` holds ``tables`` (``{name: {columns,
    rows}}``) and a ``summary`` dict, ``metadata`` the version, seed,
    wall time, per-check flags and the overall ``passed``.
    """
    if config.scenario not in RUNNERS:
        raise ConfigError(f"unknown scenario {config.scenario!r}")
    t0 = time.perf_counter()
    with _threads(threads):
        try:
            tables, summary, flags = RUNNERS[config.scenario](config.params, config.seed)
        except LapboxError as exc:
            raise type(exc)(f"{config.scenario}: {exc}") from exc
    wall = time.perf_counter() - t0
    flags = {k: bool(v) for k, v in flags.items()}
    return {
        "scenario": config.scenario,
        "params": _native(config.as_dict()),
        "results": {"tables": _native(tables), "summary": _native(summary)},
        "metadata": {
            "version": __version__,
            "seed": int(config.seed),
            "wall_time": wall,
            "flags": flags,
            "passed": all(flags.values()),
        },
    }


def _atomic_write(path: Path, text: str):
    path = Path(path)
    tmp = None
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if tmp is not None:
            with contextlib.suppress(OSError):
                os.unlink(tmp)
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if not math.isfinite(v) else f"{v:.17g}"
    if isinstance(v, list):
        return json.dumps(v)
    return "" if v is None else v


def table_csv(tab: dict) -> str:
    """One table as CSV: header row, RFC-4180 quoting, floats at 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(tab["columns"])
    for row in tab["rows"]:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def emit(envelope: dict, fmt: str = "json", path=None) -> list:
    """Write an envelope; returns the written paths (empty when printing to stdout).

    JSON is one object with key order ``scenario, params, results, metadata``.
    CSV writes one file per table: ``path`` itself when there is a single
    table, ``<stem>.<table>.csv`` next to it otherwise.
    """
    if fmt == "json":
        text = json.dumps(envelope, indent=2) + "\n"
        if path is None:
            sys.stdout.write(text)
            return []
        _atomic_write(Path(path), text)
        return [Path(path)]
    if fmt != "csv":
        raise ConfigError(f"unknown format {fmt!r}")
    tables = envelope["results"]["tables"]
    if path is None:
        for name, tab in tables.items():
            sys.stdout.write(f"# {name}\r\n" + table_csv(tab))
        return []
    path = Path(path)
    if len(tables) == 1:
        targets = {path: next(iter(tables.values()))}
    else:
        targets = {path.with_name(f"{path.stem}.{name}.csv"): tab for name, tab in tables.items()}
    for p, tab in targets.items():
        _atomic_write(p, table_csv(tab))
    return list(targets)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lapbox", description="Run a lapbox numerical scenario.")
    ap.add_argument("scenario", choices=sorted(SCHEMAS))
    ap.add_argument("--config", help="scenario config file (defaults are used when omitted)")
    ap.add_argument("--out", help="output path (stdout when omitted)")
    ap.add_argument("--format", choices=("csv", "json"), default="json")
    ap.add_argument("--seed", type=int, help="master seed (overrides the config)")
    ap.add_argument("--threads", type=int, help="FFT worker threads (fallback: LAPBOX_THREADS)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config, args.scenario, args.seed)
        else:
            cfg = parse_config("", args.scenario, args.seed)
        env = run(cfg, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LapboxError, ArithmeticError, MemoryError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        emit(env, args.format, args.out)
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    failed = [k for k, v in env["metadata"]["flags"].items() if not v]
    for k in failed:
        print(f"check failed: {k}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
