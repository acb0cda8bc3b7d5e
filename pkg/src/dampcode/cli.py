"""Command-line front end.

Subcommands: ``sweep``, ``shots``, ``crossover``, ``angles``, ``verify``.
Exit codes: 0 success, 1 invalid configuration, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, circuits, experiment, noise
from .channels import ChannelError
from .recovery import ALL_SCHEMES, CORRECTED_SCHEMES, RecoveryError, SchemeKind, parse_scheme

CSV_HEADER = ("gamma", "scheme", "fidelity", "stderr", "shots", "noise_preset")
EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2
DEFAULT_SCHEMES = "standard_a,standard_b,optimal,none"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    gammas: tuple[float, ...]
    schemes: tuple[SchemeKind, ...]
    noise: noise.NoiseModel | None
    shots: int
    seed: int | None
    out: str | None
    fmt: str
    ideal_weights: bool


def parse_grid(spec: str) -> tuple[float, ...]:
    """``start:stop:points`` with inclusive endpoints, or a single value."""
    parts = spec.split(":")
    try:
        if len(parts) == 1:
            grid = (float(parts[0]),)
        elif len(parts) == 3:
            start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise ConfigError("grid needs at least one point")
            if n == 1 and start != stop:
                raise ConfigError("a one-point grid needs start == stop")
            grid = tuple(float(x) for x in np.linspace(start, stop, n))
        else:
            raise ConfigError(f"grid must be 'start:stop:points', got {spec!r}")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad grid {spec!r}: {exc}") from None
    for g in grid:
        if not 0.0 <= g <= 1.0 or math.isnan(g):
            raise ConfigError(f"grid value {g} outside [0, 1]")
    return grid


def parse_schemes(spec: str) -> tuple[SchemeKind, ...]:
    if spec.strip().lower() == "all":
        return ALL_SCHEMES
    try:
        kinds = tuple(parse_scheme(s) for s in spec.split(",") if s.strip())
    except RecoveryError as exc:
        raise ConfigError(str(exc)) from None
    if not kinds:
        raise ConfigError("no schemes given")
    return kinds


def load_noise(spec: str | None) -> noise.NoiseModel | None:
    if spec is None or spec.lower() == "none":
        return None
    try:
        return noise.load_noise_model(spec)
    except noise.NoiseError as exc:
        if "cannot read" in str(exc):
            raise OSError(str(exc)) from None
        raise ConfigError(str(exc)) from None


def build_config(args: argparse.Namespace) -> RunConfig:
    if getattr(args, "shots", 0) < 0:
        raise ConfigError("--shots must be nonnegative")
    if args.format not in ("csv", "json"):
        raise ConfigError("--format must be csv or json")
    return RunConfig(
        subcommand=args.command,
        gammas=parse_grid(args.gammas),
        schemes=parse_schemes(args.schemes),
        noise=load_noise(args.noise),
        shots=args.shots,
        seed=args.seed,
        out=args.out,
        fmt=args.format,
        ideal_weights=args.ideal_weights,
    )


def format_records(records: Sequence[experiment.SweepRecord], fmt: str) -> str:
    rows = [r.as_row() for r in records]
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([repr(r["gamma"]), r["scheme"], repr(r["fidelity"]), repr(r["stderr"]), r["shots"], r["noise_preset"]])
    return buf.getvalue()


def read_records(text: str) -> list[experiment.SweepRecord]:
    """Parse CSV or JSON sweep tables back into records."""
    text = text.strip()
    if text.startswith("["):
        rows = json.loads(text)
    else:
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ConfigError(f"unexpected CSV header {reader.fieldnames}")
        rows = list(reader)
    return [
        experiment.SweepRecord(
            float(r["gamma"]),
            parse_scheme(r["scheme"]),
            float(r["fidelity"]),
            float(r.get("stderr", 0.0) or 0.0),
            int(r.get("shots", 0) or 0),
            str(r.get("noise_preset", "none")),
        )
        for r in rows
    ]


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    Path(out).write_text(text)


def cmd_sweep(cfg: RunConfig) -> int:
    records = experiment.sweep(cfg.gammas, cfg.schemes, cfg.noise, cfg.shots, cfg.seed, cfg.ideal_weights)
    _emit(format_records(records, cfg.fmt), cfg.out)
    return EXIT_OK


def cmd_shots(cfg: RunConfig) -> int:
    if cfg.shots < 1:
        raise ConfigError("shots needs --shots >= 1")
    return cmd_sweep(cfg)


def _crossover_report(records: Sequence[experiment.SweepRecord]) -> dict[str, float | None]:
    by_scheme: dict[SchemeKind, list[experiment.SweepRecord]] = {}
    for r in records:
        by_scheme.setdefault(r.scheme, []).append(r)
    base = by_scheme.get(SchemeKind.NO_CORRECTION)
    if base is None:
        raise ConfigError("crossover needs the uncorrected scheme 'none' in the table")
    report = {}
    for kind, recs in by_scheme.items():
        if kind is SchemeKind.NO_CORRECTION:
            continue
        try:
            report[kind.value] = experiment.crossover(recs, base)
        except experiment.ExperimentError as exc:
            raise ConfigError(str(exc)) from None
    return report


def cmd_crossover(cfg: RunConfig, table: str | None = None) -> int:
    if table is not None:
        try:
            text = Path(table).read_text()
        except OSError as exc:
            raise OSError(f"cannot read {table}: {exc}") from None
        try:
            records = read_records(text)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"bad table {table}: {exc}") from None
    else:
        if len(cfg.gammas) < 2:
            raise ConfigError("crossover needs at least two grid points")
        schemes = tuple(dict.fromkeys(cfg.schemes + (SchemeKind.NO_CORRECTION,)))
        records = experiment.sweep(cfg.gammas, schemes, cfg.noise, cfg.shots, cfg.seed, cfg.ideal_weights)
    report = _crossover_report(records)
    if cfg.fmt == "json":
        text = json.dumps({k: v for k, v in report.items()}, indent=2) + "\n"
    else:
        text = "".join(f"{k}: {'none' if v is None else f'{v:.6f}'}\n" for k, v in report.items())
    _emit(text, cfg.out)
    return EXIT_OK


def cmd_angles(gamma: float, out: str | None = None) -> int:
    try:
        a0 = circuits.waveplate_angle(gamma, "A0")
        a1 = circuits.waveplate_angle(gamma, "A1")
        th = circuits.cry_angle(gamma)
    except ChannelError as exc:
        raise ConfigError(str(exc)) from None
    text = (
        f"gamma            {gamma:.6f}\n"
        f"HWP angle (A0)   {a0:.6f} deg\n"
        f"HWP angle (A1)   {a1:.6f} deg\n"
        f"CRy theta        {th:.6f} rad  ({math.degrees(th):.6f} deg)\n"
    )
    _emit(text, out)
    return EXIT_OK


def cmd_verify(out: str | None = None) -> int:
    from . import verify

    results = verify.run_checks()
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}" for r in results]
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    _emit("\n".join(lines) + "\n", out)
    return EXIT_OK if failed == 0 else EXIT_CONFIG


def _add_run_args(p: argparse.ArgumentParser, default_shots: int = 0) -> None:
    p.add_argument("--gammas", default="0:1:21", help="grid start:stop:points (inclusive)")
    p.add_argument("--schemes", default=DEFAULT_SCHEMES, help="comma-separated schemes or 'all'")
    p.add_argument("--noise", default=None, help="noise JSON path or preset name (ibmq, optical, nmr)")
    p.add_argument("--shots", type=int, default=default_shots, help="shots per state and basis; 0 = exact")
    p.add_argument("--seed", type=int, default=None, help="master seed (falls back to $DAMPCODE_SEED)")
    p.add_argument("--ideal-weights", action="store_true", help="weight branches by exact probabilities")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", default="csv", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dampcode", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_args(sub.add_parser("sweep", help="fidelity versus gamma per scheme"))
    _add_run_args(sub.add_parser("shots", help="shot-sampled sweep with tomography"), default_shots=10_000)
    p = sub.add_parser("crossover", help="gamma_c of each corrected scheme against no correction")
    _add_run_args(p)
    p.add_argument("--table", default=None, help="read curves from a CSV/JSON sweep table instead")
    p.set_defaults(schemes=",".join(k.value for k in CORRECTED_SCHEMES if k is not SchemeKind.GENERIC_POLAR))
    p = sub.add_parser("angles", help="wave-plate and controlled-Ry angles for one gamma")
    p.add_argument("gamma", type=float)
    p.add_argument("--out", default=None)
    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--out", default=None)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        if args.command == "angles":
            return cmd_angles(args.gamma, args.out)
        if args.command == "verify":
            return cmd_verify(args.out)
        cfg = build_config(args)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "shots":
            return cmd_shots(cfg)
        return cmd_crossover(cfg, args.table)
    except (ConfigError, ValueError) as exc:
        print(f"dampcode: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"dampcode: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
