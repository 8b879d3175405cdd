"""Command-line entry point.

    aka run    --variant <mode> --scenario <id> --seed <n> [--window W]
               [--subscribers N] [--gap G ...] [--out DIR] [--config FILE]
    aka matrix [--variants a,b,...] [--seed N] [--window W] [--subscribers N]
               [--out DIR]
    aka attack --kind <attack> --variant <mode> --seed <n> [--gap G]

Exit codes: 0 success, 2 configuration error, 3 outcome-matrix mismatch.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .adversary import attack_auts_differential, attack_failure_message, attack_suci_replay, infer_sqn
from .runner import (
    ConfigError,
    ScenarioConfig,
    emit_outcome_matrix,
    run_matrix,
    run_scenario,
    write_transcript,
)
from .variants import VariantMode
from .world import World

ATTACK_KINDS = ("failure-message", "suci-replay", "auts-differential")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aka", description="5G AKA privacy laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and print its outcome")
    run.add_argument("--variant", help="protocol variant mode")
    run.add_argument("--scenario", help="scenario identifier")
    run.add_argument("--seed", type=int, help="rng seed (default 0)")
    run.add_argument("--window", type=int, help="acceptance window W (default 32)")
    run.add_argument("--subscribers", type=int, help="subscriber pool size (default 4)")
    run.add_argument("--gap", type=int, action="append", dest="gaps", help="gap count (repeatable)")
    run.add_argument("--out", help="directory for transcript and outcome files")
    run.add_argument("--config", help="TOML config file with kebab-case keys")

    matrix = sub.add_parser("matrix", help="run the replay-outcome grid")
    matrix.add_argument("--variants", default="baseline,nonce-in-suci", help="comma-separated modes")
    matrix.add_argument("--seed", type=int, default=0)
    matrix.add_argument("--window", type=int, default=32)
    matrix.add_argument("--subscribers", type=int, default=4)
    matrix.add_argument("--out", help="directory for matrix.txt / matrix.csv")

    attack = sub.add_parser("attack", help="run one attack and print its verdict")
    attack.add_argument("--kind", required=True, choices=ATTACK_KINDS)
    attack.add_argument("--variant", required=True)
    attack.add_argument("--seed", type=int, default=0)
    attack.add_argument("--window", type=int, default=32)
    attack.add_argument("--subscribers", type=int, default=8)
    attack.add_argument("--gap", type=int, default=1, help="honest sessions between replays")

    return parser


def _load_config(path: str) -> dict:
    try:
        with Path(path).open("rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config file: {exc}") from exc


def _scenario_config(args: argparse.Namespace) -> ScenarioConfig:
    data: dict = {}
    if args.config:
        data.update(_load_config(args.config))
    for key, value in (
        ("variant", args.variant),
        ("scenario", args.scenario),
        ("seed", args.seed),
        ("window", args.window),
        ("subscribers", args.subscribers),
        ("gaps", args.gaps),
    ):
        if value is not None:
            data[key] = value
    if "variant" not in data:
        raise ConfigError("a variant is required (flag --variant or config key 'variant')")
    if "scenario" not in data:
        raise ConfigError("a scenario is required (flag --scenario or config key 'scenario')")
    return ScenarioConfig.from_mapping(data)


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _scenario_config(args)
    started = time.perf_counter()
    events, row = run_scenario(cfg)
    elapsed = time.perf_counter() - started
    print(f"scenario={row.scenario} variant={row.variant} outcome={row.outcome.value}"
          + (f" verdict={row.verdict}" if row.verdict else ""))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_transcript(events, out / "transcript.jsonl")
        with (out / "outcome.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario", "variant", "outcome", "verdict"])
            writer.writerow([row.scenario, row.variant, row.outcome.value, row.verdict or ""])
        print(f"wrote {out / 'transcript.jsonl'}")
    print(f"[{elapsed:.3f}s, {len(events)} events]")
    return 0


def _cmd_matrix(args: argparse.Namespace) -> int:
    try:
        modes = [VariantMode.from_string(name) for name in args.variants.split(",") if name]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    started = time.perf_counter()
    rows = run_matrix(modes, seed=args.seed, window=args.window, subscribers=args.subscribers)
    report = emit_outcome_matrix(rows, args.out)
    print(report.text)
    print(f"[{time.perf_counter() - started:.3f}s]")
    if report.mismatches:
        for mismatch in report.mismatches:
            print(f"matrix mismatch: {mismatch}", file=sys.stderr)
        return 3
    return 0


def _cmd_attack(args: argparse.Namespace) -> int:
    try:
        variant = VariantMode.from_string(args.variant)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.subscribers < 2:
        raise ConfigError("attacks need at least 2 subscribers")

    def fresh_world() -> World:
        return World(variant=variant, subscribers=args.subscribers,
                     window=args.window, seed=args.seed)

    if args.kind == "auts-differential":
        world = fresh_world()
        differential = attack_auts_differential(world, 0, args.gap)
        survivors = infer_sqn([(differential, args.gap)], bound=1 << 16)
        print(f"differential={differential.hex()} gap={args.gap}")
        print(f"counter candidates below 2^16: {len(survivors)}")
        return 0

    attack = attack_failure_message if args.kind == "failure-message" else attack_suci_replay
    for name, probe in (("same subscriber", 0), ("different subscriber", 1)):
        verdict = attack(fresh_world(), 0, probe)
        print(f"probe={name}: verdict={verdict.verdict.value}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "matrix":
            return _cmd_matrix(args)
        return _cmd_attack(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
