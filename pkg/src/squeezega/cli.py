"""Command-line entry point: ``squeezega {train,sweep,phase-space,validate-config}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import SWEEP_KINDS, ConfigError, dump_config, load_config
from .errors import EvaluationError, NumericalError
from .experiments import run_phase_space, run_sweep, run_train

WORKERS_ENV = "SQUEEZEGA_WORKERS"

log = logging.getLogger("squeezega")


def _default_workers() -> int | None:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV}={raw!r} is not an integer") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment file")
    common.add_argument("--seed", type=int, help="GA seed (overrides the file)")
    common.add_argument("--out", help="output directory (overrides the file)")
    common.add_argument("--workers", type=int,
                        help=f"worker processes (default: ${WORKERS_ENV} or the file)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="squeezega", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="run one GA training")
    sw = sub.add_parser("sweep", parents=[common], help="GA repetitions over a parameter sweep")
    sw.add_argument("--kind", choices=[k.removeprefix("sweep-") for k in SWEEP_KINDS],
                    help="sweep type (overrides the file)")
    sub.add_parser("phase-space", parents=[common], help="Husimi/Wigner fields along a sequence")
    sub.add_parser("validate-config", parents=[common],
                   help="check a config and print it with defaults expanded")
    return p


def _overrides(args) -> dict:
    out = {}
    if args.command == "sweep" and args.kind:
        out["kind"] = f"sweep-{args.kind}"
    elif args.command in ("train", "phase-space"):
        out["kind"] = args.command
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        out["ga.seed"] = args.seed
    if args.out is not None:
        out["output_dir"] = args.out
    workers = args.workers if args.workers is not None else _default_workers()
    if workers is not None:
        out["workers"] = workers
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config, _overrides(args))
        if args.command == "sweep" and config.kind not in SWEEP_KINDS:
            raise ConfigError("sweep needs --kind or a sweep kind in the config")
        if args.command == "validate-config":
            sys.stdout.write(dump_config(config))
        elif args.command == "train":
            res = run_train(config)
            print(f"best final xi_z^2 = {res.best.final_xi:.6g}  -> {config.output_dir}")
        elif args.command == "sweep":
            finals = run_sweep(config)
            for label, f in finals.items():
                print(f"{label}: mean final xi_z^2 = {f.mean():.6g}")
        else:
            frames = run_phase_space(config)
            print(f"{len(frames)} frame(s) -> {config.output_dir}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (OSError, NumericalError, EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0
