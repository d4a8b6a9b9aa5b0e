"""Command-line entry points for running sweeps.

Each subcommand selects one engine; values come from an optional TOML
config file with flags overriding file values. Grid flags accept comma
lists ("0.6,0.7,0.8") or ranges ("0.6:0.8:0.05").
"""

from __future__ import annotations

import argparse
import sys

from .harness import (
    ConfigError,
    build_config,
    load_config,
    parse_values,
    resume_or_extend,
    run_experiment,
)

_SUBCOMMANDS = {
    "analytics": "analytics",
    "classical-sweep": "classical",
    "classical-lyapunov": "classical-lyapunov",
    "classical-density": "classical-density",
    "quantum-sweep": "quantum",
    "quantum-ancilla": "quantum-ancilla",
    "twa-sweep": "twa",
}

_GRID_FLAGS = ("k", "a", "theta", "p", "S")

_RUN_FLAGS: dict[str, type] = {
    "steps": int,
    "burn_in": int,
    "n_traj": int,
    "d0": float,
    "tau": int,
    "n_resets": int,
    "avg_window": int,
    "n_theta": int,
    "n_phi": int,
    "encoding": str,
    "control_variant": str,
    "region": str,
    "outside_mode": str,
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="TOML experiment file")
    sub.add_argument("--seed", type=int, help="master seed")
    sub.add_argument("--out", help="output directory (table.csv, meta.json)")
    sub.add_argument("--workers", type=int, help="worker processes (env KICKEDTOP_WORKERS)")
    sub.add_argument("--block-size", type=int, dest="block_size")
    for flag in _GRID_FLAGS:
        sub.add_argument(f"--{flag}", help=f"grid values for {flag}")
    for flag, typ in _RUN_FLAGS.items():
        sub.add_argument(f"--{flag.replace('_', '-')}", type=typ, dest=flag)
    sub.add_argument("--t-eval", dest="t_eval", help="comma list of record times")
    sub.add_argument("--observables", help="comma list, e.g. F,R2,s_perp2,S_bip")
    sub.add_argument("--no-mu", action="store_true", help="skip the Lyapunov column (classical)")


def _collect_overrides(args: argparse.Namespace, engine: str | None) -> dict:
    over: dict = {"engine": engine} if engine else {}
    for name in ("seed", "out", "workers", "block_size", *_RUN_FLAGS):
        val = getattr(args, name, None)
        if val is not None:
            over[name] = val
    for flag in _GRID_FLAGS:
        val = getattr(args, flag, None)
        if val is not None:
            over[flag] = parse_values(val)
    if getattr(args, "t_eval", None):
        over["t_eval"] = [int(x) for x in args.t_eval.split(",")]
    if getattr(args, "observables", None):
        over["observables"] = args.observables.split(",")
    if getattr(args, "no_mu", False):
        over["with_mu"] = False
    return over


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="kickedtop",
        description="Stochastic control of the kicked top: sweeps and closed forms.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        _add_common(subs.add_parser(name, help=f"run the {_SUBCOMMANDS[name]} engine"))
    resume = subs.add_parser("resume", help="extend a previous sweep to a larger grid")
    _add_common(resume)
    resume.add_argument("--prior", required=True, help="directory of the run to extend")

    args = parser.parse_args(argv)
    try:
        raw = load_config(args.config) if args.config else {}
        if args.command == "resume":
            cfg = build_config(raw, _collect_overrides(args, None))
            table = resume_or_extend(cfg, args.prior)
        else:
            cfg = build_config(raw, _collect_overrides(args, _SUBCOMMANDS[args.command]))
            table = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if table.meta.get("partial"):
        print("interrupted; partial results flushed with partial flag", file=sys.stderr)
        return 130
    if not cfg.out:
        sys.stdout.write(table.csv_text())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
