"""Command-line front end.

Exit codes: 0 success, 2 a required assumption fails (``check``),
64 usage error, 65 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .analysis import theorem_constants
from .harness import (
    ConfigError,
    apply_overrides,
    assumption_report,
    config_from_dict,
    config_to_dict,
    load_config_dict,
    run_experiment,
    write_outputs,
)
from .presets import PRESETS, hypotheses, preset

EX_OK = 0
EX_ASSUMPTION = 2
EX_USAGE = 64
EX_CONFIG = 65


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_source(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--config", metavar="PATH", help="JSON experiment config")
    g.add_argument("--preset", metavar="NAME", choices=PRESETS, help="built-in preset")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted-key override, e.g. env.d.c=0.3 (repeatable)")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="signed-consensus", description=__doc__.splitlines()[0])
    parser.add_argument("--quiet", action="store_true", help="only print errors")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment and write summary JSON + trajectory CSVs")
    _add_source(run)
    run.add_argument("--out", default="out", metavar="DIR")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--csv-trials", type=int, metavar="N",
                     help="write trajectory CSVs for the first N trials only")
    run.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    pre = sub.add_parser("preset", help="write a preset's config file for editing")
    pre.add_argument("name", choices=PRESETS)
    pre.add_argument("--out", default=".", metavar="DIR")
    pre.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    chk = sub.add_parser("check", help="print the assumption report")
    _add_source(chk)
    chk.add_argument("--require", metavar="A1,A3,...",
                     help="assumptions that must hold (default: those the config cites)")
    chk.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    con = sub.add_parser("constants", help="print theorem constants for the config")
    _add_source(con)
    con.add_argument("--blocks", type=int, default=10, metavar="M")
    con.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    return parser


def resolve_config(args):
    if args.config:
        path = Path(args.config)
        data = load_config_dict(path)
        base = path.parent
    else:
        data = config_to_dict(preset(args.preset))
        base = None
    data = apply_overrides(data, args.overrides)
    if args.trials is not None:
        data["trials"] = args.trials
    if args.seed is not None:
        data["seed"] = args.seed
    return config_from_dict(data, base)


def _say(args, *parts):
    if not args.quiet:
        print(*parts)


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    summary = run_experiment(cfg, workers=args.workers)
    files = write_outputs(summary, cfg, args.out, args.csv_trials)
    freq = ", ".join(f"{k}={v:.3f}" for k, v in summary.frequencies.items() if v)
    _say(args, f"{cfg.name}: {cfg.trials} trials, seed {cfg.seed}: {freq}")
    if summary.contrast:
        alt = ", ".join(f"{k}={v:.3f}" for k, v in summary.contrast["frequencies"].items() if v)
        _say(args, f"  {summary.contrast['model']} model: {alt}")
    _say(args, f"wrote {len(files)} files to {args.out}")
    return EX_OK


def cmd_preset(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{args.name}.json"
    path.write_text(json.dumps(config_to_dict(preset(args.name)), indent=2) + "\n")
    _say(args, f"wrote {path}")
    return EX_OK


def cmd_check(args) -> int:
    cfg = resolve_config(args)
    rep = assumption_report(cfg)
    required = args.require.split(",") if args.require else list(cfg.assumptions)
    unknown = [a for a in required if a not in {f"A{k}" for k in range(1, 10)}]
    if unknown:
        raise UsageError(f"unknown assumptions: {', '.join(unknown)}")
    _say(args, f"config {cfg.name}: n={cfg.n}, K={rep['K']}, windows checked={rep['windows']}")
    for k in range(1, 10):
        mark = "*" if f"A{k}" in required else " "
        _say(args, f" {mark}A{k}: {str(rep[f'A{k}']).lower()}")
    _say(args, f"p_lower={rep['p_lower']} p_upper={rep['p_upper']}")
    if rep["conflict"]:
        _say(args, f"sign conflict on arc {tuple(rep['conflict'])}")
    else:
        _say(args, f"positive-cluster partition Tp={rep['Tp']}: {rep['partition']}")
    hyp = hypotheses(cfg)
    for key, ok in hyp.items():
        _say(args, f"  {key}: {str(ok).lower()}")
    return EX_OK if all(rep[a] for a in required) else EX_ASSUMPTION


def cmd_constants(args) -> int:
    cfg = resolve_config(args)
    tc = theorem_constants(cfg.n, cfg.K, cfg.params.alpha, cfg.params.beta,
                           cfg.schedule.p_lower, cfg.b, cfg.d, args.blocks)
    _say(args, f"K0={tc.K0} rho_star={tc.rho_star:.6g} lambda_star={tc.lambda_star:.6g} p_star={tc.p_star}")
    _say(args, f"{'m':>4} {'X_m':>14} {'Y_m':>14} {'X_m-Y_m':>14} {'J(m)':>14} {'W(m)':>14}")
    for m in range(args.blocks):
        _say(args, f"{m:>4} {tc.X[m]:>14.6e} {tc.Y[m]:>14.6e} {tc.X[m] - tc.Y[m]:>14.6e} "
                   f"{tc.J[m]:>14.6e} {tc.W[m]:>14.6e}")
    for key, val in tc.hypotheses().items():
        _say(args, f"{key}: {val}")
    return EX_OK


COMMANDS = {"run": cmd_run, "preset": cmd_preset, "check": cmd_check, "constants": cmd_constants}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                            format="%(levelname)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EX_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EX_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EX_CONFIG


if __name__ == "__main__":
    sys.exit(main())
