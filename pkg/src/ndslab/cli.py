"""``ndslab`` command line.

Every command writes one CSV to ``--out`` (or stdout). Failures print a
single ``error: <kind>: <message>`` line to stderr and exit non-zero:
2 for usage problems, 1 for runtime or I/O failures.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from . import analysis, control, core, experiments
from . import io as nio

log = logging.getLogger("ndslab")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


DEFAULT_GRID = {
    "a,v": [0.0001, 0.0005, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5],
    "b,c": [round(x, 4) for x in np.arange(0.005, 0.1001, 0.005)],
    "d": [round(x, 3) for x in np.arange(0.5, 2.001, 0.05)],
    "k": [round(x, 4) for x in np.arange(-0.1, -0.0099, 0.001)],
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--setup", type=int, help="parameter setup id (1-15)")
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--steps", type=int)
    common.add_argument("--onset", type=int)
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument(
        "--param", action="append", default=[], metavar="NAME=VALUE",
        help="override one NDS parameter; repeatable",
    )
    parser = _Parser(prog="ndslab", description="NDS neuron lab: simulations and analyses written as CSV.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in nio.COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "stabilize":
            sp.add_argument("--feedback", help="w:tau[,w:tau...]")
        if name == "rossler":
            sp.add_argument("--mode", choices=nio.ROSSLER_MODES)
            sp.add_argument("--ts", type=float)
        if name == "capacity":
            sp.add_argument("--runs", type=int)
            sp.add_argument("--workers", type=int, default=1)
        if name == "lyapunov":
            sp.add_argument("--renorm-interval", type=int, default=10)
            sp.add_argument("--separation", type=float, default=1e-4)
    return parser


def config_from_args(args: argparse.Namespace) -> nio.RunConfig:
    base = nio.RunConfig(command=args.command)
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            base = nio.parse_config(fh.read(), base)
        base = replace(base, command=args.command)
    lines = []
    for flag in ("setup", "seed", "steps", "onset", "runs", "mode", "ts"):
        value = getattr(args, flag, None)
        if value is not None:
            lines.append(f"{flag} = {value}")
    if getattr(args, "feedback", None):
        lines.append(f"pairs = {args.feedback}")
    for item in args.param:
        if "=" not in item:
            raise UsageError(f"--param expects NAME=VALUE, got {item!r}")
        lines.append(item)
    try:
        cfg = nio.parse_config("\n".join(lines), base)
    except nio.ConfigError as exc:
        # line numbers refer to the synthesised flag text; drop them
        raise UsageError(str(exc).split(": ", 1)[-1]) from None
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    return cfg


def _setups(cfg: nio.RunConfig) -> list[tuple[int, core.NDSParams]]:
    if cfg.setup is None and not cfg.overrides:
        return [(s.id, s.params) for s in experiments.SETUPS.values()]
    return [(cfg.setup_id, cfg.params())]


def _simulate(cfg):
    fb = control.FeedbackConfig(cfg.feedback) if cfg.feedback else None
    traj = core.simulate(core.DEFAULT_INITIAL, cfg.params(), cfg.steps,
                         feedback=fb, feedback_onset=cfg.onset)
    return nio.TRAJECTORY_COLUMNS, list(nio.trajectory_rows(traj))


def _fixed_points(cfg):
    rows = []
    for sid, p in _setups(cfg):
        fp1, fp2 = analysis.solve_fixed_points(p)
        rows.append(
            (sid, *fp1, *fp2, fp1.u > p.theta, fp2.u > p.theta)
            + tuple(nio.fixed(c, 5) for c in (*fp1, *fp2))
        )
    return nio.FIXED_POINT_COLUMNS, rows


def _eigen(cfg):
    rows = []
    for sid, p in _setups(cfg):
        reports = analysis.analyze_fixed_points(p)
        parts = [c for r in reports for z in r.eigenvalues for c in (z.real, z.imag)]
        labels = [str(lab) for r in reports for lab in (r.class_strict, r.class_paper)]
        rows.append((sid, *parts, *labels, *(nio.fixed(c, 4) for c in parts)))
    return nio.EIGEN_COLUMNS, rows


def _sweep(cfg):
    ranges = experiments.range_sweep(DEFAULT_GRID, seed=None, base=cfg.params())
    rows = []
    for r in ranges:
        ref = experiments.reference_range(r.parameter.split(",")[0])
        rows.append((r.parameter, r.low, r.high, ref.low if ref else None, ref.high if ref else None))
    return nio.VALIDITY_COLUMNS, rows


def _capacity(cfg, workers=1):
    rows = []
    for sid, p in _setups(cfg):
        res = experiments.capacity_experiment(
            experiments.ParamSetup(sid, p), cfg.runs, cfg.seed,
            onset=cfg.onset, total=cfg.steps, workers=workers,
        )
        periods = ";".join(str(x) for x in sorted(res.distinct_periods))
        rows.append((sid, res.runs, res.seed, res.locked_runs, res.mean_stabilized,
                     res.n_distinct, periods))
    return nio.CAPACITY_COLUMNS, rows


def _rossler(cfg):
    if cfg.mode == "modified":
        traj = core.simulate_modified_rossler(b=cfg.ts, c=cfg.ts, d=cfg.ts, steps=cfg.steps)
    else:
        substeps = 100 if cfg.mode == "continuous" else 1
        traj = core.simulate_rossler(ts=cfg.ts, steps=cfg.steps, substeps=substeps)
    return nio.ROSSLER_COLUMNS, list(nio.rossler_rows(traj))


def _lyapunov(cfg, renorm_interval=10, separation=1e-4):
    value = analysis.estimate_lyapunov(
        cfg.params(), steps=cfg.steps, renorm_interval=renorm_interval,
        separation=separation, seed=cfg.seed,
    )
    return nio.LYAPUNOV_COLUMNS, [(cfg.setup_id, cfg.steps, renorm_interval, separation,
                                   cfg.seed, value)]


def _stabilize(cfg):
    if not cfg.feedback:
        raise UsageError("stabilize needs --feedback w:tau[,w:tau...]")
    fb = control.FeedbackConfig(cfg.feedback)
    res = control.stabilize_run(cfg.params(), fb, onset=cfg.onset, total=cfg.steps)
    return nio.STABILIZE_COLUMNS, [(cfg.setup_id, control.format_feedback(fb), cfg.onset,
                                    cfg.steps, res.locked, res.period, res.lock_time)]


def run_command(cfg: nio.RunConfig, **extra) -> tuple[Sequence[str], list]:
    """Dispatch ``cfg.command`` and return ``(columns, rows)``."""
    handlers = {
        "simulate": _simulate,
        "fixed-points": _fixed_points,
        "eigen": _eigen,
        "sweep": _sweep,
        "capacity": _capacity,
        "rossler": _rossler,
        "lyapunov": _lyapunov,
        "stabilize": _stabilize,
    }
    if cfg.command not in handlers:
        raise UsageError(f"unknown command {cfg.command!r}")
    return handlers[cfg.command](cfg, **extra)


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        yield fh


def _fail(kind: str, message: str, code: int) -> int:
    print(f"error: {kind}: {message}", file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        cfg = config_from_args(args)
        for w in cfg.warnings:
            print(f"warning: {w}", file=sys.stderr)
        extra = {}
        if cfg.command == "capacity":
            extra["workers"] = args.workers
        elif cfg.command == "lyapunov":
            extra = {"renorm_interval": args.renorm_interval, "separation": args.separation}
        columns, rows = run_command(cfg, **extra)
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    except nio.ConfigError as exc:
        return _fail("config", str(exc), 2)
    except OSError as exc:
        return _fail("io", str(exc), 1)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        return _fail("runtime", str(exc), 1)
    try:
        with _output(cfg.out) as fh:
            nio.write_csv(fh, columns, rows)
    except OSError as exc:
        return _fail("io", str(exc), 1)
    log.info("%s: wrote %d rows to %s", cfg.command, len(rows), cfg.out or "stdout")
    return 0


if __name__ == "__main__":
    sys.exit(main())
