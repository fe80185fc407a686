"""Run configuration text and CSV emission."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from .control import format_feedback, parse_feedback
from .core import NDSParams, Trajectory
from .experiments import DEFAULT_SETUP, get_setup, reference_range

COMMANDS = (
    "simulate",
    "fixed-points",
    "eigen",
    "sweep",
    "capacity",
    "rossler",
    "lyapunov",
    "stabilize",
)
# commands whose runs switch feedback on at ``onset``
ONSET_COMMANDS = ("simulate", "stabilize", "capacity")
ROSSLER_MODES = ("continuous", "euler", "modified")
PARAM_KEYS = ("a", "v", "b", "c", "d", "k", "theta", "eta0")
RUN_KEYS = ("command", "setup", "steps", "onset", "seed", "runs", "out", "mode", "ts")
FEEDBACK_KEYS = ("pairs",)
SECTIONS = {"params": PARAM_KEYS, "run": RUN_KEYS, "feedback": FEEDBACK_KEYS}


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI invocation needs.

    ``setup`` of None means "not chosen": parameters resolve to setup 7 and
    the table-style commands cover all fifteen setups.
    """

    command: str = "simulate"
    setup: Optional[int] = None
    overrides: tuple[tuple[str, float], ...] = ()
    steps: int = 10000
    onset: int = 1000
    seed: int = 0
    runs: int = 1000
    feedback: tuple[tuple[float, int], ...] = ()
    out: Optional[str] = None
    mode: str = "euler"
    ts: float = 0.0055
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def setup_id(self) -> int:
        return DEFAULT_SETUP if self.setup is None else self.setup

    def params(self) -> NDSParams:
        return get_setup(self.setup_id).params.with_(**dict(self.overrides))

    def to_text(self) -> str:
        lines = ["[run]", f"command = {self.command}"]
        if self.setup is not None:
            lines.append(f"setup = {self.setup}")
        lines += [
            f"steps = {self.steps}",
            f"onset = {self.onset}",
            f"seed = {self.seed}",
            f"runs = {self.runs}",
            f"mode = {self.mode}",
            f"ts = {self.ts!r}",
        ]
        if self.out is not None:
            lines.append(f"out = {self.out}")
        if self.overrides:
            lines.append("[params]")
            lines += [f"{k} = {v!r}" for k, v in self.overrides]
        if self.feedback:
            lines += ["[feedback]", f"pairs = {format_feedback(self.feedback)}"]
        return "\n".join(lines) + "\n"


def _as_int(value: str, key: str, line: int, minimum: int) -> int:
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {value!r}", line) from None
    if n < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {n}", line)
    return n


def _as_float(value: str, key: str, line: int) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {value!r}", line) from None
    if not math.isfinite(x):
        raise ConfigError(f"{key} must be finite, got {value!r}", line)
    return x


def _range_warning(key: str, value: float) -> Optional[str]:
    ref = reference_range(key)
    if ref is not None and not ref.contains(value):
        return f"{key}={value!r} lies outside the reference range [{ref.low}, {ref.high}]"
    return None


def parse_config(text: str, base: RunConfig = RunConfig()) -> RunConfig:
    """Parse ``key = value`` lines with optional ``[section]`` headers.

    Keys outside a section may be any known key; inside a section only that
    section's keys are accepted. ``#`` starts a comment. Unknown keys and
    out-of-range values raise :class:`ConfigError` carrying the line number.
    """
    values: dict = {}
    overrides: dict[str, float] = dict(base.overrides)
    seen_line: dict[str, int] = {}
    section: Optional[str] = None
    all_keys = PARAM_KEYS + RUN_KEYS + FEEDBACK_KEYS
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        allowed = SECTIONS[section] if section else all_keys
        if key not in allowed:
            where = f" in [{section}]" if section else ""
            raise ConfigError(f"unknown key {key!r}{where}", lineno)
        seen_line[key] = lineno
        if key in PARAM_KEYS:
            overrides[key] = _as_float(value, key, lineno)
        elif key == "command":
            if value not in COMMANDS:
                raise ConfigError(f"unknown command {value!r}", lineno)
            values[key] = value
        elif key == "setup":
            n = _as_int(value, key, lineno, 1)
            if n > 15:
                raise ConfigError(f"setup must be 1..15, got {n}", lineno)
            values[key] = n
        elif key in ("steps", "runs"):
            values[key] = _as_int(value, key, lineno, 1)
        elif key in ("onset", "seed"):
            values[key] = _as_int(value, key, lineno, 0)
        elif key == "mode":
            if value not in ROSSLER_MODES:
                raise ConfigError(f"mode must be one of {ROSSLER_MODES}, got {value!r}", lineno)
            values[key] = value
        elif key == "ts":
            ts = _as_float(value, key, lineno)
            if ts <= 0:
                raise ConfigError(f"ts must be > 0, got {ts}", lineno)
            values[key] = ts
        elif key == "out":
            values[key] = value or None
        elif key == "pairs":
            try:
                values["feedback"] = parse_feedback(value).connections
            except ValueError as exc:
                raise ConfigError(str(exc), lineno) from None
    cfg = replace(base, **values, overrides=tuple(sorted(overrides.items())))
    return validate(cfg, seen_line)


def validate(cfg: RunConfig, lines: Optional[dict[str, int]] = None) -> RunConfig:
    """Cross-field checks; attaches range warnings for parameter overrides."""
    lines = lines or {}
    if cfg.command in ONSET_COMMANDS and cfg.onset > cfg.steps:
        raise ConfigError(
            f"onset ({cfg.onset}) must not exceed steps ({cfg.steps})", lines.get("onset")
        )
    try:
        cfg.params()
    except ValueError as exc:
        where = max((lines[k] for k in ("theta", "eta0") if k in lines), default=None)
        raise ConfigError(str(exc), where) from None
    warns = tuple(w for k, v in cfg.overrides if (w := _range_warning(k, v)))
    return replace(cfg, warnings=warns)


# CSV --------------------------------------------------------------------

TRAJECTORY_COLUMNS = ("t", "x", "y", "u", "gamma", "F", "In")
ROSSLER_COLUMNS = ("t", "x", "y", "u")
FIXED_POINT_COLUMNS = (
    "setup",
    "fp1_x", "fp1_y", "fp1_u", "fp2_x", "fp2_y", "fp2_u",
    "fp1_above_threshold", "fp2_above_threshold",
    "fp1_x_5dp", "fp1_y_5dp", "fp1_u_5dp", "fp2_x_5dp", "fp2_y_5dp", "fp2_u_5dp",
)
_EIG_PARTS = [f"l{i}_{part}" for i in (1, 2, 3) for part in ("re", "im")]
EIGEN_COLUMNS = (
    ("setup",)
    + tuple(f"fp{n}_{c}" for n in (1, 2) for c in _EIG_PARTS)
    + tuple(f"fp{n}_{c}" for n in (1, 2) for c in ("class_strict", "class_paper"))
    + tuple(f"fp{n}_{c}_4dp" for n in (1, 2) for c in _EIG_PARTS)
)
VALIDITY_COLUMNS = ("parameter", "low", "high", "reference_low", "reference_high")
CAPACITY_COLUMNS = (
    "setup", "runs", "seed", "locked_runs", "mean_stabilized",
    "n_distinct_periods", "distinct_periods",
)
LYAPUNOV_COLUMNS = ("setup", "steps", "renorm_interval", "separation", "seed", "lyapunov")
STABILIZE_COLUMNS = ("setup", "feedback", "onset", "steps", "locked", "period", "lock_time")

SCHEMAS = {
    "trajectory": TRAJECTORY_COLUMNS,
    "rossler": ROSSLER_COLUMNS,
    "fixed-points": FIXED_POINT_COLUMNS,
    "eigen": EIGEN_COLUMNS,
    "validity": VALIDITY_COLUMNS,
    "capacity": CAPACITY_COLUMNS,
    "lyapunov": LYAPUNOV_COLUMNS,
    "stabilize": STABILIZE_COLUMNS,
}


def fmt(value) -> str:
    """Cell text: 17 significant digits for floats, plain text otherwise."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def fixed(value: float, decimals: int) -> str:
    return f"{value:.{decimals}f}"


def write_csv(stream: TextIO, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells, schema has {len(columns)}")
        writer.writerow([c if isinstance(c, str) else fmt(c) for c in row])


def read_csv(stream: TextIO) -> tuple[list[str], list[list[str]]]:
    reader = csv.reader(stream)
    header = next(reader)
    return header, [row for row in reader]


def trajectory_rows(traj: Trajectory):
    for t in range(len(traj)):
        x, y, u = traj.states[t]
        yield (t, x, y, u, int(traj.spikes[t]), traj.feedback[t], traj.input[t])


def rossler_rows(traj: Trajectory):
    for t in range(len(traj)):
        x, y, u = traj.states[t]
        yield (t, x, y, u)


def write_trajectory(stream: TextIO, traj: Trajectory) -> None:
    write_csv(stream, TRAJECTORY_COLUMNS, trajectory_rows(traj))


def read_trajectory(stream: TextIO) -> Trajectory:
    header, rows = read_csv(stream)
    if tuple(header) != TRAJECTORY_COLUMNS:
        raise ValueError(f"not a trajectory CSV: header {header}")
    data = np.array([[float(c) for c in row] for row in rows]).reshape(-1, 7)
    return Trajectory(
        states=data[:, 1:4].copy(),
        spikes=data[:, 4].astype(np.int8),
        feedback=data[:, 5].copy(),
        input=data[:, 6].copy(),
    )


def to_string(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    write_csv(buf, columns, rows)
    return buf.getvalue()
