"""Parameter studies: reference setups, validity checks, tables, capacity."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .analysis import FixedPointReport, analyze_fixed_points
from .control import (
    DEFAULT_ONSET,
    DEFAULT_TOTAL,
    FeedbackConfig,
    FeedbackSweepSpec,
    stabilize_run,
)
from .core import DEFAULT_INITIAL, NDSParams, StateVec, simulate

VALIDITY_STEPS = 10000
SPIKE_WINDOW = 5000


@dataclass(frozen=True)
class ParamSetup:
    id: int
    params: NDSParams


# (a = v, b = c, d, k) per row
_SETUP_ROWS = {
    1: (0.001, 0.03, 0.8, -0.057),
    2: (0.01, 0.03, 0.8, -0.057),
    3: (0.1, 0.03, 0.8, -0.057),
    4: (0.002, 0.001, 0.8, -0.057),
    5: (0.002, 0.02, 0.8, -0.057),
    6: (0.002, 0.05, 0.8, -0.057),
    7: (0.002, 0.03, 0.8, -0.057),
    8: (0.002, 0.03, 0.85, -0.057),
    9: (0.002, 0.03, 0.9, -0.057),
    10: (0.002, 0.03, 0.8, -0.055),
    11: (0.002, 0.03, 0.8, -0.056),
    12: (0.002, 0.03, 0.8, -0.058),
    13: (0.01, 0.05, 0.85, -0.055),
    14: (0.002, 0.015, 0.8, -0.058),
    15: (0.1, 0.04, 0.8, -0.056),
}

SETUPS: dict[int, ParamSetup] = {
    i: ParamSetup(i, NDSParams(a=av, v=av, b=bc, c=bc, d=d, k=k))
    for i, (av, bc, d, k) in _SETUP_ROWS.items()
}
DEFAULT_SETUP = 7


def get_setup(setup_id: int) -> ParamSetup:
    try:
        return SETUPS[setup_id]
    except KeyError:
        raise ValueError(f"setup id must be 1..15, got {setup_id!r}") from None


@dataclass(frozen=True)
class ValidityRange:
    parameter: str
    low: float
    high: float

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high


REFERENCE_RANGES = (
    ValidityRange("a", 0.001, 0.1),
    ValidityRange("v", 0.001, 0.1),
    ValidityRange("b", 0.01, 0.055),
    ValidityRange("c", 0.01, 0.055),
    ValidityRange("d", 0.8, 0.9),
    ValidityRange("k", -0.058, -0.055),
)


def reference_range(name: str) -> Optional[ValidityRange]:
    for r in REFERENCE_RANGES:
        if r.parameter == name:
            return r
    return None


def _seeded_initial(seed: Optional[int]) -> StateVec:
    if seed is None:
        return DEFAULT_INITIAL
    rng = np.random.default_rng(seed)
    return StateVec(*(float(c) for c in rng.uniform(0.0, 0.01, 3)))


def run_validity_check(p: NDSParams, seed: Optional[int] = None) -> bool:
    """True when a free run stays bounded and keeps spiking.

    The run lasts 10000 steps with no feedback. Spiking must persist: every
    5000-step window after step 1000 holds at least one spike. With a seed
    the initial state is drawn uniformly from ``[0, 0.01]^3``; without one
    the default initial state is used.
    """
    traj = simulate(_seeded_initial(seed), p, VALIDITY_STEPS)
    if traj.diverged:
        return False
    csum = np.concatenate(([0], np.cumsum(traj.spikes[DEFAULT_ONSET + 1:])))
    if len(csum) <= SPIKE_WINDOW:
        return bool(csum[-1] > 0)
    per_window = csum[SPIKE_WINDOW:] - csum[:-SPIKE_WINDOW]
    return bool(per_window.min() > 0)


@dataclass(frozen=True)
class TableRecord:
    setup_id: int
    first: FixedPointReport
    second: FixedPointReport


def generate_tables(setups: Optional[Sequence[ParamSetup]] = None) -> list[TableRecord]:
    if setups is None:
        setups = [SETUPS[i] for i in sorted(SETUPS)]
    return [TableRecord(s.id, *analyze_fixed_points(s.params)) for s in setups]


@dataclass(frozen=True)
class CapacityResult:
    setup_id: int
    runs: int
    distinct_periods: frozenset
    mean_stabilized: float
    seed: int
    locked_runs: int

    @property
    def n_distinct(self) -> int:
        return len(self.distinct_periods)


def attractor_box(p: NDSParams, steps: int = DEFAULT_TOTAL) -> tuple[np.ndarray, np.ndarray]:
    """Bounding box of a free run after the first 1000 steps."""
    traj = simulate(DEFAULT_INITIAL, p, steps)
    window = traj.states[min(DEFAULT_ONSET, len(traj) - 1):]
    return window.min(axis=0), window.max(axis=0)


def run_stream(seed: int, run_id: int) -> np.random.Generator:
    """Independent generator for one run, split from ``seed`` by run index."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(run_id,)))


def draw_run(
    rng: np.random.Generator,
    box: tuple[np.ndarray, np.ndarray],
    sweep: FeedbackSweepSpec,
) -> tuple[StateVec, float, int]:
    lo, hi = box
    initial = StateVec(*(float(c) for c in rng.uniform(lo, hi)))
    weights = sweep.weights()
    delays = sweep.delays()
    w = float(weights[rng.integers(len(weights))])
    tau = int(delays[rng.integers(len(delays))])
    return initial, w, tau


def capacity_experiment(
    setup: ParamSetup,
    runs: int = 1000,
    seed: int = 0,
    sweep: FeedbackSweepSpec = FeedbackSweepSpec(),
    onset: int = DEFAULT_ONSET,
    total: int = DEFAULT_TOTAL,
    workers: int = 1,
) -> CapacityResult:
    """Count stabilised orbits over randomised runs.

    Each run draws its initial state uniformly from the setup's attractor
    box and one ``(w, tau)`` from the sweep grid, then calls
    ``stabilize_run``. ``mean_stabilized`` is the fraction of runs that
    locked; ``distinct_periods`` collects the locked periods.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    box = attractor_box(setup.params, total)

    def one(run_id: int) -> Optional[int]:
        initial, w, tau = draw_run(run_stream(seed, run_id), box, sweep)
        res = stabilize_run(
            setup.params, FeedbackConfig.single(w, tau), initial, onset, total
        )
        return res.period if res.locked else None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, range(runs)))
    else:
        outcomes = [one(i) for i in range(runs)]
    periods = frozenset(p for p in outcomes if p is not None)
    locked = sum(p is not None for p in outcomes)
    return CapacityResult(setup.id, runs, periods, locked / runs, seed, locked)


_COUPLED = {"a,v": ("a", "v"), "b,c": ("b", "c")}


def _param_names(key: str) -> tuple[str, ...]:
    names = _COUPLED.get(key.replace(" ", ""), (key,))
    for n in names:
        if n not in NDSParams.__dataclass_fields__:
            raise ValueError(f"unknown parameter {n!r}")
    return names


def _contiguous_runs(values: Sequence[float], ok: Sequence[bool]) -> list[tuple[float, float]]:
    runs = []
    start = None
    for i, good in enumerate(ok):
        if good and start is None:
            start = i
        if not good and start is not None:
            runs.append((values[start], values[i - 1]))
            start = None
    if start is not None:
        runs.append((values[start], values[-1]))
    return runs


def sweep_parameter(
    key: str, values: Sequence[float], base: NDSParams = NDSParams(), seed: Optional[int] = None
) -> list[tuple[float, bool]]:
    """Validity of ``base`` with one parameter (or a coupled pair) replaced."""
    names = _param_names(key)
    out = []
    for val in sorted(values):
        try:
            p = base.with_(**{n: float(val) for n in names})
        except ValueError:
            out.append((float(val), False))
            continue
        out.append((float(val), run_validity_check(p, seed)))
    return out


def range_sweep(
    grid: Mapping[str, Sequence[float]],
    seed: Optional[int] = None,
    base: NDSParams = NDSParams(),
) -> list[ValidityRange]:
    """Maximal contiguous valid interval per parameter.

    Keys are parameter names or the coupled groups ``"a,v"`` and ``"b,c"``.
    The interval reported is the valid run containing the base value when
    there is one, else the longest valid run. A parameter with no valid
    grid point gets a NaN interval.
    """
    if not grid:
        raise ValueError("grid must not be empty")
    result = []
    for key, values in grid.items():
        if len(values) == 0:
            raise ValueError(f"grid for {key!r} is empty")
        checked = sweep_parameter(key, values, base, seed)
        vals = [v for v, _ in checked]
        runs = _contiguous_runs(vals, [ok for _, ok in checked])
        default = getattr(base, _param_names(key)[0])
        if not runs:
            lo = hi = math.nan
        else:
            containing = [r for r in runs if r[0] <= default <= r[1]]
            if containing:
                lo, hi = containing[0]
            else:
                lo, hi = max(runs, key=lambda r: vals.index(r[1]) - vals.index(r[0]))
        result.append(ValidityRange(key.replace(" ", ""), lo, hi))
    return result
