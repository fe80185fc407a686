"""Delayed self-feedback, input trains and periodic-orbit detection."""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from . import _kernels
from .core import DEFAULT_INITIAL, NDSParams, StateVec, Trajectory, simulate

DEFAULT_EPS = 1e-6
DEFAULT_MAX_PERIOD = 500
DEFAULT_ONSET = 1000
DEFAULT_TOTAL = 10000


@dataclass(frozen=True)
class FeedbackConfig:
    """Self-feedback connections as ``(weight, delay)`` pairs."""

    connections: tuple[tuple[float, int], ...] = ()

    def __post_init__(self):
        conns = tuple((float(w), int(tau)) for w, tau in self.connections)
        for w, tau in conns:
            if tau < 1:
                raise ValueError(f"feedback delay must be >= 1, got {tau}")
            if not np.isfinite(w):
                raise ValueError(f"feedback weight must be finite, got {w}")
        object.__setattr__(self, "connections", conns)

    @classmethod
    def single(cls, weight: float, delay: int) -> "FeedbackConfig":
        return cls(((weight, delay),))

    @property
    def max_delay(self) -> int:
        return max((tau for _, tau in self.connections), default=0)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        w = np.array([c[0] for c in self.connections], dtype=np.float64)
        tau = np.array([c[1] for c in self.connections], dtype=np.int64)
        return w, tau

    def __len__(self) -> int:
        return len(self.connections)

    def __iter__(self) -> Iterator[tuple[float, int]]:
        return iter(self.connections)


class SpikeHistory:
    """Ring buffer of the most recent γ values.

    Indices are absolute time steps. Steps before 0 read as 0; steps that
    have already been evicted raise ``IndexError``.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._buf: deque[int] = deque(maxlen=capacity)
        self._count = 0

    @property
    def latest(self) -> int:
        """Time step of the newest recorded value (-1 when empty)."""
        return self._count - 1

    def record(self, spike: int) -> None:
        if spike not in (0, 1):
            raise ValueError(f"spike must be 0 or 1, got {spike!r}")
        self._buf.append(int(spike))
        self._count += 1

    def extend(self, spikes: Iterable[int]) -> None:
        for s in spikes:
            self.record(s)

    def get(self, t: int) -> int:
        if t < 0:
            return 0
        if t > self.latest:
            raise IndexError(f"step {t} has not been recorded yet (latest {self.latest})")
        oldest = self._count - len(self._buf)
        if t < oldest:
            raise IndexError(f"step {t} was evicted (capacity {self.capacity})")
        return self._buf[t - oldest]


def feedback_signal(h: SpikeHistory, cfg: FeedbackConfig, t: int) -> float:
    """``F(t) = sum_j w_j * gamma(t - tau_j)``."""
    total = 0.0
    for w, tau in cfg.connections:
        if tau > h.capacity:
            raise ValueError(f"delay {tau} exceeds spike-history capacity {h.capacity}")
        if h.get(t - tau):
            total += w
    return total


@dataclass(frozen=True)
class InputTrain:
    """External input trains; steps past the end of a train read as 0."""

    trains: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "trains", tuple(tuple(float(x) for x in tr) for tr in self.trains)
        )

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        for tr in self.trains:
            m = min(n, len(tr))
            out[:m] += np.asarray(tr[:m])
        return out


def input_signal(inp: Optional[InputTrain], t: int) -> float:
    """``In(t) = sum_j I_j(t)``."""
    if inp is None:
        return 0.0
    total = 0.0
    for tr in inp.trains:
        if 0 <= t < len(tr):
            total += tr[t]
    return total


def _check_window(n: int, transient: int, max_period: int) -> None:
    if n <= transient + 2 * max_period:
        raise ValueError(
            f"trajectory of length {n} is too short for transient={transient} "
            f"and max_period={max_period}"
        )


def is_period(
    traj: Trajectory,
    p: int,
    transient: int,
    eps: float = DEFAULT_EPS,
    check_spikes: bool = True,
) -> bool:
    """True when every post-transient step repeats after ``p`` steps."""
    if p < 1 or transient + p >= len(traj):
        raise ValueError(f"period {p} does not fit after transient {transient}")
    return bool(
        _kernels.periodic_at(traj.states, traj.spikes, transient, p, eps, check_spikes)
    )


def detect_period(
    traj: Trajectory,
    transient: int,
    max_period: int = DEFAULT_MAX_PERIOD,
    eps: float = DEFAULT_EPS,
    require_spikes: bool = True,
) -> Optional[int]:
    """Smallest period of the post-transient window, or ``None``.

    A candidate ``p`` must hold for every ``t >= transient``: states agree
    within ``eps`` in the max norm and spikes agree exactly. A window with
    no spikes yields ``None`` unless ``require_spikes`` is False (used for
    the spike-free Rössler trajectories).
    """
    _check_window(len(traj), transient, max_period)
    if require_spikes and not traj.spikes[transient:].any():
        return None
    p = _kernels.smallest_period(
        traj.states, traj.spikes, transient, max_period, eps, require_spikes
    )
    return None if p < 0 else int(p)


@dataclass
class StabilizationResult:
    locked: bool
    period: Optional[int]
    lock_time: Optional[int]
    trajectory: Trajectory = field(repr=False)

    def __post_init__(self):
        if self.locked and (self.period is None or self.lock_time is None):
            raise ValueError("a locked result needs a period and a lock time")


def detection_start(onset: int, total: int) -> int:
    """First step of the window ``stabilize_run`` inspects for periodicity."""
    return onset + (total - onset) // 2


def stabilize_run(
    p: NDSParams,
    cfg: FeedbackConfig,
    initial: StateVec = DEFAULT_INITIAL,
    onset: int = DEFAULT_ONSET,
    total: int = DEFAULT_TOTAL,
    max_period: int = DEFAULT_MAX_PERIOD,
    eps: float = DEFAULT_EPS,
) -> StabilizationResult:
    """Switch feedback on at ``onset`` and test whether the run locks.

    The period is detected on the second half of the controlled segment;
    ``lock_time`` is then walked back to the first post-onset step from
    which the orbit repeats without interruption.
    """
    if not onset < total:
        raise ValueError(f"onset ({onset}) must precede total ({total})")
    start = detection_start(onset, total)
    _check_window(total + 1, start, max_period)
    traj = simulate(initial, p, total, feedback=cfg, feedback_onset=onset)
    if traj.diverged:
        return StabilizationResult(False, None, None, traj)
    period = detect_period(traj, start, max_period, eps)
    if period is None:
        return StabilizationResult(False, None, None, traj)
    lock_time = int(_kernels.earliest_lock(traj.states, traj.spikes, onset, period, eps))
    return StabilizationResult(True, period, lock_time, traj)


@dataclass(frozen=True)
class FeedbackSweepSpec:
    """Grid of single-connection feedback settings.

    Weights are ``w_min + i * w_step`` and delays run over
    ``[tau_min, tau_max]``.
    """

    w_min: float = -1.0
    w_max: float = 1.0
    w_step: float = 0.01
    tau_min: int = 1
    tau_max: int = 50

    def weights(self) -> np.ndarray:
        if self.w_step <= 0:
            return np.array([self.w_min])
        n = int(round((self.w_max - self.w_min) / self.w_step)) + 1
        return np.round(self.w_min + self.w_step * np.arange(n), 10)

    def delays(self) -> np.ndarray:
        return np.arange(self.tau_min, self.tau_max + 1)

    def pairs(self) -> list[tuple[float, int]]:
        """All pairs, delay-major, weights ascending within a delay."""
        return [(float(w), int(tau)) for tau in self.delays() for w in self.weights()]


@dataclass(frozen=True)
class LockingPair:
    weight: float
    delay: int
    period: int
    lock_time: int


def sweep_locking_pairs(
    p: NDSParams = NDSParams(),
    sweep: FeedbackSweepSpec = FeedbackSweepSpec(),
    initial: StateVec = DEFAULT_INITIAL,
    onset: int = DEFAULT_ONSET,
    total: int = DEFAULT_TOTAL,
    first_only: bool = False,
    workers: int = 1,
) -> list[LockingPair]:
    """Run ``stabilize_run`` over the sweep grid and keep the locking pairs.

    Results come back in grid order regardless of ``workers``.
    """
    pairs = sweep.pairs()

    def run(pair):
        res = stabilize_run(p, FeedbackConfig.single(*pair), initial, onset, total)
        if res.locked:
            return LockingPair(pair[0], pair[1], res.period, res.lock_time)
        return None

    found: list[LockingPair] = []
    if first_only or workers <= 1:
        for pair in pairs:
            hit = run(pair)
            if hit is not None:
                found.append(hit)
                if first_only:
                    break
        return found
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return [hit for hit in pool.map(run, pairs) if hit is not None]


def parse_feedback(text: str) -> FeedbackConfig:
    """Parse ``"w:tau,w:tau"`` into a FeedbackConfig."""
    conns = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            w, tau = item.split(":")
            conns.append((float(w), int(tau)))
        except ValueError:
            raise ValueError(f"bad feedback pair {item!r}; expected weight:delay") from None
    return FeedbackConfig(tuple(conns))


def format_feedback(cfg: FeedbackConfig | Sequence[tuple[float, int]]) -> str:
    conns = cfg.connections if isinstance(cfg, FeedbackConfig) else cfg
    return ",".join(f"{w!r}:{tau}" for w, tau in conns)
