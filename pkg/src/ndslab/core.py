"""NDS map, Rössler reference flow and their discrete variants."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels
from ._kernels import DIVERGENCE_BOUND

__all__ = [
    "DIVERGENCE_BOUND",
    "DEFAULT_INITIAL",
    "DivergenceError",
    "StateVec",
    "NDSParams",
    "RosslerParams",
    "DiscretizationConfig",
    "Trajectory",
    "nds_step",
    "rossler_rhs",
    "euler_step",
    "modified_rossler_step",
    "simulate",
    "simulate_rossler",
    "simulate_modified_rossler",
    "ts_bound",
]


class DivergenceError(ArithmeticError):
    """Raised when an update produces a non-finite state."""

    def __init__(self, message: str, state=None, step: Optional[int] = None):
        super().__init__(message)
        self.state = state
        self.step = step


class StateVec(NamedTuple):
    """One neuron's ``(x, y, u)`` at one time step."""

    x: float
    y: float
    u: float

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.u)


DEFAULT_INITIAL = StateVec(0.001, 0.001, 0.001)


@dataclass(frozen=True)
class NDSParams:
    """Constants of the NDS map.

    ``theta`` is the spike threshold on ``u`` and ``eta0`` the value ``u`` is
    reset to after a spike.
    """

    a: float = 0.002
    v: float = 0.002
    b: float = 0.03
    c: float = 0.03
    d: float = 0.8
    k: float = -0.057
    theta: float = -0.01
    eta0: float = -0.7

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise ValueError(f"parameter {name} must be finite, got {value!r}")
        if self.eta0 > self.theta:
            raise ValueError(
                f"reset value eta0={self.eta0} must not exceed threshold theta={self.theta}"
            )

    def with_(self, **changes) -> "NDSParams":
        return replace(self, **changes)

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.a, self.v, self.b, self.c, self.d, self.k, self.theta, self.eta0],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class RosslerParams:
    a: float = 0.2
    b: float = 0.2
    c: float = 5.7


@dataclass(frozen=True)
class DiscretizationConfig:
    ts: float

    def __post_init__(self):
        if not self.ts > 0:
            raise ValueError(f"time step must be positive, got {self.ts!r}")


@dataclass
class Trajectory:
    """Time-indexed record of one run.

    Row ``t`` of every array belongs to time step ``t``. ``feedback[t]`` and
    ``input[t]`` are the values fed into the update that produces state
    ``t + 1``; ``spikes[t]`` is the output γ(t), so ``spikes[0]`` is always 0.
    """

    states: np.ndarray
    spikes: np.ndarray
    feedback: np.ndarray
    input: np.ndarray
    diverged_at: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.states)
        if not (len(self.spikes) == len(self.feedback) == len(self.input) == n):
            raise ValueError("trajectory sequences must share one length")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def u(self) -> np.ndarray:
        return self.states[:, 2]

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None

    def state(self, t: int) -> StateVec:
        return StateVec(*(float(c) for c in self.states[t]))

    def spike_count(self) -> int:
        return int(self.spikes.sum())


def nds_step(
    s: StateVec, p: NDSParams, f: float = 0.0, inp: float = 0.0
) -> tuple[StateVec, int]:
    """Advance one NDS step.

    Returns the new state and the spike γ(t+1). Feedback ``f`` and input
    ``inp`` only act on the sub-threshold branch; they are added outside the
    ``d`` scaling.
    """
    x, y, u = s
    if u > p.theta:
        nu = p.eta0
        spike = 1
    else:
        nu = u + p.d * (p.v + u * (-x) + p.k * u) + f + inp
        spike = 0
    out = StateVec(x + p.b * (-y - u), y + p.c * (x + p.a * y), nu)
    if not out.is_finite():
        raise DivergenceError(f"non-finite NDS state {out}", state=out)
    return out, spike


def rossler_rhs(s: StateVec, p: RosslerParams = RosslerParams()) -> StateVec:
    """Time derivative of the Rössler flow (``y' = x + a y`` sign convention)."""
    x, y, u = s
    return StateVec(-y - u, x + p.a * y, p.b + u * (x - p.c))


def euler_step(
    s: StateVec, p: RosslerParams, cfg: DiscretizationConfig | float
) -> StateVec:
    ts = cfg.ts if isinstance(cfg, DiscretizationConfig) else float(cfg)
    if ts < 0:
        raise ValueError("time step must be non-negative")
    dx, dy, du = rossler_rhs(s, p)
    return StateVec(s.x + ts * dx, s.y + ts * dy, s.u + ts * du)


def modified_rossler_step(
    s: StateVec,
    a: float = 0.2,
    b: float = 0.0055,
    c: float = 0.0055,
    d: float = 0.0055,
    v: float = 0.2,
    k: float = 5.7,
) -> StateVec:
    """Euler-discretised Rössler with the NDS sign flip on ``(x - k)``."""
    x, y, u = s
    return StateVec(x + b * (-y - u), y + c * (x + a * y), u + d * (v + u * (-x + k)))


def _finish(states, n_recorded, diverged_at, spikes=None, feedback=None, inputs=None):
    states = states[:n_recorded].copy()
    n = len(states)
    spikes = np.zeros(n, np.int8) if spikes is None else spikes[:n].copy()
    feedback = np.zeros(n) if feedback is None else feedback[:n].copy()
    inputs = np.zeros(n) if inputs is None else inputs[:n].copy()
    return Trajectory(
        states, spikes, feedback, inputs, None if diverged_at < 0 else int(diverged_at)
    )


def simulate(
    initial: StateVec | Sequence[float] = DEFAULT_INITIAL,
    p: NDSParams = NDSParams(),
    steps: int = 10000,
    feedback=None,
    feedback_onset: int = 0,
    input=None,
    bound: float = DIVERGENCE_BOUND,
) -> Trajectory:
    """Run the NDS map for ``steps`` updates.

    Parameters
    ----------
    initial : StateVec
        State at ``t = 0``.
    p : NDSParams
    steps : int
        Number of updates; the trajectory holds ``steps + 1`` states unless
        the run diverges.
    feedback : FeedbackConfig, optional
        Delayed self-feedback; F(t) is zero for ``t < feedback_onset``.
    input : InputTrain, optional
        External input, summed per step.
    bound : float
        A state with any ``|component| > bound`` stops the run and sets
        ``diverged_at``. The offending state is kept as the last row.

    Returns
    -------
    Trajectory
    """
    from .control import FeedbackConfig, InputTrain

    steps = int(steps)
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if not 0 <= feedback_onset <= steps:
        raise ValueError(f"feedback_onset must lie in [0, {steps}], got {feedback_onset}")
    init = np.asarray(tuple(initial), dtype=np.float64)
    if init.shape != (3,) or not np.all(np.isfinite(init)):
        raise ValueError(f"initial state must be three finite numbers, got {initial!r}")
    cfg = feedback if feedback is not None else FeedbackConfig()
    weights, delays = cfg.as_arrays()
    train = input if input is not None else InputTrain()
    inputs = train.dense(steps + 1)
    states, spikes, fb, n_rec, div = _kernels.simulate_nds(
        init, p.as_array(), steps, weights, delays, int(feedback_onset), inputs, float(bound)
    )
    traj = _finish(states, n_rec, div, spikes, fb, inputs)
    traj.meta.update(params=p, feedback=cfg, onset=int(feedback_onset))
    return traj


def simulate_rossler(
    initial: StateVec | Sequence[float] = (1.0, 1.0, 1.0),
    p: RosslerParams = RosslerParams(),
    ts: float = 0.0055,
    steps: int = 10000,
    substeps: int = 1,
    bound: float = DIVERGENCE_BOUND,
) -> Trajectory:
    """Forward-Euler Rössler run.

    With ``substeps > 1`` each recorded step of length ``ts`` is integrated
    as ``substeps`` Euler steps of ``ts / substeps``, which is how the
    ``continuous`` CLI mode approximates the flow.
    """
    DiscretizationConfig(ts)
    if steps < 1 or substeps < 1:
        raise ValueError("steps and substeps must be >= 1")
    states, n_rec, div = _kernels.rossler_euler(
        np.asarray(tuple(initial), dtype=np.float64),
        p.a, p.b, p.c, float(ts), int(steps), int(substeps), float(bound),
    )
    return _finish(states, n_rec, div)


def simulate_modified_rossler(
    initial: StateVec | Sequence[float] = (1.0, 1.0, 1.0),
    a: float = 0.2,
    b: float = 0.0055,
    c: float = 0.0055,
    d: float = 0.0055,
    v: float = 0.2,
    k: float = 5.7,
    steps: int = 10000,
    bound: float = DIVERGENCE_BOUND,
) -> Trajectory:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    states, n_rec, div = _kernels.modified_rossler(
        np.asarray(tuple(initial), dtype=np.float64), a, b, c, d, v, k, int(steps), float(bound)
    )
    return _finish(states, n_rec, div)


def ts_bound(lambda_max: float) -> float:
    """Largest recommended Euler step, ``0.1 / |lambda_max|``."""
    if lambda_max == 0:
        raise ValueError("lambda_max must be non-zero")
    return 0.1 / abs(lambda_max)
