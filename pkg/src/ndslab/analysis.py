"""Fixed points, Jacobians, eigenvalues and stability labels."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .control import FeedbackConfig
from .core import (
    DEFAULT_INITIAL,
    DIVERGENCE_BOUND,
    NDSParams,
    RosslerParams,
    StateVec,
)

MARGINAL_TOL = 1e-12


class NoRealFixedPointsError(ValueError):
    pass


class DegenerateParametersError(ValueError):
    pass


class MarginalEigenvalueError(ValueError):
    """An eigenvalue sits on the stability boundary; no label is assigned."""


class LyapunovEstimationError(RuntimeError):
    pass


class ClassificationLabel(str, enum.Enum):
    NODE = "Node"
    REPELLOR = "Repellor"
    SADDLE_INDEX1 = "SaddleIndex1"
    SADDLE_INDEX2 = "SaddleIndex2"
    SPIRAL_NODE = "SpiralNode"
    SPIRAL_REPELLOR = "SpiralRepellor"
    SPIRAL_SADDLE_INDEX1 = "SpiralSaddleIndex1"
    SPIRAL_SADDLE_INDEX2 = "SpiralSaddleIndex2"

    def __str__(self) -> str:
        return self.value


STRICT = "strict-modulus"
PAPER = "paper-compat"
CONTINUOUS = "continuous"
CONVENTIONS = (STRICT, PAPER, CONTINUOUS)

_REAL_LABELS = {
    0: ClassificationLabel.NODE,
    1: ClassificationLabel.SADDLE_INDEX1,
    2: ClassificationLabel.SADDLE_INDEX2,
    3: ClassificationLabel.REPELLOR,
}
_SPIRAL_LABELS = {
    0: ClassificationLabel.SPIRAL_NODE,
    1: ClassificationLabel.SPIRAL_SADDLE_INDEX1,
    2: ClassificationLabel.SPIRAL_SADDLE_INDEX2,
    3: ClassificationLabel.SPIRAL_REPELLOR,
}


def _quadratic_roots(a: float, b: float, c: float) -> tuple[float, float]:
    """Real roots of ``a z^2 + b z + c`` without cancellation in the small root."""
    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise NoRealFixedPointsError(f"negative discriminant {disc!r}")
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    if q == 0.0:
        return 0.0, 0.0
    return q / a, c / q


def _ordered(roots: Sequence[float]) -> tuple[float, ...]:
    return tuple(sorted(roots, key=lambda u: -abs(u)))


def solve_fixed_points(p: NDSParams) -> tuple[StateVec, StateVec]:
    """Both equilibria of the smooth (sub-threshold) NDS map.

    Zero increments force ``y = -u`` and ``x = a u``, leaving
    ``a u^2 - k u - v = 0``. The root with the larger ``|u|`` comes first.
    """
    if p.a == 0:
        raise DegenerateParametersError("a = 0 leaves the fixed-point equation degenerate")
    roots = _ordered(_quadratic_roots(p.a, -p.k, -p.v))
    return tuple(StateVec(p.a * u, -u, u) for u in roots)  # type: ignore[return-value]


def jacobian(s: StateVec, p: NDSParams) -> np.ndarray:
    """Jacobian of the sub-threshold NDS map at ``s``."""
    x, _, u = s
    return np.array(
        [
            [1.0, -p.b, -p.b],
            [p.c, 1.0 + p.c * p.a, 0.0],
            [-p.d * u, 0.0, 1.0 + p.d * (-x + p.k)],
        ]
    )


def rossler_jacobian(s: StateVec, p: RosslerParams = RosslerParams()) -> np.ndarray:
    """Jacobian of the continuous Rössler field."""
    x, _, u = s
    return np.array([[0.0, -1.0, -1.0], [1.0, p.a, 0.0], [u, 0.0, x - p.c]])


def eigenvalues3(m: np.ndarray) -> tuple[complex, complex, complex]:
    """Eigenvalues of a real 3x3 matrix.

    A complex pair is returned first (positive imaginary part leading) and
    the real root last; with three real roots the order is descending.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise ValueError("expected a finite 3x3 matrix")
    eigs = np.linalg.eigvals(m)
    cplx = [z for z in eigs if z.imag != 0.0]
    if cplx:
        real = next(z.real for z in eigs if z.imag == 0.0)
        # force an exact conjugate pair
        re = 0.5 * (cplx[0].real + cplx[1].real)
        im = 0.5 * (abs(cplx[0].imag) + abs(cplx[1].imag))
        return complex(re, im), complex(re, -im), complex(real, 0.0)
    reals = sorted((float(z.real) for z in eigs), reverse=True)
    return tuple(complex(r, 0.0) for r in reals)  # type: ignore[return-value]


def classify(eigs: Sequence[complex], convention: str = STRICT) -> ClassificationLabel:
    """Label a fixed point from its three eigenvalues.

    ``strict-modulus`` counts eigenvalues with ``|lambda| > 1`` as unstable
    (discrete map). ``paper-compat`` looks only at the unstable ones: an
    unstable complex pair gives SpiralRepellor, otherwise Repellor; with no
    unstable eigenvalue it falls back to Node/SpiralNode. ``continuous``
    uses the sign of the real part, for flows.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    eigs = [complex(z) for z in eigs]
    if len(eigs) != 3:
        raise ValueError("expected three eigenvalues")
    if convention == CONTINUOUS:
        margins = [z.real for z in eigs]
    else:
        margins = [abs(z) - 1.0 for z in eigs]
    if any(abs(m) <= MARGINAL_TOL for m in margins):
        raise MarginalEigenvalueError(f"eigenvalue on the stability boundary: {eigs}")
    unstable = [z for z, m in zip(eigs, margins) if m > 0]
    spiral = any(z.imag != 0.0 for z in eigs)
    if convention == PAPER and unstable:
        if any(z.imag != 0.0 for z in unstable):
            return ClassificationLabel.SPIRAL_REPELLOR
        return ClassificationLabel.REPELLOR
    table = _SPIRAL_LABELS if spiral else _REAL_LABELS
    return table[len(unstable)]


@dataclass(frozen=True)
class FixedPointReport:
    coords: StateVec
    eigenvalues: tuple[complex, complex, complex]
    class_strict: ClassificationLabel
    class_paper: ClassificationLabel
    above_threshold: bool


def _report(s: StateVec, p: NDSParams) -> FixedPointReport:
    eigs = eigenvalues3(jacobian(s, p))
    return FixedPointReport(
        coords=s,
        eigenvalues=eigs,
        class_strict=classify(eigs, STRICT),
        class_paper=classify(eigs, PAPER),
        above_threshold=s.u > p.theta,
    )


def analyze_fixed_points(p: NDSParams) -> tuple[FixedPointReport, FixedPointReport]:
    first, second = solve_fixed_points(p)
    return _report(first, p), _report(second, p)


def rossler_fixed_points(p: RosslerParams = RosslerParams()) -> tuple[StateVec, ...]:
    """Equilibria of the continuous Rössler flow, larger ``|u|`` first.

    ``x + a y = 0`` and ``-y - u = 0`` give ``y = -u``, ``x = a u`` and
    ``a u^2 - c u + b = 0``. With ``a = 0`` the equation is linear and a
    single equilibrium is returned.
    """
    if p.a == 0:
        if p.c == 0:
            raise DegenerateParametersError("a = c = 0: no isolated equilibrium")
        u = p.b / p.c
        return (StateVec(0.0, -u, u),)
    roots = _ordered(_quadratic_roots(p.a, -p.c, p.b))
    return tuple(StateVec(p.a * u, -u, u) for u in roots)


def estimate_lyapunov(
    p: NDSParams = NDSParams(),
    initial: StateVec = DEFAULT_INITIAL,
    steps: int = 100_000,
    renorm_interval: int = 10,
    separation: float = 1e-4,
    seed: int = 0,
    feedback: Optional[FeedbackConfig] = None,
    onset: int = 0,
) -> float:
    """Largest Lyapunov exponent from two nearby trajectories.

    The partner starts ``separation`` away along a seeded random direction
    and is pulled back to that distance every ``renorm_interval`` steps.
    Both copies run the full map including resets, each with its own spike
    history. The result is the mean log-stretch per step.

    Because the reset pins ``u`` to ``eta0`` for both copies, very small
    separations mostly see the contracting smooth part and the estimate
    turns negative; the threshold crossings that make the map sensitive
    only register once ``separation`` is comparable to the per-step
    motion of ``u`` near threshold (around 1e-4 for the default neuron).
    """
    if steps < 10_000:
        raise ValueError("steps must be >= 10000")
    if renorm_interval < 1 or not separation > 0:
        raise ValueError("renorm_interval must be >= 1 and separation > 0")
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(3)
    direction /= np.linalg.norm(direction)
    ref = np.asarray(tuple(initial), dtype=np.float64)
    cfg = feedback if feedback is not None else FeedbackConfig()
    weights, delays = cfg.as_arrays()
    total, failed = _kernels.lyapunov_pair(
        ref, ref + separation * direction, p.as_array(), int(steps), int(renorm_interval),
        float(separation), weights, delays, int(onset), DIVERGENCE_BOUND,
    )
    if failed >= 0:
        raise LyapunovEstimationError(f"trajectories left the divergence bound at step {failed}")
    return total / steps
