"""Acceptance suite: one test per criterion, each at its stated tolerance.

Each test records PASS/FAIL with a short measurement; the table is printed in
the terminal summary (and per test with ``-s``).
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from ndslab.analysis import (
    ClassificationLabel as L,
    analyze_fixed_points,
    eigenvalues3,
    estimate_lyapunov,
    jacobian,
    solve_fixed_points,
)
from ndslab.control import FeedbackConfig, detect_period, stabilize_run, sweep_locking_pairs
from ndslab.core import (
    DIVERGENCE_BOUND,
    NDSParams,
    StateVec,
    nds_step,
    simulate,
    simulate_modified_rossler,
    simulate_rossler,
    ts_bound,
)
from ndslab.experiments import SETUPS, capacity_experiment
from oracles import det3, fd_jacobian, increments


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def timed(fn):
    fn()  # warm the compiled kernels so the timing covers the computation only
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


# reference values: fixed points (x1, y1, u1, x2, y2, u2) per setup
FIXED_POINTS = {
    1: (-0.05702, 57.01754, -57.01754, 0.00002, -0.01754, 0.01754),
    2: (-0.05870, 5.87035, -5.87035, 0.00170, -0.17035, 0.17035),
    3: (-0.13248, 1.32482, -1.32482, 0.07548, -0.75482, 0.75482),
    4: (-0.05707, 28.53504, -28.53504, 0.00007, -0.03504, 0.03504),
    5: (-0.05707, 28.53504, -28.53504, 0.00007, -0.03504, 0.03504),
    6: (-0.05707, 28.53504, -28.53504, 0.00007, -0.03504, 0.03504),
    7: (-0.05707, 28.53504, -28.53504, 0.00007, -0.03504, 0.03504),
    8: (-0.05707, 28.53504, -28.53504, 0.00007, -0.03504, 0.03504),
    9: (-0.05707, 28.53504, -28.53504, 0.00007, -0.03504, 0.03504),
    10: (-0.05507, 27.53632, -27.53632, 0.00007, -0.03632, 0.03632),
    11: (-0.05607, 28.03567, -28.03567, 0.00007, -0.03567, 0.03567),
    12: (-0.05807, 29.03444, -29.03444, 0.00007, -0.03444, 0.03444),
    13: (-0.05676, 5.67617, -5.67617, 0.00176, -0.17617, 0.17617),
    14: (-0.05807, 29.03444, -29.03444, 0.00007, -0.03444, 0.03444),
    15: (-0.13185, 1.31846, -1.31846, 0.07585, -0.75846, 0.75846),
}

# first fixed point: complex pair (re, im) and real root
FIRST_EIGS = {
    1: (1.0000, 1.1702, 1.0000), 2: (1.0007, 0.3765, 1.0003), 3: (1.0294, 0.1782, 1.0046),
    4: (1.0000, 0.1511, 1.0000), 5: (1.0000, 0.6760, 1.0000), 6: (1.0000, 1.0695, 1.0001),
    7: (1.0000, 0.8281, 1.0001), 8: (1.0000, 0.8535, 1.0001), 9: (1.0000, 0.8783, 1.0001),
    10: (1.0000, 0.8135, 1.0001), 11: (1.0000, 0.8208, 1.0001), 12: (1.0000, 0.8353, 1.0001),
    13: (1.0007, 0.4937, 1.0005), 14: (1.0000, 0.5905, 1.0000), 15: (1.0293, 0.2069, 1.0061),
}

# second fixed point: three eigenvalues (complex pairs written out in full)
SECOND_EIGS = {
    1: (1.0031 + 0.0280j, 1.0031 - 0.0280j, 0.9483),
    2: (1.0209 + 0.0075j, 1.0209 - 0.0075j, 0.9116),
    3: (1.0842, 1.0091, 0.8038),
    4: (1.0003 + 0.0009j, 1.0003 - 0.0009j, 0.9537),
    5: (1.0045 + 0.0177j, 1.0045 - 0.0177j, 0.9453),
    6: (1.0070 + 0.0433j, 1.0070 - 0.0433j, 0.9405),
    7: (1.0058 + 0.0262j, 1.0058 - 0.0262j, 0.9428),
    8: (1.0060 + 0.0262j, 1.0060 - 0.0262j, 0.9396),
    9: (1.0061 + 0.0263j, 1.0061 - 0.0263j, 0.9365),
    10: (1.0061 + 0.0259j, 1.0061 - 0.0259j, 0.9439),
    11: (1.0059 + 0.0260j, 1.0059 - 0.0260j, 0.9433),
    12: (1.0057 + 0.0263j, 1.0057 - 0.0263j, 0.9423),
    13: (1.0292 + 0.0180j, 1.0292 - 0.0180j, 0.8939),
    14: (1.0036 + 0.0135j, 1.0036 - 0.0135j, 0.9464),
    15: (1.1010, 1.0123, 0.7852),
}


def component_error(expected, got):
    return max(
        max(abs(complex(a).real - complex(b).real), abs(complex(a).imag - complex(b).imag))
        for a, b in zip(expected, got)
    )


def test_criterion_01_fixed_point_table():
    def run():
        return {sid: [c for fp in solve_fixed_points(s.params) for c in fp] for sid, s in SETUPS.items()}

    got, elapsed = timed(run)
    worst = max(abs(e - g) for sid in FIXED_POINTS for e, g in zip(FIXED_POINTS[sid], got[sid]))
    record(1, worst <= 5e-5 and elapsed < 1.0,
           f"max |error| {worst:.2e} over 90 coordinates (tol 5e-5), {elapsed:.3f}s")


def test_criterion_02_first_fixed_point_eigenvalues():
    reports, elapsed = timed(lambda: {sid: analyze_fixed_points(s.params) for sid, s in SETUPS.items()})
    worst = 0.0
    labels_ok = True
    for sid, (re, im, real) in FIRST_EIGS.items():
        first = reports[sid][0]
        worst = max(worst, component_error((complex(re, im), complex(re, -im), real), first.eigenvalues))
        labels_ok &= first.class_paper is L.SPIRAL_REPELLOR
    record(2, worst <= 5e-4 and labels_ok and elapsed < 1.0,
           f"max component error {worst:.2e} (tol 5e-4), all SpiralRepellor={labels_ok}, {elapsed:.3f}s")


def test_criterion_03_second_fixed_point_eigenvalues():
    reports, elapsed = timed(lambda: {sid: analyze_fixed_points(s.params) for sid, s in SETUPS.items()})
    worst = 0.0
    labels_ok = True
    for sid, expected in SECOND_EIGS.items():
        second = reports[sid][1]
        worst = max(worst, component_error(expected, second.eigenvalues))
        want = L.REPELLOR if sid in (3, 15) else L.SPIRAL_REPELLOR
        labels_ok &= second.class_paper is want
    record(3, worst <= 5e-4 and labels_ok and elapsed < 1.0,
           f"max component error {worst:.2e} (tol 5e-4), labels match={labels_ok}, {elapsed:.3f}s")


def test_criterion_04_time_step_bound():
    bound = ts_bound(5.68698)
    ok = round(bound, 4) == 0.0176 and 0.03 > bound
    record(4, ok, f"ts_bound(5.68698)={bound:.6f} -> {round(bound, 4)}, 0.03 > bound={0.03 > bound}")


def test_criterion_05_chaotic_regime():
    def run():
        traj = simulate(steps=100_000)
        return traj, detect_period(traj, 1000, 500, 1e-6)

    (traj, period), elapsed = timed(run)
    spikes = int(traj.spikes.sum())
    fired = np.flatnonzero(traj.spikes)
    resets_ok = bool(np.all(traj.u[fired] == -0.7))
    bounded = not traj.diverged and bool(np.isfinite(traj.states).all())
    ok = bounded and spikes >= 100 and resets_ok and period is None and elapsed < 1.0
    record(5, ok, f"bounded={bounded}, spikes={spikes}, resets exact={resets_ok}, "
                  f"period={period}, {elapsed:.3f}s")


def test_criterion_06_reset_necessity():
    p = NDSParams().with_(theta=1e9)
    fp, _ = solve_fixed_points(p)
    traj = simulate(StateVec(fp.x + 1e-6, fp.y, fp.u), p, 1_000_000)
    peak = float(np.abs(traj.states).max())
    ok = traj.diverged_at is not None and peak > DIVERGENCE_BOUND
    record(6, ok, f"exceeded {DIVERGENCE_BOUND:g} at step {traj.diverged_at}")


def test_criterion_07_stabilization_exists():
    found = [f for f in sweep_locking_pairs() if f.period <= 50]
    if not found:
        record(7, False, "no locking pair with period <= 50")
    first = found[0]
    res = stabilize_run(NDSParams(), FeedbackConfig.single(first.weight, first.delay))
    recheck = detect_period(res.trajectory, res.lock_time, 50)
    ok = res.locked and recheck == first.period
    record(7, ok, f"{len(found)} pairs lock with period <= 50; first (w={first.weight}, "
                  f"tau={first.delay}) period {first.period}, re-detected {recheck}")


def _bounded_aperiodic(traj):
    if traj.diverged or not np.isfinite(traj.states).all():
        return False, None, float("inf")
    peak = float(np.abs(traj.states).max())
    period = detect_period(traj, 1000, 500, 1e-6, require_spikes=False)
    return peak < 50 and period is None, period, peak


def test_criterion_08_euler_rossler():
    euler_ok, euler_period, euler_peak = _bounded_aperiodic(simulate_rossler(ts=0.0055, steps=1_000_000))
    modified = simulate_modified_rossler(steps=1_000_000)
    modified_ok, _, _ = _bounded_aperiodic(modified)
    ok = euler_ok and not modified_ok
    record(8, ok, f"Euler: max|component| {euler_peak:.2f}, period {euler_period}; "
                  f"modified: diverged at step {modified.diverged_at}")


def test_criterion_09_capacity_ordering():
    wins = 0
    lines = []
    for seed in range(10):
        mean = {sid: capacity_experiment(SETUPS[sid], runs=1000, seed=seed).mean_stabilized
                for sid in (5, 7, 14)}
        won = mean[5] >= mean[7] and mean[14] >= mean[7]
        wins += won
        lines.append(f"{mean[5]:.3f}/{mean[7]:.3f}/{mean[14]:.3f}")
    record(9, wins >= 7, f"05 and 14 >= 07 in {wins}/10 batches (05/07/14: {', '.join(lines)})")


def test_criterion_10_oracle_suites(tmp_path):
    rng = np.random.default_rng(10)
    p = NDSParams(theta=1e9)
    jac_ok = True
    for _ in range(100):
        s = StateVec(*rng.uniform([-0.5, -1, -3], [0.5, 1, 0]))
        analytic = jacobian(s, p)
        jac_ok &= bool(np.all(np.abs(fd_jacobian(s, p) - analytic)
                              <= 1e-6 * np.maximum(1.0, np.abs(analytic))))

    eig_ok = True
    for _ in range(1000):
        m = rng.normal(size=(3, 3)) * rng.choice([0.1, 1.0, 10.0])
        eigs = eigenvalues3(m)
        scale = max(1.0, np.abs(m).max())
        eig_ok &= abs(sum(eigs) - np.trace(m)) <= 1e-9 * scale
        eig_ok &= abs(eigs[0] * eigs[1] * eigs[2] - det3(m)) <= 1e-9 * scale**3

    residual = 0.0
    for s in SETUPS.values():
        for fp in solve_fixed_points(s.params):
            residual = max(residual, *(abs(d) for d in increments(fp, s.params)))
            out, _ = nds_step(fp, s.params.with_(theta=1e9))
            residual = max(residual, *(abs(a - b) for a, b in zip(out, fp)))

    outputs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        subprocess.run(
            [sys.executable, "-m", "ndslab", "capacity", "--setup", "7", "--runs", "50",
             "--seed", "123", "--out", str(path)],
            check=True,
        )
        outputs.append(path.read_bytes())
    same = outputs[0] == outputs[1]

    ok = jac_ok and eig_ok and residual < 1e-12 and same
    record(10, ok, f"jacobian={jac_ok}, trace/det={eig_ok}, max residual {residual:.1e}, "
                   f"byte-identical reruns={same}")


def test_criterion_11_lyapunov_positive():
    values = [estimate_lyapunov(NDSParams(), seed=s) for s in range(5)]
    ok = all(v > 0 for v in values)
    record(11, ok, "lambda = " + ", ".join(f"{v:.5f}" for v in values))


@pytest.mark.parametrize("sid", [3, 15])
def test_real_second_fixed_points_classified_by_unstable_roots(sid):
    second = analyze_fixed_points(SETUPS[sid].params)[1]
    assert all(z.imag == 0 for z in second.eigenvalues)
    assert second.class_paper is L.REPELLOR
