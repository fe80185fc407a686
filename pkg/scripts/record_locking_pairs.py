"""Sweep single-connection feedback on setup 7 and record every locking pair.

Writes data/locking_pairs.csv (weight, delay, period, lock_time) in grid
order: delays ascending, weights ascending within a delay.
"""

import os
import sys
from pathlib import Path

from ndslab.control import FeedbackSweepSpec, sweep_locking_pairs
from ndslab.experiments import SETUPS
from ndslab.io import write_csv

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parents[1] / "data" / "locking_pairs.csv"
pairs = sweep_locking_pairs(SETUPS[7].params, FeedbackSweepSpec(), workers=os.cpu_count() or 1)
with open(out, "w", encoding="utf-8", newline="") as fh:
    write_csv(fh, ("weight", "delay", "period", "lock_time"),
              [(p.weight, p.delay, p.period, p.lock_time) for p in pairs])
print(f"{len(pairs)} locking pairs -> {out}")
