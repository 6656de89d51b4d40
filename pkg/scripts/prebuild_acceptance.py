"""Generate every training run the acceptance suite consumes.

Safe to re-run: training goes through the config-hash cache, so finished
runs are reused and only the evaluation half repeats. Order is riskiest
first so a bad recipe surfaces early.
"""

import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from quadgait.acceptance import (
    ensure_curriculum,
    ensure_gait_trend,
    ensure_multigait,
    ensure_smoke,
)

ROOT = Path(__file__).resolve().parent.parent / "runs" / "acceptance"


def show(m):
    print("it {iteration:3d} rew {mean_reward:8.2f} ep {mean_episode_ticks:6.1f} "
          "kc {k_c:5.3f}".format(**m))
    sys.stdout.flush()


def main():
    t0 = time.monotonic()
    for label, fn in [
        ("smoke", lambda: ensure_smoke(ROOT, progress=show)),
        ("gait_trend", lambda: ensure_gait_trend(ROOT, progress=show)),
        ("multigait", lambda: ensure_multigait(ROOT, progress=show)),
        ("curriculum", lambda: ensure_curriculum(ROOT, progress=show)),
    ]:
        t = time.monotonic()
        print(f"=== {label} ===", flush=True)
        path = fn()
        print(f"=== {label} done in {time.monotonic() - t:.0f}s -> {path}", flush=True)
    print(f"total {time.monotonic() - t0:.0f}s", flush=True)


if __name__ == "__main__":
    main()
