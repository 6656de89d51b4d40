import time

import numpy as np

from quadgait.controller import ControllerConfig, HierarchicalController
from quadgait.cpg import GaitKind
from quadgait.dynamics import RobotModel, SimBatch, reset

m = RobotModel()


class FixedPolicy:
    def __init__(self, vals):
        self.vals = np.asarray(vals, dtype=float)

    def deterministic(self, obs):
        return np.tile(self.vals, (obs.shape[0], 1))


# scripted trot: amplitude 0.35 rad, calves held at the nominal bend,
# fixed 0.45 s cycle
cfg = ControllerConfig(
    mode="single_gait",
    gait=GaitKind.TROT,
    period_source="fixed",
    fixed_period=0.45,
)
low = FixedPolicy([0.35, -0.4, -0.4, -0.4, -0.4])
hc = HierarchicalController(cfg, m, low)

sim = SimBatch(m, 1)
sim.set_state(0, reset(m, seed=3, perturb_scale=0.0))
hc.reset(0.5)

t0 = time.time()
n_ticks = 500
for k in range(n_ticks):
    hc.control_step(sim)
    if sim.fallen()[0]:
        print(f"FELL at tick {k} t={k*0.01:.2f}s pos={sim.pos[0]}")
        break
else:
    print(f"survived {n_ticks} ticks ({n_ticks*0.01:.1f}s)")
k_end = min(k + 1, n_ticks)
print(f"final pos={np.array2string(sim.pos[0], precision=3)}")
print(f"mean fwd speed ~ {sim.pos[0,0]/(k_end*0.01):.3f} m/s")
print(f"wall time {time.time()-t0:.2f}s")
