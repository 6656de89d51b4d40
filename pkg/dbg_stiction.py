import numpy as np
from quadgait.dynamics import (
    RobotModel, SimBatch, PdGains, _initial_stand, N_LEGS,
)

m = RobotModel()
batch = _initial_stand(m)
gains = PdGains()
target = m.nominal_joint_angles[None, :]
dt = m.substep_dt
print("mu", m.friction_mu, "veps", m.friction_veps, "kt", m.friction_kt)
for k in range(2000):
    batch.step(batch.pd_torques(target, gains), dt)
    if k % 200 == 0:
        stretch = batch.foot_pos[0, :, :2] - batch.anchor[0]
        print(
            f"k={k:5d} x={batch.pos[0,0]:+.4f} vx={batch.lin_vel[0,0]:+.5f} "
            f"stretch_x={np.array2string(stretch[:,0], precision=5)} "
            f"active={batch.anchor_active[0].astype(int)} "
            f"footz={np.array2string(batch.foot_pos[0,:,2]*1000, precision=2)}mm"
        )
