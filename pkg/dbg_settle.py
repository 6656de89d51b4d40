import numpy as np
from quadgait import dynamics as dyn

m = dyn.RobotModel()
gains = dyn.PdGains()
batch = dyn._initial_stand(m)
target = m.nominal_joint_angles[None, :]
dt = m.substep_dt
round_steps = int(0.25 / dt)
for rnd in range(80):
    for _ in range(round_steps):
        batch.step(batch.pd_torques(target, gains), dt)
        batch.lin_vel *= 0.997
        batch.ang_vel *= 0.997
        batch.qd *= 0.997
    batch.lin_vel[:] = 0.0
    batch.ang_vel[:] = 0.0
    batch.qd[:] = 0.0
    a = dyn._rest_acceleration(batch, target, gains)
    stretch = np.linalg.norm(batch.foot_pos[0, :, :2] - batch.anchor[0], axis=-1)
    if rnd % 5 == 0 or a < 1e-4:
        print(
            f"round={rnd:3d} probe={a:10.3e} x={batch.pos[0,0]:+.5f} "
            f"z={batch.pos[0,2]:.5f} stretch={np.array2string(stretch*1000, precision=3)}mm"
        )
    if a < 1e-4:
        print("converged")
        break
else:
    print("NO convergence after 80 rounds")
