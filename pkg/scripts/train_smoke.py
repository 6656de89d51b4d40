"""Pre-build the fixed-command trot run used by the acceptance suite."""
import sys
from quadgait.bench import cached_train
from quadgait.ppo import TrainConfig


def show(m):
    print("it {iteration:3d} rew {mean_reward:8.2f} ep {mean_episode_ticks:6.1f} "
          "c1 {mean_c1:7.3f} c2 {mean_c2:7.3f} c10 {mean_c10:7.3f} "
          "kc {k_c:5.3f}".format(**m))
    sys.stdout.flush()


tc = TrainConfig(mode="single_gait", gait="trot", v_min=0.6, v_max=0.6,
                 seed=0, iterations=244)
out, manifest = cached_train(tc, "runs/acceptance", "smoke_trot", progress=show)
print("run dir:", out)
print("steps:", manifest["env_steps"], "wall:", manifest["wall_time_s"])
print("final:", manifest["final_stats"])
