"""From-scratch PPO trainer for the hierarchical gait controller.

Two policy streams are trained by the same machinery: the low-level
action policy sees one transition per 100 Hz tick; the high-level period
policy sees one transition per 20 Hz decision window, with the window's
reward being the sum of the low-level rewards inside it and a discount of
gamma**steps_per_decision. Episodes are truncated (bootstrapped) at the
episode cap and at iteration boundaries, and terminated (no bootstrap)
on falls or simulation faults.

Value targets can reach thousands at this reward scale, so each value net
regresses normalized returns against running mean/std statistics; raw
rewards in the buffer are never rescaled.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import config_hash
from .controller import BatchController, ControllerConfig
from .costs import (
    CostWeights,
    Curriculum,
    N_TERMS,
    compute_cost_terms,
    curriculum_update,
)
from .cpg import GaitKind
from .dynamics import RobotModel, SimBatch, yaw_of
from .dynamics import reset as reset_robot
from .policy import GaussianPolicy, Mlp, create_value_net, save_checkpoint

FAULT_REWARD = -1.0e4  # substituted when a tick's reward is non-finite


class TrainingFault(RuntimeError):
    """Raised when an update produces non-finite losses and must abort."""


# ---------------------------------------------------------------------------
# GAE


def compute_gae(rewards, values, dones, gamma: float, lam: float):
    """Generalized advantage estimation over one rollout.

    values has one more entry than rewards: the trailing element is the
    bootstrap value of the state after the last step (zero if terminal).
    Accepts 1-D arrays or (T, N) batches. Returns (advantages, returns)
    shaped like rewards.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    dones = np.asarray(dones, dtype=float)
    t_len = rewards.shape[0]
    if values.shape[0] != t_len + 1 or dones.shape[0] != t_len:
        raise ValueError("compute_gae: need len(values) = len(rewards)+1 = len(dones)+1")
    adv = np.zeros_like(rewards)
    carry = np.zeros_like(rewards[0] if rewards.ndim > 1 else np.zeros(()))
    for t in range(t_len - 1, -1, -1):
        cont = 1.0 - dones[t]
        delta = rewards[t] + gamma * values[t + 1] * cont - values[t]
        carry = delta + gamma * lam * cont * carry
        adv[t] = carry
    return adv, adv + values[:-1]


def _gae_columns(rewards, values, next_values, boundaries, gamma: float, lam: float):
    """GAE on (T, N) arrays with explicit per-step bootstrap values.

    next_values[t] is the value of the successor state: V(s_{t+1}) while
    the episode continues or is truncated, 0 when it terminates.
    boundaries[t] = 1 whenever the episode does not continue past step t,
    which cuts the advantage recursion regardless of bootstrapping.
    """
    t_len = rewards.shape[0]
    adv = np.zeros_like(rewards)
    carry = np.zeros_like(rewards[0])
    for t in range(t_len - 1, -1, -1):
        delta = rewards[t] + gamma * next_values[t] - values[t]
        carry = delta + gamma * lam * (1.0 - boundaries[t]) * carry
        adv[t] = carry
    return adv, adv + values


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    mean = adv.mean()
    std = adv.std()
    if std < 1e-12:
        return np.zeros_like(adv)
    return (adv - mean) / std


# ---------------------------------------------------------------------------
# optimizer and helpers


class Adam:
    """Adam over a list of parameter arrays, updated in place."""

    def __init__(self, params: list, lr: float = 3e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list, lr: float | None = None) -> None:
        lr = self.lr if lr is None else lr
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p -= lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def clip_grad_norm(grads: list, max_norm: float) -> float:
    """Scale gradients in place to a global norm cap; returns the raw norm."""
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if total > max_norm and total > 0.0:
        scale = max_norm / total
        for g in grads:
            g *= scale
    return total


class RunningStat:
    """Streaming mean/std (Welford) used to normalize value targets."""

    def __init__(self):
        self.count = 0.0
        self.mean = 0.0
        self.m2 = 0.0

    @property
    def std(self) -> float:
        if self.count < 2.0:
            return 1.0
        return max(float(np.sqrt(self.m2 / self.count)), 1e-6)

    def update(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float).ravel()
        if x.size == 0:
            return
        n = float(x.size)
        mean = float(x.mean())
        m2 = float(((x - mean) ** 2).sum())
        delta = mean - self.mean
        total = self.count + n
        self.m2 += m2 + delta * delta * self.count * n / total
        self.mean += delta * n / total
        self.count = total

    def normalize(self, x):
        return (x - self.mean) / self.std

    def unnormalize(self, x):
        return x * self.std + self.mean


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run needs; flat and file-loadable."""

    mode: str = "single_gait"  # single_gait | multi_gait | baseline
    gait: str = "trot"
    v_min: float = 0.1
    v_max: float = 1.5
    gamma: float = 0.99
    lam: float = 0.95
    clip_eps: float = 0.2
    lr: float = 3e-4
    lr_decay: bool = True
    epochs: int = 4
    minibatch: int = 512
    n_envs: int = 16
    steps_per_iter: int = 8192
    iterations: int = 100
    episode_ticks: int = 400
    k_c0: float = 0.3
    k_d: float = 0.999
    seed: int = 0
    entropy_coef: float = 0.0
    init_std: float = 0.12
    init_std_high: float = 0.05
    max_grad_norm: float = 0.5
    hidden_low: tuple = (128, 128)
    hidden_high: tuple = (128,)
    perturb_scale: float = 0.05
    checkpoint_every: int = 0  # extra periodic checkpoints; 0 = first and last only
    leg_phase_cost_as_printed: bool = False
    stance_on_negative: bool = True

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0 and 0.0 < self.lam <= 1.0):
            raise ValueError("gamma and lam must be in (0, 1]")
        if not self.clip_eps > 0.0:
            raise ValueError("clip_eps must be positive")
        if not (0.0 < self.v_min <= self.v_max <= 1.5):
            raise ValueError("velocity range must satisfy 0 < v_min <= v_max <= 1.5")
        if self.steps_per_iter % self.n_envs != 0:
            raise ValueError("steps_per_iter must be divisible by n_envs")
        if self.mode not in ("single_gait", "multi_gait", "baseline"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.gait not in ("trot", "pace", "bound"):
            raise ValueError(f"unknown gait {self.gait!r}")
        for name in ("epochs", "minibatch", "n_envs", "episode_ticks"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not (self.init_std > 0.0 and self.init_std_high > 0.0):
            raise ValueError("init_std and init_std_high must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")

    @property
    def ticks_per_env(self) -> int:
        return self.steps_per_iter // self.n_envs

    @property
    def gait_kind(self) -> GaitKind:
        return GaitKind(self.gait)

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            out[name] = tuple(v) if isinstance(v, (tuple, list)) else v
        return out

    @classmethod
    def from_dict(cls, values: dict) -> "TrainConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown training config keys: {sorted(unknown)}")
        fixed = dict(values)
        for key in ("hidden_low", "hidden_high"):
            if key in fixed:
                fixed[key] = tuple(int(x) for x in np.atleast_1d(fixed[key]))
        return cls(**fixed)

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        from .config import load_flat_config

        return cls.from_dict(load_flat_config(path))


@dataclass
class RolloutBuffer:
    """One iteration of experience for both policy streams.

    Low-stream arrays are (T, N, ...) over ticks and environments; the
    high stream is flattened to (M, ...) decision windows. Actions are the
    pre-clamp Gaussian samples the log-probabilities refer to.
    """

    obs: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    next_values: np.ndarray
    boundaries: np.ndarray
    cost_terms: np.ndarray
    high_obs: np.ndarray
    high_actions: np.ndarray
    high_log_probs: np.ndarray
    high_rewards: np.ndarray
    high_values: np.ndarray
    high_next_values: np.ndarray
    high_boundaries: np.ndarray
    k_c: float
    n_episodes: int = 0
    episode_ticks_total: int = 0
    fault_count: int = 0

    @property
    def size(self) -> int:
        return int(self.rewards.size)

    def mean_reward(self) -> float:
        return float(self.rewards.mean()) if self.rewards.size else 0.0

    def mean_cost_terms(self) -> np.ndarray:
        if self.cost_terms.size == 0:
            return np.zeros(N_TERMS)
        return self.cost_terms.reshape(-1, N_TERMS).mean(axis=0)


def _empty_high():
    return (
        np.zeros((0, 1)),
        np.zeros((0, 1)),
        np.zeros(0),
        np.zeros(0),
        np.zeros(0),
        np.zeros(0),
        np.zeros(0),
    )


# ---------------------------------------------------------------------------
# the trainer


class Trainer:
    """Owns simulators, controllers, policies, optimizers, and the loop."""

    def __init__(self, tc: TrainConfig, out_dir=None):
        self.tc = tc
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.model = RobotModel()
        ctl_mode = tc.mode
        self.ctl_config = ControllerConfig(
            mode=ctl_mode,
            gait=tc.gait_kind,
            stance_on_negative=tc.stance_on_negative,
        )
        self.uses_high = self.ctl_config.uses_cpg
        self.sim = SimBatch(self.model, tc.n_envs)
        self.ctl = BatchController(self.ctl_config, self.model, tc.n_envs)

        ss = np.random.SeedSequence(tc.seed)
        (s_low, s_high, s_vlow, s_vhigh, s_act, s_cmd, s_reset, s_shuffle) = ss.spawn(8)
        lo, hi = self.ctl_config.low_bounds(self.model)
        # Start the policy mean at a neutral stance rather than the middle of
        # each action range: small swing amplitude with the calves at their
        # nominal standing angle (or all eight joints nominal in baseline
        # mode). The range midpoints command a deep crouch that tips the
        # robot over before it can collect any useful experience.
        if self.ctl_config.uses_cpg:
            mean_low = np.concatenate([[0.2], self.model.nominal_joint_angles[4:]])
        else:
            mean_low = self.model.nominal_joint_angles.copy()
        self.policy_low = GaussianPolicy.create(
            self.ctl_config.obs_dim, list(tc.hidden_low), lo, hi,
            np.random.default_rng(s_low), init_std=tc.init_std, init_mean=mean_low,
        )
        self.value_low = create_value_net(
            self.ctl_config.obs_dim, list(tc.hidden_low), np.random.default_rng(s_vlow)
        )
        if self.uses_high:
            plo, phi = self.ctl_config.high_bounds()
            # A short stride period keeps the roll axis inside its stability
            # window; the midpoint of the period range is too slow to catch
            # the trunk once it starts tipping sideways. The tighter noise
            # keeps the stride cadence consistent enough for the low-level
            # policy to learn balance under it.
            self.policy_high = GaussianPolicy.create(
                1, list(tc.hidden_high), plo, phi,
                np.random.default_rng(s_high), init_std=tc.init_std_high,
                init_mean=np.array([0.3]),
            )
            self.value_high = create_value_net(
                1, list(tc.hidden_high), np.random.default_rng(s_vhigh)
            )
        else:
            self.policy_high = None
            self.value_high = None

        self.opt_low = Adam(self.policy_low.params(), tc.lr)
        self.opt_vlow = Adam(self.value_low.params(), tc.lr)
        if self.uses_high:
            self.opt_high = Adam(self.policy_high.params(), tc.lr)
            self.opt_vhigh = Adam(self.value_high.params(), tc.lr)

        self.rng_act = np.random.default_rng(s_act)
        self.rng_cmd = np.random.default_rng(s_cmd)
        self.rng_reset = np.random.default_rng(s_reset)
        self.rng_shuffle = np.random.default_rng(s_shuffle)

        self.curriculum = Curriculum(tc.k_c0, tc.k_d)
        self.weights = CostWeights()
        if tc.mode == "baseline":
            self.weights = self.weights.with_leg_phase_disabled()
        self.vstat_low = RunningStat()
        self.vstat_high = RunningStat()

        self.episode_tick = np.zeros(tc.n_envs, dtype=np.int64)
        self.iteration = 0
        self.steps_done = 0
        for i in range(tc.n_envs):
            self._reset_env(i)

    # -- environment plumbing --

    def _sample_command(self) -> float:
        return float(self.rng_cmd.uniform(self.tc.v_min, self.tc.v_max))

    def _reset_env(self, i: int) -> None:
        seed = int(self.rng_reset.integers(0, 2**62))
        state = reset_robot(self.model, seed, self.tc.perturb_scale)
        self.sim.set_state(i, state)
        self.ctl.reset_envs(np.array([i]), self._sample_command())
        self.episode_tick[i] = 0

    def _value_raw(self, net: Mlp, stat: RunningStat, obs: np.ndarray) -> np.ndarray:
        return stat.unnormalize(net(obs)[:, 0])

    def _yaw_aligned(self, lin_vel: np.ndarray) -> np.ndarray:
        yaw = yaw_of(self.sim.quat)
        c, s = np.cos(yaw), np.sin(yaw)
        out = np.empty_like(lin_vel)
        out[:, 0] = c * lin_vel[:, 0] + s * lin_vel[:, 1]
        out[:, 1] = -s * lin_vel[:, 0] + c * lin_vel[:, 1]
        out[:, 2] = lin_vel[:, 2]
        return out

    # -- rollout collection --

    def collect(self, ticks: int | None = None, record_states: list | None = None) -> RolloutBuffer:
        """Run the hierarchical loop for ticks per env; returns a full buffer.

        record_states, when given, receives per-tick dictionaries with the
        post-step robot states and every cost input, so tests can recompute
        rewards independently.
        """
        tc = self.tc
        t_len = tc.ticks_per_env if ticks is None else ticks
        n = tc.n_envs
        if t_len == 0:
            z = np.zeros((0, n))
            return RolloutBuffer(
                obs=np.zeros((0, n, self.ctl_config.obs_dim)),
                actions=np.zeros((0, n, self.ctl_config.act_dim)),
                log_probs=z.copy(), rewards=z.copy(), values=z.copy(),
                next_values=z.copy(), boundaries=z.copy(),
                cost_terms=np.zeros((0, n, N_TERMS)),
                high_obs=_empty_high()[0], high_actions=_empty_high()[1],
                high_log_probs=np.zeros(0), high_rewards=np.zeros(0),
                high_values=np.zeros(0), high_next_values=np.zeros(0),
                high_boundaries=np.zeros(0), k_c=self.curriculum.k_c,
            )

        obs_b = np.zeros((t_len, n, self.ctl_config.obs_dim))
        act_b = np.zeros((t_len, n, self.ctl_config.act_dim))
        logp_b = np.zeros((t_len, n))
        rew_b = np.zeros((t_len, n))
        val_b = np.zeros((t_len, n))
        nval_b = np.zeros((t_len, n))
        bound_b = np.zeros((t_len, n))
        terms_b = np.zeros((t_len, n, N_TERMS))

        # per-env lists of closed decision windows, kept separate so the
        # GAE recursion never chains across environments
        h_rows = [[] for _ in range(n)]
        h_open = np.zeros(n, dtype=bool)
        h_cur_obs = np.zeros((n, 1))
        h_cur_act = np.zeros((n, 1))
        h_cur_logp = np.zeros(n)
        h_cur_val = np.zeros(n)
        h_accum = np.zeros(n)

        n_episodes = 0
        episode_ticks_total = 0
        fault_count = 0
        w = self.weights.w
        cmd_ang = np.zeros((n, 3))

        for t in range(t_len):
            # high-level decisions
            if self.uses_high:
                due = self.ctl.decision_due()
                if np.any(due):
                    idx = np.nonzero(due)[0]
                    hobs = self.ctl.high_observation()[idx]
                    hval = self._value_raw(self.value_high, self.vstat_high, hobs)
                    executed, raw, logp = self.policy_high.sample(hobs, self.rng_act)
                    # close the previous window of each env; its successor value
                    # is the value of the new decision state
                    for k, j in enumerate(idx):
                        if h_open[j]:
                            h_rows[j].append((
                                h_cur_obs[j].copy(), h_cur_act[j].copy(),
                                h_cur_logp[j], h_accum[j], h_cur_val[j],
                                hval[k], 0.0,
                            ))
                        h_cur_obs[j] = hobs[k]
                        h_cur_act[j] = raw[k]
                        h_cur_logp[j] = logp[k]
                        h_cur_val[j] = hval[k]
                        h_accum[j] = 0.0
                        h_open[j] = True
                    self.ctl.apply_period(executed[:, 0], idx=idx)

            # low-level tick
            obs = self.ctl.observation(self.sim)
            values = self._value_raw(self.value_low, self.vstat_low, obs)
            executed, raw, logp = self.policy_low.sample(obs, self.rng_act)
            targets = self.ctl.joint_targets(executed)
            torques = self.sim.pd_torques(targets, self.ctl_config.gains)
            prev_action = self.ctl.prev_action.copy()
            leg_phase = (
                self.ctl.leg_indicator() if self.ctl_config.uses_cpg else self.sim.contact.copy()
            )
            self.sim.step(torques, self.ctl_config.dt)

            lin_yaw = self._yaw_aligned(self.sim.lin_vel)
            cmd_lin = np.zeros((n, 3))
            cmd_lin[:, 0] = self.ctl.command
            terms = compute_cost_terms(
                lin_yaw,
                self.sim.ang_vel,
                cmd_lin,
                cmd_ang,
                torques,
                self.sim.qd,
                self.sim.foot_pos[..., 2],
                self.sim.foot_vel[..., 2],
                self.sim.foot_vel[..., :2],
                self.sim.contact,
                self.sim.gravity_body,
                executed,
                prev_action,
                leg_phase,
                self.curriculum.k_c,
                leg_phase_cost_as_printed=self.tc.leg_phase_cost_as_printed,
            )
            rewards = -(terms @ w)
            bad_reward = ~np.isfinite(rewards)
            if np.any(bad_reward):
                fault_count += int(bad_reward.sum())
                rewards = np.where(bad_reward, FAULT_REWARD, rewards)
                terms = np.where(np.isfinite(terms), terms, 0.0)

            self.ctl.advance(executed, targets)
            self.episode_tick += 1

            fallen = self.sim.fallen()
            fault = self.ctl.fault | bad_reward
            done = fallen | fault
            trunc = (self.episode_tick >= tc.episode_ticks) & ~done
            boundary = done | trunc
            last_tick = t == t_len - 1

            if record_states is not None:
                record_states.append(
                    {
                        "states": [self.sim.get_state(i) for i in range(n)],
                        "lin_yaw": lin_yaw.copy(),
                        "command": self.ctl.command.copy(),
                        "torques": torques.copy(),
                        "action": executed.copy(),
                        "prev_action": prev_action.copy(),
                        "leg_phase": leg_phase.copy(),
                        "k_c": self.curriculum.k_c,
                    }
                )

            obs_b[t] = obs
            act_b[t] = raw
            logp_b[t] = logp
            rew_b[t] = rewards
            val_b[t] = values
            terms_b[t] = terms
            bound_b[t] = boundary.astype(float)

            # successor values for GAE: terminal -> 0, truncated or
            # iteration-final -> V(next state); defaults are filled from
            # the next tick's values below
            if np.any(boundary) or last_tick:
                need = np.nonzero(boundary | last_tick)[0]
                obs_after = self.ctl.observation(self.sim)[need]
                v_after = self._value_raw(self.value_low, self.vstat_low, obs_after)
                for k, j in enumerate(need):
                    if done[j]:
                        nval_b[t, j] = 0.0
                    else:
                        nval_b[t, j] = v_after[k]

            if self.uses_high:
                h_accum += rewards
                for j in np.nonzero(boundary)[0]:
                    if h_open[j]:
                        # truncation bootstraps with the value of the same
                        # command observation; termination gets zero
                        h_rows[j].append((
                            h_cur_obs[j].copy(), h_cur_act[j].copy(),
                            h_cur_logp[j], h_accum[j], h_cur_val[j],
                            0.0 if done[j] else h_cur_val[j], 1.0,
                        ))
                        h_open[j] = False

            for j in np.nonzero(boundary)[0]:
                n_episodes += 1
                episode_ticks_total += int(self.episode_tick[j])
                self._reset_env(j)

        # fill non-boundary successor values from the next tick
        for t in range(t_len - 1):
            rows = bound_b[t] == 0.0
            nval_b[t, rows] = val_b[t + 1, rows]

        self.steps_done += t_len * n

        # concatenate env by env, marking each env's final window as a
        # truncation so the recursion falls back to its stored bootstrap
        rows = []
        for j in range(n):
            if not h_rows[j]:
                continue
            last = h_rows[j][-1]
            h_rows[j][-1] = last[:6] + (1.0,)
            rows.extend(h_rows[j])
        if rows:
            high = (
                np.stack([r[0] for r in rows]),
                np.stack([r[1] for r in rows]),
                np.array([r[2] for r in rows]),
                np.array([r[3] for r in rows]),
                np.array([r[4] for r in rows]),
                np.array([r[5] for r in rows]),
                np.array([r[6] for r in rows]),
            )
        else:
            high = _empty_high()

        return RolloutBuffer(
            obs=obs_b, actions=act_b, log_probs=logp_b, rewards=rew_b,
            values=val_b, next_values=nval_b, boundaries=bound_b,
            cost_terms=terms_b,
            high_obs=high[0], high_actions=high[1], high_log_probs=high[2],
            high_rewards=high[3], high_values=high[4], high_next_values=high[5],
            high_boundaries=high[6], k_c=self.curriculum.k_c,
            n_episodes=n_episodes, episode_ticks_total=episode_ticks_total,
            fault_count=fault_count,
        )

    # -- updates --

    def _update_stream(
        self, policy, value_net, opt_p, opt_v, obs, actions, logp_old,
        adv, returns, vstat, lr,
    ) -> dict:
        tc = self.tc
        n = obs.shape[0]
        if n == 0:
            return {"kl": 0.0, "clip_fraction": 0.0, "policy_loss": 0.0, "value_loss": 0.0}
        vstat.update(returns)
        ret_norm = vstat.normalize(returns)
        adv_n = normalize_advantages(adv)

        snap_p = [p.copy() for p in policy.params()]
        snap_v = [p.copy() for p in value_net.params()]
        kl_sum = clip_sum = ploss_sum = vloss_sum = 0.0
        batches = 0
        try:
            for _ in range(tc.epochs):
                order = self.rng_shuffle.permutation(n)
                for start in range(0, n, tc.minibatch):
                    mb = order[start : start + tc.minibatch]
                    m = mb.size
                    logp_new, ent, cache = policy.log_prob_entropy(obs[mb], actions[mb])
                    ratio = np.exp(logp_new - logp_old[mb])
                    s1 = ratio * adv_n[mb]
                    s2 = np.clip(ratio, 1.0 - tc.clip_eps, 1.0 + tc.clip_eps) * adv_n[mb]
                    ploss = -float(np.mean(np.minimum(s1, s2)))
                    ploss -= tc.entropy_coef * float(np.mean(ent))
                    use_s1 = s1 <= s2
                    d_logp = np.where(use_s1, -adv_n[mb] * ratio, 0.0) / m
                    d_ent = np.full(m, -tc.entropy_coef / m)
                    (gw, gb), g_logstd = policy.backward(cache, d_logp, d_ent)
                    grads = gw + gb + [g_logstd]
                    if not all(np.all(np.isfinite(g)) for g in grads) or not np.isfinite(ploss):
                        raise TrainingFault("non-finite policy gradients")
                    clip_grad_norm(grads, tc.max_grad_norm)
                    opt_p.step(grads, lr)

                    pred, vcache = value_net.forward(obs[mb])
                    err = pred[:, 0] - ret_norm[mb]
                    vloss = 0.5 * float(np.mean(err * err))
                    (vw, vb), _ = value_net.backward(vcache, (err / m)[:, None])
                    vgrads = vw + vb
                    if not all(np.all(np.isfinite(g)) for g in vgrads) or not np.isfinite(vloss):
                        raise TrainingFault("non-finite value gradients")
                    clip_grad_norm(vgrads, tc.max_grad_norm)
                    opt_v.step(vgrads, lr)

                    kl_sum += float(np.mean(logp_old[mb] - logp_new))
                    clip_sum += float(np.mean(np.abs(ratio - 1.0) > tc.clip_eps))
                    ploss_sum += ploss
                    vloss_sum += vloss
                    batches += 1
        except TrainingFault:
            for p, s in zip(policy.params(), snap_p):
                p[...] = s
            for p, s in zip(value_net.params(), snap_v):
                p[...] = s
            raise
        return {
            "kl": kl_sum / batches,
            "clip_fraction": clip_sum / batches,
            "policy_loss": ploss_sum / batches,
            "value_loss": vloss_sum / batches,
        }

    def update(self, buf: RolloutBuffer, lr: float) -> dict:
        tc = self.tc
        adv, ret = _gae_columns(
            buf.rewards, buf.values, buf.next_values, buf.boundaries, tc.gamma, tc.lam
        )
        flat = lambda a: a.reshape(-1, a.shape[-1]) if a.ndim == 3 else a.reshape(-1)
        stats = self._update_stream(
            self.policy_low, self.value_low, self.opt_low, self.opt_vlow,
            flat(buf.obs), flat(buf.actions), flat(buf.log_probs),
            flat(adv), flat(ret), self.vstat_low, lr,
        )
        if self.uses_high and buf.high_obs.shape[0] > 0:
            gamma_h = tc.gamma ** self.ctl_config.steps_per_decision
            adv_h, ret_h = _gae_columns(
                buf.high_rewards[:, None], buf.high_values[:, None],
                buf.high_next_values[:, None], buf.high_boundaries[:, None],
                gamma_h, tc.lam,
            )
            hstats = self._update_stream(
                self.policy_high, self.value_high, self.opt_high, self.opt_vhigh,
                buf.high_obs, buf.high_actions, buf.high_log_probs,
                adv_h[:, 0], ret_h[:, 0], self.vstat_high, lr,
            )
            stats.update({f"high_{k}": v for k, v in hstats.items()})
        else:
            stats.update({"high_kl": 0.0, "high_clip_fraction": 0.0,
                          "high_policy_loss": 0.0, "high_value_loss": 0.0})
        return stats

    # -- checkpoints and metrics --

    def _checkpoint_meta(self) -> dict:
        from . import __version__
        from .controller import OBS_VERSION
        from .cpg import gait_phase_offsets

        meta = {
            "package_version": __version__,
            "obs_version": OBS_VERSION,
            "mode": self.tc.mode,
            "gait": self.tc.gait,
            "obs_dim": self.ctl_config.obs_dim,
            "act_dim": self.ctl_config.act_dim,
            "iteration": self.iteration,
            "k_c": self.curriculum.k_c,
            "seed": self.tc.seed,
            "config_hash": config_hash(self.tc.to_dict()),
            "stance_on_negative": self.tc.stance_on_negative,
        }
        if self.tc.mode == "single_gait":
            meta["phase_offsets"] = list(gait_phase_offsets(self.tc.gait_kind))
        return meta

    def save(self, path) -> None:
        policies = {"low": self.policy_low}
        values = {"low": self.value_low}
        if self.uses_high:
            policies["high"] = self.policy_high
            values["high"] = self.value_high
        save_checkpoint(path, policies, values, self._checkpoint_meta())

    def _lr_at(self, iteration: int) -> float:
        if not self.tc.lr_decay or self.tc.iterations <= 1:
            return self.tc.lr
        frac = 1.0 - iteration / self.tc.iterations
        return self.tc.lr * max(frac, 0.05)


METRICS_HEADER = ",".join(
    ["iteration", "mean_reward"]
    + [f"mean_c{i}" for i in range(1, N_TERMS + 1)]
    + ["k_c", "kl", "clip_fraction", "policy_loss", "value_loss",
       "high_kl", "high_clip_fraction", "high_policy_loss", "high_value_loss",
       "lr", "n_episodes", "mean_episode_ticks", "fault_count"]
)


@dataclass
class TrainResult:
    out_dir: Path | None
    checkpoints: list
    metrics_path: Path | None
    manifest_path: Path | None
    final_stats: dict
    trainer: Trainer


def train(tc: TrainConfig, out_dir=None, progress=None) -> TrainResult:
    """Full training loop: collect, GAE, update, curriculum, checkpoints.

    out_dir (optional) receives checkpoint files, metrics.csv, and a JSON
    run manifest. progress, if given, is called with the metrics dict
    after every iteration.
    """
    trainer = Trainer(tc, out_dir)
    out = trainer.out_dir
    checkpoints = []
    metrics_rows = []
    final_stats = {}
    t_start = time.monotonic()
    fault_msg = None

    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        first = out / "ckpt_000000.bin"
        trainer.save(first)
        checkpoints.append(first)

    try:
        for it in range(tc.iterations):
            lr = trainer._lr_at(it)
            buf = trainer.collect()
            stats = trainer.update(buf, lr)
            trainer.iteration = it + 1
            mean_terms = buf.mean_cost_terms()
            row = {
                "iteration": it + 1,
                "mean_reward": buf.mean_reward(),
                **{f"mean_c{i + 1}": float(mean_terms[i]) for i in range(N_TERMS)},
                "k_c": trainer.curriculum.k_c,
                "kl": stats["kl"],
                "clip_fraction": stats["clip_fraction"],
                "policy_loss": stats["policy_loss"],
                "value_loss": stats["value_loss"],
                "high_kl": stats["high_kl"],
                "high_clip_fraction": stats["high_clip_fraction"],
                "high_policy_loss": stats["high_policy_loss"],
                "high_value_loss": stats["high_value_loss"],
                "lr": lr,
                "n_episodes": buf.n_episodes,
                "mean_episode_ticks": (
                    buf.episode_ticks_total / buf.n_episodes if buf.n_episodes else 0.0
                ),
                "fault_count": buf.fault_count,
            }
            metrics_rows.append(row)
            final_stats = row
            trainer.curriculum = curriculum_update(trainer.curriculum)
            if progress is not None:
                progress(row)
            if out is not None and tc.checkpoint_every > 0 and (it + 1) % tc.checkpoint_every == 0:
                path = out / f"ckpt_{it + 1:06d}.bin"
                trainer.save(path)
                checkpoints.append(path)
    except TrainingFault as err:
        fault_msg = str(err)

    metrics_path = manifest_path = None
    if out is not None:
        last = out / f"ckpt_{trainer.iteration:06d}.bin"
        if last not in checkpoints:
            trainer.save(last)
            checkpoints.append(last)
        final_link = out / "ckpt_final.bin"
        trainer.save(final_link)
        metrics_path = out / "metrics.csv"
        with open(metrics_path, "w", encoding="utf-8") as fh:
            fh.write(METRICS_HEADER + "\n")
            keys = METRICS_HEADER.split(",")
            for row in metrics_rows:
                fh.write(",".join(repr(float(row[k])) for k in keys) + "\n")
        manifest_path = out / "manifest.json"
        manifest = {
            "kind": "train",
            "config": {k: list(v) if isinstance(v, tuple) else v
                       for k, v in tc.to_dict().items()},
            "config_hash": config_hash(tc.to_dict()),
            "seed": tc.seed,
            "iterations_completed": trainer.iteration,
            "env_steps": trainer.steps_done,
            "wall_time_s": time.monotonic() - t_start,
            "checkpoints": [p.name for p in checkpoints],
            "fault": fault_msg,
            "final_stats": final_stats,
        }
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")

    if fault_msg is not None:
        raise TrainingFault(
            f"training aborted after iteration {trainer.iteration}: {fault_msg}"
        )
    return TrainResult(out, checkpoints, metrics_path, manifest_path, final_stats, trainer)


def ppo_update(policy, value_net, buffer: RolloutBuffer, tc: TrainConfig, lr=None, rng=None):
    """Single-stream PPO update against a buffer's low stream.

    A convenience wrapper over the trainer's update kernel for tests and
    small experiments; train() is the full two-stream loop.
    """
    trainer = Trainer.__new__(Trainer)
    trainer.tc = tc
    trainer.rng_shuffle = rng if rng is not None else np.random.default_rng(tc.seed)
    adv, ret = _gae_columns(
        buffer.rewards, buffer.values, buffer.next_values, buffer.boundaries,
        tc.gamma, tc.lam,
    )
    flat = lambda a: a.reshape(-1, a.shape[-1]) if a.ndim == 3 else a.reshape(-1)
    opt_p = Adam(policy.params(), tc.lr)
    opt_v = Adam(value_net.params(), tc.lr)
    return trainer._update_stream(
        policy, value_net, opt_p, opt_v,
        flat(buffer.obs), flat(buffer.actions), flat(buffer.log_probs),
        flat(adv), flat(ret), RunningStat(), tc.lr if lr is None else lr,
    )


def collect_rollouts(trainer: Trainer, ticks: int | None = None,
                     record_states: list | None = None) -> RolloutBuffer:
    """Collect experience with the trainer's current policy snapshots."""
    return trainer.collect(ticks, record_states)
