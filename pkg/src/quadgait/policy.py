"""Small MLP policies and value functions with hand-rolled backprop.

Networks are plain numpy: LeakyReLU hidden layers, linear output,
orthogonal initialization. The stochastic policy is a diagonal Gaussian
whose mean is squashed into the action bounds by a sigmoid affine map and
whose log standard deviation is a free state-independent parameter.

Checkpoints are a single binary file: one JSON header line describing the
arrays, then the raw little-endian float64 payloads in header order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

LOG_2PI = float(np.log(2.0 * np.pi))


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def orthogonal_init(n_in: int, n_out: int, gain: float, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal weight matrix (n_in, n_out) scaled by gain."""
    a = rng.standard_normal((max(n_in, n_out), min(n_in, n_out)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))  # fix the sign ambiguity so init is rng-determined
    if n_in < n_out:
        q = q.T
    return np.ascontiguousarray(gain * q[:n_in, :n_out])


@dataclass
class Mlp:
    """Fully connected net, y = leaky chain; the final layer is linear."""

    weights: list
    biases: list
    leak: float = 0.01

    @classmethod
    def create(
        cls,
        sizes: list[int],
        rng: np.random.Generator,
        hidden_gain: float = float(np.sqrt(2.0)),
        out_gain: float = 0.01,
        leak: float = 0.01,
    ) -> "Mlp":
        weights, biases = [], []
        for i in range(len(sizes) - 1):
            gain = out_gain if i == len(sizes) - 2 else hidden_gain
            weights.append(orthogonal_init(sizes[i], sizes[i + 1], gain, rng))
            biases.append(np.zeros(sizes[i + 1]))
        return cls(weights, biases, leak)

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def forward(self, x: np.ndarray):
        """Returns (output, cache); cache feeds backward()."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        acts = [x]
        pres = []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pres.append(z)
            h = z if i == last else np.where(z > 0.0, z, self.leak * z)
            acts.append(h)
        return h, (acts, pres)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, dy: np.ndarray):
        """Gradients of sum(dy * output) w.r.t. parameters and input."""
        acts, pres = cache
        last = len(self.weights) - 1
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.weights)
        dh = np.asarray(dy, dtype=float)
        for i in range(last, -1, -1):
            dz = dh if i == last else dh * np.where(pres[i] > 0.0, 1.0, self.leak)
            grads_w[i] = acts[i].T @ dz
            grads_b[i] = dz.sum(axis=0)
            dh = dz @ self.weights[i].T
        return (grads_w, grads_b), dh

    def params(self) -> list:
        return list(self.weights) + list(self.biases)

    def copy(self) -> "Mlp":
        return Mlp([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.leak)


@dataclass
class GaussianPolicy:
    """Diagonal Gaussian over a box: squashed mean, free log-std.

    Sampling draws from the unsquashed Gaussian around the squashed mean
    and clamps the executed action to the bounds; log-probabilities are
    always evaluated at the pre-clamp sample, which keeps the density
    exact for the importance ratios.
    """

    net: Mlp
    log_std: np.ndarray
    act_lo: np.ndarray
    act_hi: np.ndarray

    @classmethod
    def create(
        cls,
        obs_dim: int,
        hidden: list[int],
        act_lo,
        act_hi,
        rng: np.random.Generator,
        init_std: float = 0.4,
        init_mean=None,
    ) -> "GaussianPolicy":
        """init_mean, when given, sets the output-layer bias so the squashed
        mean starts at that action for every observation (the output weights
        are near zero at init). Values are pulled 2% into the box so the
        logit stays finite.
        """
        act_lo = np.asarray(act_lo, dtype=float)
        act_hi = np.asarray(act_hi, dtype=float)
        if act_lo.shape != act_hi.shape or np.any(act_lo >= act_hi):
            raise ValueError("action bounds must satisfy lo < hi elementwise")
        net = Mlp.create([obs_dim] + list(hidden) + [act_lo.size], rng)
        if init_mean is not None:
            frac = (np.asarray(init_mean, dtype=float) - act_lo) / (act_hi - act_lo)
            frac = np.clip(frac, 0.02, 0.98)
            net.biases[-1][:] = np.log(frac / (1.0 - frac))
        return cls(net, np.full(act_lo.size, np.log(init_std)), act_lo, act_hi)

    @property
    def act_dim(self) -> int:
        return self.act_lo.size

    @property
    def obs_dim(self) -> int:
        return self.net.sizes[0]

    def mean(self, obs: np.ndarray):
        raw, cache = self.net.forward(obs)
        s = sigmoid(raw)
        mu = self.act_lo + (self.act_hi - self.act_lo) * s
        return mu, s, cache

    def deterministic(self, obs: np.ndarray) -> np.ndarray:
        return self.mean(obs)[0]

    def sample(self, obs: np.ndarray, rng: np.random.Generator):
        """Returns (executed action, pre-clamp sample, log-prob of the sample)."""
        mu, _, _ = self.mean(obs)
        sigma = np.exp(self.log_std)
        raw_sample = mu + sigma * rng.standard_normal(mu.shape)
        executed = np.clip(raw_sample, self.act_lo, self.act_hi)
        z = (raw_sample - mu) / sigma
        logp = -0.5 * np.sum(z * z, axis=-1) - np.sum(self.log_std) - 0.5 * self.act_dim * LOG_2PI
        return executed, raw_sample, logp

    def log_prob_entropy(self, obs: np.ndarray, actions: np.ndarray):
        """Log-density of pre-clamp actions and per-sample entropy, with cache."""
        mu, s, net_cache = self.mean(obs)
        sigma = np.exp(self.log_std)
        z = (np.atleast_2d(actions) - mu) / sigma
        logp = -0.5 * np.sum(z * z, axis=-1) - np.sum(self.log_std) - 0.5 * self.act_dim * LOG_2PI
        ent = np.full(logp.shape, np.sum(self.log_std) + 0.5 * self.act_dim * (1.0 + LOG_2PI))
        return logp, ent, (net_cache, s, z, sigma)

    def backward(self, cache, d_logp: np.ndarray, d_entropy: np.ndarray | None = None):
        """Parameter gradients of sum(d_logp*logp) + sum(d_entropy*entropy)."""
        net_cache, s, z, sigma = cache
        d_logp = np.asarray(d_logp, dtype=float)
        d_mu = d_logp[:, None] * z / sigma
        d_raw = d_mu * (self.act_hi - self.act_lo) * s * (1.0 - s)
        net_grads, _ = self.net.backward(net_cache, d_raw)
        d_log_std = np.sum(d_logp[:, None] * (z * z - 1.0), axis=0)
        if d_entropy is not None:
            d_log_std = d_log_std + np.sum(d_entropy)
        return net_grads, d_log_std

    def params(self) -> list:
        return self.net.params() + [self.log_std]

    def copy(self) -> "GaussianPolicy":
        return GaussianPolicy(
            self.net.copy(), self.log_std.copy(), self.act_lo.copy(), self.act_hi.copy()
        )


def create_value_net(obs_dim: int, hidden: list[int], rng: np.random.Generator) -> Mlp:
    return Mlp.create([obs_dim] + list(hidden) + [1], rng, out_gain=1.0)


# ---------------------------------------------------------------------------
# checkpoint i/o

CHECKPOINT_MAGIC = "quadgait-checkpoint"
CHECKPOINT_VERSION = 1


def _policy_arrays(prefix: str, policy: GaussianPolicy) -> dict:
    arrays = {}
    for i, (w, b) in enumerate(zip(policy.net.weights, policy.net.biases)):
        arrays[f"{prefix}.w{i}"] = w
        arrays[f"{prefix}.b{i}"] = b
    arrays[f"{prefix}.log_std"] = policy.log_std
    arrays[f"{prefix}.act_lo"] = policy.act_lo
    arrays[f"{prefix}.act_hi"] = policy.act_hi
    return arrays


def _mlp_arrays(prefix: str, net: Mlp) -> dict:
    arrays = {}
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"{prefix}.w{i}"] = w
        arrays[f"{prefix}.b{i}"] = b
    return arrays


def save_checkpoint(path, policies: dict, value_nets: dict, meta: dict) -> None:
    """Write all nets to one binary file with a JSON header line.

    policies maps name -> GaussianPolicy, value_nets maps name -> Mlp.
    meta must be JSON-serializable; it rides along untouched.
    """
    arrays: dict[str, np.ndarray] = {}
    layout = {}
    for name, pol in policies.items():
        arrays.update(_policy_arrays(f"policy.{name}", pol))
        layout[f"policy.{name}"] = {"sizes": pol.net.sizes, "leak": pol.net.leak}
    for name, net in value_nets.items():
        arrays.update(_mlp_arrays(f"value.{name}", net))
        layout[f"value.{name}"] = {"sizes": net.sizes, "leak": net.leak}
    header = {
        "magic": CHECKPOINT_MAGIC,
        "version": CHECKPOINT_VERSION,
        "layout": layout,
        "arrays": [{"name": k, "shape": list(v.shape)} for k, v in arrays.items()],
        "meta": meta,
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        for v in arrays.values():
            fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Inverse of save_checkpoint: returns (policies, value_nets, meta)."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("magic") != CHECKPOINT_MAGIC:
            raise ValueError(f"{path} is not a checkpoint file")
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {header.get('version')}")
        arrays = {}
        for spec in header["arrays"]:
            shape = tuple(spec["shape"])
            n = int(np.prod(shape)) if shape else 1
            buf = fh.read(8 * n)
            if len(buf) != 8 * n:
                raise ValueError("truncated checkpoint payload")
            arrays[spec["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()

    def build_mlp(prefix, layout):
        sizes = layout["sizes"]
        weights = [arrays[f"{prefix}.w{i}"] for i in range(len(sizes) - 1)]
        biases = [arrays[f"{prefix}.b{i}"] for i in range(len(sizes) - 1)]
        return Mlp(weights, biases, layout["leak"])

    policies, value_nets = {}, {}
    for key, layout in header["layout"].items():
        kind, name = key.split(".", 1)
        if kind == "policy":
            policies[name] = GaussianPolicy(
                build_mlp(key, layout),
                arrays[f"{key}.log_std"],
                arrays[f"{key}.act_lo"],
                arrays[f"{key}.act_hi"],
            )
        else:
            value_nets[name] = build_mlp(key, layout)
    return policies, value_nets, header["meta"]
