import numpy as np
import pytest

from quadgait.policy import (
    LOG_2PI,
    GaussianPolicy,
    Mlp,
    create_value_net,
    load_checkpoint,
    orthogonal_init,
    save_checkpoint,
    sigmoid,
)


def reference_forward(net, x):
    """Second, deliberately naive forward pass used as an oracle."""
    h = np.atleast_2d(x).astype(float)
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        if i < len(net.weights) - 1:
            z = np.where(z > 0, z, net.leak * z)
        h = z
    return h


def flatten_params(params):
    return np.concatenate([p.ravel() for p in params])


def test_sigmoid_stable_and_correct():
    x = np.array([-800.0, -30.0, -1.0, 0.0, 1.0, 30.0, 800.0])
    y = sigmoid(x)
    assert np.all(np.isfinite(y))
    mid = np.abs(x) < 50
    np.testing.assert_allclose(y[mid], 1.0 / (1.0 + np.exp(-x[mid])), atol=1e-15)
    assert y[0] == 0.0 and y[-1] == 1.0


@pytest.mark.parametrize("n_in,n_out", [(8, 8), (43, 128), (128, 5), (3, 64)])
def test_orthogonal_init(n_in, n_out):
    rng = np.random.default_rng(0)
    gain = np.sqrt(2.0)
    w = orthogonal_init(n_in, n_out, gain, rng)
    assert w.shape == (n_in, n_out)
    if n_in <= n_out:
        prod = (w / gain) @ (w / gain).T
    else:
        prod = (w / gain).T @ (w / gain)
    np.testing.assert_allclose(prod, np.eye(min(n_in, n_out)), atol=1e-10)


def test_orthogonal_init_deterministic_per_seed():
    a = orthogonal_init(16, 16, 1.0, np.random.default_rng(42))
    b = orthogonal_init(16, 16, 1.0, np.random.default_rng(42))
    np.testing.assert_array_equal(a, b)


def test_mlp_forward_matches_reference():
    rng = np.random.default_rng(1)
    net = Mlp.create([7, 32, 32, 3], rng)
    x = rng.normal(size=(11, 7))
    np.testing.assert_allclose(net(x), reference_forward(net, x), atol=1e-13)


def test_mlp_leak_slope():
    net = Mlp([np.eye(2)], [np.zeros(2)])
    # single linear layer: negative inputs pass through unchanged
    np.testing.assert_allclose(net(np.array([[-3.0, 4.0]])), [[-3.0, 4.0]])
    net2 = Mlp([np.eye(2), np.eye(2)], [np.zeros(2), np.zeros(2)], leak=0.01)
    np.testing.assert_allclose(net2(np.array([[-3.0, 4.0]])), [[-0.03, 4.0]])


def mlp_loss_and_grads(net, x, dy):
    out, cache = net.forward(x)
    (gw, gb), dx = net.backward(cache, dy)
    return float(np.sum(out * dy)), gw + gb, dx


def test_mlp_backward_finite_differences():
    rng = np.random.default_rng(2)
    net = Mlp.create([5, 16, 16, 4], rng, out_gain=1.0)
    x = rng.normal(size=(6, 5))
    dy = rng.normal(size=(6, 4))
    _, grads, _ = mlp_loss_and_grads(net, x, dy)
    params = net.params()
    eps = 1e-6
    for p, g in zip(params, grads):
        flat = p.ravel()
        idx = rng.choice(flat.size, size=min(10, flat.size), replace=False)
        for j in idx:
            orig = flat[j]
            flat[j] = orig + eps
            up = float(np.sum(net(x) * dy))
            flat[j] = orig - eps
            dn = float(np.sum(net(x) * dy))
            flat[j] = orig
            num = (up - dn) / (2 * eps)
            assert abs(num - g.ravel()[j]) < 1e-4 * max(1.0, abs(num)), (
                f"param grad mismatch: {num} vs {g.ravel()[j]}"
            )


def test_mlp_input_gradient():
    rng = np.random.default_rng(3)
    net = Mlp.create([4, 12, 2], rng, out_gain=1.0)
    x = rng.normal(size=(3, 4))
    dy = rng.normal(size=(3, 2))
    _, _, dx = mlp_loss_and_grads(net, x, dy)
    eps = 1e-6
    for (i, j) in [(0, 0), (1, 2), (2, 3)]:
        xp, xm = x.copy(), x.copy()
        xp[i, j] += eps
        xm[i, j] -= eps
        num = (np.sum(net(xp) * dy) - np.sum(net(xm) * dy)) / (2 * eps)
        assert abs(num - dx[i, j]) < 1e-5


def test_value_net_output_shape():
    net = create_value_net(10, [32, 32], np.random.default_rng(4))
    assert net.sizes == [10, 32, 32, 1]
    out = net(np.zeros((7, 10)))
    assert out.shape == (7, 1)


# --- Gaussian policy ---


def make_policy(seed=5, obs_dim=6, hidden=(16, 16), act_dim=3):
    rng = np.random.default_rng(seed)
    lo = -np.ones(act_dim) * 0.5
    hi = np.ones(act_dim) * 2.0
    return GaussianPolicy.create(obs_dim, list(hidden), lo, hi, rng), rng


def test_policy_mean_within_bounds():
    pol, rng = make_policy()
    obs = rng.normal(size=(50, 6)) * 10.0
    mu = pol.deterministic(obs)
    assert np.all(mu > pol.act_lo - 1e-12) and np.all(mu < pol.act_hi + 1e-12)


def test_policy_sample_statistics():
    pol, rng = make_policy()
    obs = np.zeros((20000, 6))
    executed, raw, _ = pol.sample(obs, np.random.default_rng(6))
    mu = pol.deterministic(obs[:1])[0]
    np.testing.assert_allclose(raw.mean(axis=0), mu, atol=0.02)
    np.testing.assert_allclose(raw.std(axis=0), 0.4, atol=0.02)
    assert np.all(executed >= pol.act_lo) and np.all(executed <= pol.act_hi)


def test_log_prob_matches_gaussian_density():
    from scipy import stats

    pol, rng = make_policy()
    obs = rng.normal(size=(40, 6))
    _, raw, logp = pol.sample(obs, np.random.default_rng(7))
    mu = pol.deterministic(obs)
    sigma = np.exp(pol.log_std)
    want = stats.norm.logpdf(raw, loc=mu, scale=sigma).sum(axis=1)
    np.testing.assert_allclose(logp, want, atol=1e-10)
    logp2, ent, _ = pol.log_prob_entropy(obs, raw)
    np.testing.assert_allclose(logp2, logp, atol=1e-12)
    want_ent = np.sum(pol.log_std) + 0.5 * pol.act_dim * (1.0 + LOG_2PI)
    np.testing.assert_allclose(ent, want_ent, atol=1e-12)


def test_log_prob_density_integrates_to_one():
    """1-D quadrature over a wide grid: exp(logp) has unit mass."""
    rng = np.random.default_rng(8)
    pol = GaussianPolicy.create(2, [8], [-1.0], [1.0], rng)
    obs = np.zeros((1, 2))
    grid = np.linspace(-6, 6, 20001)
    logp, _, _ = pol.log_prob_entropy(np.repeat(obs, grid.size, axis=0), grid[:, None])
    mass = np.trapezoid(np.exp(logp), grid)
    assert abs(mass - 1.0) < 1e-6


def test_policy_backward_finite_differences():
    pol, rng = make_policy(seed=9)
    n = 5
    obs = rng.normal(size=(n, 6))
    actions = rng.normal(size=(n, 3)) * 0.3 + 0.5
    d_logp = rng.normal(size=n)
    d_ent = rng.normal(size=n)

    def loss():
        logp, ent, _ = pol.log_prob_entropy(obs, actions)
        return float(np.sum(d_logp * logp) + np.sum(d_ent * ent))

    logp, ent, cache = pol.log_prob_entropy(obs, actions)
    (gw, gb), g_log_std = pol.backward(cache, d_logp, d_ent)
    grads = gw + gb + [g_log_std]
    params = pol.params()
    eps = 1e-6
    for p, g in zip(params, grads):
        flat = p.ravel()
        idx = rng.choice(flat.size, size=min(8, flat.size), replace=False)
        for j in idx:
            orig = flat[j]
            flat[j] = orig + eps
            up = loss()
            flat[j] = orig - eps
            dn = loss()
            flat[j] = orig
            num = (up - dn) / (2 * eps)
            assert abs(num - g.ravel()[j]) < 1e-4 * max(1.0, abs(num))


def test_policy_copy_is_deep():
    pol, _ = make_policy(seed=10)
    dup = pol.copy()
    dup.net.weights[0][0, 0] += 1.0
    dup.log_std[0] += 1.0
    assert pol.net.weights[0][0, 0] != dup.net.weights[0][0, 0]
    assert pol.log_std[0] != dup.log_std[0]


# --- checkpoints ---


def test_checkpoint_roundtrip(tmp_path):
    pol, rng = make_policy(seed=11)
    vnet = create_value_net(6, [16, 16], rng)
    meta = {"iteration": 3, "mode": "single_gait", "note": "fixture"}
    path = tmp_path / "ckpt.bin"
    save_checkpoint(path, {"low": pol}, {"low": vnet}, meta)
    policies, values, got_meta = load_checkpoint(path)
    assert got_meta == meta
    got = policies["low"]
    for a, b in zip(got.params(), pol.params()):
        np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(got.act_lo, pol.act_lo)
    np.testing.assert_array_equal(got.act_hi, pol.act_hi)
    for a, b in zip(values["low"].params(), vnet.params()):
        np.testing.assert_array_equal(a, b)
    obs = rng.normal(size=(4, 6))
    np.testing.assert_array_equal(got.deterministic(obs), pol.deterministic(obs))


def test_checkpoint_two_policies(tmp_path):
    rng = np.random.default_rng(12)
    low = GaussianPolicy.create(43, [128, 128], np.zeros(5), np.ones(5), rng)
    high = GaussianPolicy.create(1, [128], [0.2], [1.0], rng)
    path = tmp_path / "ckpt.bin"
    save_checkpoint(path, {"low": low, "high": high}, {}, {})
    policies, values, _ = load_checkpoint(path)
    assert set(policies) == {"low", "high"}
    assert values == {}
    assert policies["high"].net.sizes == [1, 128, 1]


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "not_a_ckpt.bin"
    path.write_bytes(b'{"magic": "something-else"}\n')
    with pytest.raises(ValueError):
        load_checkpoint(path)


def test_checkpoint_rejects_truncation(tmp_path):
    pol, rng = make_policy(seed=13)
    path = tmp_path / "ckpt.bin"
    save_checkpoint(path, {"low": pol}, {}, {})
    data = path.read_bytes()
    path.write_bytes(data[:-16])
    with pytest.raises(ValueError):
        load_checkpoint(path)
