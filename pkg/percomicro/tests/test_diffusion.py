import numpy as np
import pytest

from percomicro.diffusion import (BasePrediction, EpsilonPrediction,
                                  SamplerConfig, VPrediction, auto_steps,
                                  cfg_combine, ddim_step, ddpm_step,
                                  forward_marginal, forward_step,
                                  get_prediction, make_linear_schedule,
                                  sample, sampler_timesteps, v_from_x0_eps,
                                  x0_eps_from_v)


def _schedule(T=1000):
    return make_linear_schedule(T, 1e-4, 0.02)


def test_schedule():
    s = _schedule()

    assert s.T == 1000
    assert s.abar(0) == 1.0
    assert np.isclose(s.abar(1), 1 - 1e-4)
    assert np.all(np.diff(s.alphas_cumprod) < 0)
    assert s.abar(1000) < 1e-4

    assert np.isclose(s.beta(1000), 0.02)
    assert np.allclose(s.abar([0, 1, 2]), [1, 1 - 1e-4,
                                           (1 - 1e-4)*(1 - s.beta(2))])

    with pytest.raises(ValueError):
        s.abar(1001)
    with pytest.raises(ValueError):
        s.beta(0)

    for args in [(0, 1e-4, 0.02), (10, 0.0, 0.02), (10, 0.03, 0.02),
                 (10, 1e-4, 1.0)]:
        with pytest.raises(ValueError):
            make_linear_schedule(*args)


def test_forward_marginal_moments():
    s = _schedule()
    rng = np.random.default_rng(0)

    x0 = np.full(200000, 0.5)
    eps = rng.standard_normal(x0.shape)

    for t in [1, 100, 500, 1000]:
        xt = forward_marginal(x0, t, eps, s)
        a = s.abar(t)

        assert np.isclose(xt.mean(), np.sqrt(a)*0.5, atol=0.01)
        assert np.isclose(xt.var(), 1 - a, rtol=0.02, atol=1e-4)


def test_forward_marginal_per_sample_t():
    s = _schedule()
    x0 = np.ones((3, 2, 4, 4))
    eps = np.zeros_like(x0)

    xt = forward_marginal(x0, np.array([1, 10, 1000]), eps, s)
    for i, t in enumerate([1, 10, 1000]):
        assert np.allclose(xt[i], np.sqrt(s.abar(t)))


def test_forward_step_composes_to_marginal():
    s = _schedule(50)
    rng = np.random.default_rng(1)

    x = np.full(100000, -0.3)
    for t in range(1, 51):
        x = forward_step(x, t, s, rng)

    a = s.abar(50)
    assert np.isclose(x.mean(), -0.3*np.sqrt(a), atol=0.01)
    assert np.isclose(x.var(), 1 - a, rtol=0.03)


def test_v_parameterisation_inverts():
    s = _schedule()
    rng = np.random.default_rng(2)

    x0 = rng.uniform(-1, 1, size=(2, 3, 4, 4))
    eps = rng.standard_normal(x0.shape)
    t = np.array([3, 700])

    xt = forward_marginal(x0, t, eps, s)
    v = v_from_x0_eps(x0, eps, t, s)
    rx0, reps = x0_eps_from_v(v, xt, t, s)

    assert np.allclose(rx0, x0)
    assert np.allclose(reps, eps)


def test_predictions():
    s = _schedule()
    rng = np.random.default_rng(3)

    x0 = rng.uniform(-1, 1, size=(1, 3, 4, 4))
    eps = rng.standard_normal(x0.shape)
    xt = forward_marginal(x0, 250, eps, s)

    for kind in [EpsilonPrediction(), VPrediction()]:
        out = kind.target(x0, eps, 250, s)
        rx0, reps = kind.to_x0_eps(out, xt, 250, s)

        assert np.allclose(rx0, x0)
        assert np.allclose(reps, eps)

    assert get_prediction('v').name == 'v'
    with pytest.raises(ValueError):
        get_prediction('x0')


def test_prediction_requires_overrides():
    class Incomplete(BasePrediction):
        pass

    x = np.zeros((1, 1, 2, 2))
    with pytest.raises(NotImplementedError):
        Incomplete().target(x, x, 5, _schedule())
    with pytest.raises(NotImplementedError):
        Incomplete().to_x0_eps(x, x, 5, _schedule())


def test_sampler_timesteps():
    ts = sampler_timesteps(1000, 20)

    assert len(ts) == 20
    assert ts[0][0] == 1000
    assert ts[-1] == (1, 0)
    assert all(t > tp for t, tp in ts)
    assert all(a[1] == b[0] for a, b in zip(ts, ts[1:]))

    assert sampler_timesteps(5, 5) == [(5, 4), (4, 3), (3, 2), (2, 1), (1, 0)]
    assert sampler_timesteps(1000, 1) == [(1000, 0)]

    with pytest.raises(ValueError):
        sampler_timesteps(10, 11)
    with pytest.raises(ValueError):
        sampler_timesteps(10, 0)


def test_auto_steps():
    assert auto_steps(0.125) == 5
    assert auto_steps(0.03125) == 20
    assert auto_steps(0.05) == 20


def test_cfg_combine():
    c, u = np.array([1.0, 2.0]), np.array([0.5, -1.0])

    assert np.array_equal(cfg_combine(c, u, 1), c)
    assert np.array_equal(cfg_combine(c, u, 0), u)
    assert np.allclose(cfg_combine(c, u, 3), u + 3*(c - u))


def test_ddim_step_with_exact_noise():
    s = _schedule()
    kind = EpsilonPrediction()
    rng = np.random.default_rng(4)

    x0 = rng.uniform(-0.9, 0.9, size=(1, 3, 4, 4))
    eps = rng.standard_normal(x0.shape)
    xt = forward_marginal(x0, 600, eps, s)

    # Deterministic update lands on the marginal at the earlier step
    xp = ddim_step(xt, eps, kind, 600, 250, s)
    assert np.allclose(xp, forward_marginal(x0, 250, eps, s))

    assert np.allclose(ddim_step(xt, eps, kind, 600, 0, s), x0)

    with pytest.raises(ValueError):
        ddim_step(xt, eps, kind, 600, 600, s)


def test_ddpm_final_step_is_mean():
    s = _schedule()
    kind = VPrediction()
    rng = np.random.default_rng(5)

    x0 = rng.uniform(-0.9, 0.9, size=(2, 1, 4, 4))
    eps = rng.standard_normal(x0.shape)
    xt = forward_marginal(x0, 40, eps, s)
    v = v_from_x0_eps(x0, eps, 40, s)

    out = ddpm_step(xt, v, kind, 40, s, rng, t_prev=0)
    assert np.allclose(out, x0)

    # Intermediate steps add noise
    a = ddpm_step(xt, v, kind, 40, s, np.random.default_rng(0))
    b = ddpm_step(xt, v, kind, 40, s, np.random.default_rng(1))
    assert not np.allclose(a, b)


class _Oracle:
    prediction = EpsilonPrediction()

    def __init__(self, x0, s):
        self.x0 = x0
        self.s = s
        self.calls = []

    def __call__(self, x_t, t, local, global_ids):
        self.calls.append((len(x_t), list(global_ids)))

        a = self.s.abar(t)
        x0 = np.concatenate([self.x0]*(len(x_t) // len(self.x0)))
        return (x_t - np.sqrt(a)*x0) / np.sqrt(1 - a)


def test_sample_with_oracle():
    s = _schedule()
    x0 = np.random.default_rng(6).uniform(-0.8, 0.8, size=(1, 3, 4, 4))

    oracle = _Oracle(x0, s)
    local = np.zeros((1, 2, 4, 4))

    cfg = SamplerConfig(steps=10, cfg_scale=1.0, seed=0)
    out = sample(oracle, (local, 2), cfg, s, x0.shape, dtype=np.float64)

    assert np.allclose(out, x0)
    assert len(oracle.calls) == 10
    assert oracle.calls[0] == (1, [2])


def test_ddpm_without_noise_is_ddim():
    s = make_linear_schedule(50, 1e-4, 0.02)
    kind = EpsilonPrediction()
    rng = np.random.default_rng(8)

    x = y = rng.standard_normal((1, 3, 4, 4))
    for t, tp in sampler_timesteps(s.T, s.T):
        x = ddim_step(x, 0.3*x, kind, t, tp, s)
        y = ddpm_step(y, 0.3*y, kind, t, s, rng, t_prev=tp, sigma_scale=0)

        assert np.allclose(x, y, rtol=0, atol=1e-5)


def test_ddpm_step_is_posterior_sample():
    s = _schedule()
    kind = EpsilonPrediction()
    rng = np.random.default_rng(9)

    x0 = rng.uniform(-0.9, 0.9, size=(1, 2, 4, 4))
    eps = rng.standard_normal(x0.shape)
    xt = forward_marginal(x0, 300, eps, s)
    z = np.random.default_rng(0).standard_normal(x0.shape)

    at, ap = s.abar(300), s.abar(200)
    beta = 1 - at / ap
    var = beta*(1 - ap) / (1 - at)

    # Full noise is the posterior q(x_200 | x_300, x0)
    mean = (np.sqrt(ap)*beta / (1 - at))*x0 \
        + (np.sqrt(1 - beta)*(1 - ap) / (1 - at))*xt
    out = ddpm_step(xt, eps, kind, 300, s, np.random.default_rng(0),
                    t_prev=200)
    assert np.allclose(out, mean + np.sqrt(var)*z)

    # Partial noise moves weight from the noise estimate to fresh noise
    sig2 = 0.25*var
    want = np.sqrt(ap)*x0 + np.sqrt(1 - ap - sig2)*eps + np.sqrt(sig2)*z
    out = ddpm_step(xt, eps, kind, 300, s, np.random.default_rng(0),
                    t_prev=200, sigma_scale=0.5)
    assert np.allclose(out, want)


@pytest.mark.parametrize('steps', [1, 5, 20, 50])
def test_oracle_ddim_recovers_x0(steps):
    s = _schedule()
    x0 = np.random.default_rng(10).uniform(-0.8, 0.8, size=(2, 3, 4, 4))

    cfg = SamplerConfig(steps=steps, cfg_scale=1.0, seed=3)
    out = sample(_Oracle(x0, s), (np.zeros((2, 1, 4, 4)), None), cfg, s,
                 x0.shape, dtype=np.float64)

    assert np.allclose(out, x0, rtol=0, atol=1e-4)


def test_full_and_strided_ddim_agree():
    s = _schedule()
    x0 = np.random.default_rng(11).uniform(-0.8, 0.8, size=(1, 3, 4, 4))
    local = np.zeros((1, 1, 4, 4))

    full, strided = (
        sample(_Oracle(x0, s), (local, 0), SamplerConfig(steps, 1.0, seed=5),
               s, x0.shape, dtype=np.float64)
        for steps in (s.T, 20)
    )

    assert np.allclose(full, strided, rtol=0, atol=1e-4)


def test_sample_guidance_batches_branches():
    s = _schedule()
    oracle = _Oracle(np.zeros((1, 1, 2, 2)), s)
    local = np.zeros((1, 1, 2, 2))

    sample(oracle, (local, 1), SamplerConfig(steps=3, cfg_scale=3.0), s,
           (1, 1, 2, 2))
    assert oracle.calls == [(2, [1, None])]*3

    # Without a global token there is nothing to guide
    oracle.calls = []
    sample(oracle, (local, None), SamplerConfig(steps=3, cfg_scale=3.0), s,
           (1, 1, 2, 2))
    assert oracle.calls == [(1, [None])]*3


def test_sample_determinism():
    s = _schedule()

    class Zero:
        prediction = VPrediction()

        def __call__(self, x_t, t, local, gids):
            return np.zeros_like(x_t)

    local = np.zeros((1, 1, 4, 4))
    shape = (1, 3, 4, 4)

    for kind in ['ddim', 'ddpm']:
        a = sample(Zero(), (local, 0), SamplerConfig(5, 3.0, kind, 1), s,
                   shape)
        b = sample(Zero(), (local, 0), SamplerConfig(5, 3.0, kind, 1), s,
                   shape)
        c = sample(Zero(), (local, 0), SamplerConfig(5, 3.0, kind, 2), s,
                   shape)

        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
        assert a.dtype == np.float32


def test_sampler_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(kind='euler')
    with pytest.raises(ValueError):
        SamplerConfig(steps=0)
