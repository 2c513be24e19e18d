from dataclasses import dataclass

import numpy as np

from percomicro.diffusion.param import _coeffs


@dataclass(frozen=True)
class SamplerConfig:
    steps: int = 20
    cfg_scale: float = 3.0
    kind: str = 'ddim'
    seed: int = 0
    clip: bool = True
    sigma_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ('ddim', 'ddpm'):
            raise ValueError(f'Invalid sampler kind {self.kind}')
        if self.steps < 1:
            raise ValueError(f'Invalid number of sampling steps {self.steps}')


def auto_steps(spatial_bpp, threshold=0.05):
    # Higher rates need fewer denoising steps
    return 5 if spatial_bpp > threshold else 20


def cfg_combine(pred_cond, pred_uncond, scale):
    if scale == 1:
        return pred_cond
    elif scale == 0:
        return pred_uncond
    else:
        return pred_uncond + scale*(pred_cond - pred_uncond)


def sampler_timesteps(T, steps):
    if not 1 <= steps <= T:
        raise ValueError(f'Number of sampling steps {steps} must be in '
                         f'[1, {T}]')

    ts = np.floor(np.linspace(T, 1, steps) + 0.5).astype(int)
    return list(zip(ts.tolist(), ts[1:].tolist() + [0]))


def _x0_eps(x_t, out, kind, t, s, clip):
    x0, eps = kind.to_x0_eps(out, x_t, t, s)

    if clip:
        x0c = np.clip(x0, -1, 1)

        # Keep the noise estimate consistent with the clamped signal
        if np.any(x0c != x0):
            sa, sb = _coeffs(t, s, x_t)
            eps = (x_t - sa*x0c) / sb

        x0 = x0c

    return x0, eps


def ddim_step(x_t, model_out, kind, t, t_prev, s, clip=True):
    s.check_t(t)
    if not 0 <= t_prev < t:
        raise ValueError(f'DDIM step requires 0 <= t_prev < t, got '
                         f'{t_prev} and {t}')

    x0, eps = _x0_eps(x_t, model_out, kind, t, s, clip)

    ap = s.abar(t_prev)
    return (np.sqrt(ap)*x0 + np.sqrt(1 - ap)*eps).astype(x_t.dtype)


def ddpm_step(x_t, model_out, kind, t, s, rng, t_prev=None, sigma_scale=1.0,
              clip=True):
    s.check_t(t)

    t_prev = t - 1 if t_prev is None else t_prev
    if not 0 <= t_prev < t:
        raise ValueError(f'DDPM step requires 0 <= t_prev < t, got '
                         f'{t_prev} and {t}')

    x0, eps = _x0_eps(x_t, model_out, kind, t, s, clip)

    # Posterior variance of a possibly strided step, scaled by sigma_scale;
    # zero gives the deterministic DDIM update
    at, ap = s.abar(t), s.abar(t_prev)
    var = (sigma_scale**2)*(1 - ap)*(1 - at / ap) / (1 - at) \
        if t_prev > 0 else 0.0

    x = np.sqrt(ap)*x0 + np.sqrt(max(1 - ap - var, 0.0))*eps
    if var:
        x = x + np.sqrt(var)*rng.standard_normal(x_t.shape)

    return x.astype(x_t.dtype)


def sample(denoiser, cond, config, s, shape, dtype=np.float32):
    local, global_id = cond
    kind = denoiser.prediction

    rng = np.random.default_rng(config.seed)
    x = rng.standard_normal(shape).astype(dtype)

    n = shape[0]
    guided = config.cfg_scale != 1 and global_id is not None

    for t, t_prev in sampler_timesteps(s.T, config.steps):
        if guided:
            # Conditional and unconditional branches share one batch
            out = denoiser(np.concatenate([x, x]), t,
                           np.concatenate([local, local]),
                           [global_id]*n + [None]*n)
            out = cfg_combine(out[:n], out[n:], config.cfg_scale)
        else:
            out = denoiser(x, t, local, [global_id]*n)

        if config.kind == 'ddim':
            x = ddim_step(x, out, kind, t, t_prev, s, config.clip)
        else:
            x = ddpm_step(x, out, kind, t, s, rng, t_prev, config.sigma_scale,
                          config.clip)

    return x
