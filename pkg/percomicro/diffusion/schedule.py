import numpy as np


class NoiseSchedule:
    def __init__(self, betas):
        betas = np.array(betas, dtype=np.float64)

        if betas.ndim != 1 or not len(betas):
            raise ValueError('A schedule needs at least one step')
        if np.any(betas < 0) or np.any(betas >= 1):
            raise ValueError('Betas must lie in [0, 1)')

        self.betas = betas
        self.alphas_cumprod = np.cumprod(1 - betas)

    @property
    def T(self):
        return len(self.betas)

    def check_t(self, t, lo=1):
        t = np.asarray(t)
        if np.any(t < lo) or np.any(t > self.T):
            raise ValueError(f'Timestep {t.tolist()} outside [{lo}, {self.T}]')

    def abar(self, t):
        # Index zero is the noise free state
        self.check_t(t, lo=0)
        return np.concatenate([[1.0], self.alphas_cumprod])[t]

    def beta(self, t):
        self.check_t(t)
        return self.betas[np.asarray(t) - 1]


def make_linear_schedule(T, beta_start, beta_end):
    if T < 1:
        raise ValueError(f'Invalid number of diffusion steps {T}')
    if not 0 < beta_start <= beta_end < 1:
        raise ValueError(f'Invalid beta range [{beta_start}, {beta_end}]')

    return NoiseSchedule(np.linspace(beta_start, beta_end, T))
