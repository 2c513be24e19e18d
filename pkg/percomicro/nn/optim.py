import numpy as np

from percomicro.errors import NumericalError


def warmup_lr(peak, step, warmup):
    if warmup <= 0:
        return peak

    return peak*min(step, warmup) / warmup


def adamw_step(params, grads, state, *, lr, betas=(0.9, 0.999), eps=1e-8,
               weight_decay=0.0, step):
    if step < 1:
        raise ValueError('AdamW steps are numbered from one')

    b1, b2 = betas

    # Check everything up front so a bad gradient leaves no partial update
    for name, g in zip(params, grads):
        if g is not None and not np.all(np.isfinite(g)):
            raise NumericalError(f'Non-finite gradient for parameter {name}')

    bc1 = 1 - b1**step
    bc2 = 1 - b2**step

    for (name, p), g in zip(params.items(), grads):
        if g is None:
            g = np.zeros_like(p.data)

        m, v = state.setdefault(name, (np.zeros_like(p.data),
                                       np.zeros_like(p.data)))

        m *= b1
        m += (1 - b1)*g
        v *= b2
        v += (1 - b2)*g*g

        # Decoupled decay acts on the weights alone
        if weight_decay:
            p.data *= 1 - lr*weight_decay

        p.data -= lr*(m / bc1) / (np.sqrt(v / bc2) + eps)


class AdamW:
    def __init__(self, named_params, *, lr, betas=(0.9, 0.999), eps=1e-8,
                 weight_decay=0.01, warmup=0):
        self.params = dict(named_params)
        self.peak_lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.warmup = warmup

        self.nsteps = 0
        self.state = {}

    def lr_at(self, step):
        return warmup_lr(self.peak_lr, step, self.warmup)

    @property
    def lr(self):
        return self.lr_at(max(self.nsteps, 1))

    def step(self):
        step = self.nsteps + 1
        grads = [p.grad for p in self.params.values()]

        adamw_step(self.params, grads, self.state, lr=self.lr_at(step),
                   betas=self.betas, eps=self.eps,
                   weight_decay=self.weight_decay, step=step)

        self.nsteps = step

    def reset_rows(self, name, rows):
        if name in self.state:
            for a in self.state[name]:
                a[rows] = 0

    def state_arrays(self):
        arrs = {}
        for name, (m, v) in self.state.items():
            arrs[f'optim.m.{name}'] = m
            arrs[f'optim.v.{name}'] = v

        return arrs

    def load_state_arrays(self, arrs, nsteps):
        self.nsteps = nsteps
        self.state = {}

        for name, p in self.params.items():
            if (k := f'optim.m.{name}') in arrs:
                self.state[name] = (np.array(arrs[k], dtype=p.dtype),
                                    np.array(arrs[f'optim.v.{name}'],
                                             dtype=p.dtype))
