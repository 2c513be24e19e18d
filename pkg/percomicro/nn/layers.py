import numpy as np

from percomicro.errors import FormatError
from percomicro.nn import ops
from percomicro.nn.tensor import Parameter, get_default_dtype


def kaiming_uniform(rng, shape, fan_in, dtype=None):
    bound = np.sqrt(6 / fan_in)
    w = rng.uniform(-bound, bound, size=shape)

    return w.astype(dtype or get_default_dtype())


class Module:
    def named_parameters(self, prefix=''):
        for k, v in vars(self).items():
            if isinstance(v, Parameter):
                yield f'{prefix}{k}', v
            elif isinstance(v, Module):
                yield from v.named_parameters(f'{prefix}{k}.')
            elif isinstance(v, (list, tuple)):
                for i, m in enumerate(v):
                    if isinstance(m, Module):
                        yield from m.named_parameters(f'{prefix}{k}.{i}.')

    def parameters(self):
        return [p for k, p in self.named_parameters()]

    def assign_names(self):
        seen = set()
        for name, p in self.named_parameters():
            if id(p) in seen:
                raise ValueError(f'Parameter {name} is registered twice')

            seen.add(id(p))
            p.name = name

        return self

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def state_dict(self):
        return {k: p.data for k, p in self.named_parameters()}

    def load_state_dict(self, state):
        params = dict(self.named_parameters())

        if (missing := params.keys() - state.keys()):
            raise FormatError(f'Missing parameters: {", ".join(missing)}')
        if (extra := state.keys() - params.keys()):
            raise FormatError(f'Unexpected parameters: {", ".join(extra)}')

        for k, p in params.items():
            if state[k].shape != p.shape:
                raise FormatError(f'Shape mismatch for {k}: '
                                  f'{state[k].shape} vs {p.shape}')

            p.data = np.array(state[k], dtype=p.dtype)

    def nparams(self):
        return sum(p.size for p in self.parameters())


class Conv2d(Module):
    def __init__(self, cin, cout, k, rng, *, stride=1, padding=None,
                 dtype=None):
        self.stride = stride
        self.padding = k // 2 if padding is None else padding

        self.weight = Parameter(kaiming_uniform(rng, (cout, cin, k, k),
                                                cin*k*k, dtype))
        self.bias = Parameter(np.zeros(cout, dtype=self.weight.dtype))

    def __call__(self, x):
        return ops.conv2d(x, self.weight, self.bias, self.stride,
                          self.padding)


class Linear(Module):
    def __init__(self, nin, nout, rng, *, dtype=None):
        self.weight = Parameter(kaiming_uniform(rng, (nin, nout), nin,
                                                dtype))
        self.bias = Parameter(np.zeros(nout, dtype=self.weight.dtype))

    def __call__(self, x):
        return x @ self.weight + self.bias


class GroupNorm(Module):
    def __init__(self, groups, channels, *, eps=1e-5, dtype=None):
        dtype = dtype or get_default_dtype()

        self.groups = groups
        self.eps = eps

        self.gamma = Parameter(np.ones(channels, dtype=dtype))
        self.beta = Parameter(np.zeros(channels, dtype=dtype))

    def __call__(self, x):
        return ops.group_norm(x, self.groups, self.gamma, self.beta, self.eps)
