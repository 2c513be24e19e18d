import numpy as np

from percomicro.errors import ShapeError
from percomicro.nn import ops
from percomicro.util import subclass_where


def _shape(x):
    return x.shape if hasattr(x, 'shape') else np.shape(x)


def _coeffs(t, s, like):
    a = s.abar(t)

    # Per-sample timesteps broadcast over the trailing dimensions
    if np.ndim(a):
        a = a.reshape(-1, *[1]*(len(_shape(like)) - 1))

    return np.sqrt(a), np.sqrt(1 - a)


def _cast(c, like):
    dtype = getattr(like, 'dtype', None)
    return np.asarray(c, dtype=dtype) if dtype is not None else c


def _check_shapes(a, b):
    if _shape(a) != _shape(b):
        raise ShapeError(f'Shapes differ: {_shape(a)} and {_shape(b)}')


def forward_marginal(x0, t, eps, s):
    _check_shapes(x0, eps)

    sa, sb = _coeffs(t, s, x0)
    return _cast(sa, x0)*x0 + _cast(sb, x0)*eps


def forward_step(x_prev, t, s, rng):
    beta = s.beta(t)
    x_prev = np.asarray(x_prev)

    noise = rng.standard_normal(x_prev.shape)
    if beta == 0:
        return x_prev.copy()

    return np.sqrt(1 - beta)*x_prev + np.sqrt(beta)*noise


def v_from_x0_eps(x0, eps, t, s):
    _check_shapes(x0, eps)

    sa, sb = _coeffs(t, s, x0)
    return _cast(sa, x0)*eps - _cast(sb, x0)*x0


def x0_eps_from_v(v, x_t, t, s):
    _check_shapes(v, x_t)

    sa, sb = _coeffs(t, s, x_t)
    sa, sb = _cast(sa, x_t), _cast(sb, x_t)

    return sa*x_t - sb*v, sb*x_t + sa*v


def loss_simple(pred, target):
    return ops.mse(pred, target)


class BasePrediction:
    name = None

    def target(self, x0, eps, t, s):
        raise NotImplementedError

    def to_x0_eps(self, out, x_t, t, s):
        raise NotImplementedError


class EpsilonPrediction(BasePrediction):
    name = 'epsilon'

    def target(self, x0, eps, t, s):
        return eps

    def to_x0_eps(self, out, x_t, t, s):
        _check_shapes(out, x_t)

        sa, sb = _coeffs(t, s, x_t)
        sa, sb = _cast(sa, x_t), _cast(sb, x_t)

        return (x_t - sb*out) / sa, out


class VPrediction(BasePrediction):
    name = 'v'

    def target(self, x0, eps, t, s):
        return v_from_x0_eps(x0, eps, t, s)

    def to_x0_eps(self, out, x_t, t, s):
        return x0_eps_from_v(out, x_t, t, s)


def get_prediction(name):
    try:
        return subclass_where(BasePrediction, name=name)()
    except KeyError:
        raise ValueError(f'Invalid prediction kind {name}') from None
