import functools as ft

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from percomicro.errors import ShapeError
from percomicro.nn.tensor import Tensor


def _lift(x, like=None):
    if isinstance(x, Tensor):
        return x

    dtype = like.dtype if isinstance(like, Tensor) else None
    return Tensor(np.asarray(x, dtype=dtype) if dtype else x)


def _binary(a, b):
    a = _lift(a, b)
    b = _lift(b, a)

    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f'Incompatible shapes {a.shape} and {b.shape}') \
            from None

    return a, b


def add(a, b):
    a, b = _binary(a, b)
    return Tensor.from_op(a.data + b.data, (a, b), lambda g: (g, g), 'add')


def sub(a, b):
    a, b = _binary(a, b)
    return Tensor.from_op(a.data - b.data, (a, b), lambda g: (g, -g), 'sub')


def mul(a, b):
    a, b = _binary(a, b)
    return Tensor.from_op(a.data*b.data, (a, b),
                          lambda g: (g*b.data, g*a.data), 'mul')


def div(a, b):
    a, b = _binary(a, b)
    out = a.data / b.data

    def backward(g):
        return g / b.data, -g*out / b.data

    return Tensor.from_op(out, (a, b), backward, 'div')


def neg(a):
    return Tensor.from_op(-a.data, (a,), lambda g: (-g,), 'neg')


def power(a, p):
    if isinstance(p, Tensor):
        raise TypeError('Only constant exponents are supported')

    return Tensor.from_op(a.data**p, (a,),
                          lambda g: (g*p*a.data**(p - 1),), 'pow')


def sqrt(a):
    out = np.sqrt(a.data)
    return Tensor.from_op(out, (a,), lambda g: (g / (2*out),), 'sqrt')


def exp(a):
    out = np.exp(a.data)
    return Tensor.from_op(out, (a,), lambda g: (g*out,), 'exp')


def log(a):
    return Tensor.from_op(np.log(a.data), (a,), lambda g: (g / a.data,),
                          'log')


def tanh(a):
    out = np.tanh(a.data)
    return Tensor.from_op(out, (a,), lambda g: (g*(1 - out*out),), 'tanh')


def _sigmoid(x):
    # Split by sign to avoid overflow in exp
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1 / (1 + e), e / (1 + e))


def sigmoid(a):
    out = _sigmoid(a.data)
    return Tensor.from_op(out, (a,), lambda g: (g*out*(1 - out),), 'sigmoid')


def silu(a):
    s = _sigmoid(a.data)
    out = a.data*s

    def backward(g):
        return (g*(s + out*(1 - s)),)

    return Tensor.from_op(out, (a,), backward, 'silu')


def matmul(a, b):
    a, b = _lift(a, b), _lift(b, a)

    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError('matmul requires operands of rank two or more')
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f'matmul inner dimensions differ: {a.shape} @ '
                         f'{b.shape}')

    def backward(g):
        return (g @ np.swapaxes(b.data, -1, -2),
                np.swapaxes(a.data, -1, -2) @ g)

    return Tensor.from_op(a.data @ b.data, (a, b), backward, 'matmul')


def _norm_axis(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    elif isinstance(axis, int):
        axis = (axis,)

    return tuple(sorted(ax % ndim for ax in axis))


def sum(a, axis=None, keepdims=False):
    axes = _norm_axis(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)

        return (np.broadcast_to(g, a.shape),)

    return Tensor.from_op(out, (a,), backward, 'sum')


def mean(a, axis=None, keepdims=False):
    axes = _norm_axis(axis, a.ndim)
    n = int(np.prod([a.shape[ax] for ax in axes]))

    return sum(a, axes, keepdims) / n


def reshape(a, shape):
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f'Cannot reshape {a.shape} to {shape}') from None

    return Tensor.from_op(out, (a,), lambda g: (g.reshape(a.shape),),
                          'reshape')


def transpose(a, axes):
    inv = np.argsort(axes)
    return Tensor.from_op(a.data.transpose(axes), (a,),
                          lambda g: (g.transpose(inv),), 'transpose')


def broadcast_to(a, shape):
    try:
        out = np.broadcast_to(a.data, shape)
    except ValueError:
        raise ShapeError(f'Cannot broadcast {a.shape} to {shape}') from None

    return Tensor.from_op(out, (a,), lambda g: (g,), 'broadcast')


def concat(tensors, axis=0):
    tensors = [_lift(t) for t in tensors]

    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        shapes = ', '.join(str(t.shape) for t in tensors)
        raise ShapeError(f'Cannot concatenate shapes {shapes}') from None

    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor.from_op(out, tuple(tensors), backward, 'concat')


def getitem(a, idx):
    def backward(g):
        ga = np.zeros_like(a.data)
        np.add.at(ga, idx, g)
        return (ga,)

    return Tensor.from_op(a.data[idx], (a,), backward, 'getitem')


def embedding(table, ids):
    ids = np.asarray(ids, dtype=np.intp)

    if table.ndim != 2:
        raise ShapeError('Embedding tables must be two dimensional')
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexError('Embedding index out of range')

    return getitem(table, ids)


def detach(a):
    return Tensor(a.data)


def straight_through(features, quantized):
    if features.shape != quantized.shape:
        raise ShapeError(f'Straight-through shapes differ: {features.shape} '
                         f'and {quantized.shape}')

    # Forward yields the quantized values, backward is the identity
    return Tensor.from_op(quantized.data.copy(), (features,),
                          lambda g: (g,), 'straight_through')


def conv2d(x, w, b=None, stride=1, padding=0):
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeError(f'conv2d expects rank-4 input and kernel, got '
                         f'{x.shape} and {w.shape}')

    n, c, h, wd = x.shape
    o, ck, kh, kw = w.shape

    if c != ck:
        raise ShapeError(f'conv2d input has {c} channels but kernel '
                         f'expects {ck}')
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError(f'conv2d kernel must be odd sized, got {kh}x{kw}')
    if padding < 0 or stride < 1:
        raise ValueError('Invalid conv2d stride or padding')
    if b is not None and b.shape != (o,):
        raise ShapeError(f'conv2d bias must have shape ({o},)')

    ho = (h + 2*padding - kh) // stride + 1
    wo = (wd + 2*padding - kw) // stride + 1
    if ho < 1 or wo < 1:
        raise ShapeError(f'conv2d input {h}x{wd} too small for a {kh}x{kw} '
                         'kernel')

    p = padding
    xp = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p))) if p else x.data

    # Windows have shape [N, C, Ho, Wo, kh, kw]
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    win = win[:, :, ::stride, ::stride][:, :, :ho, :wo]

    out = np.tensordot(win, w.data, axes=([1, 4, 5], [1, 2, 3]))
    out = np.ascontiguousarray(out.transpose(0, 3, 1, 2))
    if b is not None:
        out += b.data[:, None, None]

    def backward(g):
        gw = np.tensordot(g, win, axes=([0, 2, 3], [0, 2, 3]))

        # Scatter each kernel tap back onto the padded input
        gxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                tap = np.tensordot(w.data[:, :, i, j], g, axes=([0], [1]))
                gxp[:, :, i:i + stride*(ho - 1) + 1:stride,
                    j:j + stride*(wo - 1) + 1:stride] += tap.transpose(1, 0,
                                                                       2, 3)

        gx = gxp[:, :, p:p + h, p:p + wd] if p else gxp
        gb = g.sum(axis=(0, 2, 3)) if b is not None else None

        return gx, gw, gb

    parents = (x, w, b) if b is not None else (x, w)
    return Tensor.from_op(out, parents, backward, 'conv2d')


def group_norm(x, groups, gamma=None, beta=None, eps=1e-5):
    if x.ndim != 4:
        raise ShapeError(f'group_norm expects rank-4 input, got {x.shape}')

    n, c = x.shape[:2]
    if c % groups:
        raise ShapeError(f'{c} channels cannot be split into {groups} '
                         'groups')

    xg = x.data.reshape(n, groups, -1)
    mu = xg.mean(axis=2, keepdims=True)
    var = xg.var(axis=2, keepdims=True)
    rstd = 1 / np.sqrt(var + eps)
    xhat = ((xg - mu)*rstd).reshape(x.shape)

    out = xhat
    if gamma is not None:
        out = out*gamma.data[:, None, None]
    if beta is not None:
        out = out + beta.data[:, None, None]

    def backward(g):
        gxhat = g*gamma.data[:, None, None] if gamma is not None else g
        gxhat = gxhat.reshape(n, groups, -1)
        xh = xhat.reshape(n, groups, -1)

        gx = rstd*(gxhat - gxhat.mean(axis=2, keepdims=True)
                   - xh*(gxhat*xh).mean(axis=2, keepdims=True))

        grads = [gx.reshape(x.shape)]
        if gamma is not None:
            grads.append((g*xhat).sum(axis=(0, 2, 3)))
        if beta is not None:
            grads.append(g.sum(axis=(0, 2, 3)))

        return tuple(grads)

    parents = tuple(t for t in (x, gamma, beta) if t is not None)
    return Tensor.from_op(out, parents, backward, 'group_norm')


@ft.lru_cache(maxsize=64)
def interp_matrix(nin, nout):
    # Half-pixel centres, edge clamped
    src = np.maximum((np.arange(nout) + 0.5)*nin/nout - 0.5, 0)
    i0 = np.minimum(np.floor(src).astype(int), nin - 1)
    i1 = np.minimum(i0 + 1, nin - 1)
    lam = src - i0

    m = np.zeros((nout, nin))
    np.add.at(m, (np.arange(nout), i0), 1 - lam)
    np.add.at(m, (np.arange(nout), i1), lam)

    m.setflags(write=False)
    return m


def upsample_bilinear(x, hout, wout):
    if x.ndim != 4:
        raise ShapeError(f'upsample_bilinear expects rank-4 input, got '
                         f'{x.shape}')

    my = interp_matrix(x.shape[2], hout).astype(x.dtype)
    mx = interp_matrix(x.shape[3], wout).astype(x.dtype)

    out = my @ x.data @ mx.T

    def backward(g):
        return (my.T @ g @ mx,)

    return Tensor.from_op(out, (x,), backward, 'upsample_bilinear')


def upsample_nearest(x, factor=2):
    out = x.data.repeat(factor, axis=2).repeat(factor, axis=3)

    def backward(g):
        n, c, h, w = x.shape
        return (g.reshape(n, c, h, factor, w, factor).sum(axis=(3, 5)),)

    return Tensor.from_op(out, (x,), backward, 'upsample_nearest')


def avg_pool2d(x, k):
    kh, kw = (k, k) if isinstance(k, int) else k

    n, c, h, w = x.shape
    if h % kh or w % kw:
        raise ShapeError(f'avg_pool2d of {h}x{w} by {kh}x{kw} is not exact')

    out = x.data.reshape(n, c, h // kh, kh, w // kw, kw).mean(axis=(3, 5))

    def backward(g):
        g = g.repeat(kh, axis=2).repeat(kw, axis=3)
        return (g / (kh*kw),)

    return Tensor.from_op(out, (x,), backward, 'avg_pool2d')


def mse(a, b):
    a, b = _lift(a, b), _lift(b, a)
    if a.shape != b.shape:
        raise ShapeError(f'Shapes differ: {a.shape} and {b.shape}')

    d = a - b
    return mean(d*d)


def is_finite(a):
    return bool(np.all(np.isfinite(a.data)))


# Operator overloads
Tensor.__add__ = add
Tensor.__radd__ = lambda a, b: add(b, a)
Tensor.__sub__ = sub
Tensor.__rsub__ = lambda a, b: sub(b, a)
Tensor.__mul__ = mul
Tensor.__rmul__ = lambda a, b: mul(b, a)
Tensor.__truediv__ = div
Tensor.__rtruediv__ = lambda a, b: div(b, a)
Tensor.__neg__ = neg
Tensor.__pow__ = power
Tensor.__matmul__ = matmul
Tensor.__rmatmul__ = lambda a, b: matmul(b, a)
Tensor.__getitem__ = getitem

Tensor.sum = sum
Tensor.mean = mean
Tensor.reshape = lambda a, *shape: reshape(a, shape[0] if len(shape) == 1
                                           else shape)
Tensor.transpose = lambda a, *axes: transpose(a, axes[0] if len(axes) == 1
                                              else axes)
Tensor.detach = detach
