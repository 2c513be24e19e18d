import contextlib
import os
import threading

import numpy as np

from percomicro.errors import NumericalError, ShapeError


# Autodiff mode flags are per thread
class _State(threading.local):
    def __init__(self):
        self.grad = True
        self.debug = os.environ.get('PERCO_MICRO_DEBUG', '0') not in ('', '0')
        self.dtype = np.float32


_state = _State()


def get_default_dtype():
    return _state.dtype


def set_default_dtype(dtype):
    dtype = np.dtype(dtype)
    if dtype not in (np.float32, np.float64):
        raise ValueError(f'Unsupported precision {dtype}')

    _state.dtype = dtype.type


def dtype_for(precision):
    try:
        return {'single': np.float32, 'double': np.float64}[precision]
    except KeyError:
        raise ValueError(f'Invalid precision {precision}') from None


@contextlib.contextmanager
def precision(dtype):
    prev = _state.dtype
    set_default_dtype(dtype)
    try:
        yield
    finally:
        _state.dtype = prev


@contextlib.contextmanager
def no_grad():
    prev, _state.grad = _state.grad, False
    try:
        yield
    finally:
        _state.grad = prev


@contextlib.contextmanager
def debug_guard(enable=True):
    prev, _state.debug = _state.debug, enable
    try:
        yield
    finally:
        _state.debug = prev


def grad_enabled():
    return _state.grad


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g

    # Sum over leading broadcast dimensions
    g = g.sum(axis=tuple(range(g.ndim - len(shape))))

    # Then over dimensions which were stretched from one
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)

    return g.reshape(shape)


class Tensor:
    # Ensure ndarray <op> Tensor dispatches to our reflected operators
    __array_ufunc__ = None

    def __init__(self, data, requires_grad=False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data

        if dtype is not None:
            data = np.asarray(data, dtype=dtype)
        elif isinstance(data, (np.ndarray, np.generic)) and \
             data.dtype.kind == 'f':
            data = np.asarray(data)
        else:
            data = np.asarray(data, dtype=get_default_dtype())

        self.data = data
        self.grad = None
        self.requires_grad = requires_grad
        self.op = None

        self._parents = ()
        self._backward = None

    @classmethod
    def from_op(cls, data, parents, backward, op):
        t = cls(data)

        if _state.debug and not np.all(np.isfinite(t.data)):
            raise NumericalError(f'Non-finite values produced by {op}')

        if _state.grad and any(p.requires_grad for p in parents):
            t.requires_grad = True
            t.op = op
            t._parents = parents
            t._backward = backward

        return t

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return self._backward is None

    def numpy(self):
        return self.data

    def item(self):
        return self.data.item()

    def zero_grad(self):
        self.grad = None

    def __len__(self):
        return len(self.data)

    def __repr__(self):
        return (f'Tensor(shape={self.shape}, dtype={self.dtype}, '
                f'requires_grad={self.requires_grad})')

    def _toposort(self):
        order, seen = [], set()
        stack = [(self, False)]

        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
            elif id(node) not in seen:
                seen.add(id(node))
                stack.append((node, True))
                stack.extend((p, False) for p in node._parents
                             if id(p) not in seen)

        return order

    def backward(self):
        if self.data.size != 1:
            raise ShapeError(f'backward requires a scalar loss, got shape '
                             f'{self.shape}')

        if not self.requires_grad:
            raise ValueError('Loss does not depend on any tensor requiring '
                             'a gradient')

        grads = {id(self): np.ones_like(self.data)}

        for node in reversed(self._toposort()):
            if (g := grads.pop(id(node), None)) is None:
                continue

            # Leaves accumulate into their grad buffer
            if node.is_leaf:
                if _state.debug and not np.all(np.isfinite(g)):
                    raise NumericalError('Non-finite gradient reached a '
                                         'leaf tensor')

                node.grad = g.copy() if node.grad is None else node.grad + g
                continue

            for p, pg in zip(node._parents, node._backward(g)):
                if pg is None or not p.requires_grad:
                    continue

                pg = _unbroadcast(np.asarray(pg, dtype=p.dtype), p.shape)
                if id(p) in grads:
                    grads[id(p)] = grads[id(p)] + pg
                else:
                    grads[id(p)] = pg


class Parameter(Tensor):
    def __init__(self, data, name=None):
        super().__init__(data, requires_grad=True)
        self.name = name

    def __repr__(self):
        return f'Parameter(name={self.name!r}, shape={self.shape})'
