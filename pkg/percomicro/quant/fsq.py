import numpy as np

from percomicro.errors import ShapeError
from percomicro.nn import ops
from percomicro.nn.tensor import Tensor
from percomicro.util import is_pow2


class FsqConfig:
    def __init__(self, levels):
        self.levels = levels = [int(l) for l in levels]

        if not levels or any(l < 2 for l in levels):
            raise ValueError(f'Invalid FSQ levels {levels}')

        # Channel zero is the least significant digit
        self.basis = np.cumprod([1] + levels[:-1]).astype(np.int64)

    @property
    def d(self):
        return len(self.levels)

    @property
    def size(self):
        return int(np.prod(self.levels, dtype=np.int64))

    @property
    def log2V(self):
        if not is_pow2(self.size):
            raise ValueError(f'FSQ levels {self.levels} do not give a power '
                             'of two codebook')

        return self.size.bit_length() - 1


def round_ste(x):
    return Tensor.from_op(np.rint(x.data), (x,), lambda g: (g,), 'round_ste')


def digits_to_indices(digits, cfg):
    return (np.asarray(digits, dtype=np.int64)*cfg.basis).sum(axis=-1)


def indices_to_digits(indices, cfg):
    indices = np.asarray(indices, dtype=np.int64)[..., None]
    return (indices // cfg.basis) % np.array(cfg.levels)


def digits_to_codes(digits, cfg, dtype=np.float32):
    half = (np.array(cfg.levels) - 1) / 2
    return ((digits - half) / half).astype(dtype)


def codes_to_digits(codes, cfg):
    half = (np.array(cfg.levels) - 1) / 2
    return np.rint(np.asarray(codes)*half + half).astype(np.int64)


def indices_to_codes(indices, cfg, dtype=np.float32):
    return digits_to_codes(indices_to_digits(indices, cfg), cfg, dtype)


def fsq_quantize(features, cfg):
    if not isinstance(features, Tensor):
        features = Tensor(features)

    if features.shape[-1] != cfg.d:
        raise ShapeError(f'Feature dimension {features.shape[-1]} does not '
                         f'match {cfg.d} FSQ channels')

    levels = np.array(cfg.levels, dtype=features.dtype)
    half = (levels - 1) / 2

    # Bound, shift onto [0, L - 1] and round
    z = (ops.tanh(features) + 1)*half
    digits = round_ste(z)

    indices = digits_to_indices(digits.data, cfg)
    quantized = (digits - half) / half

    return indices, quantized
