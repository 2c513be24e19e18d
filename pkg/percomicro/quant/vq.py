import numpy as np

from percomicro.errors import ShapeError
from percomicro.nn import ops
from percomicro.nn.layers import Module
from percomicro.nn.tensor import Parameter, Tensor, get_default_dtype
from percomicro.util import is_pow2


def _unit_rows(a, what):
    norms = np.linalg.norm(a, axis=-1, keepdims=True)
    if np.any(norms == 0):
        rows = np.flatnonzero(norms[..., 0] == 0).tolist()
        raise ValueError(f'Zero-norm {what} at rows {rows}; reseed required')

    return a / norms


def l2_normalize(x, eps=1e-12):
    return x / ops.sqrt(ops.sum(x*x, axis=-1, keepdims=True) + eps)


class Codebook(Module):
    def __init__(self, V, d, rng, *, dtype=None, nrecent=1024):
        if not is_pow2(V) or V < 2:
            raise ValueError(f'Codebook size {V} is not a power of two')

        self.V, self.d = V, d

        # Rows uniform on the unit sphere
        codes = rng.standard_normal((V, d))
        codes /= np.linalg.norm(codes, axis=1, keepdims=True)
        self.codes = Parameter(codes.astype(dtype or get_default_dtype()))

        # Steps since each code was last selected
        self.idle = np.zeros(V, dtype=np.int64)

        # Ring buffer of recent unit features for reseeding
        self.recent = np.zeros((nrecent, d), dtype=self.codes.dtype)
        self.nrecent = 0

        # Zero-norm features seen by quantize
        self.nzero = 0

    @property
    def log2V(self):
        return self.V.bit_length() - 1

    def lookup(self, indices):
        return self.codes.data[np.asarray(indices)]

    def remember(self, feats):
        feats = feats.reshape(-1, self.d)
        n = len(self.recent)

        feats = feats[-n:]
        self.recent[(self.nrecent + np.arange(len(feats))) % n] = feats
        self.nrecent += len(feats)

    def update_usage(self, indices, feats, rng, dead_steps):
        self.idle += 1
        self.idle[np.unique(indices)] = 0

        self.remember(feats)

        dead = np.flatnonzero(self.idle >= dead_steps)
        if dead.size and self.nrecent:
            pool = self.recent[:min(self.nrecent, len(self.recent))]
            picks = pool[rng.integers(0, len(pool), size=dead.size)]

            norms = np.linalg.norm(picks, axis=1, keepdims=True)
            ok = norms[:, 0] > 0
            self.codes.data[dead[ok]] = picks[ok] / norms[ok]
            self.idle[dead[ok]] = 0

            return dead[ok]

        return dead[:0]

    def ndead(self, dead_steps):
        return int(np.count_nonzero(self.idle >= dead_steps))

    def state_arrays(self, prefix):
        return {f'{prefix}idle': self.idle,
                f'{prefix}recent': self.recent,
                f'{prefix}counters': np.array([self.nrecent, self.nzero])}

    def load_state_arrays(self, arrs, prefix):
        self.idle = arrs[f'{prefix}idle'].astype(np.int64)
        self.recent = arrs[f'{prefix}recent'].astype(self.codes.dtype)
        self.nrecent, self.nzero = (int(v) for v in arrs[f'{prefix}counters'])


def normalize_codes(cb):
    cb.codes.data = _unit_rows(cb.codes.data, 'code').astype(cb.codes.dtype)
    return cb


def nearest_codes(feats, codes):
    norms = np.linalg.norm(feats, axis=-1, keepdims=True)
    zero = norms[..., 0] == 0

    # Cosine similarity against every code; argmax keeps the lowest index
    unit = feats / np.where(norms == 0, 1, norms)
    idx = np.argmax(unit @ codes.T, axis=-1)
    idx[zero] = 0

    return idx, int(np.count_nonzero(zero))


def quantize(features, cb):
    fdata = features.data if isinstance(features, Tensor) else features
    if fdata.shape[-1] != cb.d:
        raise ShapeError(f'Feature dimension {fdata.shape[-1]} does not '
                         f'match code dimension {cb.d}')

    idx, nzero = nearest_codes(fdata, cb.codes.data)
    cb.nzero += nzero

    return idx, ops.embedding(cb.codes, idx)


def straight_through(features, quantized):
    return ops.straight_through(features, quantized)


def vq_losses(features, quantized):
    codebook = ops.mse(ops.detach(features), quantized)
    commitment = ops.mse(features, ops.detach(quantized))

    return codebook, commitment
