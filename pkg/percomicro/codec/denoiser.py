import math

import numpy as np

from percomicro.errors import ShapeError
from percomicro.nn import (Conv2d, GroupNorm, Linear, Module, Parameter,
                           get_default_dtype, ops)


def timestep_embedding(t, dim, dtype=None):
    t = np.asarray(t, dtype=np.float64).reshape(-1, 1)
    half = dim // 2

    freqs = np.exp(-math.log(10000)*np.arange(half) / max(1, half))
    args = t*freqs
    emb = np.concatenate([np.sin(args), np.cos(args)], axis=1)
    if dim % 2:
        emb = np.pad(emb, ((0, 0), (0, 1)))

    return emb.astype(dtype or get_default_dtype())


def _groups(ch):
    return math.gcd(8, ch)


class ResBlock(Module):
    def __init__(self, cin, cout, edim, rng, *, dtype=None):
        self.norm1 = GroupNorm(_groups(cin), cin, dtype=dtype)
        self.conv1 = Conv2d(cin, cout, 3, rng, dtype=dtype)
        self.emb = Linear(edim, cout, rng, dtype=dtype)
        self.norm2 = GroupNorm(_groups(cout), cout, dtype=dtype)
        self.conv2 = Conv2d(cout, cout, 3, rng, dtype=dtype)

        self.skip = Conv2d(cin, cout, 1, rng, dtype=dtype) \
            if cin != cout else None

    def __call__(self, x, emb):
        h = self.conv1(ops.silu(self.norm1(x)))

        e = self.emb(ops.silu(emb))
        h = h + e.reshape(*e.shape, 1, 1)

        h = self.conv2(ops.silu(self.norm2(h)))

        return h + (self.skip(x) if self.skip else x)


class Denoiser(Module):
    def __init__(self, channels, d, ntokens, width, rng, *, dtype=None):
        dtype = dtype or get_default_dtype()
        edim = 2*width

        self.channels = channels
        self.d = d
        self.ntokens = ntokens
        self.width = width

        # Timestep embedding MLP
        self.temb1 = Linear(width, edim, rng, dtype=dtype)
        self.temb2 = Linear(edim, edim, rng, dtype=dtype)

        # Global tokens; the final row is the unconditional embedding
        self.gemb = Parameter(
            (0.02*rng.standard_normal((ntokens + 1, edim))).astype(dtype)
        )

        # First convolution sees the image and the conditioning channels
        self.conv_in = Conv2d(channels + d, width, 3, rng, dtype=dtype)
        self.conv_in.weight.data[:, channels:] = 0

        self.enc0 = ResBlock(width, width, edim, rng, dtype=dtype)
        self.down = Conv2d(width, 2*width, 3, rng, stride=2, dtype=dtype)
        self.enc1 = ResBlock(2*width, 2*width, edim, rng, dtype=dtype)
        self.mid = ResBlock(2*width, 2*width, edim, rng, dtype=dtype)
        self.up = Conv2d(2*width, width, 3, rng, dtype=dtype)
        self.dec0 = ResBlock(2*width, width, edim, rng, dtype=dtype)

        self.norm_out = GroupNorm(_groups(width), width, dtype=dtype)
        self.conv_out = Conv2d(width, channels, 3, rng, dtype=dtype)

    def token_ids(self, global_ids):
        null = self.ntokens

        ids = [null if g is None else g for g in global_ids]
        if any(not 0 <= g <= null for g in ids):
            raise ValueError(f'Global token outside [0, {self.ntokens})')

        return np.array(ids, dtype=np.intp)

    def __call__(self, x_t, t, local, global_ids):
        n, c, H, W = x_t.shape
        if c != self.channels:
            raise ShapeError(f'Denoiser expects {self.channels} channels, got '
                             f'{c}')
        if local.shape != (n, self.d, H, W):
            raise ShapeError(f'Conditioning of shape {local.shape} does not '
                             f'match {(n, self.d, H, W)}')
        if H % 2 or W % 2:
            raise ShapeError('Denoiser inputs must have even sizes')

        t = np.broadcast_to(np.asarray(t), (n,))
        temb = timestep_embedding(t, self.width, self.conv_in.weight.dtype)

        emb = self.temb2(ops.silu(self.temb1(temb)))
        emb = emb + ops.embedding(self.gemb, self.token_ids(global_ids))

        h0 = self.conv_in(ops.concat([x_t, local], axis=1))
        h0 = self.enc0(h0, emb)

        h1 = self.enc1(self.down(h0), emb)
        h1 = self.mid(h1, emb)

        h = self.up(ops.upsample_nearest(h1, 2))
        h = self.dec0(ops.concat([h, h0], axis=1), emb)

        return self.conv_out(ops.silu(self.norm_out(h)))
