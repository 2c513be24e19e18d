from percomicro.errors import ShapeError
from percomicro.nn import Conv2d, Module, ops


class HyperEncoder(Module):
    def __init__(self, channels, size, latent, d, width, rng, *, dtype=None):
        lh, lw = (latent, latent) if isinstance(latent, int) else latent
        if min(lh, lw) < 1 or size % lh or size % lw:
            raise ShapeError(f'Latent grid {lh}x{lw} does not divide image '
                             f'size {size}')

        self.channels = channels
        self.size = size
        self.latent = (lh, lw)

        fh, fw = size // lh, size // lw

        self.conv_in = Conv2d(channels, width, 3, rng, dtype=dtype)

        # Strided convolutions while both axes still halve
        self.down = []
        while fh % 2 == 0 and fw % 2 == 0:
            self.down.append(Conv2d(width, width, 3, rng, stride=2,
                                    dtype=dtype))
            fh, fw = fh // 2, fw // 2

        # The per-axis remainder is pooled away
        self.pool = (fh, fw)

        self.conv_out = Conv2d(width, d, 1, rng, dtype=dtype)

    def __call__(self, x):
        if x.shape[1:] != (self.channels, self.size, self.size):
            raise ShapeError(f'Hyper-encoder expects images of shape '
                             f'{(self.channels, self.size, self.size)}, got '
                             f'{x.shape[1:]}')

        h = ops.silu(self.conv_in(x))
        for conv in self.down:
            h = ops.silu(conv(h))

        if self.pool != (1, 1):
            h = ops.avg_pool2d(h, self.pool)

        # Features are laid out as [N, h, w, d]
        return self.conv_out(h).transpose(0, 2, 3, 1)
