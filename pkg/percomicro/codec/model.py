import numpy as np

from percomicro.codec.denoiser import Denoiser
from percomicro.codec.encoder import HyperEncoder
from percomicro.codec.quantizers import get_quantizer
from percomicro.diffusion import get_prediction
from percomicro.errors import FormatError, ShapeError
from percomicro.nn import Module, Tensor, no_grad, ops, precision


def upsample_bilinear(grid, H, W):
    grid = grid if isinstance(grid, Tensor) else Tensor(grid)

    batched = grid.ndim == 4
    if not batched:
        grid = grid.reshape(1, *grid.shape)

    n, h, w, d = grid.shape
    if h > H or w > W:
        raise ShapeError(f'Cannot upsample a {h}x{w} grid to {H}x{W}')

    out = ops.upsample_bilinear(grid.transpose(0, 3, 1, 2), H, W)

    return out if batched else out.reshape(d, H, W)


def drop_global(global_id, p, rng):
    if not 0 <= p <= 1:
        raise ValueError(f'Dropout probability {p} outside [0, 1]')

    return None if rng.random() < p else global_id


class CodecModel(Module):
    def __init__(self, runcfg, rng=None):
        cfg = runcfg.cfg
        rng = runcfg.rng() if rng is None else rng

        self.runcfg = runcfg
        self.dtype = dtype = runcfg.dtype

        self.channels, self.H, self.W = runcfg.image_shape
        self.h, self.w = runcfg.latent_shape
        self.ntokens = cfg.getint('codec', 'global-tokens')

        self.schedule = runcfg.schedule
        self.prediction = get_prediction(cfg.get('diffusion', 'prediction'))

        self.quantizer = get_quantizer(cfg.get('codec', 'quantizer'), cfg, rng,
                                       dtype)
        self.d = d = self.quantizer.d

        self.encoder = HyperEncoder(self.channels, self.H, (self.h, self.w), d,
                                    cfg.getint('codec', 'encoder-width'), rng,
                                    dtype=dtype)
        self.denoiser = Denoiser(self.channels, d, self.ntokens,
                                 cfg.getint('codec', 'base-width'), rng,
                                 dtype=dtype)

        self.assign_names()

    @property
    def log2V(self):
        return self.quantizer.log2V

    def hyper_encode(self, images):
        images = np.asarray(images, dtype=self.dtype)
        if images.ndim == 3:
            images = images[None]

        return self.encoder(Tensor(images))

    def encode_indices(self, images):
        with no_grad(), precision(self.dtype):
            idx = self.quantizer.encode(self.hyper_encode(images))

        return idx.astype(np.int64)

    def local_from_indices(self, indices):
        indices = np.asarray(indices)
        if indices.shape[-2:] != (self.h, self.w):
            raise ShapeError(f'Index grid of shape {indices.shape[-2:]} does '
                             f'not match the {self.h}x{self.w} model')

        with no_grad(), precision(self.dtype):
            grid = self.quantizer.codes(indices.reshape(-1, self.h, self.w))
            local = upsample_bilinear(grid, self.H, self.W)

        return local.data

    def __call__(self, x_t, t, local, global_ids):
        with no_grad(), precision(self.dtype):
            out = self.denoiser(Tensor(x_t), t, Tensor(local), global_ids)

        return out.data

    def state_arrays(self):
        arrs = {f'param.{k}': v for k, v in self.state_dict().items()}
        arrs |= self.quantizer.state_arrays()

        return arrs

    def load_state_arrays(self, arrs):
        self.load_state_dict({k[6:]: v for k, v in arrs.items()
                              if k.startswith('param.')})
        try:
            self.quantizer.load_state_arrays(arrs)
        except KeyError as e:
            raise FormatError(f'Checkpoint is missing {e}') from None
