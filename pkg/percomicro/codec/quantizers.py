import numpy as np

from percomicro.nn import Module, Tensor
from percomicro.quant import (Codebook, FsqConfig, fsq_quantize,
                              indices_to_codes, l2_normalize, nearest_codes,
                              normalize_codes, quantize, straight_through,
                              vq_losses)
from percomicro.util import subclass_where


class BaseQuantizer(Module):
    name = None

    def __init__(self, cfg, rng, dtype):
        self.dtype = dtype

    @property
    def V(self):
        return 1 << self.log2V

    def encode(self, features):
        raise NotImplementedError

    def train_quantize(self, features):
        raise NotImplementedError

    def codes(self, indices):
        raise NotImplementedError

    def after_step(self, indices, features, rng, optimizer):
        raise NotImplementedError

    def state_arrays(self):
        return {}

    def load_state_arrays(self, arrs):
        pass


class VQQuantizer(BaseQuantizer):
    name = 'vq'

    def __init__(self, cfg, rng, dtype):
        super().__init__(cfg, rng, dtype)

        self.d = cfg.getint('codec', 'code-dim')
        self.dead_steps = cfg.getint('training', 'dead-code-steps')

        self.codebook = Codebook(cfg.getint('codec', 'codebook-size'), self.d,
                                 rng, dtype=dtype,
                                 nrecent=cfg.getint('training',
                                                    'recent-features'))

    @property
    def log2V(self):
        return self.codebook.log2V

    def encode(self, features):
        fdata = features.data if isinstance(features, Tensor) else features

        idx, nzero = nearest_codes(fdata, self.codebook.codes.data)
        self.codebook.nzero += nzero

        return idx

    def train_quantize(self, features):
        f = l2_normalize(features)

        idx, q = quantize(f, self.codebook)
        cb_loss, commit = vq_losses(f, q)

        return idx, straight_through(f, q), cb_loss, commit, f.data

    def codes(self, indices):
        return self.codebook.lookup(indices)

    def after_step(self, indices, features, rng, optimizer):
        cb = self.codebook

        # Keep the codes on the unit sphere after every update
        normalize_codes(cb)

        reseeded = cb.update_usage(indices, features, rng, self.dead_steps)
        if reseeded.size:
            optimizer.reset_rows(cb.codes.name, reseeded)

        return cb.ndead(self.dead_steps)

    def state_arrays(self):
        return self.codebook.state_arrays('codebook.')

    def load_state_arrays(self, arrs):
        self.codebook.load_state_arrays(arrs, 'codebook.')


class FSQQuantizer(BaseQuantizer):
    name = 'fsq'

    def __init__(self, cfg, rng, dtype):
        super().__init__(cfg, rng, dtype)

        self.fsq = FsqConfig(cfg.getintlist('codec', 'fsq-levels'))
        self.d = self.fsq.d

    @property
    def log2V(self):
        return self.fsq.log2V

    def encode(self, features):
        return fsq_quantize(features, self.fsq)[0]

    def train_quantize(self, features):
        idx, q = fsq_quantize(features, self.fsq)

        # The implicit codebook has nothing to learn
        zero = Tensor(np.zeros((), dtype=self.dtype))

        return idx, q, zero, zero, None

    def codes(self, indices):
        return indices_to_codes(indices, self.fsq, self.dtype)

    def after_step(self, indices, features, rng, optimizer):
        return 0


def get_quantizer(name, cfg, rng, dtype):
    return subclass_where(BaseQuantizer, name=name)(cfg, rng, dtype)
