import re

import numpy as np

from percomicro.diffusion import (SamplerConfig, auto_steps,
                                  make_linear_schedule)
from percomicro.errors import ConfigError
from percomicro.inifile import Inifile
from percomicro.nn import dtype_for
from percomicro.util import is_pow2


# Section -> option -> default; every option must appear here
SCHEMA = {
    'run': {
        'seed': 0,
        'precision': 'single'
    },
    'codec': {
        'image-size': 32,
        'channels': 3,
        'latent-h': 2,
        'latent-w': 2,
        'quantizer': 'vq',
        'codebook-size': 256,
        'code-dim': 8,
        'fsq-levels': '8,8,8',
        'global-tokens': 4,
        'base-width': 32,
        'encoder-width': 32
    },
    'diffusion': {
        'steps': 1000,
        'beta-start': 1e-4,
        'beta-end': 0.02,
        'prediction': 'v'
    },
    'sampler': {
        'kind': 'ddim',
        'steps': 20,
        'cfg-scale': 3.0
    },
    'training': {
        'lr': 1e-4,
        'warmup-steps': 500,
        'batch-size': 32,
        'steps': 5000,
        'weight-decay': 0.01,
        'beta1': 0.9,
        'beta2': 0.999,
        'eps': 1e-8,
        'cond-dropout': 0.1,
        'commitment': 0.25,
        'aux-weight': 0.0,
        'aux-min-bpp': 0.0,
        'dead-code-steps': 1000,
        'recent-features': 1024
    },
    'dataset': {
        'path': '',
        'labels': 'labels.txt'
    },
    'synthetic': {
        'image-size': 32,
        'classes': 4,
        'ntrain': 2048,
        'nheldout': 256
    }
}

# Sections owned by trainer plugins are validated by the plugins
_plugin_sect = re.compile(r'train-plugin-(.+?)(?:-(.+))?$')


class RunConfig:
    def __init__(self, cfg=None):
        self.cfg = cfg = cfg if isinstance(cfg, Inifile) else Inifile(cfg)

        for sect in cfg.sections():
            if _plugin_sect.match(sect):
                continue
            elif sect not in SCHEMA:
                raise ConfigError(f'Unknown section [{sect}]')

            if (unknown := set(cfg.options(sect)) - SCHEMA[sect].keys()):
                raise ConfigError(f'Unknown options in [{sect}]: '
                                  f'{", ".join(sorted(unknown))}')

        # Fill in the defaults so the stored config is self contained
        for sect, opts in SCHEMA.items():
            for k, v in opts.items():
                cfg.get(sect, k, v)

        self._validate()

    @staticmethod
    def load(path):
        return RunConfig(Inifile.load(path))

    def _validate(self):
        cfg = self.cfg

        cfg.getchoice('run', 'precision', ['single', 'double'])
        cfg.getchoice('codec', 'quantizer', ['vq', 'fsq'])
        cfg.getchoice('diffusion', 'prediction', ['epsilon', 'v'])
        cfg.getchoice('sampler', 'kind', ['ddim', 'ddpm'])

        size = cfg.getint('codec', 'image-size')
        h, w = cfg.getint('codec', 'latent-h'), cfg.getint('codec', 'latent-w')
        if not (1 <= h <= 255 and 1 <= w <= 255):
            raise ConfigError(f'Latent grid {h}x{w} must have sides in '
                              '[1, 255]')
        if size < 1 or size % h or size % w:
            raise ConfigError(f'Latent grid {h}x{w} does not evenly divide '
                              f'{size}x{size} images')

        if cfg.getint('codec', 'channels') not in (1, 3):
            raise ConfigError('Only 1 or 3 image channels are supported')
        if not 1 <= cfg.getint('codec', 'global-tokens') <= 255:
            raise ConfigError('global-tokens must be in [1, 255]')

        if not 0 <= cfg.getfloat('training', 'cond-dropout') <= 1:
            raise ConfigError('cond-dropout must be in [0, 1]')

        if cfg.get('codec', 'quantizer') == 'vq':
            V = cfg.getint('codec', 'codebook-size')
            if not is_pow2(V) or not 2 <= V <= 1 << 16:
                raise ConfigError(f'Codebook size {V} is not a power of two '
                                  'in [2, 65536]')
        else:
            levels = cfg.getintlist('codec', 'fsq-levels')
            if any(l < 2 for l in levels) or \
               not is_pow2(V := int(np.prod(levels))) or V > 1 << 16:
                raise ConfigError(f'Invalid FSQ levels {levels}')

        try:
            self.schedule
            self.sampler_config()
        except ValueError as e:
            raise ConfigError(str(e)) from None

    @property
    def seed(self):
        return self.cfg.getint('run', 'seed')

    @property
    def dtype(self):
        return dtype_for(self.cfg.get('run', 'precision'))

    @property
    def image_shape(self):
        size = self.cfg.getint('codec', 'image-size')
        return self.cfg.getint('codec', 'channels'), size, size

    @property
    def latent_shape(self):
        return self.cfg.getint('codec', 'latent-h'), \
            self.cfg.getint('codec', 'latent-w')

    @property
    def schedule(self):
        return make_linear_schedule(self.cfg.getint('diffusion', 'steps'),
                                    self.cfg.getfloat('diffusion',
                                                      'beta-start'),
                                    self.cfg.getfloat('diffusion',
                                                      'beta-end'))

    def sampler_steps(self, spatial_bpp=None):
        steps = self.cfg.get('sampler', 'steps')
        if steps == 'auto':
            return auto_steps(spatial_bpp or 0.0)

        try:
            return int(steps)
        except ValueError:
            raise ConfigError(f'Invalid sampler steps {steps!r}') from None

    def sampler_config(self, *, spatial_bpp=None, steps=None, cfg_scale=None,
                       seed=None):
        if steps is None:
            steps = self.sampler_steps(spatial_bpp)

        if steps > self.cfg.getint('diffusion', 'steps'):
            raise ValueError(f'Sampler steps {steps} exceed the diffusion '
                             'steps')

        return SamplerConfig(
            steps=steps,
            cfg_scale=(self.cfg.getfloat('sampler', 'cfg-scale')
                       if cfg_scale is None else cfg_scale),
            kind=self.cfg.get('sampler', 'kind'),
            seed=self.seed if seed is None else seed
        )

    def override(self, sect, opt, value):
        if value is not None:
            self.cfg.set(sect, opt, value)
            self._validate()

    def tostr(self):
        return self.cfg.tostr()

    def rng(self, offset=0):
        return np.random.default_rng(self.seed + offset)
