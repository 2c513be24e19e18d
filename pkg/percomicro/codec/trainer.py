from collections import defaultdict, namedtuple
import re
import time

import numpy as np

from percomicro.bitstream import spatial_rate
from percomicro.codec.model import CodecModel, drop_global, upsample_bilinear
from percomicro.config import RunConfig
from percomicro.diffusion import forward_marginal, loss_simple
from percomicro.errors import ConfigError, FormatError, NumericalError
from percomicro.inifile import Inifile
from percomicro.nn import (AdamW, Tensor, ops, precision, read_checkpoint,
                           write_checkpoint)
from percomicro.plugins import get_plugin


StepReport = namedtuple('StepReport', [
    'loss', 'mse', 'codebook', 'commitment', 'aux', 'lr', 'nnull', 'indices',
    'ndead'
])


class TrainConfig(namedtuple('TrainConfig', [
    'lr', 'warmup', 'batch_size', 'steps', 'weight_decay', 'betas', 'eps',
    'cond_dropout', 'commitment', 'aux_weight', 'aux_min_bpp'
])):
    @classmethod
    def from_cfg(cls, cfg):
        sect = 'training'

        return cls(
            lr=cfg.getfloat(sect, 'lr'),
            warmup=cfg.getint(sect, 'warmup-steps'),
            batch_size=cfg.getint(sect, 'batch-size'),
            steps=cfg.getint(sect, 'steps'),
            weight_decay=cfg.getfloat(sect, 'weight-decay'),
            betas=(cfg.getfloat(sect, 'beta1'), cfg.getfloat(sect, 'beta2')),
            eps=cfg.getfloat(sect, 'eps'),
            cond_dropout=cfg.getfloat(sect, 'cond-dropout'),
            commitment=cfg.getfloat(sect, 'commitment'),
            aux_weight=cfg.getfloat(sect, 'aux-weight'),
            aux_min_bpp=cfg.getfloat(sect, 'aux-min-bpp')
        )


def make_optimizer(model, tcfg):
    return AdamW(model.named_parameters(), lr=tcfg.lr, betas=tcfg.betas,
                 eps=tcfg.eps, weight_decay=tcfg.weight_decay,
                 warmup=tcfg.warmup)


def training_step(batch, model, optimizer, tcfg, rng):
    images, gids = batch
    images = np.asarray(images, dtype=model.dtype)

    s, kind = model.schedule, model.prediction

    # Timesteps and noise
    t = rng.integers(1, s.T + 1, size=len(images))
    eps = rng.standard_normal(images.shape).astype(model.dtype)
    x_t = forward_marginal(images, t, eps, s)

    with precision(model.dtype):
        feats = model.encoder(Tensor(images))
        idx, z, cb_loss, commit, fdata = model.quantizer.train_quantize(feats)
        local = upsample_bilinear(z, model.H, model.W)

        # Conditioning dropout
        gids = [drop_global(g, tcfg.cond_dropout, rng) for g in gids]
        nnull = sum(g is None for g in gids)

        out = model.denoiser(Tensor(x_t), t, local, gids)

        mse = loss_simple(out, kind.target(images, eps, t, s))
        loss = mse + cb_loss + tcfg.commitment*commit

        # Auxiliary x0-space term, gated on the spatial rate
        aux = None
        sbpp = spatial_rate(model.h, model.w, model.quantizer.V, model.H,
                            model.W)
        if tcfg.aux_weight and sbpp > tcfg.aux_min_bpp:
            x0, _ = kind.to_x0_eps(out, x_t, t, s)
            aux = ops.mse(x0, images)
            loss = loss + tcfg.aux_weight*aux

    if not np.isfinite(loss.item()):
        raise NumericalError(f'Non-finite training loss at step '
                             f'{optimizer.nsteps + 1}: mse = {mse.item()}, '
                             f'codebook = {cb_loss.item()}, commitment = '
                             f'{commit.item()}')

    model.zero_grad()
    loss.backward()

    lr = optimizer.lr_at(optimizer.nsteps + 1)
    optimizer.step()

    ndead = model.quantizer.after_step(idx, fdata, rng, optimizer)

    return StepReport(loss.item(), mse.item(), cb_loss.item(), commit.item(),
                      aux.item() if aux is not None else 0.0, lr, nnull, idx,
                      ndead)


class Trainer:
    def __init__(self, runcfg, dataset, *, checkpoint=None):
        self.runcfg = runcfg
        self.cfg = cfg = runcfg.cfg
        self.dataset = dataset

        self.tcfg = TrainConfig.from_cfg(cfg)
        self.model = CodecModel(runcfg)
        self.optimizer = make_optimizer(self.model, self.tcfg)

        # Independent stream for batches, noise and dropout
        self.rng = runcfg.rng(1)

        self.nsteps = 0
        self.nnull = 0
        self.ndrawn = 0
        self.last = None

        if checkpoint is not None:
            self._restore(checkpoint)

        self.plugins = self._get_plugins()

        self._wstart = time.time()
        self._plugin_wtimes = defaultdict(lambda: 0)

    def _restore(self, path):
        _, stats, arrs = read_checkpoint(path)
        stats = Inifile(stats)

        try:
            self.model.load_state_arrays(arrs)

            self.nsteps = stats.getint('training', 'nsteps')
            self.optimizer.load_state_arrays(arrs, self.nsteps)

            self.nnull = stats.getint('training', 'nnull')
            self.ndrawn = stats.getint('training', 'ndrawn')
            self.rng.bit_generator.state = stats.getliteral('training',
                                                            'rng-state')
        except KeyError as e:
            raise FormatError(f'Checkpoint is missing {e}') from None

    def _get_plugins(self):
        plugins = []

        for s in self.cfg.sections():
            if (m := re.match('train-plugin-(.+?)(?:-(.+))?$', s)):
                try:
                    plugins.append(get_plugin('train', m[1], self, m[0], m[2]))
                except KeyError:
                    raise ConfigError(f'Unknown training plugin {m[1]}') \
                        from None

        return plugins

    def _run_plugins(self):
        wtimes = self._plugin_wtimes

        for plugin in self.plugins:
            tstart = time.time()

            plugin(self)

            wtimes[plugin.name, plugin.suffix] += time.time() - tstart

    def step(self):
        batch = self.dataset.batch(self.rng, self.tcfg.batch_size)
        report = training_step(batch, self.model, self.optimizer, self.tcfg,
                               self.rng)

        self.nsteps += 1
        self.nnull += report.nnull
        self.ndrawn += len(batch[1])
        self.last = report

        return report

    def run(self, progress=None):
        nend = self.tcfg.steps

        if progress is not None:
            progress.start(nend, start=self.nsteps)

        while self.nsteps < nend:
            report = self.step()
            self._run_plugins()

            if progress is not None:
                progress(self.nsteps, f'loss {report.loss:.4g}')

    @property
    def null_fraction(self):
        return self.nnull / self.ndrawn if self.ndrawn else 0.0

    def collect_stats(self, stats):
        stats.set('training', 'nsteps', self.nsteps)
        stats.set('training', 'nnull', self.nnull)
        stats.set('training', 'ndrawn', self.ndrawn)
        stats.set('training', 'lr', self.optimizer.lr)
        stats.set('training', 'rng-state', repr(self.rng.bit_generator.state))

        # Global vocabulary names, used to resolve captions
        for i, name in sorted(getattr(self.dataset, 'classes', {}).items()):
            stats.set('classes', str(i), name)

    def wall_times(self):
        wtimes = {'wall-time': time.time() - self._wstart}
        for (pname, psuffix), t in self._plugin_wtimes.items():
            k = f'plugin-wall-time-{pname}'
            if psuffix:
                k += f'-{psuffix}'

            wtimes[k] = t

        return wtimes

    def save(self, path):
        stats = Inifile()
        self.collect_stats(stats)

        arrs = self.model.state_arrays() | self.optimizer.state_arrays()
        write_checkpoint(path, self.runcfg.tostr(), stats.tostr(), arrs)


def model_classes(stats):
    if not stats.hassect('classes'):
        return {}

    return {name: int(i) for i, name in stats.items('classes').items()}


def load_model(path):
    config, stats, arrs = read_checkpoint(path)

    runcfg = RunConfig(config)
    model = CodecModel(runcfg)
    model.load_state_arrays(arrs)

    return runcfg, model, Inifile(stats)
