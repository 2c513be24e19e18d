import numpy as np

from percomicro.plugins.base import BaseTrainPlugin, init_csv
from percomicro.quant import perplexity


class StatsPlugin(BaseTrainPlugin):
    name = 'stats'

    header = ('step,loss,mse,codebook,commitment,aux,lr,perplexity,'
              'null-fraction,dead-codes')

    def __init__(self, trainer, cfgsect, suffix=None):
        super().__init__(trainer, cfgsect, suffix)

        self.outf = init_csv(self.cfg, cfgsect, self.header)
        self.flushsteps = self.cfg.getint(cfgsect, 'flushsteps', self.nsteps)

        self._reset(trainer)

    def _reset(self, trainer):
        self.counts = np.zeros(trainer.model.quantizer.V, dtype=np.int64)
        self.nnull = trainer.nnull
        self.ndrawn = trainer.ndrawn

    def __call__(self, trainer):
        r = trainer.last
        self.counts += np.bincount(np.ravel(r.indices),
                                   minlength=len(self.counts))

        if not self.due(trainer):
            return

        # Statistics over the window since the last row
        ndrawn = trainer.ndrawn - self.ndrawn
        nullf = (trainer.nnull - self.nnull) / ndrawn if ndrawn else 0.0

        print(trainer.nsteps, *(f'{v:.6g}' for v in (
            r.loss, r.mse, r.codebook, r.commitment, r.aux, r.lr,
            perplexity(self.counts), nullf
        )), r.ndead, sep=',', file=self.outf)

        if trainer.nsteps % self.flushsteps == 0:
            self.outf.flush()

        self._reset(trainer)
