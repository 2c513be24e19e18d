import numpy as np

from percomicro.errors import NumericalError
from percomicro.plugins.base import BaseTrainPlugin


class NaNCheckPlugin(BaseTrainPlugin):
    name = 'nancheck'

    def __call__(self, trainer):
        if self.due(trainer):
            for name, p in trainer.model.named_parameters():
                if not np.all(np.isfinite(p.data)):
                    raise NumericalError(f'Non-finite values in {name} at '
                                         f'step {trainer.nsteps}')
