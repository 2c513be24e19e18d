from percomicro.plugins.base import BaseTrainPlugin
from percomicro.util import file_path_gen


class WriterPlugin(BaseTrainPlugin):
    name = 'writer'

    def __init__(self, trainer, cfgsect, suffix=None):
        super().__init__(trainer, cfgsect, suffix)

        # Base output directory and file name
        basedir = self.cfg.getpath(cfgsect, 'basedir', '.', abs=True)
        basename = self.cfg.get(cfgsect, 'basename')

        # Continue the numbering when resuming
        self._paths = file_path_gen(basedir, basename,
                                    restore=trainer.nsteps > 0)
        self.written = []

    def __call__(self, trainer):
        if self.due(trainer):
            path = self._paths.send(trainer.nsteps)
            trainer.save(path)

            self.written.append(path)
