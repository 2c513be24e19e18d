def init_csv(cfg, cfgsect, header, *, filekey='file', headerkey='header'):
    fname = cfg.get(cfgsect, filekey)
    if not fname.endswith('.csv'):
        fname += '.csv'

    # Resumed runs append to the same file
    outf = open(fname, 'a')
    if not outf.tell() and cfg.getbool(cfgsect, headerkey, True):
        print(header, file=outf, flush=True)

    return outf


class BaseTrainPlugin:
    name = None
    prefix = 'train'

    def __init__(self, trainer, cfgsect, suffix=None):
        self.cfg = trainer.cfg
        self.cfgsect = cfgsect

        self.suffix = suffix

        # Most plugins act every so many steps
        self.nsteps = self.cfg.getint(cfgsect, 'nsteps', 100)
        if self.nsteps < 1:
            raise ValueError(f'Invalid nsteps for plugin {self.name}')

    def due(self, trainer):
        return trainer.nsteps % self.nsteps == 0

    def __call__(self, trainer):
        pass
