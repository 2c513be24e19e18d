from percomicro.plugins.base import BaseTrainPlugin, init_csv
from percomicro.plugins.nancheck import NaNCheckPlugin
from percomicro.plugins.stats import StatsPlugin
from percomicro.plugins.writer import WriterPlugin
from percomicro.util import subclass_where


def get_plugin(prefix, name, *args, **kwargs):
    cls = subclass_where(BaseTrainPlugin, prefix=prefix, name=name)
    return cls(*args, **kwargs)
