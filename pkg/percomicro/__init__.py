from percomicro._version import __version__
