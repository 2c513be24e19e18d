from ast import literal_eval
from configparser import (ConfigParser, Error as ParserError, NoOptionError,
                          NoSectionError)
import io
import os

from percomicro.errors import ConfigError


_sentinel = object()


class Inifile:
    def __init__(self, inistr=None):
        self._cp = cp = ConfigParser(inline_comment_prefixes=[';', '#'],
                                     interpolation=None)

        # Preserve case
        cp.optionxform = str

        if inistr:
            try:
                cp.read_string(inistr)
            except ParserError as e:
                raise ConfigError(f'Malformed configuration: {e}') from None

    @staticmethod
    def load(file):
        if isinstance(file, str):
            with open(file) as f:
                return Inifile(f.read())

        return Inifile(file.read())

    def set(self, section, option, value):
        value = str(value)

        try:
            self._cp.set(section, option, value)
        except NoSectionError:
            self._cp.add_section(section)
            self._cp.set(section, option, value)

    def hasopt(self, section, option):
        return self._cp.has_option(section, option)

    def hassect(self, section):
        return self._cp.has_section(section)

    def get(self, section, option, default=_sentinel):
        try:
            val = self._cp.get(section, option)
        except NoSectionError:
            if default is _sentinel:
                raise ConfigError(f'Missing section [{section}]') from None

            self._cp.add_section(section)
            val = self.get(section, option, default)
        except NoOptionError:
            if default is _sentinel:
                raise ConfigError(f'Missing option {option} in '
                                  f'[{section}]') from None

            self._cp.set(section, option, str(default))
            val = self._cp.get(section, option)

        return os.path.expandvars(val)

    def getpath(self, section, option, default=_sentinel, abs=False):
        path = os.path.expanduser(self.get(section, option, default))

        if abs:
            path = os.path.abspath(path)

        return path

    _bool_states = {'1': True, 'yes': True, 'true': True, 'on': True,
                    '0': False, 'no': False, 'false': False, 'off': False}

    def _convert(self, section, option, default, fn, what):
        v = self.get(section, option, default)

        try:
            return fn(v)
        except (KeyError, ValueError, SyntaxError):
            raise ConfigError(f'Invalid {what} for {option} in [{section}]: '
                              f'{v!r}') from None

    def getbool(self, section, option, default=_sentinel):
        return self._convert(section, option, default,
                             lambda v: self._bool_states[v.lower()],
                             'boolean')

    def getfloat(self, section, option, default=_sentinel):
        return self._convert(section, option, default, float, 'number')

    def getint(self, section, option, default=_sentinel):
        return self._convert(section, option, default, int, 'integer')

    def getintlist(self, section, option, default=_sentinel):
        return self._convert(section, option, default,
                             lambda v: [int(s) for s in v.split(',')],
                             'integer list')

    def getliteral(self, section, option, default=_sentinel):
        return self._convert(section, option, default, literal_eval,
                             'literal')

    def getchoice(self, section, option, choices, default=_sentinel):
        v = self.get(section, option, default)
        if v not in choices:
            raise ConfigError(f'Invalid value for {option} in [{section}]: '
                              f'{v!r}; expected one of {", ".join(choices)}')

        return v

    def items(self, section):
        return dict(self._cp.items(section))

    def options(self, section):
        return self._cp.options(section)

    def sections(self):
        return self._cp.sections()

    def tostr(self):
        buf = io.StringIO()
        self._cp.write(buf)
        return buf.getvalue()
