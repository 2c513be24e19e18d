from argparse import Action
import contextlib
import shutil
import sys
import time


def format_hms(delta):
    if delta is None:
        return '--:--:--'

    mins, secs = divmod(int(delta), 60)
    return '{:02d}:{:02d}:{:02d}'.format(*divmod(mins, 60), secs)


def _emit(s, flush=False):
    sys.stderr.write(s)
    if flush:
        sys.stderr.flush()


class ProgressBar:
    # Minimum time in seconds between redraws
    _redraw_every = 0.1

    def __init__(self, *, prefix='', suffix='\n'):
        self.prefix = prefix
        self.suffix = suffix

        self._width = shutil.get_terminal_size().columns - len(prefix)

    def start(self, end, *, start=0):
        self.first = self.step = start
        self.end = end
        self.info = ''

        self._t0 = time.time()
        self._tdraw = None
        self._drawn = 0

        _emit(self.prefix)

    def start_with_iter(self, iterable, n=None):
        self.start(len(iterable) if n is None else n)

        for item in iterable:
            yield item
            self()

    def __call__(self, n=None, info=''):
        self.step = min(self.end, self.step + 1 if n is None else n)
        self.info = info

        finished = self.step == self.end
        elapsed = time.time() - self._t0

        if (finished or self._tdraw is None or
                elapsed - self._tdraw >= self._redraw_every):
            self._draw(elapsed)

        if finished:
            _emit(self.suffix)

    def _status(self, elapsed):
        done = self.step - self.first
        total = self.end - self.first

        if done:
            rate = f'{done / max(elapsed, 1e-9):.3g} it/s'
            rem = format_hms(elapsed*(total - done) / done)
        else:
            rate, rem = '-- it/s', format_hms(None)

        frac = done / total if total else 1.0
        tail = f' {self.step}/{self.end} {self.info} {rate} rem: {rem}'

        return frac, tail

    def _draw(self, elapsed):
        frac, tail = self._status(elapsed)

        room = max(self._width - len(tail) - 10, 0)
        filled = int(room*frac)
        line = f'{frac:6.1%} |{"#"*filled}{"."*(room - filled)}|{tail}'

        _emit(f'\x1b[{self._drawn}D\x1b[0K{line}', flush=True)

        self._drawn = len(line)
        self._tdraw = elapsed


class NullProgressBar(ProgressBar):
    def __init__(self, *args, **kwargs):
        pass

    def start(self, end, *, start=0):
        pass

    def start_with_iter(self, iterable, n=None):
        yield from iterable

    def __call__(self, n=None, info=''):
        pass


class ProgressSequence:
    def __init__(self, *, prefix='perco-micro'):
        self._prefix = prefix

    def note(self, msg):
        _emit(f'{self._prefix}   {msg}\n')

    @contextlib.contextmanager
    def _phase(self, name, bar):
        head = f'{self._prefix} : {name} '
        t0 = time.time()

        if bar:
            yield ProgressBar(prefix=head, suffix='')
        else:
            _emit(head, flush=True)
            yield None

        _emit(f'\x1b[2K\x1b[G{head}({time.time() - t0:.2f}s)\n')

    def start(self, phase):
        return self._phase(phase, False)

    def start_with_bar(self, phase):
        return self._phase(phase, True)


class NullProgressSequence(ProgressSequence):
    def __init__(self):
        pass

    def __bool__(self):
        return False

    def note(self, msg):
        pass

    @contextlib.contextmanager
    def _phase(self, name, bar):
        yield NullProgressBar() if bar else None


class ProgressSequenceAction(Action):
    def __init__(self, *, nargs=0, default=NullProgressSequence(), **kwargs):
        super().__init__(nargs=nargs, default=default, **kwargs)

    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, ProgressSequence())
