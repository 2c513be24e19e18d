import hashlib
import itertools as it
import os
import pickle
import re


_missing = object()


def subclasses(cls):
    for sc in cls.__subclasses__():
        yield sc
        yield from subclasses(sc)


def subclass_where(cls, **kwargs):
    for sc in subclasses(cls):
        if all(getattr(sc, k, _missing) == v for k, v in kwargs.items()):
            return sc

    attrs = ', '.join(f'{k} = {v}' for k, v in kwargs.items())
    raise KeyError(f'No subclass of {cls.__name__} with {attrs}')


def digest(*args, hash='sha256'):
    return getattr(hashlib, hash)(pickle.dumps(args)).hexdigest()


def is_pow2(n):
    return n >= 1 and n & (n - 1) == 0


def worker_count(njobs):
    try:
        cap = int(os.environ.get('PERCO_MICRO_THREADS', os.cpu_count() or 1))
    except ValueError:
        raise ValueError('PERCO_MICRO_THREADS must be an integer') from None

    return max(1, min(cap, njobs))


def file_path_gen(basedir, basename, restore=False):
    def g():
        ns = 0

        # Continue the numbering of any existing outputs
        if restore and re.search('{n[^}]*}', basename):
            bn = re.escape(basename)
            bn = re.sub(r'\\{n[^}]*\\}', r'(\\s*\\d+\\s*)', bn)
            bn = re.sub(r'\\{step[^}]*\\}', r'(?:\\d+)', bn) + '$'
            for f in os.listdir(basedir):
                if (m := re.match(bn, f)):
                    ns = max(ns, int(m[1]) + 1)

        step = yield

        for n in it.count(ns):
            step = yield os.path.join(basedir,
                                      basename.format(step=step, n=n))

    gen = g()
    next(gen)
    return gen
