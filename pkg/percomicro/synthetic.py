from collections import namedtuple
import hashlib
import os

import numpy as np
from platformdirs import user_cache_dir

from percomicro.pnm import format_pnm
from percomicro.util import digest


class SyntheticSpec(namedtuple('SyntheticSpec', [
    'image_size', 'classes', 'ntrain', 'nheldout', 'channels'
], defaults=[3])):
    @classmethod
    def from_cfg(cls, cfg):
        return cls(cfg.getint('synthetic', 'image-size'),
                   cfg.getint('synthetic', 'classes'),
                   cfg.getint('synthetic', 'ntrain'),
                   cfg.getint('synthetic', 'nheldout'),
                   cfg.getint('codec', 'channels'))

    def validate(self):
        if self.image_size < 8:
            raise ValueError(f'Synthetic images of size {self.image_size} '
                             'are too small')
        if not 1 <= self.classes <= len(PRIMITIVES):
            raise ValueError(f'Synthetic class count must be in '
                             f'[1, {len(PRIMITIVES)}]')
        if self.ntrain < 0 or self.nheldout < 0:
            raise ValueError('Split sizes must be non-negative')
        if self.channels not in (1, 3):
            raise ValueError('Synthetic images have 1 or 3 channels')

        return self


def _disc(dx, dy, r):
    return dx*dx + dy*dy <= r*r


def _square(dx, dy, r):
    return np.maximum(abs(dx), abs(dy)) <= 0.8*r


def _triangle(dx, dy, r):
    return (abs(dy) <= r) & (abs(dx) <= (dy + r) / 2)


def _ring(dx, dy, r):
    d2 = dx*dx + dy*dy
    return (d2 <= r*r) & (d2 >= 0.36*r*r)


def _cross(dx, dy, r):
    ax, ay = abs(dx), abs(dy)
    return ((ax <= r / 3) & (ay <= r)) | ((ay <= r / 3) & (ax <= r))


def _stripes(dx, dy, r):
    return _square(dx, dy, r) & (np.floor(3*dx / r) % 2 == 0)


def _checker(dx, dy, r):
    parity = (np.floor(2*dx / r) + np.floor(2*dy / r)) % 2
    return _square(dx, dy, r) & (parity == 0)


def _diamond(dx, dy, r):
    return abs(dx) + abs(dy) <= r


PRIMITIVES = [
    ('disc', _disc),
    ('square', _square),
    ('triangle', _triangle),
    ('ring', _ring),
    ('cross', _cross),
    ('stripes', _stripes),
    ('checker', _checker),
    ('diamond', _diamond)
]


def class_names(n):
    return [name for name, fn in PRIMITIVES[:n]]


def render(cls, size, rng, channels=3):
    # Pixel centres on the unit square
    c = (np.arange(size) + 0.5) / size
    yy, xx = np.meshgrid(c, c, indexing='ij')

    cx, cy = rng.uniform(0.3, 0.7, size=2)
    r = rng.uniform(0.15, 0.3)

    bg = rng.uniform(0.0, 0.35, size=channels)
    fg = rng.uniform(0.55, 1.0, size=channels)

    mask = PRIMITIVES[cls][1](xx - cx, yy - cy, r)
    img = np.where(mask, fg[:, None, None], bg[:, None, None])

    return np.floor(255*img + 0.5).astype(np.uint8)


def _write_split(path, prefix, items, ext):
    os.makedirs(path, exist_ok=True)

    labels = []
    for i, (img, cls) in enumerate(items):
        fname = f'{prefix}-{i:05d}.{ext}'
        with open(os.path.join(path, fname), 'wb') as f:
            f.write(format_pnm(img))

        labels.append(f'{fname} {cls}\n')

    with open(os.path.join(path, 'labels.txt'), 'w') as f:
        f.writelines(labels)


def make_synthetic(spec, seed, outdir):
    spec.validate()
    rng = np.random.default_rng(seed)

    def draw(n, exclude=frozenset()):
        items = []
        while len(items) < n:
            cls = int(rng.integers(spec.classes))
            img = render(cls, spec.image_size, rng, spec.channels)

            # Held-out images never repeat a training image
            if hashlib.sha256(img.tobytes()).digest() not in exclude:
                items.append((img, cls))

        return items

    train = draw(spec.ntrain)
    seen = {hashlib.sha256(img.tobytes()).digest() for img, cls in train}
    heldout = draw(spec.nheldout, seen)

    ext = 'ppm' if spec.channels == 3 else 'pgm'
    _write_split(os.path.join(outdir, 'train'), 'train', train, ext)
    _write_split(os.path.join(outdir, 'heldout'), 'heldout', heldout, ext)

    names = ''.join(f'{i} {n}\n' for i, n in
                    enumerate(class_names(spec.classes)))
    for split in ('train', 'heldout'):
        with open(os.path.join(outdir, split, 'classes.txt'), 'w') as f:
            f.write(names)

    return os.path.join(outdir, 'train'), os.path.join(outdir, 'heldout')


def synthetic_cache_dir(spec, seed):
    root = os.environ.get('PERCO_MICRO_CACHE_DIR',
                          user_cache_dir('perco-micro', 'perco-micro'))

    return os.path.join(root, f'synthetic-{digest(tuple(spec), seed)[:16]}')


def cached_synthetic(spec, seed):
    outdir = synthetic_cache_dir(spec, seed)
    train, heldout = (os.path.join(outdir, s) for s in ('train', 'heldout'))

    if not (os.path.exists(os.path.join(train, 'classes.txt')) and
            os.path.exists(os.path.join(heldout, 'classes.txt'))):
        make_synthetic(spec, seed, outdir)

    return train, heldout
