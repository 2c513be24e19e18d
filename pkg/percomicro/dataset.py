import os

import numpy as np

from percomicro.errors import DataError
from percomicro.pnm import pnm_read, to_unit


def read_labels(path):
    labels = {}

    with open(path) as f:
        for i, line in enumerate(f, start=1):
            if not (line := line.strip()) or line.startswith('#'):
                continue

            try:
                fname, cls = line.rsplit(None, 1)
                labels[fname] = int(cls)
            except ValueError:
                raise DataError(f'{path}:{i}: malformed label line') from None

    return labels


def read_classes(path):
    names = {}

    with open(path) as f:
        for i, line in enumerate(f, start=1):
            if not (line := line.strip()):
                continue

            try:
                cls, name = line.split(None, 1)
                names[int(cls)] = name
            except ValueError:
                raise DataError(f'{path}:{i}: malformed class line') from None

    return names


def label_for(image_path, labels='labels.txt'):
    path = os.path.join(os.path.dirname(os.path.abspath(image_path)), labels)
    if os.path.exists(path):
        return read_labels(path).get(os.path.basename(image_path))


class ImageDataset:
    exts = ('.ppm', '.pgm')

    def __init__(self, path, *, labels='labels.txt'):
        if not os.path.isdir(path):
            raise DataError(f'Dataset directory {path} does not exist')

        self.path = path
        self.files = sorted(f for f in os.listdir(path)
                            if f.endswith(self.exts))
        if not self.files:
            raise DataError(f'Dataset directory {path} holds no images')

        imgs = [pnm_read(os.path.join(path, f)) for f in self.files]
        if len({im.shape for im in imgs}) != 1:
            raise DataError(f'Images in {path} differ in shape')

        self.images = np.stack(imgs)

        lpath = os.path.join(path, labels)
        lmap = read_labels(lpath) if os.path.exists(lpath) else {}
        self.labels = [lmap.get(f) for f in self.files]

        cpath = os.path.join(path, 'classes.txt')
        self.classes = read_classes(cpath) if os.path.exists(cpath) else {}

    def __len__(self):
        return len(self.files)

    @property
    def shape(self):
        return self.images.shape[1:]

    def check_shape(self, shape):
        if self.shape != tuple(shape):
            raise DataError(f'Dataset images have shape {self.shape} but the '
                            f'model expects {tuple(shape)}')

    def check_labels(self, ntokens):
        bad = [f for f, l in zip(self.files, self.labels)
               if l is not None and not 0 <= l < ntokens]
        if bad:
            raise DataError(f'Labels outside [0, {ntokens}) for '
                            f'{", ".join(bad[:5])}')

    def unit(self, i):
        return to_unit(self.images[i])

    def batch(self, rng, n):
        idx = rng.integers(0, len(self), size=n)

        return to_unit(self.images[idx]), [self.labels[i] for i in idx]
