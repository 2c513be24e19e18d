import re

import numpy as np

from percomicro.errors import FormatError


# Magic, width, height and maxval separated by whitespace or comments
_header_re = re.compile(rb'(P[56])(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+'
                        rb'(\d+)(?:\s|#[^\n]*\n)+(\d+)\s')

_channels = {b'P5': 1, b'P6': 3}


def parse_pnm(buf, magic=None):
    if not (m := _header_re.match(buf)):
        raise FormatError('Malformed PNM header')

    kind, w, h, maxval = m[1], int(m[2]), int(m[3]), int(m[4])
    if magic is not None and kind != magic:
        raise FormatError(f'Expected a {magic.decode()} file, got '
                          f'{kind.decode()}')
    if maxval != 255:
        raise FormatError(f'Unsupported maxval {maxval}')
    if w < 1 or h < 1:
        raise FormatError(f'Invalid image size {w}x{h}')

    c = _channels[kind]
    payload = buf[m.end():]
    if len(payload) != w*h*c:
        raise FormatError(f'PNM payload of {len(payload)} bytes, expected '
                          f'{w*h*c}')

    img = np.frombuffer(payload, dtype=np.uint8).reshape(h, w, c)

    # Channels first
    return img.transpose(2, 0, 1).copy()


def format_pnm(img):
    img = np.asarray(img)
    if img.dtype != np.uint8 or img.ndim != 3 or img.shape[0] not in (1, 3):
        raise ValueError('PNM images must be uint8 of shape [1|3, H, W]')

    c, h, w = img.shape
    magic = b'P5' if c == 1 else b'P6'

    head = b'%s\n%d %d\n255\n' % (magic, w, h)
    return head + np.ascontiguousarray(img.transpose(1, 2, 0)).tobytes()


def _read(path, magic):
    with open(path, 'rb') as f:
        return parse_pnm(f.read(), magic)


def _write(path, img):
    with open(path, 'wb') as f:
        f.write(format_pnm(img))


def ppm_read(path):
    return _read(path, b'P6')


def pgm_read(path):
    return _read(path, b'P5')


def pnm_read(path):
    return _read(path, None)


def ppm_write(path, img):
    if np.shape(img)[0] != 3:
        raise ValueError('PPM images have three channels')

    _write(path, img)


def pgm_write(path, img):
    if np.shape(img)[0] != 1:
        raise ValueError('PGM images have one channel')

    _write(path, img)


def to_unit(img):
    return np.asarray(img, dtype=np.float64) / 127.5 - 1


def from_unit(x):
    v = (np.asarray(x, dtype=np.float64) + 1)*127.5

    # Round half away from zero; values are non-negative after clipping
    return np.floor(np.clip(v, 0, 255) + 0.5).astype(np.uint8)
