import struct

import numpy as np

from percomicro.errors import FormatError


MAGIC = b'PMCK'
VERSION = 1

# On-disk element types
_dtypes = {0: '<f4', 1: '<f8', 2: '<i8', 3: '<u8', 4: '<i4', 5: '|u1'}
_codes = {np.dtype(v): k for k, v in _dtypes.items()}


def _pack_str(s):
    b = s.encode()
    return struct.pack('<I', len(b)) + b


def write_checkpoint(path, config, stats, arrays):
    out = [MAGIC, struct.pack('<B', VERSION), _pack_str(config),
           _pack_str(stats), struct.pack('<I', len(arrays))]

    for name, arr in arrays.items():
        arr = np.asarray(arr)
        dt = arr.dtype.newbyteorder('<')

        try:
            code = _codes[dt]
        except KeyError:
            raise ValueError(f'Unsupported checkpoint dtype {arr.dtype} for '
                             f'{name}') from None

        bname = name.encode()
        out.append(struct.pack('<H', len(bname)) + bname)
        out.append(struct.pack(f'<BB{arr.ndim}I', code, arr.ndim, *arr.shape))
        out.append(np.ascontiguousarray(arr, dtype=dt).tobytes())

    with open(path, 'wb') as f:
        f.write(b''.join(out))


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.off = 0

    def take(self, n):
        if self.off + n > len(self.buf):
            raise FormatError('Truncated checkpoint')

        b = self.buf[self.off:self.off + n]
        self.off += n
        return b

    def unpack(self, fmt):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))

    def string(self):
        n, = self.unpack('<I')
        try:
            return self.take(n).decode()
        except UnicodeDecodeError:
            raise FormatError('Corrupt checkpoint header') from None


def read_checkpoint(path):
    with open(path, 'rb') as f:
        r = _Reader(f.read())

    if r.take(4) != MAGIC:
        raise FormatError(f'{path} is not a checkpoint file')

    version, = r.unpack('<B')
    if version != VERSION:
        raise FormatError(f'Unsupported checkpoint version {version}')

    config, stats = r.string(), r.string()

    arrays = {}
    nrec, = r.unpack('<I')
    for i in range(nrec):
        nlen, = r.unpack('<H')
        name = r.take(nlen).decode()

        code, ndim = r.unpack('<BB')
        if code not in _dtypes:
            raise FormatError(f'Unknown element type {code} for {name}')

        shape = r.unpack(f'<{ndim}I')
        dt = np.dtype(_dtypes[code])
        count = int(np.prod(shape, dtype=np.int64))

        data = np.frombuffer(r.take(count*dt.itemsize), dtype=dt)
        arrays[name] = data.reshape(shape).astype(dt.newbyteorder('='))

    if r.off != len(r.buf):
        raise FormatError('Trailing bytes after checkpoint records')

    return config, stats, arrays
