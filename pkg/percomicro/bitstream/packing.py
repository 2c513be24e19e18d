import numpy as np

from percomicro.errors import FormatError


def _check_log2v(log2v):
    if not 1 <= log2v <= 16:
        raise ValueError(f'Index width {log2v} outside [1, 16] bits')


def packed_size(h, w, log2v):
    return (h*w*log2v + 7) // 8


def pack_indices(grid, log2v):
    _check_log2v(log2v)

    idx = np.asarray(grid, dtype=np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= 1 << log2v):
        raise ValueError(f'Index overflow for a {log2v}-bit code')

    # Most significant bit first
    shifts = np.arange(log2v - 1, -1, -1)
    bits = ((idx[:, None] >> shifts) & 1).astype(np.uint8)

    return np.packbits(bits.ravel()).tobytes()


def unpack_indices(buf, h, w, log2v):
    _check_log2v(log2v)

    nbits = h*w*log2v
    nbytes = packed_size(h, w, log2v)
    if len(buf) < nbytes:
        raise FormatError(f'Truncated index payload: {len(buf)} of {nbytes} '
                          'bytes')

    bits = np.unpackbits(np.frombuffer(buf[:nbytes], dtype=np.uint8))
    if np.any(bits[nbits:]):
        raise FormatError('Non-zero padding after index payload')

    weights = 1 << np.arange(log2v - 1, -1, -1)
    idx = bits[:nbits].reshape(-1, log2v).astype(np.int64) @ weights

    return idx.reshape(h, w)
