from collections import namedtuple
import struct

from percomicro.bitstream.packing import packed_size
from percomicro.errors import FormatError


MAGIC = b'PCSD'
VERSION = 1

# Flag bits
FLAG_GLOBAL = 0x1
FLAG_CAPTION = 0x2
_FLAG_RESERVED = 0xff & ~(FLAG_GLOBAL | FLAG_CAPTION)

_header = struct.Struct('>4sBHHBBBHB')
HEADER_BYTES = _header.size


BitstreamHeader = namedtuple('BitstreamHeader', [
    'magic', 'version', 'H', 'W', 'h', 'w', 'log2V', 'global_payload_len',
    'flags'
])


class CompressedImage(namedtuple('CompressedImage', [
    'header', 'packed_indices', 'global_payload'
])):
    @property
    def has_global(self):
        return bool(self.header.flags & FLAG_GLOBAL)

    @property
    def is_caption(self):
        return bool(self.header.flags & FLAG_CAPTION)


def make_header(H, W, h, w, log2v, payload_len=0, *, caption=False):
    flags = FLAG_GLOBAL if payload_len else 0
    if caption and payload_len:
        flags |= FLAG_CAPTION

    return BitstreamHeader(MAGIC, VERSION, H, W, h, w, log2v, payload_len,
                           flags)


def _check_header(hdr):
    if hdr.magic != MAGIC:
        raise FormatError(f'Bad container magic {hdr.magic!r}')
    if hdr.version != VERSION:
        raise FormatError(f'Unsupported container version {hdr.version}')
    if not 1 <= hdr.log2V <= 16:
        raise FormatError(f'Invalid log2V {hdr.log2V}')
    if min(hdr.H, hdr.W, hdr.h, hdr.w) < 1:
        raise FormatError('Container geometry must be positive')
    if hdr.flags & _FLAG_RESERVED:
        raise FormatError(f'Reserved container flags set: {hdr.flags:#04x}')

    # A payload is present if and only if its flag is set
    has_payload = bool(hdr.flags & FLAG_GLOBAL)
    if has_payload != (hdr.global_payload_len > 0):
        raise FormatError('Global payload flag disagrees with its length')
    if not has_payload and hdr.flags & FLAG_CAPTION:
        raise FormatError('Caption flag set without a global payload')


def write_container(ci):
    hdr = ci.header
    _check_header(hdr)

    if len(ci.packed_indices) != packed_size(hdr.h, hdr.w, hdr.log2V):
        raise ValueError('Packed index length does not match the header')
    if len(ci.global_payload) != hdr.global_payload_len:
        raise ValueError('Global payload length does not match the header')

    try:
        head = _header.pack(*hdr)
    except struct.error as e:
        raise ValueError(f'Header field out of range: {e}') from None

    return head + bytes(ci.packed_indices) + bytes(ci.global_payload)


def read_container(buf):
    buf = bytes(buf)
    if len(buf) < HEADER_BYTES:
        raise FormatError(f'Container of {len(buf)} bytes is too short')

    hdr = BitstreamHeader(*_header.unpack_from(buf))
    _check_header(hdr)

    nidx = packed_size(hdr.h, hdr.w, hdr.log2V)
    if len(buf) != HEADER_BYTES + nidx + hdr.global_payload_len:
        raise FormatError(f'Container length {len(buf)} does not match its '
                          'header')

    off = HEADER_BYTES + nidx
    return CompressedImage(hdr, buf[HEADER_BYTES:off], buf[off:])


def read_container_file(path):
    with open(path, 'rb') as f:
        return read_container(f.read())


def write_container_file(path, ci):
    buf = write_container(ci)

    with open(path, 'wb') as f:
        f.write(buf)

    return len(buf)
