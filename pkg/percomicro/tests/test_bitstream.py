import math

import numpy as np
import pytest

from percomicro.bitstream import (AdaptiveFrequencyModel, ArithmeticDecoder,
                                  ArithmeticEncoder, CompressedImage,
                                  EOF_SYMBOL, FLAG_CAPTION, FLAG_GLOBAL,
                                  HEADER_BYTES, arith_decode, arith_encode,
                                  container_rates, make_header, pack_indices,
                                  packed_size, read_container,
                                  read_container_file, spatial_rate,
                                  total_rate, unpack_indices, write_container,
                                  write_container_file)
from percomicro.errors import FormatError


def test_pack_msb_first():
    assert pack_indices([[1, 0], [1, 1]], 1) == bytes([0b10110000])
    assert pack_indices([[5, 2]], 3) == bytes([0b10101000])
    assert pack_indices([[0xabc]], 12) == bytes([0xab, 0xc0])

    assert packed_size(2, 2, 1) == 1
    assert packed_size(4, 4, 8) == 16
    assert packed_size(3, 3, 3) == 4


def test_pack_roundtrip():
    rng = np.random.default_rng(0)

    for log2v in [1, 3, 8, 11, 16]:
        grid = rng.integers(0, 1 << log2v, size=(3, 5))
        buf = pack_indices(grid, log2v)

        assert len(buf) == packed_size(3, 5, log2v)
        assert np.array_equal(unpack_indices(buf, 3, 5, log2v), grid)


def test_pack_errors():
    with pytest.raises(ValueError):
        pack_indices([[4]], 2)
    with pytest.raises(ValueError):
        pack_indices([[0]], 17)

    with pytest.raises(FormatError):
        unpack_indices(b'', 1, 1, 8)

    # Padding bits must be zero
    with pytest.raises(FormatError):
        unpack_indices(bytes([0b10000001]), 1, 1, 1)


def test_frequency_model():
    m = AdaptiveFrequencyModel()

    assert m.total == 257
    assert m.interval(0) == (0, 1)
    assert m.interval(EOF_SYMBOL) == (256, 257)

    m.update(65)
    assert m.interval(65) == (65, 70)
    assert m.interval(66) == (70, 71)
    assert m.total == 261

    for v in range(m.total):
        lo, hi = m.interval(m.find(v))
        assert lo <= v < hi

    # Counts halve, rounding up, once the total passes the limit
    for i in range(20000):
        m.update(7)

    assert m.total <= m.limit
    assert min(m.counts) >= 1
    assert m.total == sum(m.counts)
    assert m.cumulative(m.nsyms) == m.total


def test_coder_roundtrip():
    rng = np.random.default_rng(1)

    cases = [b'', b'\x00', b'\xff', bytes(range(256)), b'abc'*100,
             rng.integers(0, 256, size=3000, dtype=np.uint8).tobytes()]

    for payload in cases:
        assert arith_decode(arith_encode(payload)) == payload


def test_coder_single_symbol_is_short():
    assert len(arith_encode(b'\x03'*10000)) <= 100
    assert len(arith_encode(b'')) >= 1


def test_coder_random_bounds():
    rng = np.random.default_rng(2)

    n = 10000
    payload = rng.integers(0, 256, size=n, dtype=np.uint8).tobytes()

    assert n <= len(arith_encode(payload)) <= 1.02*n + 16


def _encode_stream(symbols):
    model, enc = AdaptiveFrequencyModel(), ArithmeticEncoder()
    for s in symbols:
        enc.write(model, s)

    enc.write(model, EOF_SYMBOL)
    return enc.finish()


@pytest.mark.parametrize('nsyms', [2, 16, 239])
def test_coder_near_entropy(nsyms):
    rng = np.random.default_rng(nsyms)
    n = 100000

    # Uniform sources of about 1, 4 and 7.9 bits per symbol
    symbols = rng.integers(0, nsyms, size=n)

    freq = np.bincount(symbols) / n
    freq = freq[freq > 0]
    h = -np.sum(freq*np.log2(freq))

    nbits = 8*len(_encode_stream(symbols.tolist()))
    assert nbits <= n*h + 0.02*n + 128


def test_coder_model_sync():
    rng = np.random.default_rng(5)

    # Long enough to rescale the counts several times
    p = np.array([0.6, 0.2, 0.1, 0.05, 0.05])
    symbols = rng.choice(5, size=50000, p=p).tolist() + [EOF_SYMBOL]

    model, enc = AdaptiveFrequencyModel(), ArithmeticEncoder()
    snapshots = []
    for s in symbols:
        enc.write(model, s)
        snapshots.append((model.total, tuple(model.counts)))

    model, dec = AdaptiveFrequencyModel(), ArithmeticDecoder(enc.finish())
    nrescale = 0
    for i, s in enumerate(symbols):
        total = model.total

        assert dec.read(model) == s
        assert (model.total, tuple(model.counts)) == snapshots[i]

        nrescale += model.total < total

    assert nrescale >= 3


def test_coder_errors():
    with pytest.raises(ValueError):
        arith_encode(bytes(1 << 16))

    with pytest.raises(FormatError):
        arith_decode(b'')

    enc = arith_encode(b'hello world')

    # Trailing garbage makes the stream non-canonical
    with pytest.raises(FormatError):
        arith_decode(enc + b'\x01')


def test_coder_corruption_never_crashes():
    enc = arith_encode(b'global token payload')
    rng = np.random.default_rng(4)

    for i in range(200):
        buf = bytearray(enc)
        buf[rng.integers(len(buf))] ^= 1 << int(rng.integers(8))

        try:
            arith_decode(bytes(buf))
        except FormatError:
            pass


def _image(h=2, w=2, log2v=8, payload=b'', caption=False):
    grid = np.arange(h*w).reshape(h, w) % (1 << log2v)
    hdr = make_header(32, 32, h, w, log2v, len(payload), caption=caption)

    return CompressedImage(hdr, pack_indices(grid, log2v), payload)


def test_container_layout():
    assert HEADER_BYTES == 15

    buf = write_container(_image(payload=b'\x42\x43'))
    assert buf[:4] == b'PCSD'
    assert buf[4] == 1
    assert buf[5:7] == b'\x00\x20' and buf[7:9] == b'\x00\x20'
    assert tuple(buf[9:12]) == (2, 2, 8)
    assert buf[12:14] == b'\x00\x02'
    assert buf[14] == FLAG_GLOBAL
    assert len(buf) == 15 + 4 + 2


def test_container_minimal():
    grid = np.zeros((1, 1), dtype=int)
    hdr = make_header(1, 1, 1, 1, 1)
    buf = write_container(CompressedImage(hdr, pack_indices(grid, 1), b''))

    assert len(buf) == 16
    ci = read_container(buf)
    assert not ci.has_global
    assert ci.header.flags == 0


def test_container_roundtrip(tmp_path):
    ci = _image(4, 4, 12, arith_encode(b'disc'), caption=True)

    path = tmp_path / 'x.pcsd'
    n = write_container_file(path, ci)
    out = read_container_file(path)

    assert n == path.stat().st_size
    assert out == ci
    assert out.has_global and out.is_caption
    assert out.header.flags == FLAG_GLOBAL | FLAG_CAPTION


def test_container_rejects():
    good = write_container(_image(payload=b'\x01'))

    def patched(off, val):
        b = bytearray(good)
        b[off] = val
        return bytes(b)

    bad = [
        b'', good[:10], good[:-1], good + b'\0',
        b'XCSD' + good[4:],
        patched(4, 2),
        patched(11, 0), patched(11, 17),
        patched(14, 0x04), patched(14, 0x80),
        patched(14, 0),
        patched(9, 0)
    ]

    for buf in bad:
        with pytest.raises(FormatError):
            read_container(buf)

    # Caption flag without a payload
    hdr = make_header(32, 32, 2, 2, 8)._replace(flags=FLAG_CAPTION)
    with pytest.raises(FormatError):
        write_container(CompressedImage(hdr, bytes(4), b''))


def test_container_fuzz():
    good = write_container(_image(payload=b'\x01\x02'))
    rng = np.random.default_rng(5)

    for i in range(500):
        buf = bytearray(good)
        for j in range(int(rng.integers(1, 4))):
            buf[rng.integers(len(buf))] = int(rng.integers(256))

        try:
            read_container(bytes(buf))
        except FormatError:
            pass


def test_container_write_errors():
    ci = _image()

    with pytest.raises(ValueError):
        write_container(ci._replace(packed_indices=b'\0'))
    with pytest.raises(ValueError):
        write_container(ci._replace(global_payload=b'\0'))

    hdr = make_header(70000, 32, 2, 2, 8)
    with pytest.raises(ValueError):
        write_container(CompressedImage(hdr, bytes(4), b''))


def test_rates():
    assert spatial_rate(8, 12, 256, 512, 768) == 0.001953125
    assert spatial_rate(1, 1, 2, 1, 1) == 1
    assert spatial_rate(16, 24, 256, 512, 768) == 4*0.001953125

    assert spatial_rate(1, 1, 256, 32, 32) == 0.0078125
    assert spatial_rate(2, 2, 256, 32, 32) == 0.03125
    assert spatial_rate(4, 4, 256, 32, 32) == 0.125

    # About 115 bytes for a VGA image at 0.003 bpp
    assert math.isclose(total_rate(0, 115.2, 0, 480, 640), 0.003)
    assert total_rate(0.125, 0, 0, 32, 32) == 0.125

    with pytest.raises(ValueError):
        spatial_rate(0, 1, 2, 32, 32)


def test_container_rates():
    ci = read_container(write_container(_image(payload=b'\x01\x02')))
    r = container_rates(ci)

    assert r.spatial == 0.03125
    assert r.global_ == 16 / 1024
    assert r.total == r.spatial + r.global_

    rh = container_rates(ci, include_header=True)
    assert rh.total == r.total + 8*HEADER_BYTES / 1024
