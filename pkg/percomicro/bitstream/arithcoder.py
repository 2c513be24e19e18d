from percomicro.errors import FormatError


EOF_SYMBOL = 256
NSYMBOLS = 257


class AdaptiveFrequencyModel:
    increment = 4
    limit = 1 << 16

    def __init__(self, nsyms=NSYMBOLS):
        self.nsyms = nsyms
        self.counts = [1]*nsyms
        self._rebuild()

    def _rebuild(self):
        # Fenwick tree over the counts
        n = self.nsyms
        self.tree = tree = [0]*(n + 1)
        for i, c in enumerate(self.counts, start=1):
            tree[i] += c
            if (j := i + (i & -i)) <= n:
                tree[j] += tree[i]

        self.total = sum(self.counts)

        self._top = 1
        while self._top*2 <= n:
            self._top *= 2

    def cumulative(self, sym):
        tree, s = self.tree, 0
        while sym > 0:
            s += tree[sym]
            sym -= sym & -sym

        return s

    def interval(self, sym):
        lo = self.cumulative(sym)
        return lo, lo + self.counts[sym]

    def find(self, value):
        # Largest symbol whose cumulative count is <= value
        tree, pos, step = self.tree, 0, self._top
        while step:
            if (nxt := pos + step) <= self.nsyms and tree[nxt] <= value:
                pos = nxt
                value -= tree[nxt]
            step >>= 1

        return pos

    def update(self, sym):
        self.counts[sym] += self.increment
        self.total += self.increment

        if self.total > self.limit:
            self.counts = [(c + 1) >> 1 for c in self.counts]
            self._rebuild()
        else:
            i, tree = sym + 1, self.tree
            while i <= self.nsyms:
                tree[i] += self.increment
                i += i & -i


class _CoderBase:
    nbits = 32
    mask = (1 << nbits) - 1
    top = 1 << (nbits - 1)
    second = top >> 1

    def __init__(self):
        self.low = 0
        self.high = self.mask

    def _narrow(self, lo, hi, total):
        rng = self.high - self.low + 1
        self.high = self.low + hi*rng // total - 1
        self.low = self.low + lo*rng // total

        # Emit settled leading bits
        while ((self.low ^ self.high) & self.top) == 0:
            self._shift()
            self.low = (self.low << 1) & self.mask
            self.high = ((self.high << 1) & self.mask) | 1

        # Straddling the midpoint; defer the bit
        while self.low & ~self.high & self.second:
            self._underflow()
            self.low = (self.low << 1) & (self.mask >> 1)
            self.high = ((self.high << 1) & (self.mask >> 1)) | self.top | 1


class ArithmeticEncoder(_CoderBase):
    def __init__(self):
        super().__init__()

        self.bits = []
        self.pending = 0

    def write(self, model, sym):
        lo, hi = model.interval(sym)
        self._narrow(lo, hi, model.total)
        model.update(sym)

    def finish(self):
        self.bits.append(1)

        nbytes = (len(self.bits) + 7) // 8
        value = int(''.join(map(str, self.bits)), 2) if self.bits else 0
        value <<= 8*nbytes - len(self.bits)

        return value.to_bytes(nbytes, 'big')

    def _shift(self):
        bit = self.low >> (self.nbits - 1)
        self.bits.append(bit)
        self.bits.extend([bit ^ 1]*self.pending)
        self.pending = 0

    def _underflow(self):
        self.pending += 1


class ArithmeticDecoder(_CoderBase):
    # Zero bits which may be read past the end of a valid stream
    slack = 64

    def __init__(self, buf):
        super().__init__()

        self.buf = buf
        self.pos = 0
        self.code = 0
        for i in range(self.nbits):
            self.code = (self.code << 1) | self._next_bit()

    def _next_bit(self):
        i, self.pos = self.pos, self.pos + 1

        if i < 8*len(self.buf):
            return (self.buf[i >> 3] >> (7 - (i & 7))) & 1
        elif i < 8*len(self.buf) + self.slack:
            return 0
        else:
            raise FormatError('Arithmetic stream ended without an EOF '
                              'symbol')

    def read(self, model):
        rng = self.high - self.low + 1
        value = ((self.code - self.low + 1)*model.total - 1) // rng

        if not 0 <= value < model.total:
            raise FormatError('Corrupt arithmetic stream')

        sym = model.find(value)
        lo, hi = model.interval(sym)
        self._narrow(lo, hi, model.total)
        model.update(sym)

        return sym

    def _shift(self):
        self.code = ((self.code << 1) & self.mask) | self._next_bit()

    def _underflow(self):
        self.code = (self.code & self.top) \
            | ((self.code << 1) & (self.mask >> 1)) | self._next_bit()


def arith_encode(payload):
    payload = bytes(payload)
    if len(payload) >= 1 << 16:
        raise ValueError(f'Payload of {len(payload)} bytes is too long')

    model, enc = AdaptiveFrequencyModel(), ArithmeticEncoder()
    for b in payload:
        enc.write(model, b)

    enc.write(model, EOF_SYMBOL)
    return enc.finish()


def arith_decode(buf):
    buf = bytes(buf)
    if not buf:
        raise FormatError('Empty arithmetic stream')

    model, dec = AdaptiveFrequencyModel(), ArithmeticDecoder(buf)

    out = bytearray()
    while (sym := dec.read(model)) != EOF_SYMBOL:
        out.append(sym)
        if len(out) >= 1 << 16:
            raise FormatError('Arithmetic stream decodes past the payload '
                              'limit')

    # Only canonical streams are accepted
    if arith_encode(out) != buf:
        raise FormatError('Non-canonical arithmetic stream')

    return bytes(out)
