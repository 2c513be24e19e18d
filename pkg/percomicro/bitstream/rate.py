from collections import namedtuple
import math

from percomicro.bitstream.container import HEADER_BYTES


RateReport = namedtuple('RateReport', ['spatial', 'global_', 'total'])


def spatial_rate(h, w, V, H, W):
    if min(h, w, V, H, W) < 1:
        raise ValueError('Rate arguments must be positive')

    return h*w*math.log2(V) / (H*W)


def total_rate(spatial_bpp, global_payload_bytes, header_bytes, H, W):
    return spatial_bpp + 8*(global_payload_bytes + header_bytes) / (H*W)


def container_rates(ci, include_header=False):
    hdr = ci.header

    sbpp = spatial_rate(hdr.h, hdr.w, 1 << hdr.log2V, hdr.H, hdr.W)
    gbpp = total_rate(0.0, hdr.global_payload_len, 0, hdr.H, hdr.W)
    tbpp = total_rate(sbpp, hdr.global_payload_len,
                      HEADER_BYTES if include_header else 0, hdr.H, hdr.W)

    return RateReport(sbpp, gbpp, tbpp)
