import numpy as np

from percomicro.bitstream import (CompressedImage, arith_decode, arith_encode,
                                  make_header, pack_indices, unpack_indices)
from percomicro.diffusion import sample
from percomicro.errors import FormatError


def global_payload(global_id=None, caption=None, ntokens=256):
    if caption is not None:
        return arith_encode(caption.encode('utf-8'))
    elif global_id is not None:
        if not 0 <= global_id < ntokens:
            raise ValueError(f'Global token {global_id} outside '
                             f'[0, {ntokens})')

        return arith_encode(bytes([global_id]))
    else:
        return b''


def encode_image(model, image, *, global_id=None, caption=None):
    image = np.asarray(image)
    if image.shape != (model.channels, model.H, model.W):
        raise FormatError(f'Image of shape {image.shape} does not match the '
                          f'{model.channels}x{model.H}x{model.W} model')

    idx = model.encode_indices(image[None])[0]
    payload = global_payload(global_id, caption, model.ntokens)

    hdr = make_header(model.H, model.W, model.h, model.w, model.log2V,
                      len(payload), caption=caption is not None)

    return CompressedImage(hdr, pack_indices(idx, model.log2V), payload)


def check_geometry(model, hdr):
    want = (model.H, model.W, model.h, model.w, model.log2V)
    got = (hdr.H, hdr.W, hdr.h, hdr.w, hdr.log2V)

    if got != want:
        raise FormatError(f'Container geometry (H, W, h, w, log2V) = {got} '
                          f'does not match the model {want}')


def decode_global(model, ci, classes=None):
    if not ci.has_global:
        return None

    data = arith_decode(ci.global_payload)

    # Captions condition the model only when they name a known class
    if ci.is_caption:
        try:
            text = data.decode('utf-8')
        except UnicodeDecodeError:
            raise FormatError('Caption is not valid UTF-8') from None

        return (classes or {}).get(text.strip())

    if len(data) != 1:
        raise FormatError(f'Global token payload of {len(data)} bytes')
    if data[0] >= model.ntokens:
        raise FormatError(f'Global token {data[0]} outside the model '
                          'vocabulary')

    return data[0]


def decode_image(model, ci, config, *, classes=None):
    check_geometry(model, ci.header)

    idx = unpack_indices(ci.packed_indices, model.h, model.w, model.log2V)
    gid = decode_global(model, ci, classes)

    local = model.local_from_indices(idx[None])
    x = sample(model, (local, gid), config, model.schedule,
               (1, model.channels, model.H, model.W), dtype=model.dtype)

    return np.clip(x[0], -1, 1)


def decode_indices(model, ci):
    check_geometry(model, ci.header)

    return unpack_indices(ci.packed_indices, model.h, model.w, model.log2V)
