import math
import warnings

import numpy as np
from scipy.ndimage import correlate1d


MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)

    if a.shape != b.shape:
        raise ValueError(f'Image shapes differ: {a.shape} vs {b.shape}')

    return a, b


def psnr(a, b, peak=1.0):
    if peak <= 0:
        raise ValueError('PSNR peak must be positive')

    a, b = _check_pair(a, b)

    mse = np.mean((a - b)**2)
    if mse == 0:
        return math.inf

    return 10*math.log10(peak**2 / mse)


def gaussian_window(size=11, sigma=1.5):
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2
    g = np.exp(-x**2 / (2*sigma**2))

    return g / g.sum()


def _filter_valid(x, win):
    r = len(win) // 2

    # Separable filtering; the interior is the valid region
    y = correlate1d(x, win, axis=-1, mode='constant')
    y = correlate1d(y, win, axis=-2, mode='constant')

    return y[..., r:-r, r:-r] if r else y


def ssim_terms(a, b, peak=1.0, win=None):
    win = gaussian_window() if win is None else win
    c1, c2 = (0.01*peak)**2, (0.03*peak)**2

    mu_a, mu_b = _filter_valid(a, win), _filter_valid(b, win)
    mu_aa, mu_bb, mu_ab = mu_a*mu_a, mu_b*mu_b, mu_a*mu_b

    s_aa = _filter_valid(a*a, win) - mu_aa
    s_bb = _filter_valid(b*b, win) - mu_bb
    s_ab = _filter_valid(a*b, win) - mu_ab

    lum = (2*mu_ab + c1) / (mu_aa + mu_bb + c1)
    cs = (2*s_ab + c2) / (s_aa + s_bb + c2)

    # Per-channel means over the valid region
    return (lum*cs).mean(axis=(-2, -1)), cs.mean(axis=(-2, -1))


def _pool2(x):
    h, w = x.shape[-2] // 2, x.shape[-1] // 2
    x = x[..., :2*h, :2*w]

    return 0.25*(x[..., ::2, ::2] + x[..., 1::2, ::2] + x[..., ::2, 1::2]
                 + x[..., 1::2, 1::2])


def ms_ssim_scales(h, w, size=11, maxscales=len(MS_SSIM_WEIGHTS)):
    n = 0
    while n < maxscales and min(h, w) >= size:
        n += 1
        h, w = h // 2, w // 2

    return n


def ms_ssim(a, b, peak=1.0, weights=MS_SSIM_WEIGHTS):
    a, b = _check_pair(a, b)

    if a.ndim == 2:
        a, b = a[None], b[None]
    elif a.ndim != 3:
        raise ValueError('MS-SSIM expects [H, W] or [C, H, W] images')

    win = gaussian_window()

    nscales = ms_ssim_scales(*a.shape[-2:], size=len(win),
                             maxscales=len(weights))
    if nscales == 0:
        raise ValueError(f'Image of size {a.shape[-2:]} is too small for '
                         'MS-SSIM')
    elif nscales < len(weights):
        warnings.warn(f'Image of size {a.shape[-2:]} only supports '
                      f'{nscales} MS-SSIM scales')

    weights = np.array(weights[:nscales], dtype=np.float64)
    weights /= weights.sum()

    mcs = []
    for i in range(nscales):
        ssim, cs = ssim_terms(a, b, peak, win)
        mcs.append(np.maximum(cs, 0))

        if i < nscales - 1:
            a, b = _pool2(a), _pool2(b)

    # Contrast-structure from the finer scales, full SSIM at the coarsest
    terms = np.stack(mcs[:-1] + [np.maximum(ssim, 0)])
    val = np.prod(terms**weights[:, None], axis=0)

    return float(val.mean())
