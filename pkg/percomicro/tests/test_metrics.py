import math
import warnings

import numpy as np
import pytest

from percomicro.metrics import (RDPoint, RDSummary, format_rd_csv,
                                format_summary_csv, gaussian_window, ms_ssim,
                                ms_ssim_scales, psnr, ssim_terms)


def test_psnr():
    a = np.zeros((3, 4, 4))
    b = np.full((3, 4, 4), 0.1)

    assert math.isclose(psnr(a, b), 20.0)
    assert psnr(a, a) == math.inf
    assert math.isclose(psnr(a*255, b*255, peak=255), 20.0)

    with pytest.raises(ValueError):
        psnr(a, b[:2])
    with pytest.raises(ValueError):
        psnr(a, b, peak=0)


def test_gaussian_window():
    g = gaussian_window()

    assert len(g) == 11
    assert math.isclose(g.sum(), 1)
    assert np.allclose(g, g[::-1])
    assert np.argmax(g) == 5


def test_ssim_terms_match_loop():
    rng = np.random.default_rng(0)
    a = rng.uniform(size=(1, 13, 14))
    b = np.clip(a + 0.1*rng.standard_normal(a.shape), 0, 1)

    win = gaussian_window()
    w2 = np.outer(win, win)
    c1, c2 = 0.01**2, 0.03**2

    ssims, css = [], []
    for i in range(13 - 10):
        for j in range(14 - 10):
            pa, pb = a[0, i:i + 11, j:j + 11], b[0, i:i + 11, j:j + 11]
            ma, mb = np.sum(w2*pa), np.sum(w2*pb)
            va = np.sum(w2*pa*pa) - ma*ma
            vb = np.sum(w2*pb*pb) - mb*mb
            cov = np.sum(w2*pa*pb) - ma*mb

            cs = (2*cov + c2) / (va + vb + c2)
            ssims.append((2*ma*mb + c1) / (ma*ma + mb*mb + c1)*cs)
            css.append(cs)

    ssim, cs = ssim_terms(a, b)
    assert np.allclose(ssim, [np.mean(ssims)])
    assert np.allclose(cs, [np.mean(css)])


def test_ms_ssim_scales():
    assert ms_ssim_scales(32, 32) == 2
    assert ms_ssim_scales(176, 176) == 5
    assert ms_ssim_scales(256, 256) == 5
    assert ms_ssim_scales(16, 64) == 1
    assert ms_ssim_scales(10, 10) == 0


def test_ms_ssim_identity_and_symmetry():
    rng = np.random.default_rng(1)
    a = rng.uniform(size=(3, 32, 32))
    b = np.clip(a + 0.2*rng.standard_normal(a.shape), 0, 1)

    with warnings.catch_warnings():
        warnings.simplefilter('ignore')

        assert ms_ssim(a, a) == 1.0
        assert math.isclose(ms_ssim(a, b), ms_ssim(b, a))
        assert 0 <= ms_ssim(a, b) < 1

        # Greyscale images need no channel axis
        assert ms_ssim(a[0], a[0]) == 1.0


def test_ms_ssim_monotone_in_noise():
    rng = np.random.default_rng(2)
    a = rng.uniform(size=(1, 64, 64))
    noise = rng.standard_normal(a.shape)

    with warnings.catch_warnings():
        warnings.simplefilter('ignore')
        vals = [ms_ssim(a, np.clip(a + s*noise, 0, 1))
                for s in [0.01, 0.05, 0.2, 0.5]]

    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_ms_ssim_nonnegative_for_anticorrelated():
    a = np.tile(np.linspace(0, 1, 32), (32, 1))

    with warnings.catch_warnings():
        warnings.simplefilter('ignore')
        assert ms_ssim(a, 1 - a) >= 0


def test_ms_ssim_warns_and_rejects():
    a = np.zeros((1, 32, 32))

    with pytest.warns(UserWarning, match='2 MS-SSIM scales'):
        ms_ssim(a, a)

    with pytest.raises(ValueError):
        ms_ssim(np.zeros((8, 8)), np.zeros((8, 8)))
    with pytest.raises(ValueError):
        ms_ssim(np.zeros((1, 1, 16, 16)), np.zeros((1, 1, 16, 16)))


def test_rd_csv_format():
    points = [RDPoint('rate-1x1', 'a.ppm', 0.0078125, 21.123456789, 0.5),
              RDPoint('rate-4x4', 'b.ppm', 0.125, math.inf, 1.0)]

    assert format_rd_csv(points) == (
        'config,image,bpp,psnr_db,ms_ssim\n'
        'rate-1x1,a.ppm,0.0078125,21.1235,0.5\n'
        'rate-4x4,b.ppm,0.125,inf,1\n'
    )

    s = RDSummary('rate-1x1', 2, 0.0078125, 20.0, 0.5, 0.75, 0.125)
    assert format_summary_csv([s]) == (
        'config,n,bpp,psnr_mean,psnr_std,ms_ssim_mean,ms_ssim_std\n'
        'rate-1x1,2,0.0078125,20,0.5,0.75,0.125\n'
    )
