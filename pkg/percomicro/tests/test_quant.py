import itertools as it

import numpy as np
import pytest

from percomicro.errors import ShapeError
from percomicro.nn import AdamW, Parameter, Tensor, ops, precision
from percomicro.quant import (Codebook, FsqConfig, codes_to_digits,
                              digits_to_indices, fsq_quantize,
                              indices_to_codes, indices_to_digits,
                              l2_normalize, nearest_codes, normalize_codes,
                              perplexity, quantize, straight_through,
                              usage_stats, vq_losses)


def _codebook(V=16, d=4, seed=0):
    return Codebook(V, d, np.random.default_rng(seed), dtype=np.float64)


def test_codebook_init():
    cb = _codebook(64, 8)

    assert cb.codes.shape == (64, 8)
    assert cb.log2V == 6
    assert np.allclose(np.linalg.norm(cb.codes.data, axis=1), 1)

    with pytest.raises(ValueError):
        _codebook(12)


def test_normalize_codes():
    cb = _codebook()
    cb.codes.data *= np.arange(1, 17)[:, None]

    normalize_codes(cb)
    assert np.allclose(np.linalg.norm(cb.codes.data, axis=1), 1)

    cb.codes.data[3] = 0
    with pytest.raises(ValueError, match='rows \\[3\\]'):
        normalize_codes(cb)


def test_quantize_matches_brute_force():
    cb = _codebook(256, 8, seed=1)
    feats = np.random.default_rng(2).standard_normal((4, 4, 8))

    idx, q = quantize(Tensor(feats), cb)

    # Loop oracle over cosine similarity
    codes = cb.codes.data
    for i, j in np.ndindex(4, 4):
        f = feats[i, j] / np.linalg.norm(feats[i, j])
        assert idx[i, j] == np.argmax([f @ c for c in codes])

    assert np.array_equal(q.data, codes[idx])


def test_quantize_exact_codes_and_idempotence():
    cb = _codebook(32, 4, seed=3)
    feats = cb.codes.data[[5, 0, 31, 7]].reshape(2, 2, 4)

    idx, q = quantize(Tensor(feats), cb)
    assert np.array_equal(idx, [[5, 0], [31, 7]])
    assert np.array_equal(q.data, feats)

    idx2, q2 = quantize(q, cb)
    assert np.array_equal(idx, idx2)


def test_quantize_ties_and_zero_features():
    codes = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])

    # Duplicate codes resolve to the lowest index
    idx, nzero = nearest_codes(np.array([[2.0, 0.0], [0.0, 0.0]]), codes)
    assert idx.tolist() == [0, 0]
    assert nzero == 1

    cb = _codebook(4, 2)
    with pytest.raises(ShapeError):
        quantize(Tensor(np.ones((2, 2, 3))), cb)


def test_l2_normalize_grads():
    x = Parameter(np.array([[3.0, 4.0], [1.0, 0.0]]))
    y = l2_normalize(x)

    assert np.allclose(y.data, [[0.6, 0.8], [1.0, 0.0]])

    ops.sum(y*Tensor(np.array([[1.0, 0.0], [0.0, 1.0]]))).backward()

    # d(x0 / |x|) / dx at (3, 4) is (16, -12) / 125
    assert np.allclose(x.grad[0], [16 / 125, -12 / 125])


def test_vq_losses_and_straight_through():
    cb = _codebook(8, 3, seed=4)
    f = Parameter(np.random.default_rng(5).standard_normal((2, 2, 3)))

    idx, q = quantize(f, cb)
    cbl, commit = vq_losses(f, q)

    d = f.data - q.data
    assert np.isclose(cbl.item(), np.mean(d*d))
    assert np.isclose(commit.item(), np.mean(d*d))

    # Codebook loss trains only the codes, commitment only the features
    (cbl + 0*commit).backward()
    assert f.grad is None or np.allclose(f.grad, 0)
    assert cb.codes.grad is not None

    st = straight_through(f, q)
    assert np.array_equal(st.data, q.data)

    f.grad = None
    ops.sum(st*3.0).backward()
    assert np.allclose(f.grad, 3.0)

    same = Tensor(q.data)
    assert vq_losses(same, q)[0].item() == 0


def test_update_usage_reseeds_dead_codes():
    cb = _codebook(8, 3, seed=6)
    rng = np.random.default_rng(7)
    feats = l2_normalize(Tensor(rng.standard_normal((16, 3)))).data

    for step in range(3):
        reseeded = cb.update_usage(np.array([0, 1]), feats, rng, 3)

    # Codes idle for three steps are replaced by recent features
    assert sorted(reseeded.tolist()) == [2, 3, 4, 5, 6, 7]
    assert cb.ndead(3) == 0
    assert np.allclose(np.linalg.norm(cb.codes.data, axis=1), 1)

    for c in cb.codes.data[2:]:
        assert np.any(np.all(np.isclose(feats, c), axis=1))


def test_codebook_state_roundtrip():
    cb = _codebook(8, 3)
    cb.update_usage(np.array([1]), np.ones((4, 3)) / np.sqrt(3),
                    np.random.default_rng(0), 100)

    cb2 = _codebook(8, 3, seed=9)
    cb2.load_state_arrays(cb.state_arrays('cb.'), 'cb.')

    assert np.array_equal(cb.idle, cb2.idle)
    assert np.array_equal(cb.recent, cb2.recent)
    assert cb2.nrecent == 4


def test_fsq_bijection():
    cfg = FsqConfig([8, 8])
    assert cfg.log2V == 6

    digits = np.array(list(it.product(range(8), range(8))))
    idx = digits_to_indices(digits, cfg)

    assert sorted(idx.tolist()) == list(range(64))
    assert np.array_equal(indices_to_digits(idx, cfg), digits)

    # Channel zero is the least significant digit
    assert digits_to_indices([3, 1], cfg) == 3 + 8*1

    codes = indices_to_codes(np.arange(64), cfg, np.float64)
    assert np.array_equal(codes_to_digits(codes, cfg),
                          indices_to_digits(np.arange(64), cfg))
    assert codes.min() == -1 and codes.max() == 1


def test_fsq_quantize():
    cfg = FsqConfig([4, 2, 8])
    x = Parameter(np.random.default_rng(8).standard_normal((3, 3, 3)))

    idx, q = fsq_quantize(x, cfg)

    assert idx.shape == (3, 3)
    assert np.all((idx >= 0) & (idx < 64))
    assert np.allclose(q.data, indices_to_codes(idx, cfg, np.float64))

    # Rounding is transparent to gradients
    ops.sum(q).backward()
    half = (np.array([4, 2, 8]) - 1) / 2
    sech2 = 1 - np.tanh(x.data)**2
    assert np.allclose(x.grad, sech2*half / half)

    with pytest.raises(ShapeError):
        fsq_quantize(Tensor(np.ones((2, 2, 2))), cfg)


def test_fsq_config_errors():
    with pytest.raises(ValueError):
        FsqConfig([8, 1])

    with pytest.raises(ValueError):
        FsqConfig([3, 5]).log2V


def test_perplexity():
    assert np.isclose(perplexity(np.ones(16)), 16)
    assert perplexity([0, 7, 0]) == 1
    assert perplexity(np.zeros(4)) == 0


def test_usage_stats_matches_loop():
    rng = np.random.default_rng(9)
    grids = [rng.integers(0, 32, size=(4, 4)) for i in range(5)]

    stats = usage_stats(grids, 32)

    ref = np.zeros(32, dtype=int)
    for g in grids:
        for v in g.ravel():
            ref[v] += 1

    assert np.array_equal(stats.counts, ref)

    p = ref[ref > 0] / ref.sum()
    assert np.isclose(stats.perplexity, np.exp(-np.sum(p*np.log(p))))

    with pytest.raises(ValueError):
        usage_stats([np.array([32])], 32)


def test_codebook_stays_on_sphere():
    rng = np.random.default_rng(11)
    cb = _codebook(16, 4, seed=10)
    proj = Parameter(rng.standard_normal((6, 4)))
    opt = AdamW([('codes', cb.codes), ('proj', proj)], lr=1e-2)

    with precision(np.float64):
        for step in range(500):
            x = rng.standard_normal((8, 6))

            f = l2_normalize(ops.matmul(Tensor(x), proj))
            idx, q = quantize(f, cb)
            cbl, commit = vq_losses(f, q)
            rec = ops.mse(straight_through(f, q), Tensor(x[:, :4]))

            cb.codes.grad = proj.grad = None
            (rec + cbl + 0.25*commit).backward()
            opt.step()

            normalize_codes(cb)
            opt.reset_rows('codes', cb.update_usage(idx, f.data, rng, 20))

            norms = np.linalg.norm(cb.codes.data, axis=1)
            assert np.allclose(norms, 1, atol=1e-9), step
