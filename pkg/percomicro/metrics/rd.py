from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
import dataclasses
import os

import numpy as np

from percomicro.bitstream import (container_rates, read_container,
                                  spatial_rate, write_container)
from percomicro.codec import load_model, model_classes
from percomicro.compressor import decode_image, encode_image
from percomicro.errors import DataError
from percomicro.metrics.distortion import ms_ssim, psnr
from percomicro.pnm import from_unit, to_unit
from percomicro.quant import usage_stats
from percomicro.util import worker_count


RDPoint = namedtuple('RDPoint', ['config', 'image', 'bpp', 'psnr_db',
                                 'ms_ssim'])

RDSummary = namedtuple('RDSummary', [
    'config', 'n', 'bpp', 'psnr_mean', 'psnr_std', 'ms_ssim_mean',
    'ms_ssim_std'
])

RDResult = namedtuple('RDResult', ['points', 'summaries', 'perplexity'])

RD_HEADER = 'config,image,bpp,psnr_db,ms_ssim'
SUMMARY_HEADER = ('config,n,bpp,psnr_mean,psnr_std,ms_ssim_mean,'
                  'ms_ssim_std')


def config_tag(path):
    return os.path.splitext(os.path.basename(path))[0]


def evaluate_image(model, img, gid, config, *, nseeds=1, classes=None):
    x = to_unit(img)

    # Rates come from the serialised container
    ci = read_container(write_container(encode_image(model, x,
                                                     global_id=gid)))
    bpp = container_rates(ci).total

    ref = img / 255
    psnrs, ssims = [], []
    for k in range(nseeds):
        cfg = dataclasses.replace(config, seed=config.seed + k)
        rec = from_unit(decode_image(model, ci, cfg, classes=classes)) / 255

        psnrs.append(psnr(ref, rec))
        ssims.append(ms_ssim(ref, rec))

    return bpp, float(np.mean(psnrs)), float(np.mean(ssims)), psnrs, ssims


def _summarise(tag, bpps, psnrs, ssims):
    return RDSummary(tag, len(bpps), float(np.mean(bpps)),
                     float(np.mean(psnrs)), float(np.std(psnrs)),
                     float(np.mean(ssims)), float(np.std(ssims)))


def rd_curve(dataset, checkpoints, *, steps=None, cfg_scale=None, seed=None,
             nseeds=1, use_global=True):
    if not checkpoints:
        raise ValueError('No checkpoints to evaluate')
    if nseeds < 1:
        raise ValueError('At least one decode seed is required')

    points, summaries, ppls = [], [], {}

    for path in checkpoints:
        if not os.path.exists(path):
            raise DataError(f'Checkpoint {path} does not exist')

        runcfg, model, stats = load_model(path)
        dataset.check_shape(runcfg.image_shape)
        dataset.check_labels(model.ntokens)

        tag = config_tag(path)
        classes = model_classes(stats)

        sbpp = spatial_rate(model.h, model.w, model.quantizer.V, model.H,
                            model.W)
        config = runcfg.sampler_config(spatial_bpp=sbpp, steps=steps,
                                       cfg_scale=cfg_scale, seed=seed)

        def job(i):
            gid = dataset.labels[i] if use_global else None
            return evaluate_image(model, dataset.images[i], gid, config,
                                  nseeds=nseeds, classes=classes)

        # Per image jobs are pure; map keeps the dataset order
        n = len(dataset)
        with ThreadPoolExecutor(max_workers=worker_count(n)) as pool:
            results = list(pool.map(job, range(n)))

        allp, alls = [], []
        for fname, (bpp, p, s, ps, ss) in zip(dataset.files, results):
            points.append(RDPoint(tag, fname, bpp, p, s))
            allp += ps
            alls += ss

        summaries.append(_summarise(tag, [r[0] for r in results], allp,
                                    alls))

        # Codebook usage over the evaluated set
        idx = model.encode_indices(dataset.unit(slice(None)))
        ppls[tag] = usage_stats(idx, model.quantizer.V).perplexity

    return RDResult(points, summaries, ppls)


def _fmt(v):
    return f'{v:.6g}'


def format_rd_csv(points):
    lines = [RD_HEADER]
    for p in points:
        lines.append(','.join([p.config, p.image, _fmt(p.bpp),
                               _fmt(p.psnr_db), _fmt(p.ms_ssim)]))

    return '\n'.join(lines) + '\n'


def format_summary_csv(summaries):
    lines = [SUMMARY_HEADER]
    for s in summaries:
        lines.append(','.join([s.config, str(s.n),
                               *(_fmt(v) for v in s[2:])]))

    return '\n'.join(lines) + '\n'


def write_rd_csv(path, points):
    with open(path, 'w') as f:
        f.write(format_rd_csv(points))


def write_summary_csv(path, summaries):
    with open(path, 'w') as f:
        f.write(format_summary_csv(summaries))
