#!/usr/bin/env python
from argparse import ArgumentParser
import itertools as it
import os
import sys
import traceback

from percomicro._version import __version__
from percomicro.bitstream import (container_rates, read_container_file,
                                  spatial_rate, write_container_file)
from percomicro.codec import Trainer, load_model, model_classes
from percomicro.compressor import check_geometry, decode_image, encode_image
from percomicro.config import RunConfig
from percomicro.dataset import ImageDataset, label_for
from percomicro.errors import ConfigError, FormatError, NumericalError
from percomicro.metrics import rd_curve, write_rd_csv, write_summary_csv
from percomicro.nn import read_checkpoint
from percomicro.pnm import format_pnm, from_unit, pnm_read, to_unit
from percomicro.progress import ProgressSequenceAction
from percomicro.synthetic import (SyntheticSpec, cached_synthetic,
                                  make_synthetic)


def _floatlist(s):
    return [float(v) for v in s.split(',')]


def _intlist(s):
    return [int(v) for v in s.split(',')]


def main(argv=None):
    ap = ArgumentParser(prog='perco-micro')
    sp = ap.add_subparsers(help='sub-command help')

    # Common options
    ap.add_argument('--verbose', '-v', action='count')
    ap.add_argument('--version', '-V', action='version',
                    version=f'%(prog)s {__version__}')
    ap.add_argument('--progress', '-p', action=ProgressSequenceAction,
                    help='show progress')

    # Train command
    ap_train = sp.add_parser('train', help='train --help')
    ap_train.add_argument('--config', help='config file')
    ap_train.add_argument('--resume', help='checkpoint to resume from')
    ap_train.add_argument('--steps', type=int, help='total training steps')
    ap_train.add_argument('--out', required=True, help='output checkpoint')
    ap_train.set_defaults(process=process_train)

    # Encode command
    ap_encode = sp.add_parser('encode', help='encode --help')
    ap_encode.add_argument('image', help='input PPM/PGM image')
    ap_encode.add_argument('ckpt', help='model checkpoint')
    ap_encode.add_argument('--out', required=True, help='output container')
    gopts = ap_encode.add_mutually_exclusive_group()
    gopts.add_argument('--global-id', type=int, help='global token id; '
                       'by default read from labels.txt next to the image')
    gopts.add_argument('--caption', help='free-text global caption')
    gopts.add_argument('--no-global', action='store_true',
                       help='omit the global payload')
    ap_encode.set_defaults(process=process_encode)

    # Decode command
    ap_decode = sp.add_parser('decode', help='decode --help')
    ap_decode.add_argument('inf', help='input container')
    ap_decode.add_argument('ckpt', help='model checkpoint')
    ap_decode.add_argument('--out', required=True, help='output image')
    ap_decode.set_defaults(process=process_decode)

    # Eval command
    ap_eval = sp.add_parser('eval', help='eval --help')
    ap_eval.add_argument('dataset', help='dataset directory')
    ap_eval.add_argument('ckpts', nargs='+', metavar='ckpt',
                         help='model checkpoints')
    ap_eval.add_argument('--out', required=True, help='output CSV file')
    ap_eval.add_argument('--nseeds', type=int, default=1,
                         help='decode seeds per image')
    ap_eval.add_argument('--no-global', action='store_true',
                         help='encode without global payloads')
    ap_eval.set_defaults(process=process_eval)

    # Sample command
    ap_sample = sp.add_parser('sample', help='sample --help')
    ap_sample.add_argument('inf', help='input container')
    ap_sample.add_argument('ckpt', help='model checkpoint')
    ap_sample.add_argument('--out', required=True, help='output directory')
    ap_sample.add_argument('--cfg-list', type=_floatlist,
                           default=[0.0, 1.0, 3.0, 7.5],
                           help='comma separated guidance scales')
    ap_sample.add_argument('--steps-list', type=_intlist,
                           default=[5, 20, 50, 100],
                           help='comma separated step counts')
    ap_sample.add_argument('--seeds', type=int, default=4,
                           help='number of seeds per grid point')
    ap_sample.set_defaults(process=process_sample)

    # Synth command
    ap_synth = sp.add_parser('synth', help='synth --help')
    ap_synth.add_argument('--config', help='config file')
    ap_synth.add_argument('--out', help='output directory; by default the '
                          'user cache')
    ap_synth.set_defaults(process=process_synth)

    # Options common to the commands which run the model
    for p in [ap_train, ap_decode, ap_eval, ap_sample, ap_synth]:
        p.add_argument('--seed', type=int, help='random seed')

    for p in [ap_decode, ap_eval]:
        p.add_argument('--steps', type=int, help='sampling steps')
        p.add_argument('--cfg', type=float, help='guidance scale')

    # Parse the arguments
    args = ap.parse_args(argv)

    if not hasattr(args, 'process'):
        ap.print_help()
        return 2

    # Invoke the process method
    try:
        args.process(args)
    except ConfigError as e:
        return _fail(args, e, 2)
    except NumericalError as e:
        return _fail(args, e, 4)
    except (FormatError, OSError) as e:
        return _fail(args, e, 3)
    except ValueError as e:
        return _fail(args, e, 2)

    return 0


def _fail(args, e, code):
    if args.verbose:
        traceback.print_exc()

    print(f'perco-micro: error: {e}', file=sys.stderr)
    return code


def _load_config(args):
    runcfg = RunConfig.load(args.config) if args.config else RunConfig()
    runcfg.override('run', 'seed', args.seed)

    return runcfg


def _write_image(path, x):
    with open(path, 'wb') as f:
        f.write(format_pnm(from_unit(x)))


def _train_dataset(runcfg):
    cfg = runcfg.cfg

    if (path := cfg.getpath('dataset', 'path')):
        ds = ImageDataset(path, labels=cfg.get('dataset', 'labels'))
    else:
        spec = SyntheticSpec.from_cfg(cfg)
        ds = ImageDataset(cached_synthetic(spec, runcfg.seed)[0])

    ds.check_shape(runcfg.image_shape)
    ds.check_labels(cfg.getint('codec', 'global-tokens'))

    return ds


def process_train(args):
    # An explicit config takes precedence over the one in the checkpoint
    if args.resume and not args.config:
        runcfg = RunConfig(read_checkpoint(args.resume)[0])
        runcfg.override('run', 'seed', args.seed)
    else:
        runcfg = _load_config(args)

    runcfg.override('training', 'steps', args.steps)

    # Log training statistics next to the checkpoint by default
    if not runcfg.cfg.hassect('train-plugin-stats'):
        stem = os.path.splitext(args.out)[0]
        runcfg.cfg.set('train-plugin-stats', 'file', f'{stem}-stats.csv')

    with args.progress.start('Load dataset'):
        dataset = _train_dataset(runcfg)

    trainer = Trainer(runcfg, dataset, checkpoint=args.resume)

    with args.progress.start_with_bar('Train') as pbar:
        trainer.run(pbar)

    with args.progress.start('Write checkpoint'):
        trainer.save(args.out)

    for k, v in trainer.wall_times().items():
        args.progress.note(f'{k} = {v:.2f}s')


def process_encode(args):
    runcfg, model, stats = load_model(args.ckpt)

    # Global token source
    gid = caption = None
    if args.caption is not None:
        caption = args.caption
    elif args.global_id is not None:
        gid = args.global_id
    elif not args.no_global:
        if (gid := label_for(args.image)) is None:
            raise ValueError(f'No label for {args.image}; pass --global-id, '
                             '--caption or --no-global')

    img = pnm_read(args.image)

    with args.progress.start('Encode'):
        ci = encode_image(model, to_unit(img), global_id=gid, caption=caption)
        write_container_file(args.out, ci)

    # Rates are recomputed from the file on disk
    rates = container_rates(read_container_file(args.out))
    print('spatial-bpp', f'{rates.spatial:.6g}')
    print('global-bpp', f'{rates.global_:.6g}')
    print('total-bpp', f'{rates.total:.6g}')


def _decode_setup(args):
    ci = read_container_file(args.inf)
    runcfg, model, stats = load_model(args.ckpt)
    check_geometry(model, ci.header)

    sbpp = spatial_rate(model.h, model.w, model.quantizer.V, model.H, model.W)

    return ci, runcfg, model, model_classes(stats), sbpp


def process_decode(args):
    ci, runcfg, model, classes, sbpp = _decode_setup(args)
    config = runcfg.sampler_config(spatial_bpp=sbpp, steps=args.steps,
                                   cfg_scale=args.cfg, seed=args.seed)

    with args.progress.start('Decode'):
        x = decode_image(model, ci, config, classes=classes)
        _write_image(args.out, x)


def process_sample(args):
    ci, runcfg, model, classes, sbpp = _decode_setup(args)

    if args.seeds < 1:
        raise ValueError('At least one seed is required')

    seed0 = runcfg.seed if args.seed is None else args.seed
    ext = 'ppm' if model.channels == 3 else 'pgm'
    os.makedirs(args.out, exist_ok=True)

    rows = []
    grid = list(it.product(args.cfg_list, args.steps_list))

    with args.progress.start_with_bar('Sample') as pbar:
        for cfg_scale, steps in pbar.start_with_iter(grid):
            outs = []
            for k in range(args.seeds):
                config = runcfg.sampler_config(steps=steps,
                                               cfg_scale=cfg_scale,
                                               seed=seed0 + k)
                buf = format_pnm(from_unit(decode_image(model, ci, config,
                                                        classes=classes)))

                fname = f'cfg{cfg_scale:g}-steps{steps}-seed{seed0 + k}.{ext}'
                with open(os.path.join(args.out, fname), 'wb') as f:
                    f.write(buf)

                outs.append((fname, buf))

            # Seeds should give pairwise distinct reconstructions
            distinct = len({b for f, b in outs}) == len(outs)
            rows += [(f'{cfg_scale:g}', steps, seed0 + k, f, int(distinct))
                     for k, (f, b) in enumerate(outs)]

    with open(os.path.join(args.out, 'grid.csv'), 'w') as f:
        print('cfg,steps,seed,file,distinct', file=f)
        for r in rows:
            print(*r, sep=',', file=f)


def process_eval(args):
    with args.progress.start('Load dataset'):
        dataset = ImageDataset(args.dataset)

    with args.progress.start('Evaluate'):
        res = rd_curve(dataset, args.ckpts, steps=args.steps,
                       cfg_scale=args.cfg, seed=args.seed,
                       nseeds=args.nseeds, use_global=not args.no_global)

    for tag, ppl in res.perplexity.items():
        args.progress.note(f'{tag}: codebook perplexity {ppl:.2f}')

    write_rd_csv(args.out, res.points)
    write_summary_csv(f'{os.path.splitext(args.out)[0]}-summary.csv',
                      res.summaries)


def process_synth(args):
    runcfg = _load_config(args)

    spec = SyntheticSpec.from_cfg(runcfg.cfg)

    with args.progress.start('Generate dataset'):
        if args.out:
            train, heldout = make_synthetic(spec, runcfg.seed, args.out)
        else:
            train, heldout = cached_synthetic(spec, runcfg.seed)

    print(train)
    print(heldout)


if __name__ == '__main__':
    sys.exit(main())
