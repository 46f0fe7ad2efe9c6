# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.

"""
Command-line entry point: ``depthcal <subcommand> [options]``.
"""

import argparse
import logging
import sys

from perception.depthcal import __version__, formats
from perception.depthcal.denoise import NoiseConfig, generate_noised_anchors
from perception.depthcal.depth_target import (DEFAULT_NUM_BINS, DepthBins,
                                              build_sparse_depth_target)
from perception.depthcal.exceptions import DepthcalException
from perception.depthcal.gradcheck import (DEFAULT_INSTANCES,
                                           DEFAULT_TOLERANCE, run_suites)
from perception.depthcal.lifting import (DEFAULT_CONTEXT_CHANNELS,
                                         DEFAULT_EXTENT, DEFAULT_RESOLUTION,
                                         BevGrid, ContextFeatures,
                                         lift_to_bev)
from perception.depthcal.losses import (CRITERIA, WINDOWS, DepthDistribution,
                                        LossReport, LossWeights, PatchConfig,
                                        absolute_depth_loss,
                                        patched_relative_depth_loss,
                                        total_loss)
from perception.depthcal.scene import (DEFAULT_GRADCHECK_INSTANCES,
                                       PREDICTION_MODES, PredictionMode,
                                       SceneSpec, run_pipeline, sweep)
from perception.depthcal.utils import set_logging

log = logging.getLogger(__name__)


def _add_patch_args(parser):
    parser.add_argument('--patch-size', type=int, default=5,
                        help="relative-depth window size p (default: 5)")
    parser.add_argument('--stride', type=int, default=None,
                        help="window stride (default: patch size)")
    parser.add_argument('--tau', type=float, default=8.0,
                        help="relative-depth temperature (default: 8)")
    parser.add_argument('--criterion', choices=CRITERIA, default='kl')
    parser.add_argument('--window', choices=WINDOWS, default='sliding')


def _add_weight_args(parser):
    parser.add_argument('--alpha', type=float, default=0.1,
                        help="relative depth loss weight (default: 0.1)")
    parser.add_argument('--beta', type=float, default=1.0,
                        help="reconstruction loss weight (default: 1.0)")


def _add_noise_args(parser):
    parser.add_argument('--delta-d', type=float, default=0.5)
    parser.add_argument('--delta-s', type=float, default=0.1)
    parser.add_argument('--delta-l', type=float, default=0.1)
    parser.add_argument('--groups', type=int, default=1,
                        help="noised copies per ground-truth box")


def _add_bev_args(parser):
    parser.add_argument('--extent', type=float, nargs=4,
                        default=list(DEFAULT_EXTENT),
                        metavar=('X_MIN', 'X_MAX', 'Y_MIN', 'Y_MAX'))
    parser.add_argument('--resolution', type=int, nargs=2,
                        default=list(DEFAULT_RESOLUTION),
                        metavar=('ROWS', 'COLS'))


def _add_scene_args(parser):
    parser.add_argument('scene', nargs='?', default=None,
                        help="SceneSpec JSON document (default: built-in "
                             "5-box, 2-camera scene)")
    parser.add_argument('--mode', choices=PREDICTION_MODES, default='oracle')
    parser.add_argument('--sigma', type=float, default=1.0,
                        help="depth noise in meters for --mode noisy")
    parser.add_argument('--bins', type=int, default=None,
                        help="depth bins (default: the scene's, or "
                             "%d)" % DEFAULT_NUM_BINS)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=None,
                        help="random seed (default: 0, or the scene's)")
    common.add_argument('--out', default='-',
                        help="output file (default: stdout)")
    common.add_argument('--log-file', default=None,
                        help="log destination; /dev/null disables logging")
    common.add_argument('--log-level', default='WARNING')

    parser = argparse.ArgumentParser(
        prog='depthcal',
        description="Depth-aware detection supervision toolkit.")
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    p = sub.add_parser('depth-target', parents=[common],
                       help="point cloud + camera -> sparse depth target")
    p.add_argument('--cloud', required=True, help="point cloud JSON")
    p.add_argument('--camera', required=True, help="camera JSON")
    p.add_argument('--grid', type=int, nargs=2, required=True,
                   metavar=('H', 'W'))
    p.add_argument('--bins', type=int, default=DEFAULT_NUM_BINS)
    p.set_defaults(func=cmd_depth_target)

    p = sub.add_parser('losses', parents=[common],
                       help="depth target + prediction -> loss report")
    p.add_argument('--target', required=True, help="depth target JSON")
    p.add_argument('--logits', required=True, help="H x W x D logits (.npy)")
    p.add_argument('--det', type=float, default=0.0,
                   help="detection loss to fold into the total")
    p.add_argument('--rcl', type=float, default=0.0,
                   help="reconstruction loss to fold into the total")
    _add_patch_args(p)
    _add_weight_args(p)
    p.set_defaults(func=cmd_losses)

    p = sub.add_parser('denoise', parents=[common],
                       help="detection targets -> noised anchors (JSONL)")
    p.add_argument('--targets', required=True,
                   help="detection targets JSON")
    _add_noise_args(p)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser('lift', parents=[common],
                       help="prediction + context + camera -> BEV grid")
    p.add_argument('--logits', required=True, help="H x W x D logits (.npy)")
    p.add_argument('--context', required=True,
                   help="H x W x C context features (.npy)")
    p.add_argument('--camera', required=True, help="camera JSON")
    _add_bev_args(p)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser('demo', parents=[common],
                       help="run the full pipeline on a synthetic scene")
    _add_scene_args(p)
    _add_patch_args(p)
    _add_weight_args(p)
    _add_noise_args(p)
    _add_bev_args(p)
    p.add_argument('--channels', type=int, default=DEFAULT_CONTEXT_CHANNELS,
                   help="context feature channels")
    p.add_argument('--gradcheck-instances', type=int,
                   default=DEFAULT_GRADCHECK_INSTANCES)
    p.add_argument('--timings', action='store_true',
                   help="include per-stage timings in the report")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser('gradcheck', parents=[common],
                       help="finite-difference check of every loss gradient")
    p.add_argument('--instances', type=int, default=DEFAULT_INSTANCES)
    p.add_argument('--tolerance', type=float, default=DEFAULT_TOLERANCE)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser('sweep', parents=[common],
                       help="losses over temperature and patch-size grids")
    _add_scene_args(p)
    _add_weight_args(p)
    _add_noise_args(p)
    p.add_argument('--taus', type=float, nargs='+', default=[4.0, 8.0, 16.0])
    p.add_argument('--patch-sizes', type=int, nargs='+', default=[5, 7])
    p.add_argument('--criterion', choices=CRITERIA, default='kl')
    p.add_argument('--window', choices=WINDOWS, default='sliding')
    p.set_defaults(func=cmd_sweep)
    return parser


def _seed(args, default=0):
    return default if args.seed is None else args.seed


def _patch_config(args):
    return PatchConfig(patch_size=args.patch_size, stride=args.stride,
                       temperature=args.tau, criterion=args.criterion,
                       window=args.window)


def _weights(args):
    return LossWeights(alpha=args.alpha, beta=args.beta)


def _noise_config(args, seed):
    return NoiseConfig(delta_d=args.delta_d, delta_s=args.delta_s,
                       delta_l=args.delta_l, groups=args.groups, seed=seed)


def _scene(args):
    data = formats.read_json(args.scene) if args.scene else {}
    if args.seed is not None:
        data['seed'] = args.seed
    if args.bins is not None:
        data['num_bins'] = args.bins
    return SceneSpec.from_dict(data)


def cmd_depth_target(args):
    cloud = formats.point_cloud_from_dict(formats.read_json(args.cloud))
    cam = formats.camera_from_dict(formats.read_json(args.camera))
    target = build_sparse_depth_target(cloud, cam, DepthBins(args.bins),
                                       tuple(args.grid))
    formats.write_json(args.out, target.to_dict())
    return 0


def cmd_losses(args):
    target = formats.target_from_dict(formats.read_json(args.target))
    pred = DepthDistribution(formats.load_array(args.logits))
    weights = _weights(args)
    adl, adl_grad = absolute_depth_loss(pred, target)
    rdl, rdl_grad = patched_relative_depth_loss(pred, target,
                                                _patch_config(args))
    report = LossReport(
        adl=float(adl), det=args.det, rdl=float(rdl), rcl=args.rcl,
        total=total_loss(float(adl), args.det, float(rdl), args.rcl,
                         weights),
        alpha=weights.alpha, beta=weights.beta,
        grad_norms={'adl': float((adl_grad ** 2).sum() ** 0.5),
                    'rdl': float((rdl_grad ** 2).sum() ** 0.5)})
    formats.write_json(args.out, report.to_dict())
    return 0


def cmd_denoise(args):
    targets = formats.detection_targets_from_dict(
        formats.read_json(args.targets))
    anchors = generate_noised_anchors(targets,
                                      _noise_config(args, _seed(args)))
    formats.write_text(args.out, formats.dumps_anchors(anchors))
    return 0


def cmd_lift(args):
    if args.out in (None, '-'):
        raise DepthcalException("lift writes a header and a payload file; "
                                "--out must name a file")
    pred = DepthDistribution(formats.load_array(args.logits))
    ctx = ContextFeatures(formats.load_array(args.context))
    cam = formats.camera_from_dict(formats.read_json(args.camera))
    grid = BevGrid(tuple(args.extent), tuple(args.resolution), ctx.channels)
    bev = lift_to_bev(pred, ctx, cam, DepthBins(pred.num_bins), grid)
    formats.write_bev(args.out, bev)
    return 0


def cmd_demo(args):
    spec = _scene(args)
    report = run_pipeline(
        spec,
        mode=PredictionMode(args.mode, args.sigma),
        patch_cfg=_patch_config(args),
        noise_cfg=_noise_config(args, spec.seed),
        weights=_weights(args),
        bev=BevGrid(tuple(args.extent), tuple(args.resolution),
                    args.channels),
        gradcheck_instances=args.gradcheck_instances)
    formats.write_json(args.out,
                       report.to_dict(include_timings=args.timings))
    return 0


def cmd_gradcheck(args):
    results = run_suites(args.instances, _seed(args), args.tolerance)
    formats.write_json(args.out, {
        'passed': all(r.passed for r in results),
        'suites': [r.to_dict() for r in results],
    })
    return 0 if all(r.passed for r in results) else 1


def cmd_sweep(args):
    spec = _scene(args)
    rows = sweep(spec, PredictionMode(args.mode, args.sigma),
                 temperatures=args.taus, patch_sizes=args.patch_sizes,
                 criterion=args.criterion, window=args.window,
                 noise_cfg=_noise_config(args, spec.seed),
                 weights=_weights(args))
    formats.write_json(args.out, {'rows': rows})
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        set_logging(args.log_file, args.log_level.upper())
    except ValueError as err:
        sys.stderr.write("depthcal: %s\n" % err)
        return 2
    try:
        return args.func(args)
    except (DepthcalException, ValueError, OSError) as err:
        log.error("%s failed: %s", args.command, err)
        sys.stderr.write("depthcal %s: %s\n" % (args.command, err))
        return 1


if __name__ == '__main__':
    sys.exit(main())
