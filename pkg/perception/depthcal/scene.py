# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.

"""
Synthetic scenes and the end-to-end supervision pipeline.
"""

import logging
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from perception.depthcal import formats
from perception.depthcal.denoise import (NoiseConfig, DetectionTarget,
                                         anchor_statistics, class_one_hot,
                                         detection_loss,
                                         generate_noised_anchors,
                                         identity_head, reconstruction_loss)
from perception.depthcal.depth_target import (DEFAULT_NUM_BINS, DepthBins,
                                              PointCloud,
                                              build_sparse_depth_target)
from perception.depthcal.exceptions import (DepthcalException, InvalidConfig,
                                            PipelineStageError)
from perception.depthcal.geometry import Box3, CameraModel, Point3
from perception.depthcal.gradcheck import run_suites
from perception.depthcal.lifting import (BevGrid, ContextFeatures,
                                         lift_cameras)
from perception.depthcal.losses import (DepthDistribution, LossReport,
                                        LossWeights, PatchConfig,
                                        absolute_depth_loss,
                                        patched_relative_depth_loss,
                                        total_loss)

log = logging.getLogger(__name__)

PREDICTION_MODES = ('oracle', 'noisy', 'uniform')
# Logit given to the chosen bin by the oracle and noisy predictions.
PREDICTION_MARGIN = 30.0
DEFAULT_CATEGORIES = ('car', 'truck', 'pedestrian', 'bicycle')
DEFAULT_GRADCHECK_INSTANCES = 5

# Sub-stream ids for np.random.default_rng([seed, stream, ...]).
_STREAM_PREDICTION = 1
_STREAM_CONTEXT = 2


def default_cameras():
    """Front and rear cameras, 90 degree field of view, 1.5 m high."""
    return [CameraModel.from_pose(128.0, 128.0, 128.0, 128.0, yaw,
                                  (0.0, 0.0, 1.5), (256, 256))
            for yaw in (0.0, math.pi)]


def _ordered(name, pair):
    lo, hi = (float(v) for v in pair)
    if not lo <= hi:
        raise InvalidConfig("%s must be (low, high) with low <= high, got %r"
                            % (name, pair))
    return (lo, hi)


@dataclass
class SceneSpec:
    seed: int = 0
    num_boxes: int = 5
    x_range: Tuple[float, float] = (-40.0, 40.0)
    y_range: Tuple[float, float] = (-40.0, 40.0)
    w_range: Tuple[float, float] = (1.5, 5.0)
    l_range: Tuple[float, float] = (1.5, 5.0)
    h_range: Tuple[float, float] = (1.4, 2.5)
    points_per_box: int = 300
    ground_points: int = 2000
    grid: Tuple[int, int] = (64, 64)
    num_bins: int = DEFAULT_NUM_BINS
    cameras: List[CameraModel] = field(default_factory=default_cameras)
    categories: List[str] = field(
        default_factory=lambda: list(DEFAULT_CATEGORIES))

    def __post_init__(self):
        for name in ('x_range', 'y_range', 'w_range', 'l_range', 'h_range'):
            setattr(self, name, _ordered(name, getattr(self, name)))
        for name in ('w_range', 'l_range', 'h_range'):
            if getattr(self, name)[0] <= 0:
                raise InvalidConfig("%s must be strictly positive" % name)
        for name in ('num_boxes', 'points_per_box', 'ground_points'):
            if getattr(self, name) < 0:
                raise InvalidConfig("%s must be >= 0" % name)
        if self.num_boxes > 0 and not self.categories:
            raise InvalidConfig("At least one category is required")
        self.grid = (int(self.grid[0]), int(self.grid[1]))
        if self.grid[0] < 1 or self.grid[1] < 1:
            raise InvalidConfig("grid dims must be >= 1")
        DepthBins(self.num_bins)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if 'cameras' in data:
            data['cameras'] = [formats.camera_from_dict(c)
                               for c in data['cameras']]
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidConfig("Unknown scene keys: %s"
                                % ', '.join(sorted(unknown)))
        return cls(**data)

    def to_dict(self):
        return {
            'seed': self.seed,
            'num_boxes': self.num_boxes,
            'x_range': list(self.x_range),
            'y_range': list(self.y_range),
            'w_range': list(self.w_range),
            'l_range': list(self.l_range),
            'h_range': list(self.h_range),
            'points_per_box': self.points_per_box,
            'ground_points': self.ground_points,
            'grid': list(self.grid),
            'num_bins': self.num_bins,
            'cameras': [formats.camera_to_dict(c) for c in self.cameras],
            'categories': list(self.categories),
        }


@dataclass(frozen=True)
class PredictionMode:
    """
    How the stand-in depth network predicts: ``oracle`` peaks at the
    ground-truth bin, ``noisy`` peaks at the ground-truth depth perturbed
    by Gaussian noise of ``sigma`` meters, ``uniform`` has zero logits.
    """
    kind: str = 'oracle'
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in PREDICTION_MODES:
            raise InvalidConfig("Prediction mode must be one of %s"
                                % (PREDICTION_MODES,))
        if self.sigma < 0:
            raise InvalidConfig("Noise sigma must be >= 0")

    def label(self):
        if self.kind == 'noisy':
            return 'noisy(%g)' % self.sigma
        return self.kind


@dataclass
class PipelineReport:
    mode: str
    losses: LossReport
    det_placeholder: bool
    supervision: Dict[str, List[int]]
    gradcheck: List[dict]
    anchors: dict
    bev: dict
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def gradcheck_passed(self):
        return all(g['passed'] for g in self.gradcheck)

    def to_dict(self, include_timings=False):
        data = {
            'mode': self.mode,
            'losses': self.losses.to_dict(),
            'det_placeholder': self.det_placeholder,
            'supervision': self.supervision,
            'gradcheck': self.gradcheck,
            'gradcheck_passed': self.gradcheck_passed,
            'anchors': self.anchors,
            'bev': self.bev,
        }
        if include_timings:
            data['timings'] = dict(self.timings)
        return data


def _sample_surface_points(rng, box, count):
    """Uniform samples on the surface of an axis-aligned box."""
    w, l, h = box.size
    # Faces: -x, +x, -y, +y, -z, +z; picked proportionally to area.
    areas = np.array([l * h, l * h, w * h, w * h, w * l, w * l])
    faces = rng.choice(6, size=count, p=areas / areas.sum())
    half = np.array(box.size) / 2.0
    local = rng.uniform(-1.0, 1.0, size=(count, 3)) * half
    axis = faces // 2
    sign = np.where(faces % 2 == 0, -1.0, 1.0)
    local[np.arange(count), axis] = sign * half[axis]
    return local + box.center.as_array()


def synthesize_scene(spec, with_projection=False):
    """
    Sample boxes resting on the ground plane, points on their surfaces
    and ground points.

    :param spec: SceneSpec; the output depends only on it.
    :param with_projection: require at least one camera.
    :returns: (PointCloud, list of DetectionTarget)
    """
    if with_projection and not spec.cameras:
        raise InvalidConfig("Projection stages need at least one camera")
    rng = np.random.default_rng(spec.seed)
    targets = []
    for _ in range(spec.num_boxes):
        size = (rng.uniform(*spec.w_range), rng.uniform(*spec.l_range),
                rng.uniform(*spec.h_range))
        center = Point3(rng.uniform(*spec.x_range),
                        rng.uniform(*spec.y_range), size[2] / 2.0)
        label = int(rng.integers(len(spec.categories)))
        targets.append(DetectionTarget(Box3(center, size), label))

    chunks = [_sample_surface_points(rng, t.box, spec.points_per_box)
              for t in targets]
    ground = np.column_stack([
        rng.uniform(spec.x_range[0], spec.x_range[1], spec.ground_points),
        rng.uniform(spec.y_range[0], spec.y_range[1], spec.ground_points),
        np.zeros(spec.ground_points)])
    chunks.append(ground)
    cloud = PointCloud(np.concatenate(chunks, axis=0))
    log.debug("Synthesized %d boxes and %d points", len(targets), len(cloud))
    return cloud, targets


def fabricate_prediction(target, mode, rng):
    """
    Build a DepthDistribution for one camera according to ``mode``.
    The normal draws are taken for every mode so that a given seed
    perturbs the same pixels the same way whatever ``sigma`` is.
    """
    noise = rng.standard_normal(target.shape)
    if mode.kind == 'uniform':
        return DepthDistribution.uniform(target.shape, target.num_bins)
    bins = target.bins
    if mode.kind == 'noisy':
        noisy = np.floor(bins + mode.sigma * noise + 0.5)
        noisy = np.clip(noisy, 1, target.num_bins).astype(np.int64)
        bins = np.where(target.mask, noisy, 0)
    return DepthDistribution.peaked(bins, target.num_bins, PREDICTION_MARGIN)


@contextmanager
def _stage(name, timings):
    start = time.perf_counter()
    log.info("Stage %s: start", name)
    try:
        yield
    except PipelineStageError:
        raise
    except (DepthcalException, ValueError) as err:
        log.error("Stage %s failed: %s", name, err)
        raise PipelineStageError(name, err)
    finally:
        timings[name] = time.perf_counter() - start
        log.info("Stage %s: %.3fs", name, timings[name])


def _mean(values):
    return sum(values) / len(values) if values else 0.0


def run_pipeline(spec, mode=PredictionMode(), patch_cfg=PatchConfig(),
                 noise_cfg=NoiseConfig(), weights=LossWeights(),
                 bev=None, gradcheck_instances=DEFAULT_GRADCHECK_INSTANCES,
                 with_lifting=True):
    """
    Run every stage on a synthetic scene and collect a PipelineReport.

    The ordinary-branch detection loss is computed from oracle
    predictions and flagged as a placeholder in the report.

    :param bev: BevGrid giving extent, resolution and context channels;
                defaults to a fresh ``BevGrid()``.
    :raises: PipelineStageError naming the stage that failed.
    """
    timings = {}
    bins = DepthBins(spec.num_bins)
    bev = bev if bev is not None else BevGrid()

    with _stage('synthesize', timings):
        cloud, targets = synthesize_scene(spec, with_projection=True)

    with _stage('depth_target', timings):
        depth_targets = [build_sparse_depth_target(cloud, cam, bins,
                                                   spec.grid)
                         for cam in spec.cameras]

    with _stage('prediction', timings):
        preds = [fabricate_prediction(
                     t, mode,
                     np.random.default_rng([spec.seed, _STREAM_PREDICTION, i]))
                 for i, t in enumerate(depth_targets)]

    with _stage('depth_losses', timings):
        adls, rdls = [], []
        adl_sq, rdl_sq = 0.0, 0.0
        for pred, target in zip(preds, depth_targets):
            if target.count == 0:
                continue
            adl, adl_grad = absolute_depth_loss(pred, target)
            rdl, rdl_grad = patched_relative_depth_loss(pred, target,
                                                        patch_cfg)
            adls.append(adl)
            rdls.append(rdl)
            adl_sq += float(np.sum(adl_grad ** 2))
            rdl_sq += float(np.sum(rdl_grad ** 2))
        adl, rdl = _mean(adls), _mean(rdls)

    with _stage('gradcheck', timings):
        checks = []
        if gradcheck_instances > 0:
            checks = [r.to_dict() for r in
                      run_suites(gradcheck_instances, seed=spec.seed)]

    with _stage('denoise', timings):
        anchors = generate_noised_anchors(targets, noise_cfg)
        num_classes = max(len(spec.categories), 1)
        rcl, breakdown = reconstruction_loss(
            anchors, identity_head(anchors, num_classes), targets)
        anchor_stats = anchor_statistics(anchors)
        anchor_stats['mean_l1'] = _mean([b['l1'] for b in breakdown])
        oracle = [(t.box, class_one_hot(t.class_label, num_classes))
                  for t in targets]
        det, _ = detection_loss(oracle, targets)

    with _stage('lifting', timings):
        occupancy = {}
        if with_lifting:
            views = []
            for i, (pred, cam) in enumerate(zip(preds, spec.cameras)):
                ctx_rng = np.random.default_rng([spec.seed, _STREAM_CONTEXT,
                                                 i])
                feats = ctx_rng.standard_normal(
                    (spec.grid[0], spec.grid[1], bev.channels))
                views.append((pred, ContextFeatures(feats), cam))
            occupancy = lift_cameras(views, bins, bev.empty_like()).occupancy()

    with _stage('report', timings):
        losses = LossReport(
            adl=adl, det=det, rdl=rdl, rcl=rcl,
            total=total_loss(adl, det, rdl, rcl, weights),
            alpha=weights.alpha, beta=weights.beta,
            grad_norms={'adl': math.sqrt(adl_sq), 'rdl': math.sqrt(rdl_sq)})
        report = PipelineReport(
            mode=mode.label(),
            losses=losses,
            det_placeholder=True,
            supervision={'masked_pixels': [t.count for t in depth_targets],
                         'anchors': [len(targets), len(anchors)]},
            gradcheck=checks,
            anchors=anchor_stats,
            bev=occupancy,
            timings=timings)
    return report


def sweep(spec, mode=PredictionMode(), temperatures=(4.0, 8.0, 16.0),
          patch_sizes=(5, 7), noise_cfg=NoiseConfig(),
          weights=LossWeights(), criterion='kl', window='sliding'):
    """
    Evaluate the losses for every (temperature, patch size) pair.
    ``criterion`` and ``window`` are shared by every setting.

    :returns: list of dicts, one per setting.
    """
    rows = []
    for p in patch_sizes:
        for tau in temperatures:
            cfg = PatchConfig(patch_size=int(p), temperature=float(tau),
                              criterion=criterion, window=window)
            report = run_pipeline(spec, mode, cfg, noise_cfg, weights,
                                  gradcheck_instances=0, with_lifting=False)
            row = {'patch_size': int(p), 'temperature': float(tau),
                   'criterion': criterion, 'window': window}
            row.update(report.losses.to_dict())
            rows.append(row)
    return rows
