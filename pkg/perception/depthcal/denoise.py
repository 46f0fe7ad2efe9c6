# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.

"""
Noised reference anchors for depth-denoising training.

Ground-truth boxes are perturbed by three multiplicative maps applied in
the order depth, scale, location. The detection head is asked to
reconstruct the source box from every noised anchor.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from perception.depthcal.exceptions import InvalidConfig, ShapeMismatch
from perception.depthcal.geometry import Box3, Point3
from perception.depthcal.utils import validate_factor

log = logging.getLogger(__name__)

DEFAULT_DELTA_DEPTH = 0.5
DEFAULT_DELTA_SCALE = 0.1
DEFAULT_DELTA_LOCATION = 0.1
# Probabilities are clipped here before the log in the CE term.
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class NoiseConfig:
    delta_d: float = DEFAULT_DELTA_DEPTH
    delta_s: float = DEFAULT_DELTA_SCALE
    delta_l: float = DEFAULT_DELTA_LOCATION
    groups: int = 1
    seed: int = 0

    def __post_init__(self):
        for name in ('delta_d', 'delta_s', 'delta_l'):
            value = getattr(self, name)
            if not 0 <= value < 1:
                raise InvalidConfig("%s must lie in [0, 1), got %r"
                                    % (name, value))
        if int(self.groups) != self.groups or self.groups < 1:
            raise InvalidConfig("groups must be an integer >= 1")

    @property
    def deltas(self):
        return (self.delta_d, self.delta_s, self.delta_l)


@dataclass(frozen=True)
class DetectionTarget:
    box: Box3
    class_label: int

    def to_dict(self):
        return {'box': [float(v) for v in self.box.as_vector()],
                'class_label': int(self.class_label)}

    @classmethod
    def from_dict(cls, data):
        return cls(Box3.from_vector(data['box']), int(data['class_label']))


@dataclass(frozen=True)
class NoisedAnchor:
    anchor: Box3
    source_index: int
    class_label: int
    sigmas: Tuple[float, float, float]

    def to_dict(self):
        return {
            'source_index': int(self.source_index),
            'class_label': int(self.class_label),
            'sigmas': [float(s) for s in self.sigmas],
            'box': [float(v) for v in self.anchor.as_vector()],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(Box3.from_vector(data['box']), int(data['source_index']),
                   int(data['class_label']),
                   tuple(float(s) for s in data['sigmas']))


@validate_factor
def apply_depth_noise(b, sigma_d, cam=None):
    """
    Scale all six box fields by ``sigma_d``.

    Without a camera the scaling is about the ego origin. With a camera,
    the center is scaled about the camera's optical center instead, which
    is the frame where a depth error maps to an exact scaling.
    """
    if cam is None:
        return Box3.from_vector(sigma_d * b.as_vector())
    origin = cam.center.as_array()
    center = origin + sigma_d * (b.center.as_array() - origin)
    return Box3(Point3.from_array(center),
                tuple(sigma_d * s for s in b.size))


@validate_factor
def apply_scale_noise(b, sigma_s):
    return Box3(b.center, tuple(sigma_s * s for s in b.size))


@validate_factor
def apply_location_noise(b, sigma_l):
    center = Point3(sigma_l * b.center.x, sigma_l * b.center.y,
                    sigma_l * b.center.z)
    return Box3(center, b.size)


def replay_anchor(source, sigmas, cam=None):
    """
    Apply depth, then scale, then location noise with known factors.
    """
    sigma_d, sigma_s, sigma_l = sigmas
    box = apply_depth_noise(source, sigma_d, cam)
    box = apply_scale_noise(box, sigma_s)
    return apply_location_noise(box, sigma_l)


def draw_sigmas(num_targets, cfg):
    """
    Materialize the factor stream: array (groups, num_targets, 3) with
    columns (sigma_d, sigma_s, sigma_l), each uniform in
    ``[1 - delta, 1 + delta)``.
    """
    rng = np.random.default_rng(cfg.seed)
    deltas = np.asarray(cfg.deltas, dtype=np.float64)
    return rng.uniform(1.0 - deltas, 1.0 + deltas,
                       size=(cfg.groups, num_targets, 3))


def generate_noised_anchors(targets, cfg=NoiseConfig(), cam=None):
    """
    Produce ``len(targets) * cfg.groups`` noised anchors, group-major.

    :param targets: list of DetectionTarget
    :param cfg: NoiseConfig; identical configs give identical anchors.
    :param cam: optional CameraModel selecting camera-centered depth noise.
    :returns: list of NoisedAnchor
    """
    if not targets:
        return []
    sigmas = draw_sigmas(len(targets), cfg)
    anchors = []
    for group in range(cfg.groups):
        for index, target in enumerate(targets):
            drawn = tuple(float(s) for s in sigmas[group, index])
            anchors.append(NoisedAnchor(replay_anchor(target.box, drawn, cam),
                                        index, target.class_label, drawn))
    log.debug("Generated %d noised anchors from %d targets",
              len(anchors), len(targets))
    return anchors


def class_one_hot(label, num_classes):
    vec = np.zeros(num_classes, dtype=np.float64)
    vec[label] = 1.0
    return vec


def identity_head(anchors, num_classes=None):
    """
    Stand-in detection head: echo every anchor box with a one-hot class
    distribution on the anchor's label.
    """
    if num_classes is None:
        num_classes = max([a.class_label for a in anchors] or [0]) + 1
    return [(a.anchor, class_one_hot(a.class_label, num_classes))
            for a in anchors]


def detection_loss(predictions, targets):
    """
    Mean over pairs of class cross-entropy plus L1 on the 6-vector box.

    :param predictions: list of (Box3, class-probability vector)
    :param targets: list of DetectionTarget aligned with predictions.
    :returns: (loss, breakdown) where breakdown holds one
              ``{'ce': .., 'l1': ..}`` dict per pair.
    """
    if len(predictions) != len(targets):
        raise ShapeMismatch("%d predictions for %d targets"
                            % (len(predictions), len(targets)))
    breakdown = []
    total = 0.0
    for (box, probs), target in zip(predictions, targets):
        p = max(float(probs[target.class_label]), PROB_FLOOR)
        ce = -math.log(p)
        l1 = sum(abs(a - b) for a, b in zip(box.as_vector().tolist(),
                                            target.box.as_vector().tolist()))
        breakdown.append({'ce': ce, 'l1': l1})
        total += ce + l1
    if not breakdown:
        return 0.0, breakdown
    return total / len(breakdown), breakdown


def reconstruction_loss(anchors, predictions, targets):
    """
    Denoising loss: every prediction is scored against the ground-truth
    box its anchor was generated from (no bipartite matching).
    """
    if len(anchors) != len(predictions):
        raise ShapeMismatch("%d predictions for %d anchors"
                            % (len(predictions), len(anchors)))
    matched = [targets[a.source_index] for a in anchors]
    return detection_loss(predictions, matched)


def anchor_statistics(anchors):
    """Count and min / mean / max of every drawn factor."""
    stats = {'count': len(anchors)}
    if not anchors:
        return stats
    sigmas = np.array([a.sigmas for a in anchors], dtype=np.float64)
    for col, name in enumerate(('sigma_d', 'sigma_s', 'sigma_l')):
        stats[name] = {'min': float(sigmas[:, col].min()),
                       'mean': float(sigmas[:, col].mean()),
                       'max': float(sigmas[:, col].max())}
    return stats
