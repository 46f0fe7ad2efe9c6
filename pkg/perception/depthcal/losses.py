# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.

"""
Depth supervision losses with analytic gradients on depth logits.

Every loss returns ``(loss, grad)`` where ``grad`` has the shape of the
input it is differentiated against. All arithmetic is float64.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional

import numpy as np

from perception.depthcal.depth_target import one_hot_map
from perception.depthcal.exceptions import (InvalidConfig, NonFiniteInput,
                                            ShapeMismatch)
from perception.depthcal.utils import validate_finite_logits

log = logging.getLogger(__name__)

DEFAULT_PATCH_SIZE = 5
DEFAULT_TEMPERATURE = 8.0
DEFAULT_ALPHA = 0.1
DEFAULT_BETA = 1.0
CRITERIA = ('kl', 'l1')
WINDOWS = ('sliding', 'global')


def log_softmax(z, axis=-1):
    shifted = z - np.max(z, axis=axis, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=axis,
                                   keepdims=True))


def softmax(z, axis=-1):
    e = np.exp(z - np.max(z, axis=axis, keepdims=True))
    return e / np.sum(e, axis=axis, keepdims=True)


@dataclass(frozen=True, eq=False)
class DepthDistribution:
    """
    Per-pixel categorical distribution over depth bins, parameterized by
    logits of shape H x W x num_bins.
    """
    logits: np.ndarray

    def __post_init__(self):
        logits = np.asarray(self.logits, dtype=np.float64)
        if logits.ndim != 3 or logits.shape[2] < 2:
            raise ShapeMismatch("Depth logits must be H x W x num_bins, "
                                "got %r" % (logits.shape,))
        object.__setattr__(self, 'logits', logits)

    @cached_property
    def probs(self):
        return softmax(self.logits)

    @property
    def shape(self):
        return self.logits.shape[:2]

    @property
    def num_bins(self):
        return self.logits.shape[2]

    @classmethod
    def uniform(cls, grid, num_bins):
        return cls(np.zeros((grid[0], grid[1], num_bins)))

    @classmethod
    def peaked(cls, bins, num_bins, margin=30.0):
        """
        Logits with ``margin`` at bin ``bins[i]`` and 0 elsewhere. Pixels
        holding a bin value outside ``[1, num_bins]`` get zero logits.
        """
        bins = np.asarray(bins, dtype=np.int64)
        logits = np.zeros(bins.shape + (num_bins,))
        rows, cols = np.nonzero((bins >= 1) & (bins <= num_bins))
        logits[rows, cols, bins[rows, cols] - 1] = margin
        return cls(logits)


@dataclass(frozen=True, eq=False)
class RelativeDepthMap:
    values: np.ndarray
    normalized: bool = False


@dataclass(frozen=True)
class PatchConfig:
    patch_size: int = DEFAULT_PATCH_SIZE
    stride: Optional[int] = None
    temperature: float = DEFAULT_TEMPERATURE
    criterion: str = 'kl'
    window: str = 'sliding'

    def __post_init__(self):
        if self.stride is None:
            object.__setattr__(self, 'stride', self.patch_size)
        if self.patch_size < 2:
            raise InvalidConfig("patch_size must be >= 2")
        if self.stride < 1:
            raise InvalidConfig("stride must be >= 1")
        if not self.temperature > 0:
            raise InvalidConfig("temperature must be > 0")
        if self.criterion not in CRITERIA:
            raise InvalidConfig("criterion must be one of %s" % (CRITERIA,))
        if self.window not in WINDOWS:
            raise InvalidConfig("window must be one of %s" % (WINDOWS,))


@dataclass(frozen=True)
class LossWeights:
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if not (self.alpha >= 0 and self.beta >= 0):
            raise InvalidConfig("Loss weights must be >= 0, got "
                                "alpha=%r beta=%r" % (self.alpha, self.beta))


@dataclass
class LossReport:
    adl: float
    det: float
    rdl: float
    rcl: float
    total: float
    alpha: float
    beta: float
    grad_norms: Dict[str, float] = field(default_factory=dict)

    def to_dict(self):
        return {
            'adl': self.adl,
            'det': self.det,
            'rdl': self.rdl,
            'rcl': self.rcl,
            'total': self.total,
            'alpha': self.alpha,
            'beta': self.beta,
            'grad_norms': dict(sorted(self.grad_norms.items())),
        }


def _check_pair(pred, target):
    if tuple(pred.shape) != tuple(target.shape):
        raise ShapeMismatch("Prediction grid %r does not match target %r"
                            % (tuple(pred.shape), tuple(target.shape)))
    if pred.num_bins != target.num_bins:
        raise ShapeMismatch("Prediction has %d bins, target %d"
                            % (pred.num_bins, target.num_bins))


@validate_finite_logits
def absolute_depth_loss(pred, target):
    """
    Masked pixel-wise cross-entropy against the one-hot depth target.

    :param pred: DepthDistribution
    :param target: SparseDepthTarget of the same grid and bin count.
    :returns: (loss, grad) with grad shaped like ``pred.logits``.
              Both are zero when no pixel is supervised.
    """
    _check_pair(pred, target)
    grad = np.zeros_like(pred.logits)
    count = target.count
    if count == 0:
        return 0.0, grad

    rows, cols = np.nonzero(target.mask)
    idx = target.bins[rows, cols] - 1
    logp = log_softmax(pred.logits[rows, cols])
    loss = -np.sum(logp[np.arange(rows.shape[0]), idx]) / count

    onehot = one_hot_map(target)
    grad[rows, cols] = (pred.probs[rows, cols] - onehot[rows, cols]) / count
    return float(loss), grad


def expected_depth(pred):
    """
    Integral depth per pixel: ``sum_c c * p[c]``.

    :param pred: DepthDistribution, or an array of probabilities whose
                 last axis runs over bins 1..C.
    :returns: array with the leading shape of the input.
    """
    if isinstance(pred, DepthDistribution):
        z = pred.logits
        weights = np.exp(z - np.max(z, axis=-1, keepdims=True))
    else:
        weights = np.asarray(pred, dtype=np.float64)
    values = np.arange(1, weights.shape[-1] + 1, dtype=np.float64)
    return weights.dot(values) / np.sum(weights, axis=-1)


def expected_depth_backward(pred, grad_depth):
    """
    Chain a gradient on expected depth (H x W) into the logits.
    """
    probs = pred.probs
    values = np.arange(1, pred.num_bins + 1, dtype=np.float64)
    depth = probs.dot(values)
    return grad_depth[..., None] * probs * (values - depth[..., None])


def relative_depth(depths):
    """
    Signed pairwise differences ``R[j, k] = d[j] - d[k]``.
    """
    depths = np.asarray(depths, dtype=np.float64).reshape(-1)
    if depths.shape[0] < 2:
        raise ValueError("Relative depth needs at least 2 pixels")
    return RelativeDepthMap(np.subtract.outer(depths, depths))


def _relative_log_response(raw, tau):
    a = -np.abs(raw) / tau
    return log_softmax(a, axis=1)


def normalize_relative(raw, tau):
    """
    Row-wise temperature softmax of ``-|R|``: pixel pairs with a smaller
    depth gap respond higher, and each row sums to one.
    """
    if not tau > 0:
        raise ValueError("Temperature must be > 0, got %r" % (tau,))
    values = raw.values if isinstance(raw, RelativeDepthMap) else raw
    a = -np.abs(np.asarray(values, dtype=np.float64)) / tau
    return RelativeDepthMap(softmax(a, axis=1), normalized=True)


def relative_depth_loss(pred_depths, gt_depths, tau=DEFAULT_TEMPERATURE):
    """
    KL divergence between normalized relative-depth maps of ground truth
    and prediction, averaged over all n*n entries.

    :returns: (loss, grad) with grad w.r.t. ``pred_depths``.
    """
    if not tau > 0:
        raise ValueError("Temperature must be > 0, got %r" % (tau,))
    pred = np.asarray(pred_depths, dtype=np.float64).reshape(-1)
    gt = np.asarray(gt_depths, dtype=np.float64).reshape(-1)
    if pred.shape != gt.shape:
        raise ShapeMismatch("pred and gt depth vectors differ in length")
    n = pred.shape[0]
    if n < 2:
        raise ValueError("Relative depth needs at least 2 pixels")

    raw_pred = np.subtract.outer(pred, pred)
    log_p = _relative_log_response(raw_pred, tau)
    log_g = _relative_log_response(np.subtract.outer(gt, gt), tau)
    g = np.exp(log_g)
    loss = np.sum(g * (log_g - log_p)) / (n * n)

    diff = (np.exp(log_p) - g) / (n * n)
    grad = -np.sum((diff + diff.T) * np.sign(raw_pred), axis=1) / tau
    return float(loss), grad


def relative_depth_l1_loss(pred_depths, gt_depths, tau=None):
    """
    L1 distance between raw relative-depth maps, averaged over all n*n
    entries. ``tau`` is accepted for signature parity and ignored.

    :returns: (loss, grad) with grad w.r.t. ``pred_depths``.
    """
    pred = np.asarray(pred_depths, dtype=np.float64).reshape(-1)
    gt = np.asarray(gt_depths, dtype=np.float64).reshape(-1)
    if pred.shape != gt.shape:
        raise ShapeMismatch("pred and gt depth vectors differ in length")
    n = pred.shape[0]
    if n < 2:
        raise ValueError("Relative depth needs at least 2 pixels")

    diff = np.subtract.outer(pred, pred) - np.subtract.outer(gt, gt)
    loss = np.sum(np.abs(diff)) / (n * n)
    s = np.sign(diff)
    grad = (np.sum(s, axis=1) - np.sum(s, axis=0)) / (n * n)
    return float(loss), grad


_CRITERIA = {
    'kl': relative_depth_loss,
    'l1': relative_depth_l1_loss,
}


def window_origins(shape, cfg):
    """Top-left corners of the windows visited for a grid of ``shape``."""
    h, w = shape
    if cfg.window == 'global':
        return [(0, 0, h, w)]
    p = cfg.patch_size
    if p > min(h, w):
        raise InvalidConfig("patch_size %d exceeds grid %r" % (p, (h, w)))
    return [(r, c, p, p)
            for r in range(0, h - p + 1, cfg.stride)
            for c in range(0, w - p + 1, cfg.stride)]


@validate_finite_logits
def patched_relative_depth_loss(pred, target, cfg=PatchConfig()):
    """
    Relative depth loss averaged over local windows.

    Windows with fewer than two supervised pixels are skipped; the mean
    runs over the windows that contributed. Ground-truth depth is the
    bin value, predicted depth the expectation of the distribution.

    :returns: (loss, grad) with grad shaped like ``pred.logits``.
    """
    _check_pair(pred, target)
    criterion = _CRITERIA[cfg.criterion]
    depth = expected_depth(pred)
    gt = target.bins.astype(np.float64)
    grad_depth = np.zeros(pred.shape)
    total = 0.0
    used = 0

    for r, c, ph, pw in window_origins(pred.shape, cfg):
        m = target.mask[r:r + ph, c:c + pw]
        if np.count_nonzero(m) < 2:
            continue
        rows, cols = np.nonzero(m)
        rows, cols = rows + r, cols + c
        loss, g = criterion(depth[rows, cols], gt[rows, cols],
                            cfg.temperature)
        total += loss
        grad_depth[rows, cols] += g
        used += 1

    log.debug("Relative depth: %d windows contributed", used)
    if used == 0:
        return 0.0, np.zeros_like(pred.logits)
    grad_depth /= used
    return total / used, expected_depth_backward(pred, grad_depth)


def total_loss(adl, det, rdl, rcl, weights=LossWeights()):
    """
    Weighted sum of the four supervision terms:
    ``adl + det + alpha * rdl + beta * rcl``.
    """
    for name, value in (('adl', adl), ('det', det), ('rdl', rdl),
                        ('rcl', rcl)):
        if not math.isfinite(value):
            raise NonFiniteInput("%s loss is not finite: %r" % (name, value))
    return adl + det + weights.alpha * rdl + weights.beta * rcl
