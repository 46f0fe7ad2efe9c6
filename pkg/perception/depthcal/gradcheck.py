# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.

"""
Central finite-difference checks for the analytic loss gradients.
"""

import logging
from dataclasses import dataclass

import numpy as np

from perception.depthcal.depth_target import SparseDepthTarget
from perception.depthcal.exceptions import InvalidConfig
from perception.depthcal.losses import (DepthDistribution, PatchConfig,
                                        absolute_depth_loss,
                                        patched_relative_depth_loss,
                                        relative_depth_l1_loss,
                                        relative_depth_loss)

log = logging.getLogger(__name__)

DEFAULT_STEP = 1e-6
DEFAULT_TOLERANCE = 1e-5
DEFAULT_INSTANCES = 20


@dataclass
class GradcheckResult:
    name: str
    instances: int
    max_rel_error: float
    tolerance: float

    @property
    def passed(self):
        return self.max_rel_error < self.tolerance

    def to_dict(self):
        return {
            'name': self.name,
            'instances': self.instances,
            'max_rel_error': self.max_rel_error,
            'tolerance': self.tolerance,
            'passed': self.passed,
        }


def numerical_gradient(f, x, h=DEFAULT_STEP):
    """
    Central differences of the scalar function ``f`` at ``x``.

    :param f: callable taking an array shaped like ``x``.
    :param x: float64 array; left unmodified.
    """
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.shape[0]):
        saved = flat[i]
        flat[i] = saved + h
        plus = f(x)
        flat[i] = saved - h
        minus = f(x)
        flat[i] = saved
        out[i] = (plus - minus) / (2.0 * h)
    return grad


def relative_error(analytic, numeric):
    """
    ``||a - n|| / max(||a|| + ||n||, 1e-12)`` over the flattened arrays.
    """
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    denom = max(np.linalg.norm(a) + np.linalg.norm(n), 1e-12)
    return float(np.linalg.norm(a - n) / denom)


def _random_target(rng, h, w, num_bins, density=0.7):
    mask = rng.random((h, w)) < density
    # Keep at least two supervised pixels so every loss is non-trivial.
    mask.reshape(-1)[:2] = True
    bins = np.where(mask, rng.integers(1, num_bins + 1, size=(h, w)), 0)
    return SparseDepthTarget(bins, mask, num_bins)


def check_absolute_depth_loss(rng, h=2, w=2, num_bins=6):
    target = _random_target(rng, h, w, num_bins)
    logits = rng.normal(size=(h, w, num_bins))
    _, grad = absolute_depth_loss(DepthDistribution(logits), target)
    numeric = numerical_gradient(
        lambda z: absolute_depth_loss(DepthDistribution(z), target)[0],
        logits)
    return relative_error(grad, numeric)


def check_relative_depth_loss(rng, n=5, tau=None):
    tau = tau if tau is not None else rng.uniform(1.0, 16.0)
    pred = rng.uniform(1.0, 60.0, size=n)
    gt = rng.uniform(1.0, 60.0, size=n)
    _, grad = relative_depth_loss(pred, gt, tau)
    numeric = numerical_gradient(
        lambda x: relative_depth_loss(x, gt, tau)[0], pred)
    return relative_error(grad, numeric)


def check_relative_depth_l1_loss(rng, n=5):
    pred = rng.uniform(1.0, 60.0, size=n)
    gt = rng.uniform(1.0, 60.0, size=n)
    _, grad = relative_depth_l1_loss(pred, gt)
    numeric = numerical_gradient(
        lambda x: relative_depth_l1_loss(x, gt)[0], pred)
    return relative_error(grad, numeric)


def check_patched_relative_depth_loss(rng, h=6, w=6, num_bins=8,
                                      cfg=None):
    cfg = cfg or PatchConfig(patch_size=5, stride=1, temperature=2.0)
    target = _random_target(rng, h, w, num_bins)
    logits = rng.normal(size=(h, w, num_bins))
    _, grad = patched_relative_depth_loss(DepthDistribution(logits),
                                          target, cfg)
    numeric = numerical_gradient(
        lambda z: patched_relative_depth_loss(DepthDistribution(z),
                                              target, cfg)[0],
        logits)
    return relative_error(grad, numeric)


SUITES = (
    ('absolute_depth_loss', check_absolute_depth_loss),
    ('relative_depth_loss', check_relative_depth_loss),
    ('relative_depth_l1_loss', check_relative_depth_l1_loss),
    ('patched_relative_depth_loss', check_patched_relative_depth_loss),
)


def run_suites(instances=DEFAULT_INSTANCES, seed=0,
               tolerance=DEFAULT_TOLERANCE):
    """
    Run every finite-difference suite on ``instances`` random problems.

    :returns: list of GradcheckResult, one per suite.
    """
    if int(instances) != instances or instances < 1:
        raise InvalidConfig("gradcheck needs at least 1 instance, got %r"
                            % (instances,))
    results = []
    for offset, (name, check) in enumerate(SUITES):
        rng = np.random.default_rng([seed, offset])
        worst = max(check(rng) for _ in range(instances))
        result = GradcheckResult(name, instances, worst, tolerance)
        log.info("gradcheck %s: max rel. error %.3e (%s)", name, worst,
                 'pass' if result.passed else 'FAIL')
        results.append(result)
    return results
