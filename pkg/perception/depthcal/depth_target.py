# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.

import logging
from dataclasses import dataclass

import numpy as np

from perception.depthcal.exceptions import InvalidConfig, ShapeMismatch
from perception.depthcal.geometry import project_points

log = logging.getLogger(__name__)

DEFAULT_NUM_BINS = 118
# Bin value stored at pixels that no point reached.
UNSET_BIN = 0


@dataclass(frozen=True)
class DepthBins:
    """
    Integer-meter depth hypotheses; bin ``c`` stands for ``c`` meters,
    ``1 <= c <= num_bins``.
    """
    num_bins: int = DEFAULT_NUM_BINS

    def __post_init__(self):
        if int(self.num_bins) != self.num_bins or self.num_bins < 2:
            raise InvalidConfig("num_bins must be an integer >= 2, got %r"
                                % (self.num_bins,))

    @property
    def values(self):
        """Depth in meters of every bin, shape (num_bins,)."""
        return np.arange(1, self.num_bins + 1, dtype=np.float64)

    def bin_of(self, depth):
        """
        Round depths to the nearest bin. Returns UNSET_BIN where the
        depth falls outside ``[0.5, num_bins + 0.5)``.
        """
        depth = np.asarray(depth, dtype=np.float64)
        keep = (depth >= 0.5) & (depth < self.num_bins + 0.5)
        bins = np.clip(np.floor(depth + 0.5), 1, self.num_bins)
        return np.where(keep, bins, UNSET_BIN).astype(np.int64)


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ShapeMismatch("Point cloud must be N x 3, got %r"
                                % (pts.shape,))
        if not np.all(np.isfinite(pts)):
            raise ValueError("Point cloud contains non-finite points.")
        object.__setattr__(self, 'points', pts)

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class SparseDepthTarget:
    """
    Sparse categorical depth ground truth.

    ``bins[i]`` holds a bin in ``[1, num_bins]`` where ``mask[i]`` is set
    and UNSET_BIN elsewhere.
    """
    bins: np.ndarray
    mask: np.ndarray
    num_bins: int

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.int64)
        mask = np.asarray(self.mask).astype(bool)
        if bins.ndim != 2 or bins.shape != mask.shape:
            raise ShapeMismatch("bins and mask must be matching H x W maps")
        if np.any(bins[~mask] != UNSET_BIN):
            raise ValueError("Unmasked pixels must hold the unset bin.")
        if np.any((bins[mask] < 1) | (bins[mask] > self.num_bins)):
            raise ValueError("Masked bins must lie in [1, num_bins].")
        object.__setattr__(self, 'bins', bins)
        object.__setattr__(self, 'mask', mask)

    @property
    def shape(self):
        return self.bins.shape

    @property
    def count(self):
        return int(self.mask.sum())

    @classmethod
    def empty(cls, grid, num_bins=DEFAULT_NUM_BINS):
        h, w = grid
        return cls(np.zeros((h, w), dtype=np.int64),
                   np.zeros((h, w), dtype=bool), num_bins)

    def to_dict(self):
        h, w = self.shape
        return {
            'H': h,
            'W': w,
            'num_bins': int(self.num_bins),
            'bins': [int(b) for b in self.bins.reshape(-1)],
            'mask': [int(m) for m in self.mask.reshape(-1)],
        }

    @classmethod
    def from_dict(cls, data):
        h, w = int(data['H']), int(data['W'])
        bins = np.asarray(data['bins'], dtype=np.int64).reshape(h, w)
        mask = np.asarray(data['mask'], dtype=np.int64).reshape(h, w)
        return cls(bins, mask, int(data['num_bins']))


def build_sparse_depth_target(cloud, cam, bins, grid):
    """
    Project a point cloud into a camera and rasterize the nearest depth
    per feature-map cell.

    :param cloud: PointCloud in ego coordinates.
    :param cam: CameraModel.
    :param bins: DepthBins.
    :param grid: (H, W) of the feature map; cells cover the image evenly.
    :returns: SparseDepthTarget of shape (H, W).
    """
    h, w = int(grid[0]), int(grid[1])
    if h < 1 or w < 1:
        raise InvalidConfig("grid dims must be >= 1, got %r" % (grid,))
    target = SparseDepthTarget.empty((h, w), bins.num_bins)
    if len(cloud) == 0:
        return target

    uv, depth, valid = project_points(cam, cloud.points)
    uv, depth = uv[valid], depth[valid]
    cols = np.floor(uv[:, 0] * w / cam.width)
    rows = np.floor(uv[:, 1] * h / cam.height)
    inside = (cols >= 0) & (cols < w) & (rows >= 0) & (rows < h)
    in_range = (depth >= 0.5) & (depth < bins.num_bins + 0.5)
    keep = inside & in_range
    log.debug("Depth target: %d points, %d in front, %d kept",
              len(cloud), int(valid.sum()), int(keep.sum()))
    if not np.any(keep):
        return target

    cells = rows[keep].astype(np.int64) * w + cols[keep].astype(np.int64)
    depth = depth[keep]
    # Nearest point wins: order by (cell, depth), keep the first per cell.
    order = np.lexsort((depth, cells))
    cells, depth = cells[order], depth[order]
    first = np.ones(cells.shape[0], dtype=bool)
    first[1:] = cells[1:] != cells[:-1]

    flat_bins = target.bins.reshape(-1).copy()
    flat_mask = target.mask.reshape(-1).copy()
    flat_bins[cells[first]] = bins.bin_of(depth[first])
    flat_mask[cells[first]] = True
    return SparseDepthTarget(flat_bins.reshape(h, w),
                             flat_mask.reshape(h, w), bins.num_bins)


def one_hot(target, i):
    """
    One-hot probability vector of a masked pixel.

    :param target: SparseDepthTarget
    :param i: pixel index, either flat (row-major) or a (row, col) pair.
    :returns: array of length num_bins; entry ``bins[i] - 1`` is 1.
    :raises: ValueError for unmasked pixels.
    """
    if isinstance(i, tuple):
        row, col = i
    else:
        row, col = divmod(int(i), target.shape[1])
    if not target.mask[row, col]:
        raise ValueError("Pixel (%d, %d) has no depth supervision"
                         % (row, col))
    vec = np.zeros(target.num_bins, dtype=np.float64)
    vec[target.bins[row, col] - 1] = 1.0
    return vec


def one_hot_map(target):
    """Stack of one-hot vectors, H x W x num_bins, zero where unmasked."""
    h, w = target.shape
    out = np.zeros((h, w, target.num_bins), dtype=np.float64)
    rows, cols = np.nonzero(target.mask)
    out[rows, cols, target.bins[rows, cols] - 1] = 1.0
    return out
