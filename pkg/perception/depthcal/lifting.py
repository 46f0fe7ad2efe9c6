# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.

"""
Depth-weighted lifting of image features into a bird's-eye-view grid.

Each pixel is unprojected at every integer depth bin; the resulting
frustum point is dropped onto the ground plane and the pixel's context
vector, weighted by the bin probability, is summed into the BEV cell.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from perception.depthcal.exceptions import InvalidConfig, ShapeMismatch
from perception.depthcal.geometry import unproject_points

log = logging.getLogger(__name__)

DEFAULT_CONTEXT_CHANNELS = 80
DEFAULT_EXTENT = (-51.2, 51.2, -51.2, 51.2)
DEFAULT_RESOLUTION = (128, 128)


@dataclass(frozen=True, eq=False)
class ContextFeatures:
    features: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 3:
            raise ShapeMismatch("Context features must be H x W x C, got %r"
                                % (feats.shape,))
        if not np.all(np.isfinite(feats)):
            raise ValueError("Context features must be finite.")
        object.__setattr__(self, 'features', feats)

    @property
    def shape(self):
        return self.features.shape[:2]

    @property
    def channels(self):
        return self.features.shape[2]


@dataclass(eq=False)
class BevGrid:
    """
    Metric ground-plane grid. Rows run along ego x, columns along ego y;
    cells are half-open, so ``x == x_max`` falls outside.
    """
    extent: Tuple[float, float, float, float] = DEFAULT_EXTENT
    resolution: Tuple[int, int] = DEFAULT_RESOLUTION
    channels: int = DEFAULT_CONTEXT_CHANNELS
    features: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        x_min, x_max, y_min, y_max = (float(e) for e in self.extent)
        rows, cols = (int(r) for r in self.resolution)
        if not (x_max > x_min and y_max > y_min):
            raise InvalidConfig("BEV extent must satisfy max > min, got %r"
                                % (self.extent,))
        if rows < 1 or cols < 1 or self.channels < 1:
            raise InvalidConfig("BEV rows, cols and channels must be >= 1")
        self.extent = (x_min, x_max, y_min, y_max)
        self.resolution = (rows, cols)
        shape = (rows, cols, int(self.channels))
        if self.features is None:
            self.features = np.zeros(shape)
        else:
            self.features = np.asarray(self.features, dtype=np.float64)
            if self.features.shape != shape:
                raise ShapeMismatch("BEV features must be %r, got %r"
                                    % (shape, self.features.shape))

    @property
    def rows(self):
        return self.resolution[0]

    @property
    def cols(self):
        return self.resolution[1]

    def empty_like(self):
        return BevGrid(self.extent, self.resolution, self.channels)

    def header(self):
        return {
            'extent': list(self.extent),
            'rows': self.rows,
            'cols': self.cols,
            'channels': int(self.channels),
        }

    def occupancy(self):
        """Summary of the filled cells."""
        norms = np.linalg.norm(self.features, axis=2)
        occupied = int(np.count_nonzero(norms))
        return {
            'occupied_cells': occupied,
            'total_cells': self.rows * self.cols,
            'occupied_fraction': occupied / float(self.rows * self.cols),
            'total_mass': float(self.features.sum()),
            'max_cell_norm': float(norms.max()),
        }


def cells_of(grid, xs, ys):
    """
    Vectorized :func:`bev_cell_of`.

    :returns: (rows, cols, valid); rows and cols are -1 where invalid.
    """
    x_min, x_max, y_min, y_max = grid.extent
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    rows = np.floor((xs - x_min) * grid.rows / (x_max - x_min))
    cols = np.floor((ys - y_min) * grid.cols / (y_max - y_min))
    valid = ((xs >= x_min) & (xs < x_max) & (ys >= y_min) & (ys < y_max) &
             (rows >= 0) & (rows < grid.rows) &
             (cols >= 0) & (cols < grid.cols))
    rows = np.where(valid, rows, -1).astype(np.int64)
    cols = np.where(valid, cols, -1).astype(np.int64)
    return rows, cols, valid


def bev_cell_of(grid, x, y):
    """
    Map an ego (x, y) position in meters to its (row, col) cell, or None
    when it lies outside the grid extent.
    """
    rows, cols, valid = cells_of(grid, [x], [y])
    if not valid[0]:
        return None
    return int(rows[0]), int(cols[0])


def frustum_points(cam, grid_shape, num_bins):
    """
    Ego-frame frustum for an H x W feature map: one point per pixel
    center and integer depth bin, shape (H * W * num_bins, 3), ordered
    pixel-major then by bin.
    """
    h, w = grid_shape
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing='ij')
    u = (cols.reshape(-1) + 0.5) * cam.width / float(w)
    v = (rows.reshape(-1) + 0.5) * cam.height / float(h)
    uv = np.repeat(np.column_stack([u, v]), num_bins, axis=0)
    depth = np.tile(np.arange(1, num_bins + 1, dtype=np.float64), h * w)
    return unproject_points(cam, uv, depth)


def lift_to_bev(pred, ctx, cam, bins, grid):
    """
    Lift one camera's context features into BEV.

    :param pred: DepthDistribution over the H x W feature map.
    :param ctx: ContextFeatures of the same H x W.
    :param cam: CameraModel.
    :param bins: DepthBins matching ``pred``.
    :param grid: BevGrid; its features are copied and accumulated into.
    :returns: new BevGrid holding ``grid.features`` plus this camera.
    """
    if tuple(pred.shape) != tuple(ctx.shape):
        raise ShapeMismatch("Depth grid %r does not match context grid %r"
                            % (tuple(pred.shape), tuple(ctx.shape)))
    if pred.num_bins != bins.num_bins:
        raise ShapeMismatch("Prediction has %d bins, expected %d"
                            % (pred.num_bins, bins.num_bins))
    if ctx.channels != grid.channels:
        raise ShapeMismatch("Context has %d channels, BEV grid %d"
                            % (ctx.channels, grid.channels))

    h, w = pred.shape
    num_bins = bins.num_bins
    points = frustum_points(cam, (h, w), num_bins)
    rows, cols, valid = cells_of(grid, points[:, 0], points[:, 1])

    weights = pred.probs.reshape(-1)[valid]
    pixel = (np.arange(h * w * num_bins) // num_bins)[valid]
    cell = rows[valid] * grid.cols + cols[valid]
    ctx_flat = ctx.features.reshape(h * w, ctx.channels)
    ncells = grid.rows * grid.cols

    # bincount sums in input order, so the result is reproducible.
    lifted = np.empty((ncells, ctx.channels))
    for ch in range(ctx.channels):
        lifted[:, ch] = np.bincount(cell,
                                    weights=weights * ctx_flat[pixel, ch],
                                    minlength=ncells)
    log.debug("Lifted %d of %d frustum points into BEV",
              int(valid.sum()), valid.shape[0])
    out = grid.empty_like()
    out.features = grid.features + lifted.reshape(grid.rows, grid.cols,
                                                  ctx.channels)
    return out


def lift_cameras(views, bins, grid):
    """
    Lift several cameras onto one grid.

    :param views: iterable of (DepthDistribution, ContextFeatures,
                  CameraModel) triples.
    :returns: BevGrid holding the sum of every camera's lift.
    """
    out = grid
    for pred, ctx, cam in views:
        out = lift_to_bev(pred, ctx, cam, bins, out)
    return out
