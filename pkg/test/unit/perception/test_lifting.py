# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.

import math
import unittest

import numpy as np

from perception.depthcal.depth_target import DepthBins
from perception.depthcal.exceptions import InvalidConfig, ShapeMismatch
from perception.depthcal.geometry import CameraModel, PixelDepth, unproject
from perception.depthcal.lifting import (BevGrid, ContextFeatures,
                                         bev_cell_of, frustum_points,
                                         lift_cameras, lift_to_bev)
from perception.depthcal.losses import DepthDistribution


def _random_view(rng, h, w, num_bins, channels):
    cam = CameraModel.from_pose(
        rng.uniform(20, 80), rng.uniform(20, 80), rng.uniform(20, 44),
        rng.uniform(20, 44), rng.uniform(-math.pi, math.pi),
        (rng.uniform(-2, 2), rng.uniform(-2, 2), 1.5), (64, 64))
    pred = DepthDistribution(rng.normal(scale=2.0, size=(h, w, num_bins)))
    ctx = ContextFeatures(rng.normal(size=(h, w, channels)))
    return pred, ctx, cam


def _naive_lift(pred, ctx, cam, grid):
    h, w = pred.shape
    out = np.array(grid.features, copy=True)
    probs = pred.probs
    for i in range(h):
        for j in range(w):
            u = (j + 0.5) * cam.width / w
            v = (i + 0.5) * cam.height / h
            for c in range(1, pred.num_bins + 1):
                p = unproject(cam, PixelDepth(u, v, float(c)))
                cell = bev_cell_of(grid, p.x, p.y)
                if cell is None:
                    continue
                out[cell[0], cell[1]] += probs[i, j, c - 1] * \
                    ctx.features[i, j]
    return out


class TestBevGrid(unittest.TestCase):

    def test_defaults(self):
        grid = BevGrid()
        self.assertEqual(grid.features.shape, (128, 128, 80))
        self.assertEqual(grid.extent, (-51.2, 51.2, -51.2, 51.2))
        self.assertEqual(grid.features.sum(), 0.0)

    def test_validation(self):
        self.assertRaises(InvalidConfig, BevGrid, (1.0, 1.0, 0.0, 2.0))
        self.assertRaises(InvalidConfig, BevGrid, (0.0, 1.0, 0.0, 1.0),
                          (0, 4))
        self.assertRaises(InvalidConfig, BevGrid, (0.0, 1.0, 0.0, 1.0),
                          (4, 4), 0)
        self.assertRaises(ShapeMismatch, BevGrid, (0.0, 1.0, 0.0, 1.0),
                          (4, 4), 2, np.zeros((4, 4, 3)))

    def test_cell_edges(self):
        grid = BevGrid((-10.0, 10.0, -5.0, 5.0), (4, 2), 1)
        self.assertEqual(bev_cell_of(grid, -10.0, -5.0), (0, 0))
        self.assertEqual(bev_cell_of(grid, 9.999, 4.999), (3, 1))
        self.assertEqual(bev_cell_of(grid, -5.0, 0.0), (1, 1))
        self.assertTrue(bev_cell_of(grid, 10.0, 0.0) is None)
        self.assertTrue(bev_cell_of(grid, 0.0, 5.0) is None)
        self.assertTrue(bev_cell_of(grid, -10.001, 0.0) is None)

    def test_occupancy(self):
        grid = BevGrid((0.0, 2.0, 0.0, 2.0), (2, 2), 2)
        grid.features[0, 1] = [3.0, 4.0]
        occ = grid.occupancy()
        self.assertEqual(occ['occupied_cells'], 1)
        self.assertEqual(occ['total_cells'], 4)
        self.assertEqual(occ['occupied_fraction'], 0.25)
        self.assertEqual(occ['total_mass'], 7.0)
        self.assertEqual(occ['max_cell_norm'], 5.0)

    def test_header(self):
        grid = BevGrid((0.0, 2.0, -1.0, 1.0), (3, 5), 7)
        self.assertEqual(grid.header(), {'extent': [0.0, 2.0, -1.0, 1.0],
                                         'rows': 3, 'cols': 5,
                                         'channels': 7})


class TestFrustum(unittest.TestCase):

    def test_shape_and_order(self):
        cam = CameraModel.from_pose(32.0, 32.0, 32.0, 32.0, 0.0,
                                    (0.0, 0.0, 0.0), (64, 64))
        pts = frustum_points(cam, (2, 3), 4)
        self.assertEqual(pts.shape, (2 * 3 * 4, 3))
        # First pixel, bins 1..4 along one ray: ego x grows with depth.
        np.testing.assert_allclose(pts[:4, 0], [1.0, 2.0, 3.0, 4.0])


class TestLiftToBev(unittest.TestCase):

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            h, w = int(rng.integers(1, 9)), int(rng.integers(1, 9))
            num_bins = int(rng.integers(2, 17))
            pred, ctx, cam = _random_view(rng, h, w, num_bins, 3)
            grid = BevGrid((-12.0, 12.0, -10.0, 10.0), (9, 7), 3)
            lifted = lift_to_bev(pred, ctx, cam, DepthBins(num_bins), grid)
            np.testing.assert_allclose(lifted.features,
                                       _naive_lift(pred, ctx, cam, grid),
                                       rtol=0, atol=1e-9)

    def test_mass_conservation(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            pred, ctx, cam = _random_view(rng, 6, 5, 16, 4)
            grid = BevGrid((-1e3, 1e3, -1e3, 1e3), (16, 16), 4)
            lifted = lift_to_bev(pred, ctx, cam, DepthBins(16), grid)
            np.testing.assert_allclose(lifted.features.sum(axis=(0, 1)),
                                       ctx.features.sum(axis=(0, 1)),
                                       rtol=0, atol=1e-9)

    def test_camera_additivity(self):
        rng = np.random.default_rng(2)
        grid = BevGrid((-20.0, 20.0, -20.0, 20.0), (12, 12), 2)
        bins = DepthBins(12)
        v1 = _random_view(rng, 5, 5, 12, 2)
        v2 = _random_view(rng, 5, 5, 12, 2)
        both = lift_cameras([v1, v2], bins, grid)
        separate = (lift_to_bev(*v1, bins=bins, grid=grid).features +
                    lift_to_bev(*v2, bins=bins, grid=grid).features)
        np.testing.assert_allclose(both.features, separate, rtol=0,
                                   atol=1e-9)

    def test_linear_in_context(self):
        rng = np.random.default_rng(3)
        pred, ctx, cam = _random_view(rng, 4, 4, 8, 2)
        grid = BevGrid((-20.0, 20.0, -20.0, 20.0), (8, 8), 2)
        once = lift_to_bev(pred, ctx, cam, DepthBins(8), grid)
        twice = lift_to_bev(pred, ContextFeatures(2.5 * ctx.features), cam,
                            DepthBins(8), grid)
        np.testing.assert_allclose(twice.features, 2.5 * once.features,
                                   rtol=1e-12, atol=1e-12)

    def test_input_grid_untouched(self):
        rng = np.random.default_rng(4)
        pred, ctx, cam = _random_view(rng, 3, 3, 6, 2)
        grid = BevGrid((-20.0, 20.0, -20.0, 20.0), (8, 8), 2)
        lift_to_bev(pred, ctx, cam, DepthBins(6), grid)
        self.assertEqual(grid.features.sum(), 0.0)

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        pred, ctx, cam = _random_view(rng, 8, 8, 16, 4)
        grid = BevGrid((-20.0, 20.0, -20.0, 20.0), (16, 16), 4)
        a = lift_to_bev(pred, ctx, cam, DepthBins(16), grid)
        b = lift_to_bev(pred, ctx, cam, DepthBins(16), grid)
        self.assertTrue(np.array_equal(a.features, b.features))

    def test_shape_checks(self):
        rng = np.random.default_rng(6)
        pred, ctx, cam = _random_view(rng, 3, 3, 6, 2)
        grid = BevGrid((-20.0, 20.0, -20.0, 20.0), (8, 8), 2)
        other_ctx = ContextFeatures(np.zeros((3, 4, 2)))
        self.assertRaises(ShapeMismatch, lift_to_bev, pred, other_ctx, cam,
                          DepthBins(6), grid)
        self.assertRaises(ShapeMismatch, lift_to_bev, pred, ctx, cam,
                          DepthBins(7), grid)
        self.assertRaises(ShapeMismatch, lift_to_bev, pred, ctx, cam,
                          DepthBins(6), BevGrid(grid.extent, (8, 8), 3))

    def test_context_validation(self):
        self.assertRaises(ShapeMismatch, ContextFeatures, np.zeros((3, 3)))
        bad = np.zeros((1, 1, 1))
        bad[0, 0, 0] = np.inf
        self.assertRaises(ValueError, ContextFeatures, bad)
