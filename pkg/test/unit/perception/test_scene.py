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
from mock import patch

from perception.depthcal.denoise import NoiseConfig
from perception.depthcal.depth_target import SparseDepthTarget
from perception.depthcal.exceptions import InvalidConfig, PipelineStageError
from perception.depthcal.lifting import BevGrid
from perception.depthcal.losses import LossWeights, PatchConfig, total_loss
from perception.depthcal.scene import (PredictionMode, SceneSpec,
                                       fabricate_prediction, run_pipeline,
                                       sweep, synthesize_scene)

NO_NOISE = NoiseConfig(delta_d=0.0, delta_s=0.0, delta_l=0.0)


def _small_spec(seed=0, **kwargs):
    kwargs.setdefault('grid', (16, 16))
    kwargs.setdefault('points_per_box', 100)
    kwargs.setdefault('ground_points', 500)
    return SceneSpec(seed=seed, **kwargs)


def _small_bev():
    return BevGrid((-20.0, 20.0, -20.0, 20.0), (16, 16), 4)


class TestSceneSpec(unittest.TestCase):

    def test_defaults(self):
        spec = SceneSpec()
        self.assertEqual(spec.num_boxes, 5)
        self.assertEqual(len(spec.cameras), 2)
        self.assertEqual(spec.grid, (64, 64))
        self.assertEqual(spec.num_bins, 118)

    def test_validation(self):
        self.assertRaises(InvalidConfig, SceneSpec, x_range=(5.0, -5.0))
        self.assertRaises(InvalidConfig, SceneSpec, w_range=(0.0, 1.0))
        self.assertRaises(InvalidConfig, SceneSpec, num_boxes=-1)
        self.assertRaises(InvalidConfig, SceneSpec, ground_points=-3)
        self.assertRaises(InvalidConfig, SceneSpec, grid=(0, 8))
        self.assertRaises(InvalidConfig, SceneSpec, num_bins=1)
        self.assertRaises(InvalidConfig, SceneSpec, categories=[])

    def test_dict_round_trip(self):
        spec = _small_spec(seed=9, num_boxes=3)
        back = SceneSpec.from_dict(spec.to_dict())
        self.assertEqual(back.to_dict(), spec.to_dict())

    def test_unknown_keys(self):
        self.assertRaises(InvalidConfig, SceneSpec.from_dict, {'boxes': 3})


class TestSynthesizeScene(unittest.TestCase):

    def test_empty_scene(self):
        cloud, targets = synthesize_scene(
            SceneSpec(num_boxes=0, ground_points=0))
        self.assertEqual(len(cloud), 0)
        self.assertEqual(targets, [])

    def test_deterministic(self):
        a_cloud, a_targets = synthesize_scene(_small_spec(seed=3))
        b_cloud, b_targets = synthesize_scene(_small_spec(seed=3))
        self.assertTrue(np.array_equal(a_cloud.points, b_cloud.points))
        self.assertEqual(a_targets, b_targets)
        c_cloud, _ = synthesize_scene(_small_spec(seed=4))
        self.assertFalse(np.array_equal(a_cloud.points, c_cloud.points))

    def test_boxes_in_ranges(self):
        spec = _small_spec(seed=5, num_boxes=20)
        _, targets = synthesize_scene(spec)
        self.assertEqual(len(targets), 20)
        for t in targets:
            w, l, h = t.box.size
            self.assertTrue(spec.x_range[0] <= t.box.center.x <=
                            spec.x_range[1])
            self.assertTrue(spec.y_range[0] <= t.box.center.y <=
                            spec.y_range[1])
            self.assertTrue(spec.w_range[0] <= w <= spec.w_range[1])
            self.assertTrue(spec.h_range[0] <= h <= spec.h_range[1])
            self.assertEqual(t.box.center.z, h / 2.0)
            self.assertTrue(0 <= t.class_label < len(spec.categories))

    def test_surface_points_on_their_box(self):
        spec = _small_spec(seed=6, num_boxes=8, points_per_box=200)
        cloud, targets = synthesize_scene(spec)
        self.assertEqual(len(cloud), 8 * 200 + spec.ground_points)
        for i, t in enumerate(targets):
            pts = cloud.points[i * 200:(i + 1) * 200]
            offset = np.abs(pts - t.box.center.as_array())
            half = np.array(t.box.size) / 2.0
            self.assertTrue(np.all(offset <= half + 1e-9))
            gap = np.min(np.abs(offset - half), axis=1)
            self.assertTrue(np.all(gap <= 1e-9))

    def test_ground_points(self):
        spec = _small_spec(seed=7, num_boxes=2)
        cloud, _ = synthesize_scene(spec)
        ground = cloud.points[2 * spec.points_per_box:]
        self.assertTrue(np.all(ground[:, 2] == 0.0))

    def test_projection_needs_cameras(self):
        spec = _small_spec(cameras=[])
        self.assertRaises(InvalidConfig, synthesize_scene, spec, True)
        # Fine without projection.
        synthesize_scene(spec)


class TestFabricatePrediction(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(0)
        mask = rng.random((6, 6)) < 0.5
        bins = np.where(mask, rng.integers(1, 41, size=(6, 6)), 0)
        self.target = SparseDepthTarget(bins, mask, 40)

    def test_oracle(self):
        pred = fabricate_prediction(self.target, PredictionMode('oracle'),
                                    np.random.default_rng(1))
        m = self.target.mask
        np.testing.assert_array_equal(
            np.argmax(pred.logits, axis=2)[m] + 1, self.target.bins[m])

    def test_uniform(self):
        pred = fabricate_prediction(self.target, PredictionMode('uniform'),
                                    np.random.default_rng(1))
        self.assertTrue(np.all(pred.logits == 0.0))

    def test_noisy_zero_sigma_is_oracle(self):
        a = fabricate_prediction(self.target, PredictionMode('noisy', 0.0),
                                 np.random.default_rng(1))
        b = fabricate_prediction(self.target, PredictionMode('oracle'),
                                 np.random.default_rng(1))
        self.assertTrue(np.array_equal(a.logits, b.logits))

    def test_noisy_stays_in_range(self):
        pred = fabricate_prediction(self.target,
                                    PredictionMode('noisy', 50.0),
                                    np.random.default_rng(2))
        peak = np.argmax(pred.logits, axis=2) + 1
        self.assertTrue(np.all((peak >= 1) & (peak <= 40)))

    def test_mode_validation(self):
        self.assertRaises(InvalidConfig, PredictionMode, 'perfect')
        self.assertRaises(InvalidConfig, PredictionMode, 'noisy', -1.0)
        self.assertEqual(PredictionMode('noisy', 2.0).label(), 'noisy(2)')


class TestRunPipeline(unittest.TestCase):

    def _run(self, spec=None, **kwargs):
        kwargs.setdefault('bev', _small_bev())
        kwargs.setdefault('gradcheck_instances', 1)
        return run_pipeline(spec or _small_spec(), **kwargs)

    def test_oracle_without_noise(self):
        report = self._run(mode=PredictionMode('oracle'), noise_cfg=NO_NOISE)
        self.assertLess(report.losses.adl, 1e-9)
        self.assertLess(report.losses.rdl, 1e-6)
        self.assertEqual(report.losses.rcl, 0.0)
        self.assertLess(report.losses.det, 1e-12)
        self.assertTrue(report.det_placeholder)
        self.assertTrue(report.gradcheck_passed)

    def test_uniform(self):
        report = self._run(mode=PredictionMode('uniform'))
        self.assertAlmostEqual(report.losses.adl, math.log(118),
                               delta=1e-12)

    def test_total_is_weighted_sum(self):
        weights = LossWeights(alpha=0.3, beta=0.7)
        report = self._run(mode=PredictionMode('noisy', 2.0),
                           weights=weights)
        losses = report.losses
        self.assertEqual(losses.total,
                         total_loss(losses.adl, losses.det, losses.rdl,
                                    losses.rcl, weights))
        self.assertEqual((losses.alpha, losses.beta), (0.3, 0.7))

    def test_report_is_deterministic(self):
        a = self._run(mode=PredictionMode('noisy', 1.0)).to_dict()
        b = self._run(mode=PredictionMode('noisy', 1.0)).to_dict()
        self.assertEqual(a, b)

    def test_timings_kept_out_by_default(self):
        report = self._run()
        self.assertFalse('timings' in report.to_dict())
        timed = report.to_dict(include_timings=True)
        self.assertEqual(sorted(timed['timings']),
                         sorted(['synthesize', 'depth_target', 'prediction',
                                 'depth_losses', 'gradcheck', 'denoise',
                                 'lifting', 'report']))

    def test_report_contents(self):
        spec = _small_spec(num_boxes=4)
        report = self._run(spec, noise_cfg=NoiseConfig(groups=3))
        data = report.to_dict()
        self.assertEqual(data['supervision']['anchors'], [4, 12])
        self.assertEqual(len(data['supervision']['masked_pixels']), 2)
        self.assertEqual(data['anchors']['count'], 12)
        self.assertEqual(data['bev']['total_cells'], 256)
        self.assertEqual(len(data['gradcheck']), 4)

    def test_stage_attribution(self):
        cfg = PatchConfig(patch_size=20)
        try:
            self._run(patch_cfg=cfg)
        except PipelineStageError as err:
            self.assertEqual(err.stage, 'depth_losses')
            self.assertTrue(isinstance(err.cause, InvalidConfig))
        else:
            self.fail("Expected PipelineStageError exception.")

    def test_stage_attribution_with_failing_collaborator(self):
        with patch('perception.depthcal.scene.build_sparse_depth_target',
                   side_effect=ValueError("boom")):
            try:
                self._run()
            except PipelineStageError as err:
                self.assertEqual(err.stage, 'depth_target')
                self.assertEqual(str(err), 'Stage "depth_target" failed: '
                                           'boom')
            else:
                self.fail("Expected PipelineStageError exception.")

    def test_without_lifting(self):
        report = self._run(with_lifting=False, gradcheck_instances=0)
        self.assertEqual(report.bev, {})
        self.assertEqual(report.gradcheck, [])


class TestSweep(unittest.TestCase):

    def test_rows(self):
        rows = sweep(_small_spec(), PredictionMode('noisy', 1.0),
                     temperatures=(4.0, 16.0), patch_sizes=(5, 7))
        self.assertEqual([(r['patch_size'], r['temperature']) for r in rows],
                         [(5, 4.0), (5, 16.0), (7, 4.0), (7, 16.0)])
        adl = set(r['adl'] for r in rows)
        self.assertEqual(len(adl), 1)

    def test_criterion_and_window(self):
        spec = _small_spec()
        mode = PredictionMode('noisy', 2.0)
        kl = sweep(spec, mode, temperatures=(8.0,), patch_sizes=(5,))
        l1 = sweep(spec, mode, temperatures=(8.0,), patch_sizes=(5,),
                   criterion='l1')
        glob = sweep(spec, mode, temperatures=(8.0,), patch_sizes=(5,),
                     window='global')
        self.assertEqual((kl[0]['criterion'], kl[0]['window']),
                         ('kl', 'sliding'))
        self.assertEqual(l1[0]['criterion'], 'l1')
        self.assertEqual(glob[0]['window'], 'global')
        self.assertEqual(l1[0]['adl'], kl[0]['adl'])
        self.assertNotEqual(l1[0]['rdl'], kl[0]['rdl'])

    def test_bad_criterion(self):
        self.assertRaises(InvalidConfig, sweep, _small_spec(),
                          temperatures=(8.0,), patch_sizes=(5,),
                          criterion='l2')
