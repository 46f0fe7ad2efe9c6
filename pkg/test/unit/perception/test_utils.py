# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.

import logging
import os
import tempfile
import unittest

import numpy as np

from perception.depthcal import utils
from perception.depthcal.denoise import (apply_depth_noise,
                                         apply_location_noise,
                                         apply_scale_noise)
from perception.depthcal.depth_target import SparseDepthTarget
from perception.depthcal.exceptions import NonFiniteInput
from perception.depthcal.geometry import Box3, Point3
from perception.depthcal.losses import DepthDistribution, absolute_depth_loss


class TestUtils(unittest.TestCase):

    def test_validate_factor(self):

        @utils.validate_factor
        def scale(value, factor):
            return value * factor

        self.assertEqual(scale(2.0, 1.5), 3.0)
        try:
            scale(2.0, 0.0)
        except ValueError as err:
            self.assertEqual(str(err), "Noise factor must be > 0, got 0.0")
        else:
            self.fail("Expected ValueError exception.")
        self.assertRaises(ValueError, scale, 2.0, -1.0)
        self.assertEqual(scale.__wrapped__.__name__, 'scale')

    def test_validate_finite_logits(self):

        class _FakeDistribution(object):

            def __init__(self, logits):
                self.logits = logits

            @utils.validate_finite_logits
            def test_method(self):
                return

        d = _FakeDistribution(np.array([[[0.0, np.nan]]]))
        self.assertRaises(NonFiniteInput, d.test_method)
        d.logits = np.array([[[0.0, np.inf]]])
        self.assertRaises(NonFiniteInput, d.test_method)

        d.logits = np.zeros((1, 1, 2))
        # Shouldn't raise exception.
        d.test_method()

    def test_validate_factor_keyword_call(self):

        @utils.validate_factor
        def scale(value, factor=1.0):
            return value * factor

        self.assertEqual(scale(2.0, factor=1.5), 3.0)
        self.assertEqual(scale(value=2.0, factor=1.5), 3.0)
        self.assertEqual(scale(2.0), 2.0)
        self.assertRaises(ValueError, scale, 2.0, factor=0.0)
        self.assertRaises(ValueError, scale, value=2.0, factor=-1.0)
        self.assertRaises(TypeError, scale, 2.0, 1.5, factor=1.5)

    def test_validate_finite_logits_keyword_call(self):

        class _FakeDistribution(object):

            def __init__(self, logits):
                self.logits = logits

        @utils.validate_finite_logits
        def peak(pred, scale=1.0):
            return scale * float(pred.logits.max())

        self.assertEqual(peak(pred=_FakeDistribution(np.ones((1, 1, 2))),
                              scale=2.0), 2.0)
        self.assertRaises(NonFiniteInput, peak,
                          pred=_FakeDistribution(np.array([[[np.nan]]])))

    def test_keyword_calls_of_public_operations(self):
        box = Box3(Point3(10.0, -4.0, 1.0), (4.0, 2.0, 1.5))
        np.testing.assert_array_equal(
            apply_depth_noise(box, sigma_d=2.0).as_vector(),
            2.0 * box.as_vector())
        self.assertEqual(apply_scale_noise(b=box, sigma_s=1.1).size,
                         apply_scale_noise(box, 1.1).size)
        self.assertRaises(ValueError, apply_location_noise, box,
                          sigma_l=0.0)

        pred = DepthDistribution(np.zeros((2, 2, 4)))
        target = SparseDepthTarget(np.array([[1, 0], [0, 4]]),
                                   np.array([[True, False], [False, True]]),
                                   4)
        loss, grad = absolute_depth_loss(pred=pred, target=target)
        self.assertAlmostEqual(loss, np.log(4.0))
        self.assertEqual(grad.shape, (2, 2, 4))


class TestSetLogging(unittest.TestCase):

    def tearDown(self):
        utils.disable_logging()

    def test_dev_null_installs_null_handler(self):
        logger = utils.set_logging("/dev/null")
        self.assertEqual(len(logger.handlers), 1)
        self.assertTrue(isinstance(logger.handlers[0], logging.NullHandler))

    def test_default_is_stderr(self):
        logger = utils.set_logging(None, "info")
        self.assertTrue(isinstance(logger.handlers[0],
                                   logging.StreamHandler))
        self.assertEqual(logger.level, logging.INFO)
        self.assertFalse(logger.propagate)

    def test_log_file(self):
        fd, path = tempfile.mkstemp(suffix='.log')
        os.close(fd)
        try:
            utils.set_logging(path, logging.DEBUG)
            logging.getLogger('perception.depthcal.losses').debug("hello")
            utils.disable_logging()
            with open(path) as f:
                self.assertTrue("hello" in f.read())
        finally:
            os.remove(path)

    def test_repeated_calls_replace_handler(self):
        utils.set_logging(None)
        logger = utils.set_logging("/dev/null")
        self.assertEqual(len(logger.handlers), 1)

    def test_unknown_level(self):
        self.assertRaises(ValueError, utils.set_logging, None, "LOUD")
