# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.

__version__ = '0.1'

from .geometry import Point3, PixelDepth, Box3, CameraModel
from .depth_target import DepthBins, PointCloud, SparseDepthTarget
from .losses import (DepthDistribution, PatchConfig, LossWeights,
                     LossReport)
from .denoise import NoiseConfig, DetectionTarget, NoisedAnchor
from .lifting import ContextFeatures, BevGrid
__all__ = ['Point3', 'PixelDepth', 'Box3', 'CameraModel', 'DepthBins',
           'PointCloud', 'SparseDepthTarget', 'DepthDistribution',
           'PatchConfig', 'LossWeights', 'LossReport', 'NoiseConfig',
           'DetectionTarget', 'NoisedAnchor', 'ContextFeatures', 'BevGrid']
