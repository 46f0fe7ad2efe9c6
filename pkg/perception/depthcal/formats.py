# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.

"""
File formats used by the command-line tools.

JSON documents are written with sorted keys so that equal inputs give
byte-identical files.
"""

import json
import os
import sys

import numpy as np

from perception.depthcal.denoise import DetectionTarget, NoisedAnchor
from perception.depthcal.depth_target import PointCloud, SparseDepthTarget
from perception.depthcal.exceptions import FormatError
from perception.depthcal.geometry import CameraModel
from perception.depthcal.lifting import BevGrid

BEV_DTYPE = '<f8'
BEV_SIDECAR_SUFFIX = '.bin'


def dumps_json(data):
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def write_text(path, text):
    """Write ``text`` to ``path``; "-" means stdout."""
    if path in (None, '-'):
        sys.stdout.write(text)
        return
    with open(path, 'w') as f:
        f.write(text)


def write_json(path, data):
    write_text(path, dumps_json(data))


def read_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except ValueError as err:
        raise FormatError("%s is not valid JSON: %s" % (path, err))


def camera_to_dict(cam):
    return {
        'intrinsics': cam.intrinsics.tolist(),
        'rotation': cam.rotation.tolist(),
        'translation': cam.translation.tolist(),
        'image_size': list(cam.image_size),
    }


def camera_from_dict(data):
    try:
        return CameraModel(np.asarray(data['intrinsics']),
                           np.asarray(data['rotation']),
                           np.asarray(data['translation']),
                           tuple(data['image_size']))
    except KeyError as err:
        raise FormatError("Camera entry is missing %s" % (err,))


def point_cloud_from_dict(data):
    try:
        return PointCloud(np.asarray(data['points'], dtype=np.float64))
    except KeyError:
        raise FormatError("Point cloud document needs a 'points' list")


def point_cloud_to_dict(cloud):
    return {'points': cloud.points.tolist()}


def target_from_dict(data):
    try:
        return SparseDepthTarget.from_dict(data)
    except KeyError as err:
        raise FormatError("Depth target is missing %s" % (err,))


def detection_targets_from_dict(data):
    try:
        return [DetectionTarget.from_dict(t) for t in data['targets']]
    except KeyError as err:
        raise FormatError("Detection targets are missing %s" % (err,))


def detection_targets_to_dict(targets):
    return {'targets': [t.to_dict() for t in targets]}


def dumps_anchors(anchors):
    """One JSON object per line."""
    return ''.join(json.dumps(a.to_dict(), sort_keys=True) + "\n"
                   for a in anchors)


def read_anchors(path):
    anchors = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                anchors.append(NoisedAnchor.from_dict(json.loads(line)))
            except (ValueError, KeyError) as err:
                raise FormatError("%s:%d: bad anchor record: %s"
                                  % (path, lineno, err))
    return anchors


def load_array(path):
    """Load a float64 array from a .npy file."""
    try:
        return np.load(path, allow_pickle=False).astype(np.float64)
    except (ValueError, OSError) as err:
        raise FormatError("Cannot read array from %s: %s" % (path, err))


def bev_sidecar_path(path):
    return os.path.splitext(path)[0] + BEV_SIDECAR_SUFFIX


def write_bev(path, grid):
    """
    Write the JSON header to ``path`` and the row-major little-endian
    float64 payload to the sidecar file next to it.
    """
    sidecar = bev_sidecar_path(path)
    header = grid.header()
    header['payload'] = os.path.basename(sidecar)
    header['dtype'] = BEV_DTYPE
    with open(sidecar, 'wb') as f:
        f.write(grid.features.astype(BEV_DTYPE).tobytes(order='C'))
    write_json(path, header)
    return sidecar


def read_bev(path):
    header = read_json(path)
    sidecar = os.path.join(os.path.dirname(path), header['payload'])
    with open(sidecar, 'rb') as f:
        payload = np.frombuffer(f.read(), dtype=header.get('dtype',
                                                           BEV_DTYPE))
    shape = (header['rows'], header['cols'], header['channels'])
    if payload.size != shape[0] * shape[1] * shape[2]:
        raise FormatError("BEV payload holds %d values, header expects %r"
                          % (payload.size, shape))
    return BevGrid(tuple(header['extent']), shape[:2], shape[2],
                   payload.reshape(shape).astype(np.float64))
