# Copyright (c) 2026 The depthcal authors.
#
# This file is part of the depthcal project.
#
# This file is licensed to you under your choice of the GNU Lesser
# General Public License, version 3 or any later version (LGPLv3 or
# later), or the GNU General Public License, version 2 (GPLv2), in all
# cases as published by the Free Software Foundation.

"""
Pinhole camera model, ego-frame points and axis-aligned boxes.

Frames: ego is x forward, y left, z up. Camera is x right, y down,
z along the optical axis. A camera maps ego points to pixels through
``K (R p + t)``, so depth is the camera-frame z coordinate.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from perception.depthcal.exceptions import InvalidCamera

# Camera-frame depth at or below this is "on or behind the image plane".
MIN_DEPTH = 1e-9
ORTHONORMAL_TOL = 1e-9


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise ValueError("Point3 components must be finite: %r" % (self,))

    def as_array(self):
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @classmethod
    def from_array(cls, arr):
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))


@dataclass(frozen=True)
class PixelDepth:
    u: float
    v: float
    d: float


@dataclass(frozen=True)
class Box3:
    """
    Axis-aligned 3D box in ego coordinates. ``w`` spans ego x, ``l``
    spans ego y and ``h`` spans ego z.
    """
    center: Point3
    size: Tuple[float, float, float]

    def __post_init__(self):
        if len(self.size) != 3 or not all(s > 0 for s in self.size):
            raise ValueError("Box3 size must be three positive values, "
                             "got %r" % (self.size,))

    def as_vector(self):
        """Return the box as ``[x, y, z, w, l, h]``."""
        return np.array([self.center.x, self.center.y, self.center.z,
                         self.size[0], self.size[1], self.size[2]],
                        dtype=np.float64)

    @classmethod
    def from_vector(cls, vec):
        vec = [float(v) for v in vec]
        if len(vec) != 6:
            raise ValueError("Box vector needs 6 entries, got %d" % len(vec))
        return cls(Point3(vec[0], vec[1], vec[2]),
                   (vec[3], vec[4], vec[5]))

    @property
    def volume(self):
        return self.size[0] * self.size[1] * self.size[2]


@dataclass(frozen=True, eq=False)
class CameraModel:
    """
    Intrinsics plus a rigid ego->camera transform.

    :param intrinsics: 3x3 upper-triangular matrix, pixels.
    :param rotation: 3x3 orthonormal rotation, ego->camera.
    :param translation: 3-vector in meters, ego->camera.
    :param image_size: (height_px, width_px).
    """
    intrinsics: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray
    image_size: Tuple[int, int]

    def __post_init__(self):
        k = np.asarray(self.intrinsics, dtype=np.float64)
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(-1)
        if k.shape != (3, 3) or r.shape != (3, 3) or t.shape != (3,):
            raise InvalidCamera("Camera needs 3x3 intrinsics, 3x3 rotation "
                                "and a 3-vector translation.")
        if not (np.all(np.isfinite(k)) and np.all(np.isfinite(r)) and
                np.all(np.isfinite(t))):
            raise InvalidCamera("Camera parameters must be finite.")
        if k[1, 0] != 0 or k[2, 0] != 0 or k[2, 1] != 0:
            raise InvalidCamera("Intrinsics must be upper-triangular.")
        if k[0, 0] <= 0 or k[1, 1] <= 0:
            raise InvalidCamera("Focal lengths must be strictly positive.")
        if k[2, 2] != 1:
            raise InvalidCamera("Intrinsics bottom row must be (0, 0, 1).")
        if np.max(np.abs(r.T.dot(r) - np.eye(3))) > ORTHONORMAL_TOL:
            raise InvalidCamera("Rotation block is not orthonormal.")
        size = tuple(int(s) for s in self.image_size)
        if len(size) != 2 or size[0] < 1 or size[1] < 1:
            raise InvalidCamera("image_size must be (height, width) >= 1.")
        # Frozen dataclass; normalise the stored arrays in place.
        object.__setattr__(self, 'intrinsics', k)
        object.__setattr__(self, 'rotation', r)
        object.__setattr__(self, 'translation', t)
        object.__setattr__(self, 'image_size', size)
        object.__setattr__(self, '_k_inv', np.linalg.inv(k))

    @classmethod
    def identity(cls, image_size=(1, 1)):
        return cls(np.eye(3), np.eye(3), np.zeros(3), image_size)

    @classmethod
    def from_pose(cls, fx, fy, cx, cy, yaw=0.0, position=(0.0, 0.0, 0.0),
                  image_size=(256, 256)):
        """
        Build a level camera at ``position`` (ego meters) whose optical
        axis points along ego heading ``yaw`` (radians, 0 = ego +x).
        """
        c, s = math.cos(yaw), math.sin(yaw)
        rotation = np.array([[s, -c, 0.0],
                             [0.0, 0.0, -1.0],
                             [c, s, 0.0]])
        intrinsics = np.array([[fx, 0.0, cx],
                               [0.0, fy, cy],
                               [0.0, 0.0, 1.0]])
        translation = -rotation.dot(np.asarray(position, dtype=np.float64))
        return cls(intrinsics, rotation, translation, image_size)

    @property
    def height(self):
        return self.image_size[0]

    @property
    def width(self):
        return self.image_size[1]

    @property
    def center(self):
        """Optical center in ego coordinates."""
        return Point3.from_array(-self.rotation.T.dot(self.translation))

    def to_camera_frame(self, points):
        """Map ego points (N x 3) into the camera frame."""
        return points.dot(self.rotation.T) + self.translation

    def to_ego_frame(self, points):
        """Map camera-frame points (N x 3) into the ego frame."""
        return (points - self.translation).dot(self.rotation)


def project_points(cam, points):
    """
    Vectorized projection of ego points.

    :param cam: CameraModel
    :param points: array of shape (N, 3), ego meters.
    :returns: tuple (uv, depth, valid) with shapes (N, 2), (N,), (N,).
              uv and depth are NaN where valid is False.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    cam_pts = cam.to_camera_frame(points)
    depth = cam_pts[:, 2]
    valid = depth > MIN_DEPTH
    uv = np.full((points.shape[0], 2), np.nan)
    out_depth = np.full(points.shape[0], np.nan)
    if np.any(valid):
        rays = cam_pts[valid] / depth[valid, None]
        pix = rays.dot(cam.intrinsics.T)
        uv[valid] = pix[:, :2]
        out_depth[valid] = depth[valid]
    return uv, out_depth, valid


def unproject_points(cam, uv, depth, camera_frame=False):
    """
    Vectorized inverse of :func:`project_points`.

    :param cam: CameraModel
    :param uv: array (N, 2) of pixel coordinates.
    :param depth: array (N,) of strictly positive depths in meters.
    :param camera_frame: when True, stop in the camera frame instead of
                         transforming back to ego coordinates.
    :returns: array (N, 3).
    """
    uv = np.asarray(uv, dtype=np.float64).reshape(-1, 2)
    depth = np.asarray(depth, dtype=np.float64).reshape(-1)
    if uv.shape[0] != depth.shape[0]:
        raise ValueError("uv and depth lengths differ")
    if np.any(depth <= 0):
        raise ValueError("Depth must be > 0 to unproject")
    homog = np.column_stack([uv, np.ones(uv.shape[0])])
    cam_pts = homog.dot(cam._k_inv.T) * depth[:, None]
    if camera_frame:
        return cam_pts
    return cam.to_ego_frame(cam_pts)


def project(cam, p) -> Optional[PixelDepth]:
    """
    Project an ego point to pixel coordinates and depth.

    Returns None when the point is on or behind the image plane. The
    returned pixel may lie outside the image; callers filter.
    """
    uv, depth, valid = project_points(cam, p.as_array()[None, :])
    if not valid[0]:
        return None
    return PixelDepth(float(uv[0, 0]), float(uv[0, 1]), float(depth[0]))


def unproject(cam, pd):
    """
    Lift a pixel and depth back to an ego point.

    :raises: ValueError if ``pd.d <= 0``
    """
    if not pd.d > 0:
        raise ValueError("Depth must be > 0 to unproject, got %r" % (pd.d,))
    pts = unproject_points(cam, [[pd.u, pd.v]], [pd.d])
    return Point3.from_array(pts[0])


def unproject_camera_frame(cam, pd):
    """
    Lift a pixel and depth into the camera frame. Scaling ``d`` by
    ``sigma`` scales the result by exactly ``sigma``.
    """
    if not pd.d > 0:
        raise ValueError("Depth must be > 0 to unproject, got %r" % (pd.d,))
    pts = unproject_points(cam, [[pd.u, pd.v]], [pd.d], camera_frame=True)
    return Point3.from_array(pts[0])


def box_corners(b):
    """
    Return the 8 corners of an axis-aligned box as a list of Point3,
    ordered by the sign pattern (-,-,-), (-,-,+), ... (+,+,+).
    """
    return [Point3.from_array(c) for c in box_corner_array(b)]


def box_corner_array(b):
    center = b.center.as_array()
    half = np.asarray(b.size, dtype=np.float64) / 2.0
    signs = np.array([[sx, sy, sz]
                      for sx in (-1.0, 1.0)
                      for sy in (-1.0, 1.0)
                      for sz in (-1.0, 1.0)])
    return center + signs * half
