"""Line-scan pinhole camera model.

A line-scan camera exposes a single row of pixels, so the principal point's
second coordinate is fixed at ``v0 = 0`` and skew is neglected.  The model
keeps both sensor axes: measured data always has ``v = 0``, but reprojection
through a non-optimal extrinsic pose produces ``v != 0`` residuals, which
carry real information.

Projection follows ``s [u, v, 1]^T = P [x, y, z, 1]^T`` with
``P = K R^-1 [I | -p_c]`` for a camera at world position ``p_c`` with
rotation ``R`` (camera-to-world).  A pixel back-projects to the world-frame
ray through the camera centre and the dehomogenized minimum-norm solution
``P^+ [u, v, 1]^T``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import geom
from .errors import PointAtCameraPlaneError, SingularModelError

# singular values below this fraction of the largest are treated as zero
PINV_RCOND = 1e-12


@dataclass(frozen=True)
class Intrinsics:
    """Line-scan camera intrinsics, all in pixel units.

    ``pixel_pitch_mm`` only matters when converting a focal-length
    uncertainty quoted in millimetres into pixels; ``ifov`` (radians per
    pixel) is carried for provenance and for reasoning about the
    cross-track uncertainty.
    """

    f_px: float
    u0: float
    n_pixels: int
    ifov: float = 0.0
    pixel_pitch_mm: float = 0.0
    v0: float = 0.0

    def __post_init__(self) -> None:
        if not self.f_px > 0:
            raise ValueError("focal length must be positive")
        if not 0 <= self.u0 < self.n_pixels:
            raise ValueError("principal point must lie on the sensor")
        if self.v0 != 0.0:
            raise ValueError("line-scan model fixes v0 = 0")

    def k_matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.f_px, 0.0, self.u0],
                [0.0, self.f_px, self.v0],
                [0.0, 0.0, 1.0],
            ]
        )


class PixelPoint(NamedTuple):
    u: float
    v: float


@dataclass(frozen=True)
class Ray3:
    """A world-frame line through the camera centre ``p_c`` and ``p_s``."""

    p_c: np.ndarray
    p_s: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_c", np.asarray(self.p_c, dtype=float).reshape(3))
        object.__setattr__(self, "p_s", np.asarray(self.p_s, dtype=float).reshape(3))
        if np.linalg.norm(self.p_s - self.p_c) <= 1e-12:
            raise ValueError("ray endpoints coincide")

    @property
    def direction(self) -> np.ndarray:
        return self.p_s - self.p_c


def projection_matrix(intr: Intrinsics, cam_pose_w: geom.Pose6) -> np.ndarray:
    """3x4 projection matrix ``K R^T [I | -p_c]`` for a camera pose in world frame."""
    R = geom.axis_angle_to_rotation(cam_pose_w.rot)
    ext = np.hstack([np.eye(3), -cam_pose_w.r.reshape(3, 1)])
    return intr.k_matrix() @ R.T @ ext


def project(P: np.ndarray, p_w) -> tuple[PixelPoint, float]:
    """Project a world point; returns the pixel and the projective scale ``s``.

    ``s`` is positive for points in front of the camera; callers use it to
    detect points behind the camera (``s <= 0``).
    """
    P = np.asarray(P, dtype=float)
    p_w = np.asarray(p_w, dtype=float).reshape(3)
    h = P @ np.append(p_w, 1.0)
    s = float(h[2])
    if abs(s) < 1e-12:
        raise PointAtCameraPlaneError(
            "point projects with scale ~0 (on the camera's principal plane)"
        )
    return PixelPoint(float(h[0] / s), float(h[1] / s)), s


def back_project(P: np.ndarray, px: PixelPoint, cam_centre) -> Ray3:
    """Back-project a pixel to its world-frame ray.

    The second ray point is the dehomogenized pseudo-inverse solution
    ``P^+ [u, v, 1]^T``.  When that solution is a point at infinity (its
    homogeneous coordinate vanishes, e.g. a camera at the world origin),
    its first three components give the ray direction instead.
    """
    P = np.asarray(P, dtype=float)
    cam_centre = np.asarray(cam_centre, dtype=float).reshape(3)
    if not np.all(np.isfinite([px.u, px.v])):
        raise ValueError("pixel coordinates must be finite")
    u_svd, s_svd, vt_svd = np.linalg.svd(P)
    if s_svd[2] <= PINV_RCOND * s_svd[0]:
        raise SingularModelError("projection matrix is rank deficient")
    pinv = vt_svd.T[:, :3] @ np.diag(1.0 / s_svd) @ u_svd.T
    X = pinv @ np.array([px.u, px.v, 1.0])
    if abs(X[3]) < 1e-12 * np.linalg.norm(X):
        direction = X[:3] / np.linalg.norm(X[:3])
        return Ray3(cam_centre, cam_centre + direction)
    return Ray3(cam_centre, X[:3] / X[3])


def camera_pose_in_world(nav_pose: geom.Pose6, t_cb: geom.Pose6) -> geom.Pose6:
    """World pose of the camera given a body (navigation) pose and the
    body-to-camera extrinsic pose."""
    return geom.compose(nav_pose, t_cb)
