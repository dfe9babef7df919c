"""Rotation representations, 6-DOF pose algebra and pose-distance metrics.

Rotations are passed around in three forms:

* intrinsic z-y-x Euler angles (yaw-pitch-roll), ``EulerZYX``
* axis-angle vectors ``theta * e`` with ``|e| = 1``, stored as plain
  length-3 ndarrays (canonical magnitude in ``[0, pi]``)
* 3x3 rotation matrices, plain ndarrays

Navigation systems and hand measurements deliver Euler angles; all internal
computation uses the axis-angle form, which is free of the yaw-pitch-roll
ambiguities.  A pose is a translation plus an axis-angle rotation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

ROTATION_ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True)
class EulerZYX:
    """Intrinsic z-y-x (yaw-pitch-roll) Euler angles in radians."""

    phi_x: float
    phi_y: float
    phi_z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.phi_x, self.phi_y, self.phi_z], dtype=float)


@dataclass(frozen=True)
class UnitQuaternion:
    """Unit quaternion (w, x, y, z) = (a, b, c, d)."""

    a: float
    b: float
    c: float
    d: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d], dtype=float)


@dataclass
class Pose6:
    """A rigid transform: translation ``r`` (metres) and axis-angle ``rot``.

    Maps points from the child frame into the parent frame:
    ``p_parent = R(rot) @ p_child + r``.
    """

    r: np.ndarray
    rot: np.ndarray

    def __post_init__(self) -> None:
        self.r = np.asarray(self.r, dtype=float).reshape(3).copy()
        self.rot = np.asarray(self.rot, dtype=float).reshape(3).copy()
        if not (np.all(np.isfinite(self.r)) and np.all(np.isfinite(self.rot))):
            raise ValueError("pose components must be finite")

    @classmethod
    def identity(cls) -> "Pose6":
        return cls(np.zeros(3), np.zeros(3))

    @classmethod
    def from_vector(cls, v) -> "Pose6":
        v = np.asarray(v, dtype=float).reshape(6)
        return cls(v[:3], v[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.r, self.rot])


class PoseDistance(NamedTuple):
    """Two-component distance between poses: metres and radians."""

    d: float
    phi: float


def _check_finite(x: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")


def is_rotation(m: np.ndarray, tol: float = ROTATION_ORTHONORMALITY_TOL) -> bool:
    """True if ``m`` is orthonormal with determinant +1 within ``tol``."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        return False
    return (
        np.abs(m.T @ m - np.eye(3)).max() <= tol
        and abs(np.linalg.det(m) - 1.0) <= tol
    )


def euler_to_rotation(e: EulerZYX) -> np.ndarray:
    """Rotation matrix for intrinsic z-y-x angles: ``Rz(phi_z) Ry(phi_y) Rx(phi_x)``."""
    _check_finite(e.as_array(), "euler angles")
    cx, sx = math.cos(e.phi_x), math.sin(e.phi_x)
    cy, sy = math.cos(e.phi_y), math.sin(e.phi_y)
    cz, sz = math.cos(e.phi_z), math.sin(e.phi_z)
    return np.array(
        [
            [cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx],
            [sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx],
            [-sy, cy * sx, cy * cx],
        ]
    )


def rotation_to_euler(R: np.ndarray) -> EulerZYX:
    """Invert :func:`euler_to_rotation`.

    Output ranges are ``phi_x, phi_z in (-pi, pi]`` and ``phi_y in
    [-pi/2, pi/2]``.  At gimbal lock (``|phi_y| = pi/2``) the split between
    ``phi_x`` and ``phi_z`` is not observable; ``phi_x`` is set to 0 and the
    remaining rotation folded into ``phi_z``.
    """
    R = np.asarray(R, dtype=float)
    sy = min(1.0, max(-1.0, -R[2, 0]))
    phi_y = math.asin(sy)
    if abs(sy) >= 1.0 - 1e-15:
        # gimbal lock: only phi_z -/+ phi_x is observable; pick phi_x = 0
        phi_x = 0.0
        if sy > 0:
            phi_z = math.atan2(R[1, 2], R[1, 1])
        else:
            phi_z = math.atan2(-R[1, 2], R[1, 1])
    else:
        phi_x = math.atan2(R[2, 1], R[2, 2])
        phi_z = math.atan2(R[1, 0], R[0, 0])
    if phi_x <= -math.pi:
        phi_x += 2.0 * math.pi
    if phi_z <= -math.pi:
        phi_z += 2.0 * math.pi
    return EulerZYX(phi_x, phi_y, phi_z)


def axis_angle_to_rotation(v) -> np.ndarray:
    """Rodrigues' formula ``I + sin(t) S + (1 - cos(t)) S^2`` for ``v = t * e``."""
    v = np.asarray(v, dtype=float).reshape(3)
    _check_finite(v, "axis-angle vector")
    theta = float(np.linalg.norm(v))
    if theta < 1e-12:
        return np.eye(3)
    e = v / theta
    s = np.array(
        [[0.0, -e[2], e[1]], [e[2], 0.0, -e[0]], [-e[1], e[0], 0.0]]
    )
    return np.eye(3) + math.sin(theta) * s + (1.0 - math.cos(theta)) * (s @ s)


def rotation_to_axis_angle(R: np.ndarray) -> np.ndarray:
    """Invert Rodrigues' formula, canonical ``|v| in [0, pi]``.

    Near ``theta = pi`` the skew part of ``R`` vanishes, so the axis is
    recovered from the symmetric part ``(R + I) / 2 -> e e^T``.  At exactly
    ``pi`` the axis sign is ambiguous; the first nonzero component is made
    positive so the output is deterministic.
    """
    R = np.asarray(R, dtype=float)
    cos_theta = min(1.0, max(-1.0, (np.trace(R) - 1.0) / 2.0))
    theta = math.acos(cos_theta)
    # vee of the skew part: 2 sin(theta) * e
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if theta < 1e-7:
        return 0.5 * w
    if theta < math.pi - 1e-6:
        return (theta / (2.0 * math.sin(theta))) * w
    # symmetric-part extraction: (R + I)/2 ~= e e^T for theta ~ pi
    B = (R + np.eye(3)) / 2.0
    k = int(np.argmax(np.diag(B)))
    axis = B[:, k] / math.sqrt(max(B[k, k], 1e-30))
    axis /= np.linalg.norm(axis)
    sin_part = 0.5 * w  # = sin(theta) * e, may still carry the sign
    if np.linalg.norm(sin_part) > 1e-12:
        if float(sin_part @ axis) < 0.0:
            axis = -axis
    else:
        nz = np.nonzero(np.abs(axis) > 1e-12)[0]
        if axis[nz[0]] < 0.0:
            axis = -axis
    return theta * axis


def axis_angle_to_quaternion(v) -> UnitQuaternion:
    """Quaternion ``cos(t/2) + e sin(t/2) (i, j, k)`` for ``v = t * e``."""
    v = np.asarray(v, dtype=float).reshape(3)
    _check_finite(v, "axis-angle vector")
    theta = float(np.linalg.norm(v))
    if theta < 1e-12:
        return UnitQuaternion(1.0, 0.0, 0.0, 0.0)
    half = 0.5 * theta
    e = v / theta
    s = math.sin(half)
    return UnitQuaternion(math.cos(half), e[0] * s, e[1] * s, e[2] * s)


def compose(outer: Pose6, inner: Pose6) -> Pose6:
    """Chain two transforms: ``transform(compose(a, b), p) == transform(a, transform(b, p))``."""
    R_outer = axis_angle_to_rotation(outer.rot)
    R_inner = axis_angle_to_rotation(inner.rot)
    return Pose6(
        R_outer @ inner.r + outer.r,
        rotation_to_axis_angle(R_outer @ R_inner),
    )


def transform_point(t: Pose6, p) -> np.ndarray:
    """Apply a pose to a point: ``R(t.rot) @ p + t.r``."""
    p = np.asarray(p, dtype=float).reshape(3)
    return axis_angle_to_rotation(t.rot) @ p + t.r


def pose_distance(t1: Pose6, t2: Pose6) -> PoseDistance:
    """Euclidean translation distance and geodesic rotation distance.

    The rotation component is ``2 arccos(|q1 . q2|)``: the magnitude of the
    single rotation aligning the two orientations, in ``[0, pi]``.  The dot
    product is clamped to ``[0, 1]`` to absorb floating-point overshoot.
    """
    d = float(np.linalg.norm(t2.r - t1.r))
    q1 = axis_angle_to_quaternion(t1.rot).as_array()
    q2 = axis_angle_to_quaternion(t2.rot).as_array()
    dot = min(1.0, abs(float(q1 @ q2)))
    return PoseDistance(d, 2.0 * math.acos(dot))


def euler_cov_to_axis_angle_cov(e: EulerZYX, Q_e: np.ndarray) -> np.ndarray:
    """Propagate an Euler-angle covariance to the axis-angle parameterization.

    First-order propagation ``J Q_e J^T`` with ``J`` the finite-difference
    Jacobian of the euler -> axis-angle conversion at ``e``.
    """
    from . import uncert

    Q_e = np.asarray(Q_e, dtype=float)
    if Q_e.shape != (3, 3):
        raise ValueError("Q_e must be 3x3")
    if np.abs(Q_e - Q_e.T).max() > 1e-9 * max(1.0, np.abs(Q_e).max()):
        raise ValueError("Q_e must be symmetric")
    if np.linalg.eigvalsh(Q_e).min() < -1e-9 * max(np.trace(Q_e), 1.0):
        raise ValueError("Q_e must be positive semi-definite")

    def convert(angles: np.ndarray) -> np.ndarray:
        return rotation_to_axis_angle(
            euler_to_rotation(EulerZYX(angles[0], angles[1], angles[2]))
        )

    x = e.as_array()
    J = uncert.numerical_jacobian(convert, x, uncert.default_steps(x))
    return uncert.propagate(J, Q_e)
