"""Extrinsic pose calibration for line-scan cameras on mobile platforms.

Estimates the fixed 6-DOF camera-to-body transform from pixel observations
of an unknown calibration pattern and time-matched navigation poses, with
full covariance propagation, MCMC posterior uncertainty, outlier rejection,
plane mapping and basin-of-attraction analysis.  A built-in synthetic
scenario generator provides ground truth for end-to-end verification.
"""

__version__ = "0.1.0"

from .geom import (  # noqa: F401
    EulerZYX,
    Pose6,
    PoseDistance,
    UnitQuaternion,
    axis_angle_to_quaternion,
    axis_angle_to_rotation,
    compose,
    euler_cov_to_axis_angle_cov,
    euler_to_rotation,
    pose_distance,
    rotation_to_axis_angle,
    rotation_to_euler,
    transform_point,
)
from .camera import Intrinsics, PixelPoint, Ray3  # noqa: F401
from .likelihood import Dataset, NoiseConfig  # noqa: F401
