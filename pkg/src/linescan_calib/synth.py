"""Synthetic calibration scenarios with exact ground truth.

Generates platform poses around a calibration pattern and, for every
pattern point, a scan line that actually contains it.  A line-scan camera
only images points on its view plane, so each sighting gets its own
navigation pose: the platform is slid a small distance along its travel
axis until the point lies exactly on the plane, mirroring how a real
traversal picks each point up on some line.  With the orientation held
fixed the view-plane condition is linear in that slide, so the solve is
closed form and the noiseless data reproject with zero error at the true
camera pose.

Two presets mirror the published platform configurations: ``ladybird``
(horizontal scan line pitched down at a ground pattern, ring of approach
directions) and ``shrimp`` (vertical scan line pitched slightly up at an
elevated pattern, arc of side-on approaches).

Reported navigation covariances always carry the configured values; the
``noise_scale`` knob only scales the noise actually applied, so a
noiseless dataset still advertises realistic uncertainties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import geom
from .camera import Intrinsics
from .errors import ScenarioGenerationError
from .likelihood import Dataset, NoiseConfig

# generated pixels keep this margin from the sensor edges
VISIBILITY_MARGIN_PX = 10.0
# minimum depth along the optical axis for a generated sighting
MIN_DEPTH_M = 0.5
# platform pose resampling budget per observation
MAX_POSE_ATTEMPTS = 100


@dataclass(frozen=True)
class PlatformSampler:
    """Ranges for random platform base poses around the pattern.

    Positions are drawn on an annulus arc (``radius_range`` x
    ``azimuth_range``) at fixed ``height`` (z is down: negative heights
    are above the ground plane), shifted laterally by up to
    ``lateral_range`` to spread pixels across the sensor.  The heading
    faces the pattern centre plus ``facing_offset`` (which body side
    carries the camera) plus jitter; roll and pitch magnitudes are drawn
    from their ranges with random sign.
    """

    radius_range: tuple[float, float] = (3.0, 3.8)
    azimuth_range: tuple[float, float] = (0.0, 2.0 * math.pi)
    height: float = -1.5
    lateral_range: float = 0.5
    heading_jitter: float = 0.05
    roll_range: tuple[float, float] = (0.0, 0.07)
    pitch_range: tuple[float, float] = (0.0, 0.035)
    facing_offset: float = 0.0


@dataclass(frozen=True)
class ScenarioNoise:
    """Applied noise levels; navigation sigmas are also reported in the data."""

    sigma_u: float = 0.5
    nav_sigma: tuple[float, ...] = (0.01, 0.01, 0.01, 0.004, 0.004, 0.002)
    scale: float = 1.0


@dataclass
class ScenarioConfig:
    true_t_cb: geom.Pose6
    pattern: np.ndarray
    n_observations: int
    platform: PlatformSampler
    noise: ScenarioNoise
    intrinsics: Intrinsics
    model_noise: NoiseConfig
    seed: int = 0

    def __post_init__(self) -> None:
        self.pattern = np.asarray(self.pattern, dtype=float).reshape(-1, 3)
        if self.n_observations < 2:
            raise ValueError("at least two observations are required")
        if len(np.unique(self.pattern.round(12), axis=0)) != len(self.pattern):
            raise ValueError("pattern points must be distinct")
        if len(self.pattern) == 0:
            raise ValueError("pattern must contain at least one point")


@dataclass
class GroundTruth:
    """Everything the estimator is not allowed to see."""

    t_cb: geom.Pose6
    pattern_points: np.ndarray
    true_nav_poses: np.ndarray


def grid_pattern(
    rows: int = 3,
    cols: int = 5,
    spacing: float = 0.1,
    mount: geom.Pose6 | None = None,
) -> np.ndarray:
    """A rows x cols planar grid of points, optionally re-mounted by a pose."""
    pts = []
    for r in range(rows):
        for c in range(cols):
            pts.append([(c - (cols - 1) / 2) * spacing,
                        (r - (rows - 1) / 2) * spacing,
                        0.0])
    pts = np.asarray(pts)
    if mount is not None:
        R = geom.axis_angle_to_rotation(mount.rot)
        pts = pts @ R.T + mount.r
    return pts


def _euler_zyx_axis_angle(roll: float, pitch: float, heading: float) -> np.ndarray:
    R = geom.euler_to_rotation(geom.EulerZYX(roll, pitch, heading))
    return geom.rotation_to_axis_angle(R)


def generate_scenario(cfg: ScenarioConfig) -> tuple[Dataset, GroundTruth]:
    """Draw platform poses, project the pattern and add noise.

    Each observation is one full view of the pattern: a base pose is
    sampled, then every point receives its own navigation pose by sliding
    the platform along its travel axis onto the point's view plane.  A
    base pose is resampled (up to 100 times) whenever any point misses
    the sensor, falls too close, or sits behind the camera.
    """
    intr = cfg.intrinsics
    plat = cfg.platform
    pattern = cfg.pattern
    M = pattern.shape[0]
    centre = pattern.mean(axis=0)
    t_cb_vec = cfg.true_t_cb.as_vector()
    R_cb = geom.axis_angle_to_rotation(cfg.true_t_cb.rot)
    nav_sigma = np.asarray(cfg.noise.nav_sigma, dtype=float).reshape(6)
    nav_cov = np.diag(nav_sigma**2)

    children = np.random.SeedSequence(cfg.seed).spawn(cfg.n_observations)
    rows_u: list[float] = []
    rows_truth: list[np.ndarray] = []
    rows_nav: list[np.ndarray] = []
    rows_point: list[int] = []
    rows_obs: list[int] = []
    u_lo = VISIBILITY_MARGIN_PX
    u_hi = intr.n_pixels - VISIBILITY_MARGIN_PX

    for obs_id in range(cfg.n_observations):
        rng = np.random.default_rng(children[obs_id])
        placed = None
        for _attempt in range(MAX_POSE_ATTEMPTS):
            azimuth = rng.uniform(*plat.azimuth_range)
            radius = rng.uniform(*plat.radius_range)
            base = np.array([
                centre[0] + radius * math.cos(azimuth),
                centre[1] + radius * math.sin(azimuth),
                plat.height,
            ])
            # shift sideways (perpendicular to the sight line) for pixel spread
            lateral = rng.uniform(-plat.lateral_range, plat.lateral_range)
            base += lateral * np.array([-math.sin(azimuth), math.cos(azimuth), 0.0])
            to_centre = math.atan2(centre[1] - base[1], centre[0] - base[0])
            heading = (
                to_centre
                + plat.facing_offset
                + rng.uniform(-plat.heading_jitter, plat.heading_jitter)
            )
            roll = rng.uniform(*plat.roll_range) * rng.choice([-1.0, 1.0])
            pitch = rng.uniform(*plat.pitch_range) * rng.choice([-1.0, 1.0])
            rot_aa = _euler_zyx_axis_angle(roll, pitch, heading)
            R_n = geom.axis_angle_to_rotation(rot_aa)
            R_cw = R_n @ R_cb
            cam_y = R_cw[:, 1]
            cam_offset = R_n @ t_cb_vec[:3]
            travel = R_n[:, 0]
            denom = float(cam_y @ travel)
            if abs(denom) < 1e-6:
                continue  # view plane parallel to the travel axis
            result = []
            ok = True
            for k in range(M):
                # view-plane condition cam_y . (p - pc) = 0 is linear in the slide
                pc0 = base + cam_offset
                t_slide = float(cam_y @ (pattern[k] - pc0)) / denom
                nav_pos = base + t_slide * travel
                pc = nav_pos + cam_offset
                rel = R_cw.T @ (pattern[k] - pc)
                if rel[2] < MIN_DEPTH_M:
                    ok = False
                    break
                u = intr.f_px * rel[0] / rel[2] + intr.u0
                if not (u_lo <= u <= u_hi):
                    ok = False
                    break
                result.append((u, np.concatenate([nav_pos, rot_aa])))
            if ok:
                placed = result
                break
        if placed is None:
            raise ScenarioGenerationError(
                f"observation {obs_id}: no viable platform pose in "
                f"{MAX_POSE_ATTEMPTS} attempts"
            )
        for k, (u, nav_true) in enumerate(placed):
            u_noisy = u + cfg.noise.scale * cfg.noise.sigma_u * rng.standard_normal()
            nav_rep = nav_true + cfg.noise.scale * nav_sigma * rng.standard_normal(6)
            rows_u.append(u_noisy)
            rows_truth.append(nav_true)
            rows_nav.append(nav_rep)
            rows_point.append(k)
            rows_obs.append(obs_id)

    n = len(rows_u)
    data = Dataset(
        point_ids=np.array(rows_point),
        obs_ids=np.array(rows_obs),
        u=np.array(rows_u),
        nav_poses=np.stack(rows_nav),
        nav_covs=np.tile(nav_cov, (n, 1, 1)),
        intrinsics=intr,
        noise=cfg.model_noise,
    )
    truth = GroundTruth(cfg.true_t_cb, pattern.copy(), np.stack(rows_truth))
    return data, truth


def corrupt_observation(data: Dataset, obs_id: int, pixel_offset: float) -> Dataset:
    """Shift every pixel of one observation; used to inject outliers."""
    if obs_id not in data.obs_ids:
        raise ValueError(f"unknown observation id {obs_id}")
    u = data.u.copy()
    u[data.obs_ids == obs_id] += pixel_offset
    return Dataset(
        data.point_ids.copy(), data.obs_ids.copy(), u,
        data.nav_poses.copy(), data.nav_covs.copy(),
        data.intrinsics, data.noise,
    )


# --- published platform presets -------------------------------------------

# both platforms share the same sensor; the pitch reproduces the quoted
# IFOV for each lens (8.2 mm -> 1.88 mrad, 6.2 mm -> 2.5 mrad)
SENSOR_PIXEL_PITCH_MM = 0.0155
SENSOR_N_PIXELS = 648
SENSOR_U0 = 323.0

LADYBIRD_INTRINSICS = Intrinsics(
    f_px=8.2 / SENSOR_PIXEL_PITCH_MM,
    u0=SENSOR_U0,
    n_pixels=SENSOR_N_PIXELS,
    ifov=1.88e-3,
    pixel_pitch_mm=SENSOR_PIXEL_PITCH_MM,
)
SHRIMP_INTRINSICS = Intrinsics(
    f_px=6.2 / SENSOR_PIXEL_PITCH_MM,
    u0=SENSOR_U0,
    n_pixels=SENSOR_N_PIXELS,
    ifov=2.5e-3,
    pixel_pitch_mm=SENSOR_PIXEL_PITCH_MM,
)

# median navigation uncertainties of the two platforms (1-sigma,
# metres and radians)
LADYBIRD_NAV_SIGMA = (
    1.052e-2, 1.305e-2, 1.118e-2,
    math.radians(2.362e-1), math.radians(2.636e-1), math.radians(1.053e-1),
)
SHRIMP_NAV_SIGMA = (
    4.520e-2, 4.369e-2, 4.887e-2,
    math.radians(7.534e-1), math.radians(7.284e-1), math.radians(8.416e-1),
)

# hand-measured mounting poses (tape measure + inclinometer)
LADYBIRD_HAND_POSE = geom.Pose6(
    [0.2, 0.0, -0.8],
    geom.rotation_to_axis_angle(
        geom.euler_to_rotation(
            geom.EulerZYX(math.radians(-56.0), 0.0, math.radians(-90.0))
        )
    ),
)
SHRIMP_HAND_POSE = geom.Pose6(
    [0.0, -0.2, -0.5],
    geom.rotation_to_axis_angle(
        geom.euler_to_rotation(
            geom.EulerZYX(0.0, math.radians(105.0), math.radians(-90.0))
        )
    ),
)

# ground-truth extrinsics for the synthetic twins: the field-calibrated
# estimates, which sit a realistic hand-measurement error from the poses
# above
LADYBIRD_TRUE_POSE = geom.Pose6(
    [0.189, -0.142, -0.794], [-0.822, 0.738, -1.429]
)
SHRIMP_TRUE_POSE = geom.Pose6(
    [-0.010, -0.080, -0.579], [1.380, 1.427, -1.093]
)


def _model_noise(intr: Intrinsics) -> NoiseConfig:
    # principal point 2 px, focal length 0.1 mm, pixel position and IFOV
    # arguments both give 0.5 px
    return NoiseConfig(
        sigma_u=0.5,
        sigma_v=0.5,
        sigma_u0=2.0,
        sigma_f=0.1 / intr.pixel_pitch_mm,
    )


def ladybird_scenario(
    n_observations: int = 16,
    seed: int = 0,
    noise_scale: float = 1.0,
    roll_range: tuple[float, float] = (0.0, 0.07),
    pitch_range: tuple[float, float] = (0.0, 0.035),
) -> ScenarioConfig:
    """Ground pattern scanned from a ring of directions, camera pitched down."""
    return ScenarioConfig(
        true_t_cb=LADYBIRD_TRUE_POSE,
        pattern=grid_pattern(3, 5, 0.1),
        n_observations=n_observations,
        platform=PlatformSampler(
            radius_range=(3.0, 3.8),
            azimuth_range=(0.0, 2.0 * math.pi),
            height=-1.5,
            lateral_range=0.5,
            heading_jitter=0.05,
            roll_range=roll_range,
            pitch_range=pitch_range,
            facing_offset=0.0,
        ),
        noise=ScenarioNoise(
            sigma_u=0.5, nav_sigma=LADYBIRD_NAV_SIGMA, scale=noise_scale
        ),
        intrinsics=LADYBIRD_INTRINSICS,
        model_noise=_model_noise(LADYBIRD_INTRINSICS),
        seed=seed,
    )


def shrimp_scenario(
    n_observations: int = 14,
    seed: int = 0,
    noise_scale: float = 1.0,
    roll_range: tuple[float, float] = (0.0, 0.30),
    pitch_range: tuple[float, float] = (0.0, 0.12),
) -> ScenarioConfig:
    """Elevated, near-vertical pattern scanned side-on, camera pitched up."""
    mount = geom.Pose6(
        [0.0, 0.0, -1.8],
        geom.rotation_to_axis_angle(
            geom.euler_to_rotation(geom.EulerZYX(math.radians(-90.0), 0.0, 0.0))
        ),
    )
    return ScenarioConfig(
        true_t_cb=SHRIMP_TRUE_POSE,
        pattern=grid_pattern(3, 5, 0.1, mount=mount),
        n_observations=n_observations,
        platform=PlatformSampler(
            radius_range=(2.5, 3.5),
            azimuth_range=(math.pi / 2 - 0.9, math.pi / 2 + 0.9),
            height=-0.5,
            lateral_range=0.4,
            heading_jitter=0.05,
            roll_range=roll_range,
            pitch_range=pitch_range,
            facing_offset=math.pi / 2,
        ),
        noise=ScenarioNoise(
            sigma_u=0.5, nav_sigma=SHRIMP_NAV_SIGMA, scale=noise_scale
        ),
        intrinsics=SHRIMP_INTRINSICS,
        model_noise=_model_noise(SHRIMP_INTRINSICS),
        seed=seed,
    )


SCENARIO_PRESETS = {
    "ladybird": ladybird_scenario,
    "shrimp": shrimp_scenario,
}
