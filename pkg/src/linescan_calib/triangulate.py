"""Ray-pair triangulation and weighted fusion of pattern-point estimates.

Every pattern point is sighted on several scan lines; each sighting back-
projects to a world ray.  For every ordered pair of rays the point on the
first ray nearest the second is computed, its covariance obtained by
pushing all pixel/navigation/intrinsics covariances through a finite-
difference Jacobian, and the pair estimates fused by inverse-covariance
weighting.  Pairs meeting at less than half a degree are excluded: their
covariances blow up and are numerically fragile even though the weighting
would suppress them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _engine, geom
from .camera import Intrinsics, PixelPoint, Ray3, back_project, camera_pose_in_world, projection_matrix
from .errors import DegenerateGeometryError, InsufficientObservationsError, ParallelRaysError
from .likelihood import NoiseConfig, PatternPointEstimate

MIN_RAY_ANGLE_RAD = float(_engine.MIN_RAY_ANGLE_RAD)


@dataclass
class ObservationRay:
    """One sighting of one pattern point, with its back-projected ray."""

    ray: Ray3
    obs_id: int
    point_id: int
    pixel: PixelPoint
    nav_pose: geom.Pose6
    nav_cov: np.ndarray

    def __post_init__(self) -> None:
        self.nav_cov = np.asarray(self.nav_cov, dtype=float).reshape(6, 6)


def make_observation_ray(
    pixel: PixelPoint,
    obs_id: int,
    point_id: int,
    nav_pose: geom.Pose6,
    nav_cov,
    t_cb: geom.Pose6,
    intr: Intrinsics,
) -> ObservationRay:
    """Back-project a pixel through the candidate extrinsic pose."""
    cam = camera_pose_in_world(nav_pose, t_cb)
    P = projection_matrix(intr, cam)
    ray = back_project(P, pixel, cam.r)
    return ObservationRay(ray, obs_id, point_id, pixel, nav_pose, nav_cov)


def ray_pair_closest_point(ri: Ray3, rj: Ray3) -> np.ndarray:
    """The point on ray ``i`` nearest to ray ``j``.

    Uses the common-perpendicular construction: with ray directions
    ``a = p_si - p_ci`` and ``b = p_sj - p_cj``, the connecting normal is
    ``n = b x (a x b)`` and the result is
    ``p_ci + ((p_cj - p_ci) . n / (a . n)) a``.
    """
    a = ri.p_s - ri.p_c
    b = rj.p_s - rj.p_c
    n = np.cross(b, np.cross(a, b))
    denom = float(a @ n)
    if abs(denom) < 1e-12 * np.linalg.norm(a) * np.linalg.norm(n) or np.linalg.norm(n) == 0.0:
        raise ParallelRaysError("rays are parallel; closest point undefined")
    t = float((rj.p_c - ri.p_c) @ n) / denom
    return ri.p_c + t * a


def estimate_pattern_point(
    obs: list[ObservationRay],
    t_cb: geom.Pose6,
    intr: Intrinsics,
    noise: NoiseConfig,
) -> PatternPointEstimate:
    """Triangulate one pattern point from all of its observations.

    All ordered ray pairs passing the parallelism and angle gates
    contribute a closest-point estimate with propagated covariance; the
    estimates are fused by inverse-covariance weighting.
    """
    if len(obs) < 2:
        raise InsufficientObservationsError(
            "at least two observations are required to triangulate"
        )
    point_ids = {o.point_id for o in obs}
    if len(point_ids) != 1:
        raise ValueError(f"observations mix pattern points: {sorted(point_ids)}")
    if any(o.pixel.v != 0.0 for o in obs):
        raise ValueError("line-scan observations must have v = 0")

    n = len(obs)
    us = np.array([o.pixel.u for o in obs])
    navs = np.stack([o.nav_pose.as_vector() for o in obs])
    nav_covs = np.stack([o.nav_cov for o in obs])
    starts = np.zeros(1, dtype=np.int64)
    counts = np.array([n], dtype=np.int64)
    p_hat = np.empty((1, 3))
    sig_hat = np.empty((1, 3, 3))
    n_pairs = np.empty(1, dtype=np.int64)
    status = _engine._triangulate_sorted(
        us, navs, nav_covs, starts, counts,
        intr.f_px, intr.u0, t_cb.as_vector(),
        noise.sigma_u**2, noise.sigma_v**2, noise.sigma_f**2, noise.sigma_u0**2,
        *_allocate_ray_workspace(us, navs, intr, t_cb),
        p_hat, sig_hat, n_pairs,
    )
    if status != 0:
        raise DegenerateGeometryError(
            "no usable ray pair (all parallel or below the angle gate)"
        )
    return PatternPointEstimate(
        p_hat[0].copy(), sig_hat[0].copy(), obs[0].point_id, int(n_pairs[0])
    )


def _allocate_ray_workspace(us, navs, intr: Intrinsics, t_cb: geom.Pose6):
    """Precomputed nominal/perturbed rays shared by the engine kernels."""
    O = us.shape[0]
    pc = np.empty((O, 3)); d = np.empty((O, 3))
    pcp = np.empty((O, 8, 2, 3)); dp = np.empty((O, 8, 2, 3))
    pcs = np.empty((O, 2, 2, 3)); ds = np.empty((O, 2, 2, 3))
    h_own = np.empty((O, 8))
    Rcw_nom = np.empty((O, 3, 3)); pc_nom = np.empty((O, 3))
    Rcw_nav = np.empty((O, 6, 2, 3, 3)); pc_nav = np.empty((O, 6, 2, 3))
    _engine._precompute_rays(
        us, navs, intr.f_px, intr.u0, t_cb.as_vector(),
        pc, d, pcp, dp, pcs, ds, h_own, Rcw_nom, pc_nom, Rcw_nav, pc_nav,
    )
    return pc, d, pcp, dp, pcs, ds, h_own
