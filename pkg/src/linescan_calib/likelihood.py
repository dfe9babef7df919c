"""Reprojection errors, their variances and the calibration objective.

The objective for a candidate camera-to-body pose is

    sum_k sum_i  e_ki^2 / (2 sigma_ki^2)

where ``e_ki`` is the pixel distance between observation ``i`` of pattern
point ``k`` and the reprojection of that point's triangulated estimate, and
``sigma_ki^2`` is the first-order propagated variance of that error.  The
whole pipeline (triangulation of every pattern point included) is
recomputed from scratch at every evaluation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _engine, geom
from .camera import Intrinsics, PixelPoint
from .errors import DegenerateGeometryError

NLL_SURROGATE = _engine.NLL_SURROGATE


@dataclass(frozen=True)
class NoiseConfig:
    """Modelled 1-sigma input noise, all in pixels.

    ``sigma_v`` reflects that a point may sit anywhere within the sensor's
    instantaneous field of view and still register on the scan line.
    ``sigma_f`` is the focal-length uncertainty already converted from mm.
    """

    sigma_u: float = 0.5
    sigma_v: float = 0.5
    sigma_u0: float = 2.0
    sigma_f: float = 6.5

    def __post_init__(self) -> None:
        for name in ("sigma_u", "sigma_v", "sigma_u0", "sigma_f"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class Dataset:
    """Pixel observations of pattern points with matched navigation poses.

    Column-oriented: row ``r`` is one sighting of pattern point
    ``point_ids[r]`` during observation ``obs_ids[r]``, at pixel ``u[r]``,
    with the body pose ``nav_poses[r]`` (translation + axis-angle) and its
    6x6 covariance ``nav_covs[r]``.
    """

    point_ids: np.ndarray
    obs_ids: np.ndarray
    u: np.ndarray
    nav_poses: np.ndarray
    nav_covs: np.ndarray
    intrinsics: Intrinsics
    noise: NoiseConfig = field(default_factory=NoiseConfig)

    def __post_init__(self) -> None:
        self.point_ids = np.asarray(self.point_ids, dtype=np.int64).reshape(-1)
        self.obs_ids = np.asarray(self.obs_ids, dtype=np.int64).reshape(-1)
        self.u = np.asarray(self.u, dtype=float).reshape(-1)
        n = self.point_ids.shape[0]
        self.nav_poses = np.asarray(self.nav_poses, dtype=float).reshape(n, 6)
        self.nav_covs = np.asarray(self.nav_covs, dtype=float).reshape(n, 6, 6)
        if not (self.obs_ids.shape[0] == n and self.u.shape[0] == n):
            raise ValueError("dataset columns have inconsistent lengths")

    @property
    def n_rows(self) -> int:
        return self.point_ids.shape[0]

    def observation_ids(self) -> np.ndarray:
        return np.unique(self.obs_ids)

    def pattern_point_ids(self) -> np.ndarray:
        return np.unique(self.point_ids)

    def validate(self) -> None:
        """Raise if any pattern point has fewer than two observations."""
        ids, counts = np.unique(self.point_ids, return_counts=True)
        bad = ids[counts < 2]
        if bad.size:
            raise ValueError(
                f"pattern points {bad.tolist()} have fewer than 2 observations"
            )

    def subset_observations(self, keep_obs_ids) -> "Dataset":
        """New dataset restricted to the given observation ids."""
        keep = np.isin(self.obs_ids, np.asarray(list(keep_obs_ids)))
        return Dataset(
            self.point_ids[keep],
            self.obs_ids[keep],
            self.u[keep],
            self.nav_poses[keep],
            self.nav_covs[keep],
            self.intrinsics,
            self.noise,
        )

    def with_noise(self, noise: NoiseConfig) -> "Dataset":
        out = replace(self)
        out.noise = noise
        return out


@dataclass(frozen=True)
class ReprojectionRecord:
    """One observation's reprojection error (pixels) and its variance."""

    point_id: int
    obs_id: int
    e: float
    var_e: float


@dataclass
class PatternPointEstimate:
    """Fused world-frame estimate of one pattern point."""

    p_hat: np.ndarray
    sigma: np.ndarray
    point_id: int
    n_pairs_used: int


@dataclass
class ModelEvaluation:
    """Full trace of one objective evaluation at a fixed camera pose."""

    nll: float
    records: list[ReprojectionRecord]
    points: list[PatternPointEstimate]
    n_floored: int


def reprojection_error(observed: PixelPoint, reprojected: PixelPoint) -> float:
    """Euclidean pixel distance between an observed and a reprojected point."""
    if not all(map(math.isfinite, (*observed, *reprojected))):
        raise ValueError("pixel coordinates must be finite")
    return math.hypot(observed.u - reprojected.u, observed.v - reprojected.v)


class NllObjective:
    """Callable negative log likelihood over candidate camera poses.

    Sorts the dataset rows by pattern point once and reuses the layout for
    every evaluation; cheap enough to hand straight to the optimizer and
    the sampler.
    """

    def __init__(self, data: Dataset):
        data.validate()
        order = np.argsort(data.point_ids, kind="stable")
        self._data = data
        self._order = order
        self._us = np.ascontiguousarray(data.u[order])
        self._navs = np.ascontiguousarray(data.nav_poses[order])
        self._nav_covs = np.ascontiguousarray(data.nav_covs[order])
        self._point_ids_sorted = data.point_ids[order]
        self._obs_ids_sorted = data.obs_ids[order]
        unique_ids, starts, counts = np.unique(
            self._point_ids_sorted, return_index=True, return_counts=True
        )
        self._unique_ids = unique_ids
        self._starts = starts.astype(np.int64)
        self._counts = counts.astype(np.int64)
        # row -> index of its point in the unique-id list
        self._point_of_row = np.searchsorted(unique_ids, self._point_ids_sorted)
        M, O = unique_ids.shape[0], self._us.shape[0]
        self._p_hat = np.empty((M, 3))
        self._sig_hat = np.empty((M, 3, 3))
        self._n_pairs = np.empty(M, dtype=np.int64)
        self._e = np.empty(O)
        self._var = np.empty(O)

    @property
    def dataset(self) -> Dataset:
        return self._data

    def _run(self, t_cb_vec: np.ndarray) -> tuple[float, int, int]:
        intr = self._data.intrinsics
        noise = self._data.noise
        return _engine.evaluate_kernel(
            self._us, self._navs, self._nav_covs,
            self._starts, self._counts, self._point_of_row,
            intr.f_px, intr.u0,
            noise.sigma_u, noise.sigma_v, noise.sigma_u0, noise.sigma_f,
            np.asarray(t_cb_vec, dtype=float).reshape(6),
            self._p_hat, self._sig_hat, self._n_pairs, self._e, self._var,
        )

    def __call__(self, t_cb_vec) -> float:
        nll, _status, _ = self._run(t_cb_vec)
        return float(nll)

    def evaluate(self, t_cb: geom.Pose6) -> ModelEvaluation:
        """Evaluate with the full per-record and per-point trace."""
        nll, status, n_floored = self._run(t_cb.as_vector())
        if status != 0:
            bad = self._unique_ids[self._n_pairs == 0].tolist()
            raise DegenerateGeometryError(
                f"triangulation degenerate for pattern points {bad}"
            )
        records = [
            ReprojectionRecord(
                int(self._point_ids_sorted[o]),
                int(self._obs_ids_sorted[o]),
                float(self._e[o]),
                float(self._var[o]),
            )
            for o in range(self._us.shape[0])
        ]
        points = [
            PatternPointEstimate(
                self._p_hat[m].copy(),
                self._sig_hat[m].copy(),
                int(self._unique_ids[m]),
                int(self._n_pairs[m]),
            )
            for m in range(self._unique_ids.shape[0])
        ]
        return ModelEvaluation(float(nll), records, points, int(n_floored))


def negative_log_likelihood(t_cb: geom.Pose6, data: Dataset) -> float:
    """Objective value at one pose; builds the evaluation layout each call.

    Returns the large surrogate (1e18) when triangulation degenerates so
    derivative-free optimizers remain total.
    """
    return NllObjective(data)(t_cb.as_vector())


def evaluate_model(t_cb: geom.Pose6, data: Dataset) -> ModelEvaluation:
    """Objective plus the full reprojection/triangulation trace."""
    return NllObjective(data).evaluate(t_cb)


def reprojection_variance(
    p_hat,
    sigma_p,
    u_obs: float,
    nav_pose,
    nav_cov,
    t_cb: geom.Pose6,
    intr: Intrinsics,
    noise: NoiseConfig,
) -> float:
    """Propagated variance of one reprojection error.

    The finite-difference Jacobian is taken with respect to the stacked
    input ``(point(3), (u, v), navpose(6), f, u0)`` with the camera-pose
    covariance block zeroed; the result is ``j^T Q j`` floored at 1e-12.
    """
    from . import uncert

    p_hat = np.asarray(p_hat, dtype=float).reshape(3)
    nav_pose = np.asarray(nav_pose, dtype=float).reshape(6)
    x = np.concatenate([p_hat, [u_obs, 0.0], nav_pose, [intr.f_px, intr.u0]])

    def err_of(stack: np.ndarray) -> np.ndarray:
        pose = geom.Pose6(stack[5:8], stack[8:11])
        cam = geom.compose(pose, t_cb)
        R = geom.axis_angle_to_rotation(cam.rot)
        pc = R.T @ (stack[0:3] - cam.r)
        uh = stack[11] * pc[0] / pc[2] + stack[12]
        vh = stack[11] * pc[1] / pc[2]
        return np.array(
            [math.hypot(stack[3] - uh, stack[4] - vh)]
        )

    steps = np.concatenate([
        uncert.default_steps(p_hat),
        [uncert.PIXEL_STEP, uncert.PIXEL_STEP],
        uncert.default_steps(nav_pose),
        [uncert.PIXEL_STEP, uncert.PIXEL_STEP],
    ])
    J = uncert.numerical_jacobian(err_of, x, steps)
    Q = uncert.assemble_block_diag([
        np.asarray(sigma_p, dtype=float).reshape(3, 3),
        np.diag([noise.sigma_u**2, noise.sigma_v**2]),
        np.asarray(nav_cov, dtype=float).reshape(6, 6),
        np.diag([noise.sigma_f**2, noise.sigma_u0**2]),
    ])
    var = float(uncert.propagate(J, Q)[0, 0])
    if var < _engine.VAR_FLOOR:
        warnings.warn(
            "propagated reprojection variance floored at 1e-12",
            RuntimeWarning,
            stacklevel=2,
        )
        return _engine.VAR_FLOOR
    return var
