"""End-to-end calibration workflows.

``calibrate`` chains the optimizer and the posterior sampler; around it sit
iterative outlier rejection, plane-fit mapping with full uncertainty, pose
comparison, and the basin-of-attraction sensitivity experiment.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geom, uncert
from .errors import DegenerateGeometryError, PlaneParallelError
from .camera import Intrinsics, Ray3
from .likelihood import (
    Dataset,
    ModelEvaluation,
    NllObjective,
    NoiseConfig,
    PatternPointEstimate,
    ReprojectionRecord,
)
from .solve import (
    EnsembleConfig,
    PosteriorSamples,
    PowellConfig,
    ensemble_sample,
    powell_minimize,
    sample_covariance,
)
from .triangulate import ObservationRay

DEFAULT_OUTLIER_THRESHOLD_PX = 5.0
MIN_REMAINING_OBSERVATIONS = 6
DEFAULT_BASIN_SUCCESS_THRESHOLD = 0.1


@dataclass
class CalibrationResult:
    pose: geom.Pose6
    posterior_cov: np.ndarray | None
    nll: float
    records: list[ReprojectionRecord]
    points: list[PatternPointEstimate]
    converged: bool
    n_evals: int
    samples: PosteriorSamples | None = None


@dataclass
class OutlierIteration:
    remaining_obs_ids: list[int]
    mean_errors: dict[int, float]
    removed_obs_id: int | None


@dataclass
class OutlierTrace:
    iterations: list[OutlierIteration]
    threshold: float
    stopped_at_floor: bool = False


@dataclass(frozen=True)
class Plane:
    """Plane ``a x + b y + c z + d = 0``; ``axis`` names the regressed
    coordinate (``c = -1`` when it is z, the usual case)."""

    a: float
    b: float
    c: float
    d: float
    axis: str = "z"

    def normal(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])


@dataclass
class BasinCell:
    d: float
    phi: float
    start: geom.Pose6
    mahalanobis: float
    converged: bool
    success: bool


@dataclass
class BasinGrid:
    d_values: np.ndarray
    phi_values: np.ndarray
    cells: list[BasinCell]
    success_threshold: float


def calibrate(
    data: Dataset,
    x0: geom.Pose6,
    pcfg: PowellConfig = PowellConfig(),
    ecfg: EnsembleConfig = EnsembleConfig(),
    skip_mcmc: bool = False,
    threads: int = 1,
) -> CalibrationResult:
    """Optimize the camera pose, then sample its posterior covariance.

    Powell minimizes the negative log likelihood from ``x0``; the ensemble
    sampler then explores the likelihood around the optimum and the sample
    covariance becomes the posterior covariance of the pose.  If the
    optimizer fails to converge the result is flagged and MCMC is skipped.
    """
    objective = NllObjective(data)
    result = powell_minimize(objective, x0.as_vector(), pcfg)
    pose = geom.Pose6.from_vector(result.x)
    evaluation = objective.evaluate(pose)

    posterior_cov = None
    samples = None
    if result.converged and not skip_mcmc:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                samples = ensemble_sample(
                    lambda x: -objective(x),
                    result.x,
                    ecfg,
                    map_fn=lambda fn, xs: list(pool.map(fn, xs)),
                )
        else:
            samples = ensemble_sample(lambda x: -objective(x), result.x, ecfg)
        _, posterior_cov = sample_covariance(samples)
    return CalibrationResult(
        pose=pose,
        posterior_cov=posterior_cov,
        nll=evaluation.nll,
        records=evaluation.records,
        points=evaluation.points,
        converged=result.converged,
        n_evals=result.n_evals,
        samples=samples,
    )


def mean_errors_by_observation(records: list[ReprojectionRecord]) -> dict[int, float]:
    """Per-observation mean reprojection error over all pattern points."""
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for rec in records:
        sums[rec.obs_id] = sums.get(rec.obs_id, 0.0) + rec.e
        counts[rec.obs_id] = counts.get(rec.obs_id, 0) + 1
    return {k: sums[k] / counts[k] for k in sorted(sums)}


def reject_outliers(
    data: Dataset,
    x0: geom.Pose6,
    threshold: float = DEFAULT_OUTLIER_THRESHOLD_PX,
    max_removals: int | None = None,
    pcfg: PowellConfig = PowellConfig(),
    min_remaining: int = MIN_REMAINING_OBSERVATIONS,
) -> tuple[Dataset, OutlierTrace]:
    """Iteratively drop the observation with the worst mean error.

    Each round re-optimizes the pose, averages the reprojection errors per
    observation and removes the argmax, until every mean error is below
    ``threshold``, the removal budget is spent, or fewer than
    ``min_remaining`` observations would remain (flagged, not removed).
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    current = data
    x = x0.as_vector()
    trace = OutlierTrace(iterations=[], threshold=threshold)
    removals = 0
    while True:
        objective = NllObjective(current)
        result = powell_minimize(objective, x, pcfg)
        x = result.x
        evaluation = objective.evaluate(geom.Pose6.from_vector(x))
        means = mean_errors_by_observation(evaluation.records)
        remaining = sorted(means)
        worst = max(remaining, key=lambda k: means[k])
        if means[worst] < threshold:
            trace.iterations.append(OutlierIteration(remaining, means, None))
            break
        if max_removals is not None and removals >= max_removals:
            trace.iterations.append(OutlierIteration(remaining, means, None))
            break
        if len(remaining) - 1 < min_remaining:
            trace.stopped_at_floor = True
            trace.iterations.append(OutlierIteration(remaining, means, None))
            break
        trace.iterations.append(OutlierIteration(remaining, means, worst))
        current = current.subset_observations([k for k in remaining if k != worst])
        removals += 1
    return current, trace


def fit_plane(points) -> Plane:
    """Least-squares plane through 3-D points.

    Regresses z on (x, y) with the plane written ``a x + b y - z + d = 0``.
    When the points are nearly vertical that regression degrades; if its
    residual exceeds 10x the best of the x- or y-regressions (or it is
    rank deficient), the best-conditioned axis is regressed instead and
    the coefficients relabeled.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if pts.shape[0] < 3:
        raise DegenerateGeometryError("plane fit needs at least 3 points")

    def regress(target_axis: int):
        others = [i for i in range(3) if i != target_axis]
        A = np.column_stack([pts[:, others[0]], pts[:, others[1]], np.ones(len(pts))])
        rhs = pts[:, target_axis]
        coef, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
        if rank < 3:
            return None
        rss = float(np.sum((A @ coef - rhs) ** 2))
        return coef, rss

    fits = {axis: regress(i) for i, axis in enumerate("xyz")}
    valid = {axis: f for axis, f in fits.items() if f is not None}
    if not valid:
        raise DegenerateGeometryError("points are collinear; plane undefined")

    axis = "z"
    if "z" not in valid:
        axis = min(valid, key=lambda k: valid[k][1])
    else:
        rss_z = valid["z"][1]
        others = {k: v[1] for k, v in valid.items() if k != "z"}
        if others and rss_z > 10.0 * min(others.values()):
            axis = min(others, key=others.get)
    coef, _ = valid[axis]
    if axis == "z":
        return Plane(coef[0], coef[1], -1.0, coef[2], axis="z")
    if axis == "x":
        return Plane(-1.0, coef[0], coef[1], coef[2], axis="x")
    return Plane(coef[0], -1.0, coef[1], coef[2], axis="y")


def project_to_plane(ray: Ray3, plane: Plane) -> np.ndarray:
    """Intersection of a ray with a plane."""
    n = plane.normal()
    direction = ray.p_s - ray.p_c
    den = float(direction @ n)
    if abs(den) < 1e-12 * np.linalg.norm(direction) * np.linalg.norm(n):
        raise PlaneParallelError("ray is parallel to the mapping plane")
    k = int(np.argmax(np.abs(n)))
    p0 = np.zeros(3)
    p0[k] = -plane.d / n[k]
    t = float((p0 - ray.p_c) @ n) / den
    return ray.p_c + t * direction


def project_with_uncertainty(
    obs: ObservationRay,
    plane: Plane,
    t_cb: geom.Pose6,
    Q_tcb: np.ndarray,
    intr: Intrinsics,
    noise: NoiseConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Ray-plane intersection with first-order covariance.

    Unlike estimation, the camera-pose block here carries the posterior
    covariance from MCMC, so mapping uncertainty includes the calibration
    uncertainty.  Input stack order: pixel (u, v), navigation pose (6),
    intrinsics (f, u0), camera pose (6).
    """
    nav = obs.nav_pose.as_vector()
    x = np.concatenate([
        [obs.pixel.u, obs.pixel.v], nav, [intr.f_px, intr.u0], t_cb.as_vector()
    ])

    def intersect(stack: np.ndarray) -> np.ndarray:
        pose = geom.compose(
            geom.Pose6(stack[2:5], stack[5:8]), geom.Pose6(stack[10:13], stack[13:16])
        )
        R = geom.axis_angle_to_rotation(pose.rot)
        direction = R @ np.array(
            [(stack[0] - stack[9]) / stack[8], stack[1] / stack[8], 1.0]
        )
        return project_to_plane(Ray3(pose.r, pose.r + direction), plane)

    steps = np.concatenate([
        [uncert.PIXEL_STEP, uncert.PIXEL_STEP],
        uncert.default_steps(nav),
        [uncert.PIXEL_STEP, uncert.PIXEL_STEP],
        uncert.default_steps(t_cb.as_vector()),
    ])
    J = uncert.numerical_jacobian(intersect, x, steps)
    Q = uncert.assemble_block_diag([
        np.diag([noise.sigma_u**2, noise.sigma_v**2]),
        obs.nav_cov,
        np.diag([noise.sigma_f**2, noise.sigma_u0**2]),
        np.asarray(Q_tcb, dtype=float).reshape(6, 6),
    ])
    return intersect(x), uncert.propagate(J, Q)


def mahalanobis(t: geom.Pose6, t_ref: geom.Pose6, Q: np.ndarray) -> float:
    """Covariance-normalized distance between two pose parameter vectors."""
    Q = np.asarray(Q, dtype=float).reshape(6, 6)
    delta = t.as_vector() - t_ref.as_vector()
    try:
        sol = np.linalg.solve(Q, delta)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance matrix is singular") from exc
    value = float(delta @ sol)
    if not math.isfinite(value) or value < 0:
        raise ValueError("covariance matrix is not positive definite")
    return math.sqrt(value)


def _random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    # uniform over a symmetric cube, then normalized
    while True:
        v = rng.uniform(-1.0, 1.0, size=3)
        norm = np.linalg.norm(v)
        if norm > 1e-9:
            return v / norm


def perturbed_start(
    t_ref: geom.Pose6, d: float, phi: float, rng: np.random.Generator
) -> geom.Pose6:
    """Random pose at exactly the given translation/rotation distance.

    The translation moves along a random direction; the rotation composes
    a random-axis rotation of magnitude ``phi`` onto the reference (in the
    body frame), so ``pose_distance(start, t_ref) == (d, phi)``.
    """
    r = t_ref.r + d * _random_unit_vector(rng)
    delta = phi * _random_unit_vector(rng)
    R = geom.axis_angle_to_rotation(t_ref.rot) @ geom.axis_angle_to_rotation(delta)
    return geom.Pose6(r, geom.rotation_to_axis_angle(R))


def basin_of_attraction(
    data: Dataset,
    t_ref: geom.Pose6,
    Q_ref: np.ndarray,
    grid: tuple[float, float, int, int],
    seed: int = 0,
    pcfg: PowellConfig = PowellConfig(),
    success_threshold: float = DEFAULT_BASIN_SUCCESS_THRESHOLD,
) -> BasinGrid:
    """Map convergence as a function of initial pose error.

    ``grid = (d_max, phi_max, n_d, n_phi)`` spans a uniform grid over the
    2-D pose-distance space, zero included.  Each cell draws one random
    start at that exact distance, optimizes, and records the Mahalanobis
    distance of the result from the reference under ``Q_ref``.
    """
    d_max, phi_max, n_d, n_phi = grid
    if phi_max > math.pi:
        raise ValueError("phi_max cannot exceed pi")
    d_values = np.linspace(0.0, d_max, n_d)
    phi_values = np.linspace(0.0, phi_max, n_phi)
    objective = NllObjective(data)
    children = np.random.SeedSequence(seed).spawn(n_d * n_phi)
    cells = []
    idx = 0
    for d in d_values:
        for phi in phi_values:
            rng = np.random.default_rng(children[idx])
            idx += 1
            start = perturbed_start(t_ref, float(d), float(phi), rng)
            result = powell_minimize(objective, start.as_vector(), pcfg)
            dist = mahalanobis(geom.Pose6.from_vector(result.x), t_ref, Q_ref)
            cells.append(
                BasinCell(
                    d=float(d),
                    phi=float(phi),
                    start=start,
                    mahalanobis=dist,
                    converged=result.converged,
                    success=bool(dist < success_threshold),
                )
            )
    return BasinGrid(d_values, phi_values, cells, success_threshold)
