"""First-order uncertainty machinery.

Finite-difference Jacobians, ``J Q J^T`` covariance propagation, block
covariance assembly and inverse-covariance weighted fusion.  Everything is
a pure function of ndarrays; all covariance matrices are symmetric
positive semi-definite within a small tolerance.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.linalg

from .errors import DegenerateFusionError

# step size for quantities measured in pixels
PIXEL_STEP = 1e-3
# relative step floor for metric/radian quantities
METRIC_STEP = 1e-6
# condition number beyond which fusion weights are Tikhonov-regularized
FUSION_COND_LIMIT = 1e12


def default_steps(x: np.ndarray) -> np.ndarray:
    """Central-difference steps for metric/radian inputs: ``max(1e-6, 1e-6 |x|)``."""
    x = np.asarray(x, dtype=float)
    return np.maximum(METRIC_STEP, METRIC_STEP * np.abs(x))


def numerical_jacobian(
    fn: Callable[[np.ndarray], np.ndarray], x, steps
) -> np.ndarray:
    """Central-difference Jacobian of ``fn`` at ``x``.

    Column ``i`` is ``(fn(x + h_i e_i) - fn(x - h_i e_i)) / (2 h_i)``.
    Evaluation failures inside ``fn`` propagate to the caller.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    steps = np.asarray(steps, dtype=float).reshape(-1)
    if steps.shape != x.shape:
        raise ValueError("steps must match x in length")
    if np.any(steps <= 0):
        raise ValueError("steps must be positive")
    cols = []
    for i, h in enumerate(steps):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp = np.asarray(fn(xp), dtype=float).reshape(-1)
        fm = np.asarray(fn(xm), dtype=float).reshape(-1)
        cols.append((fp - fm) / (2.0 * h))
    return np.column_stack(cols)


def propagate(J: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """First-order covariance propagation ``J Q J^T``, symmetrized."""
    J = np.asarray(J, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if J.ndim != 2 or Q.shape != (J.shape[1], J.shape[1]):
        raise ValueError(
            f"dimension mismatch: J is {J.shape}, Q is {Q.shape}"
        )
    M = J @ Q @ J.T
    return 0.5 * (M + M.T)


def assemble_block_diag(blocks: list[np.ndarray]) -> np.ndarray:
    """Stack covariance blocks into one block-diagonal matrix, in order."""
    if not blocks:
        raise ValueError("at least one block required")
    return scipy.linalg.block_diag(*[np.asarray(b, dtype=float) for b in blocks])


def _regularized_inverse(cov: np.ndarray) -> np.ndarray | None:
    """Invert a symmetric PSD matrix, Tikhonov-regularizing ill-conditioned
    input; returns None if it is singular beyond regularization."""
    cov = 0.5 * (cov + cov.T)
    n = cov.shape[0]
    eigvals = np.linalg.eigvalsh(cov)
    lo, hi = eigvals[0], eigvals[-1]
    if hi <= 0.0:
        return None
    if lo <= hi / FUSION_COND_LIMIT:
        cov = cov + (1e-12 * np.trace(cov) / n) * np.eye(n)
        eigvals = np.linalg.eigvalsh(cov)
        if eigvals[0] <= eigvals[-1] / FUSION_COND_LIMIT:
            return None
    try:
        return np.linalg.inv(cov)
    except np.linalg.LinAlgError:
        return None


def weighted_mean(
    points: list[np.ndarray], covs: list[np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    """Inverse-covariance weighted fusion of point estimates.

    Weights are ``W_i = cov_i^-1``; the fused covariance is
    ``(sum W_i)^-1`` and the fused point ``cov_fused @ sum(W_i p_i)``.
    A single point is returned unchanged with its covariance.
    """
    if len(points) == 0:
        raise ValueError("at least one point required")
    if len(points) != len(covs):
        raise ValueError("points and covs must have equal length")
    pts = [np.asarray(p, dtype=float).reshape(-1) for p in points]
    dim = pts[0].shape[0]
    if len(pts) == 1:
        return pts[0].copy(), np.asarray(covs[0], dtype=float).copy()
    w_sum = np.zeros((dim, dim))
    wp_sum = np.zeros(dim)
    n_used = 0
    for p, cov in zip(pts, covs):
        W = _regularized_inverse(np.asarray(cov, dtype=float))
        if W is None:
            continue
        w_sum += W
        wp_sum += W @ p
        n_used += 1
    if n_used == 0:
        raise DegenerateFusionError(
            "all covariances are singular beyond regularization"
        )
    fused_cov = _regularized_inverse(w_sum)
    if fused_cov is None:
        raise DegenerateFusionError("fused weight matrix is singular")
    fused_cov = 0.5 * (fused_cov + fused_cov.T)
    return fused_cov @ wp_sum, fused_cov
