"""Derivative-free optimization and posterior sampling of the objective.

Optimization uses Powell's conjugate-direction method (cyclic Brent line
minimizations with direction replacement) as provided by scipy, which is
well suited to the objective here: smooth in the large but built from
finite differences, so gradients are not trustworthy.

Posterior uncertainty comes from an affine-invariant ensemble MCMC sampler
(stretch moves over a walker population, updated half by half so proposals
within a half are independent).  The sample covariance of the walker
history estimates the covariance of the calibrated pose.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
import scipy.optimize

from .errors import InitializationFailureError

DEFAULT_INIT_SCALE = (1e-4, 1e-4, 1e-4, 1e-5, 1e-5, 1e-5)


@dataclass(frozen=True)
class PowellConfig:
    tolx: float = 1e-5
    ftol: float = 1e-8
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not (self.tolx > 0 and self.ftol > 0):
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class EnsembleConfig:
    n_walkers: int = 250
    n_iterations: int = 100
    burn_in: int = 100
    stretch_a: float = 2.0
    init_scale: tuple[float, ...] = DEFAULT_INIT_SCALE
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_walkers % 2 != 0:
            raise ValueError("n_walkers must be even (half-ensemble updates)")
        if not self.stretch_a > 1.0:
            raise ValueError("stretch_a must exceed 1")
        if self.n_iterations < 1 or self.burn_in < 0:
            raise ValueError("iteration counts must be positive")


@dataclass
class PowellResult:
    x: np.ndarray
    fun: float
    n_evals: int
    converged: bool


@dataclass
class PosteriorSamples:
    """Flattened post-burn-in ensemble history."""

    samples: np.ndarray
    log_likelihoods: np.ndarray
    acceptance_rate: float

    def __post_init__(self) -> None:
        if self.samples.shape[0] != self.log_likelihoods.shape[0]:
            raise ValueError("samples and log likelihoods differ in length")


def powell_minimize(
    fn: Callable[[np.ndarray], float],
    x0,
    cfg: PowellConfig = PowellConfig(),
) -> PowellResult:
    """Minimize ``fn`` from ``x0`` with Powell's method.

    Never returns a point worse than the start; hitting the iteration cap
    returns the best point found with ``converged=False``.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    f0 = float(fn(x0))
    res = scipy.optimize.minimize(
        fn,
        x0,
        method="Powell",
        options={
            "xtol": cfg.tolx,
            "ftol": cfg.ftol,
            "maxiter": cfg.max_iter,
            "maxfev": 10_000_000,
        },
    )
    n_evals = int(res.nfev) + 1
    if float(res.fun) > f0:
        return PowellResult(x0.copy(), f0, n_evals, False)
    return PowellResult(
        np.asarray(res.x, dtype=float).reshape(-1),
        float(res.fun),
        n_evals,
        bool(res.success),
    )


def _sequential_map(fn, xs: Iterable[np.ndarray]) -> list[float]:
    return [float(fn(x)) for x in xs]


def ensemble_sample(
    log_like: Callable[[np.ndarray], float],
    x0,
    cfg: EnsembleConfig = EnsembleConfig(),
    map_fn: Callable[[Callable, Iterable], list] | None = None,
) -> PosteriorSamples:
    """Affine-invariant stretch-move sampling around an optimum.

    Walkers start as ``x0`` plus a small per-parameter Gaussian scatter.
    Each iteration updates the two ensemble halves in turn: every walker
    stretches toward a random partner in the other half by a factor drawn
    from ``g(z) ~ 1/sqrt(z)`` on ``[1/a, a]`` and the move is accepted with
    probability ``min(1, z^(d-1) L(y)/L(x))``.  The ``burn_in`` iterations
    are discarded; each retained iteration contributes the whole ensemble,
    so the result holds ``n_walkers * n_iterations`` samples.

    ``map_fn`` evaluates a batch of independent proposals (one half of the
    ensemble) and may parallelize; the default is sequential and the
    output is bit-reproducible for a fixed seed either way.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    dim = x0.shape[0]
    if cfg.n_walkers < 2 * dim:
        raise ValueError("need at least 2 walkers per dimension")
    scale = np.asarray(cfg.init_scale, dtype=float).reshape(-1)
    if scale.shape[0] != dim:
        raise ValueError("init_scale length must match the parameter count")
    if map_fn is None:
        map_fn = _sequential_map
    rng = np.random.default_rng(cfg.seed)

    K = cfg.n_walkers
    half = K // 2
    walkers = x0[None, :] + rng.standard_normal((K, dim)) * scale[None, :]
    logp = np.asarray(map_fn(log_like, list(walkers)), dtype=float)
    if not np.any(np.isfinite(logp) & (logp > -1e17)):
        raise InitializationFailureError(
            "no walker started at a finite log likelihood"
        )

    a = cfg.stretch_a
    total = cfg.burn_in + cfg.n_iterations
    samples = np.empty((cfg.n_iterations * K, dim))
    sample_logp = np.empty(cfg.n_iterations * K)
    accepted = 0
    proposed = 0
    for it in range(total):
        for first in (0, half):
            active = slice(first, first + half)
            other = slice(half - first, K - first)
            z = (rng.random(half) * (a - 1.0) + 1.0) ** 2 / a
            partners = rng.integers(0, half, size=half)
            ln_accept = np.log(rng.random(half))
            xc = walkers[other][partners]
            proposals = xc + z[:, None] * (walkers[active] - xc)
            prop_logp = np.asarray(
                map_fn(log_like, list(proposals)), dtype=float
            )
            log_ratio = (dim - 1) * np.log(z) + prop_logp - logp[active]
            accept = ln_accept <= log_ratio
            idx = np.flatnonzero(accept) + first
            walkers[idx] = proposals[accept]
            logp[idx] = prop_logp[accept]
            if it >= cfg.burn_in:
                accepted += int(accept.sum())
                proposed += half
        if it >= cfg.burn_in:
            row = (it - cfg.burn_in) * K
            samples[row : row + K] = walkers
            sample_logp[row : row + K] = logp
    rate = accepted / proposed if proposed else 0.0
    return PosteriorSamples(samples, sample_logp, float(rate))


def sample_covariance(samples: PosteriorSamples) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and (1/(r-1))-normalized covariance of the chain."""
    X = samples.samples
    r = X.shape[0]
    if r < 2:
        raise ValueError("at least two samples required")
    mean = X.mean(axis=0)
    D = X - mean
    Q = (D.T @ D) / (r - 1)
    return mean, 0.5 * (Q + Q.T)
