"""Compiled numerical core for triangulation and the likelihood objective.

The objective is re-evaluated tens of thousands of times by the optimizer
and the MCMC sampler, and each evaluation needs finite-difference Jacobians
for every ordered ray pair of every pattern point.  This module implements
that inner loop with numba so a full evaluation stays in the low
milliseconds.  The public modules (`triangulate`, `likelihood`) wrap these
kernels; they never expose numba types.

Layout conventions used throughout:

* observation rows are sorted by pattern point id; ``starts[m]``/
  ``counts[m]`` delimit the rows of point ``m``;
* the per-pair Jacobian has 18 columns in the input-stack order
  ``(u, v)_i, navpose_i(6), (u, v)_j, navpose_j(6), f, u0``; the
  camera-pose block is omitted because its covariance is zeroed during
  estimation;
* the per-record reprojection Jacobian has 13 columns ordered
  ``point(3), (u, v), navpose(6), f, u0``.

Finite-difference steps: pixels use 1e-3, metric/radian inputs use
``max(1e-6, 1e-6 |x|)``, matching `uncert.numerical_jacobian` defaults.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# surrogate objective value when triangulation degenerates
NLL_SURROGATE = 1e18
# reprojection variances are floored here to keep the objective total
VAR_FLOOR = 1e-12
# pairs with a smaller inter-ray angle are excluded from fusion
MIN_RAY_ANGLE_RAD = np.deg2rad(0.5)
# condition limit beyond which pair covariances get Tikhonov regularization
COND_LIMIT = 1e12

_PIX_STEP = 1e-3
_REL_STEP = 1e-6


@njit(cache=True, inline="always")
def _rodrigues(v, out):
    theta = np.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    if theta < 1e-12:
        out[0, 0] = 1.0; out[0, 1] = 0.0; out[0, 2] = 0.0
        out[1, 0] = 0.0; out[1, 1] = 1.0; out[1, 2] = 0.0
        out[2, 0] = 0.0; out[2, 1] = 0.0; out[2, 2] = 1.0
        return
    ex = v[0] / theta; ey = v[1] / theta; ez = v[2] / theta
    c = np.cos(theta); s = np.sin(theta); cc = 1.0 - c
    out[0, 0] = c + ex * ex * cc
    out[0, 1] = ex * ey * cc - ez * s
    out[0, 2] = ex * ez * cc + ey * s
    out[1, 0] = ey * ex * cc + ez * s
    out[1, 1] = c + ey * ey * cc
    out[1, 2] = ey * ez * cc - ex * s
    out[2, 0] = ez * ex * cc - ey * s
    out[2, 1] = ez * ey * cc + ex * s
    out[2, 2] = c + ez * ez * cc


@njit(cache=True, inline="always")
def _camera_pose(nav, tcb, Rcb, Rn, Rcw, pc):
    """World camera pose for a navigation pose and extrinsic: Rcw, pc."""
    _rodrigues(nav[3:6], Rn)
    for r in range(3):
        pc[r] = nav[r] + Rn[r, 0] * tcb[0] + Rn[r, 1] * tcb[1] + Rn[r, 2] * tcb[2]
        for c in range(3):
            Rcw[r, c] = Rn[r, 0] * Rcb[0, c] + Rn[r, 1] * Rcb[1, c] + Rn[r, 2] * Rcb[2, c]


@njit(cache=True, inline="always")
def _ray_direction(u, v, f, u0, Rcw, d):
    """World direction of the back-projected ray for pixel (u, v)."""
    dx = (u - u0) / f
    dy = v / f
    for r in range(3):
        d[r] = Rcw[r, 0] * dx + Rcw[r, 1] * dy + Rcw[r, 2]


@njit(cache=True, inline="always")
def _dual_closest(pa, da, pb, db, out_a, out_b):
    """Nearest point on ray a to ray b, and on ray b to ray a.

    Returns the squared cross-product norm (the shared denominator); zero
    means the rays are parallel and the outputs are invalid.
    """
    cx = da[1] * db[2] - da[2] * db[1]
    cy = da[2] * db[0] - da[0] * db[2]
    cz = da[0] * db[1] - da[1] * db[0]
    den = cx * cx + cy * cy + cz * cz
    if den <= 0.0:
        return 0.0
    # n_a = db x c ; n_b = c x da
    nax = db[1] * cz - db[2] * cy
    nay = db[2] * cx - db[0] * cz
    naz = db[0] * cy - db[1] * cx
    nbx = cy * da[2] - cz * da[1]
    nby = cz * da[0] - cx * da[2]
    nbz = cx * da[1] - cy * da[0]
    wx = pb[0] - pa[0]; wy = pb[1] - pa[1]; wz = pb[2] - pa[2]
    ta = (wx * nax + wy * nay + wz * naz) / den
    tb = -(wx * nbx + wy * nby + wz * nbz) / den
    out_a[0] = pa[0] + ta * da[0]
    out_a[1] = pa[1] + ta * da[1]
    out_a[2] = pa[2] + ta * da[2]
    out_b[0] = pb[0] + tb * db[0]
    out_b[1] = pb[1] + tb * db[1]
    out_b[2] = pb[2] + tb * db[2]
    return den


@njit(cache=True, inline="always")
def _sym3_eig_bounds(S):
    """Smallest and largest eigenvalue of a symmetric 3x3 matrix
    (trigonometric closed form)."""
    a = S[0, 0]; b = S[1, 1]; c = S[2, 2]
    d = S[0, 1]; e = S[1, 2]; f = S[0, 2]
    p1 = d * d + e * e + f * f
    if p1 == 0.0:
        lo = min(a, min(b, c))
        hi = max(a, max(b, c))
        return lo, hi
    q = (a + b + c) / 3.0
    p2 = (a - q) ** 2 + (b - q) ** 2 + (c - q) ** 2 + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    ib0 = (a - q) / p; ib1 = (b - q) / p; ib2 = (c - q) / p
    id01 = d / p; id12 = e / p; id02 = f / p
    detb = (
        ib0 * (ib1 * ib2 - id12 * id12)
        - id01 * (id01 * ib2 - id12 * id02)
        + id02 * (id01 * id12 - ib1 * id02)
    )
    r = detb / 2.0
    if r < -1.0:
        r = -1.0
    elif r > 1.0:
        r = 1.0
    phi = np.arccos(r) / 3.0
    hi = q + 2.0 * p * np.cos(phi)
    lo = q + 2.0 * p * np.cos(phi + 2.0943951023931953)  # + 2*pi/3
    return lo, hi


@njit(cache=True, inline="always")
def _inv3_sym(S, out):
    """Inverse of a symmetric 3x3 matrix via the adjugate; returns det."""
    a = S[0, 0]; b = S[0, 1]; c = S[0, 2]
    d = S[1, 1]; e = S[1, 2]; f = S[2, 2]
    A = d * f - e * e
    B = c * e - b * f
    C = b * e - c * d
    det = a * A + b * B + c * C
    if det == 0.0:
        return 0.0
    idet = 1.0 / det
    out[0, 0] = A * idet
    out[0, 1] = B * idet
    out[0, 2] = C * idet
    out[1, 0] = B * idet
    out[1, 1] = (a * f - c * c) * idet
    out[1, 2] = (b * c - a * e) * idet
    out[2, 0] = C * idet
    out[2, 1] = out[1, 2]
    out[2, 2] = (a * d - b * b) * idet
    return det


@njit(cache=True, nogil=True)
def _precompute_rays(us, navs, f, u0, tcb,
                     pc, d, pcp, dp, pcs, ds, h_own,
                     Rcw_nom, pc_nom, Rcw_nav, pc_nav):
    """Nominal and perturbed rays (and camera poses) for every observation.

    Perturbation axes: own parameters ``u, v, nav0..nav5`` (index 0..7) and
    shared parameters ``f, u0`` (index 0..1), each with +/- steps.
    """
    O = us.shape[0]
    Rcb = np.empty((3, 3))
    Rn = np.empty((3, 3))
    Rcw = np.empty((3, 3))
    cpos = np.empty(3)
    navbuf = np.empty(6)
    _rodrigues(tcb[3:6], Rcb)
    for o in range(O):
        u = us[o]
        nav = navs[o]
        _camera_pose(nav, tcb, Rcb, Rn, Rcw, cpos)
        for r in range(3):
            pc[o, r] = cpos[r]
            pc_nom[o, r] = cpos[r]
            for cix in range(3):
                Rcw_nom[o, r, cix] = Rcw[r, cix]
        _ray_direction(u, 0.0, f, u0, Rcw, d[o])

        # u, v perturbations: pose unchanged, direction recomputed
        h_own[o, 0] = _PIX_STEP
        h_own[o, 1] = _PIX_STEP
        for r in range(3):
            pcp[o, 0, 0, r] = cpos[r]; pcp[o, 0, 1, r] = cpos[r]
            pcp[o, 1, 0, r] = cpos[r]; pcp[o, 1, 1, r] = cpos[r]
        _ray_direction(u + _PIX_STEP, 0.0, f, u0, Rcw, dp[o, 0, 0])
        _ray_direction(u - _PIX_STEP, 0.0, f, u0, Rcw, dp[o, 0, 1])
        _ray_direction(u, _PIX_STEP, f, u0, Rcw, dp[o, 1, 0])
        _ray_direction(u, -_PIX_STEP, f, u0, Rcw, dp[o, 1, 1])

        # navigation-pose perturbations: pose and direction both move
        for p in range(6):
            h = _REL_STEP if abs(nav[p]) < 1.0 else _REL_STEP * abs(nav[p])
            h_own[o, 2 + p] = h
            for s in range(6):
                navbuf[s] = nav[s]
            for sign in range(2):
                navbuf[p] = nav[p] + (h if sign == 0 else -h)
                _camera_pose(navbuf, tcb, Rcb, Rn, Rcw, cpos)
                for r in range(3):
                    pcp[o, 2 + p, sign, r] = cpos[r]
                    pc_nav[o, p, sign, r] = cpos[r]
                    for cix in range(3):
                        Rcw_nav[o, p, sign, r, cix] = Rcw[r, cix]
                _ray_direction(u, 0.0, f, u0, Rcw, dp[o, 2 + p, sign])
            navbuf[p] = nav[p]

        # shared intrinsic perturbations: pose unchanged
        for r in range(3):
            for sign in range(2):
                pcs[o, 0, sign, r] = cpos[r]
                pcs[o, 1, sign, r] = cpos[r]
        _camera_pose(nav, tcb, Rcb, Rn, Rcw, cpos)
        _ray_direction(u, 0.0, f + _PIX_STEP, u0, Rcw, ds[o, 0, 0])
        _ray_direction(u, 0.0, f - _PIX_STEP, u0, Rcw, ds[o, 0, 1])
        _ray_direction(u, 0.0, f, u0 + _PIX_STEP, Rcw, ds[o, 1, 0])
        _ray_direction(u, 0.0, f, u0 - _PIX_STEP, Rcw, ds[o, 1, 1])


@njit(cache=True, inline="always")
def _accumulate_pair(J, pnom, nav_cov_i, nav_cov_j,
                     var_u, var_v, var_f, var_u0, JQ, Sig, W, SW, SWp):
    """Propagate one pair's covariance and add its fusion weight."""
    for r in range(3):
        for c in range(r, 3):
            Sig[r, c] = (
                J[r, 0] * J[c, 0] * var_u + J[r, 1] * J[c, 1] * var_v
                + J[r, 8] * J[c, 8] * var_u + J[r, 9] * J[c, 9] * var_v
                + J[r, 16] * J[c, 16] * var_f + J[r, 17] * J[c, 17] * var_u0
            )
    for blk in range(2):
        off = 2 if blk == 0 else 10
        Qn = nav_cov_i if blk == 0 else nav_cov_j
        for r in range(3):
            for c in range(6):
                s = 0.0
                for k in range(6):
                    s += J[r, off + k] * Qn[k, c]
                JQ[r, c] = s
        for r in range(3):
            for c in range(r, 3):
                s = 0.0
                for k in range(6):
                    s += JQ[r, k] * J[c, off + k]
                Sig[r, c] += s
    Sig[1, 0] = Sig[0, 1]
    Sig[2, 0] = Sig[0, 2]
    Sig[2, 1] = Sig[1, 2]
    lo, hi = _sym3_eig_bounds(Sig)
    if hi <= 0.0:
        return 0
    if lo <= hi / COND_LIMIT:
        lam = 1e-12 * (Sig[0, 0] + Sig[1, 1] + Sig[2, 2]) / 3.0
        Sig[0, 0] += lam
        Sig[1, 1] += lam
        Sig[2, 2] += lam
        lo, hi = _sym3_eig_bounds(Sig)
        if lo <= hi / COND_LIMIT:
            return 0
    if _inv3_sym(Sig, W) == 0.0:
        return 0
    for r in range(3):
        SWp[r] += W[r, 0] * pnom[0] + W[r, 1] * pnom[1] + W[r, 2] * pnom[2]
        for c in range(3):
            SW[r, c] += W[r, c]
    return 1


@njit(cache=True, nogil=True)
def _triangulate_sorted(us, navs, nav_covs, starts, counts, f, u0, tcb,
                        var_u, var_v, var_f, var_u0,
                        pc, d, pcp, dp, pcs, ds, h_own,
                        p_hat, sig_hat, n_pairs):
    """Fuse all ordered ray pairs of every pattern point (Eqs. of the
    weighted triangulation).  Returns 0 on success, 1 if any point is
    degenerate (fewer than 2 rays or every pair gated out)."""
    M = starts.shape[0]
    cos_gate = np.cos(MIN_RAY_ANGLE_RAD)
    Jij = np.empty((3, 18))
    Jji = np.empty((3, 18))
    JQ = np.empty((3, 6))
    Sig = np.empty((3, 3))
    W = np.empty((3, 3))
    Sh = np.empty((3, 3))
    SW = np.empty((3, 3))
    SWp = np.empty(3)
    pa = np.empty(3); pb = np.empty(3)
    qa = np.empty(3); qb = np.empty(3)
    pnom_ij = np.empty(3); pnom_ji = np.empty(3)
    status = 0
    for m in range(M):
        s0 = starts[m]
        cnt = counts[m]
        for r in range(3):
            SWp[r] = 0.0
            for c in range(3):
                SW[r, c] = 0.0
        used = 0
        for a in range(cnt):
            i = s0 + a
            ni = np.sqrt(d[i, 0] ** 2 + d[i, 1] ** 2 + d[i, 2] ** 2)
            for b in range(a + 1, cnt):
                j = s0 + b
                nj = np.sqrt(d[j, 0] ** 2 + d[j, 1] ** 2 + d[j, 2] ** 2)
                cosang = abs(
                    d[i, 0] * d[j, 0] + d[i, 1] * d[j, 1] + d[i, 2] * d[j, 2]
                ) / (ni * nj)
                if cosang > cos_gate:
                    continue
                if _dual_closest(pc[i], d[i], pc[j], d[j], pnom_ij, pnom_ji) <= 0.0:
                    continue
                # own-i parameter columns: cols p of J_ij, cols 8+p of J_ji
                for p in range(8):
                    _dual_closest(pcp[i, p, 0], dp[i, p, 0], pc[j], d[j], pa, pb)
                    _dual_closest(pcp[i, p, 1], dp[i, p, 1], pc[j], d[j], qa, qb)
                    inv2h = 0.5 / h_own[i, p]
                    for r in range(3):
                        Jij[r, p] = (pa[r] - qa[r]) * inv2h
                        Jji[r, 8 + p] = (pb[r] - qb[r]) * inv2h
                # own-j parameter columns: cols 8+p of J_ij, cols p of J_ji
                for p in range(8):
                    _dual_closest(pc[i], d[i], pcp[j, p, 0], dp[j, p, 0], pa, pb)
                    _dual_closest(pc[i], d[i], pcp[j, p, 1], dp[j, p, 1], qa, qb)
                    inv2h = 0.5 / h_own[j, p]
                    for r in range(3):
                        Jij[r, 8 + p] = (pb[r] - qb[r]) * inv2h
                        Jji[r, p] = (pa[r] - qa[r]) * inv2h
                # shared intrinsic columns: both rays perturbed together
                for p in range(2):
                    _dual_closest(pcs[i, p, 0], ds[i, p, 0], pcs[j, p, 0], ds[j, p, 0], pa, pb)
                    _dual_closest(pcs[i, p, 1], ds[i, p, 1], pcs[j, p, 1], ds[j, p, 1], qa, qb)
                    inv2h = 0.5 / _PIX_STEP
                    for r in range(3):
                        Jij[r, 16 + p] = (pa[r] - qa[r]) * inv2h
                        Jji[r, 16 + p] = (pb[r] - qb[r]) * inv2h
                used += _accumulate_pair(Jij, pnom_ij, nav_covs[i], nav_covs[j],
                                         var_u, var_v, var_f, var_u0, JQ, Sig, W, SW, SWp)
                used += _accumulate_pair(Jji, pnom_ji, nav_covs[j], nav_covs[i],
                                         var_u, var_v, var_f, var_u0, JQ, Sig, W, SW, SWp)
        n_pairs[m] = used
        if used == 0:
            status = 1
            for r in range(3):
                p_hat[m, r] = np.nan
                for c in range(3):
                    sig_hat[m, r, c] = np.nan
            continue
        if _inv3_sym(SW, Sh) == 0.0:
            status = 1
            for r in range(3):
                p_hat[m, r] = np.nan
                for c in range(3):
                    sig_hat[m, r, c] = np.nan
            continue
        for r in range(3):
            p_hat[m, r] = Sh[r, 0] * SWp[0] + Sh[r, 1] * SWp[1] + Sh[r, 2] * SWp[2]
            for c in range(3):
                sig_hat[m, r, c] = 0.5 * (Sh[r, c] + Sh[c, r])
    return status


@njit(cache=True, inline="always")
def _err_for_pose(u_obs, v_obs, f, u0, Rcw, pc, pw):
    dxw = pw[0] - pc[0]; dyw = pw[1] - pc[1]; dzw = pw[2] - pc[2]
    xc = Rcw[0, 0] * dxw + Rcw[1, 0] * dyw + Rcw[2, 0] * dzw
    yc = Rcw[0, 1] * dxw + Rcw[1, 1] * dyw + Rcw[2, 1] * dzw
    zc = Rcw[0, 2] * dxw + Rcw[1, 2] * dyw + Rcw[2, 2] * dzw
    uh = f * xc / zc + u0
    vh = f * yc / zc
    return np.sqrt((u_obs - uh) ** 2 + (v_obs - vh) ** 2)


@njit(cache=True, nogil=True)
def _reprojection_sorted(us, navs, nav_covs, point_of_row, f, u0,
                         var_u, var_v, var_f, var_u0,
                         p_hat, sig_hat,
                         Rcw_nom, pc_nom, Rcw_nav, pc_nav,
                         e_out, var_out):
    """Reprojection error and propagated variance for every record.

    The 13-column Jacobian reuses the cached nominal and nav-perturbed
    camera poses from ray precomputation.  Returns the number of records
    whose propagated variance hit the floor.
    """
    O = us.shape[0]
    jrec = np.empty(13)
    ph = np.empty(3)
    n_floored = 0
    nll_terms = 0
    for o in range(O):
        m = point_of_row[o]
        u_obs = us[o]
        pw = p_hat[m]
        e0 = _err_for_pose(u_obs, 0.0, f, u0, Rcw_nom[o], pc_nom[o], pw)
        # pattern-point columns
        for p in range(3):
            h = _REL_STEP if abs(pw[p]) < 1.0 else _REL_STEP * abs(pw[p])
            for r in range(3):
                ph[r] = pw[r]
            ph[p] = pw[p] + h
            ep = _err_for_pose(u_obs, 0.0, f, u0, Rcw_nom[o], pc_nom[o], ph)
            ph[p] = pw[p] - h
            em = _err_for_pose(u_obs, 0.0, f, u0, Rcw_nom[o], pc_nom[o], ph)
            jrec[p] = (ep - em) / (2.0 * h)
        # observed-pixel columns: reprojection is unchanged
        ep = _err_for_pose(u_obs + _PIX_STEP, 0.0, f, u0, Rcw_nom[o], pc_nom[o], pw)
        em = _err_for_pose(u_obs - _PIX_STEP, 0.0, f, u0, Rcw_nom[o], pc_nom[o], pw)
        jrec[3] = (ep - em) / (2.0 * _PIX_STEP)
        ep = _err_for_pose(u_obs, _PIX_STEP, f, u0, Rcw_nom[o], pc_nom[o], pw)
        em = _err_for_pose(u_obs, -_PIX_STEP, f, u0, Rcw_nom[o], pc_nom[o], pw)
        jrec[4] = (ep - em) / (2.0 * _PIX_STEP)
        # navigation-pose columns from cached perturbed poses
        for p in range(6):
            h = _REL_STEP if abs(navs[o, p]) < 1.0 else _REL_STEP * abs(navs[o, p])
            ep = _err_for_pose(u_obs, 0.0, f, u0, Rcw_nav[o, p, 0], pc_nav[o, p, 0], pw)
            em = _err_for_pose(u_obs, 0.0, f, u0, Rcw_nav[o, p, 1], pc_nav[o, p, 1], pw)
            jrec[5 + p] = (ep - em) / (2.0 * h)
        # intrinsic columns: pose unchanged
        ep = _err_for_pose(u_obs, 0.0, f + _PIX_STEP, u0, Rcw_nom[o], pc_nom[o], pw)
        em = _err_for_pose(u_obs, 0.0, f - _PIX_STEP, u0, Rcw_nom[o], pc_nom[o], pw)
        jrec[11] = (ep - em) / (2.0 * _PIX_STEP)
        ep = _err_for_pose(u_obs, 0.0, f, u0 + _PIX_STEP, Rcw_nom[o], pc_nom[o], pw)
        em = _err_for_pose(u_obs, 0.0, f, u0 - _PIX_STEP, Rcw_nom[o], pc_nom[o], pw)
        jrec[12] = (ep - em) / (2.0 * _PIX_STEP)

        var = (
            jrec[3] ** 2 * var_u + jrec[4] ** 2 * var_v
            + jrec[11] ** 2 * var_f + jrec[12] ** 2 * var_u0
        )
        for x in range(3):
            for y in range(3):
                var += jrec[x] * sig_hat[m, x, y] * jrec[y]
        for x in range(6):
            for y in range(6):
                var += jrec[5 + x] * nav_covs[o, x, y] * jrec[5 + y]
        if var < VAR_FLOOR:
            var = VAR_FLOOR
            n_floored += 1
        e_out[o] = e0
        var_out[o] = var
        nll_terms += 1
    return n_floored


@njit(cache=True, nogil=True)
def evaluate_kernel(us, navs, nav_covs, starts, counts, point_of_row,
                    f, u0, sig_u, sig_v, sig_u0, sig_f, tcb,
                    p_hat, sig_hat, n_pairs, e_out, var_out):
    """Full objective evaluation over sorted observation rows.

    Fills the triangulation and reprojection outputs in place and returns
    ``(nll, status, n_floored)``; ``status`` is 1 when any pattern point is
    degenerate, in which case ``nll`` is the large surrogate.
    """
    O = us.shape[0]
    for k in range(6):
        if not np.isfinite(tcb[k]):
            return NLL_SURROGATE, 1, 0
    var_u = sig_u * sig_u
    var_v = sig_v * sig_v
    var_f = sig_f * sig_f
    var_u0 = sig_u0 * sig_u0
    pc = np.empty((O, 3)); d = np.empty((O, 3))
    pcp = np.empty((O, 8, 2, 3)); dp = np.empty((O, 8, 2, 3))
    pcs = np.empty((O, 2, 2, 3)); ds = np.empty((O, 2, 2, 3))
    h_own = np.empty((O, 8))
    Rcw_nom = np.empty((O, 3, 3)); pc_nom = np.empty((O, 3))
    Rcw_nav = np.empty((O, 6, 2, 3, 3)); pc_nav = np.empty((O, 6, 2, 3))
    _precompute_rays(us, navs, f, u0, tcb, pc, d, pcp, dp, pcs, ds, h_own,
                     Rcw_nom, pc_nom, Rcw_nav, pc_nav)
    status = _triangulate_sorted(us, navs, nav_covs, starts, counts, f, u0, tcb,
                                 var_u, var_v, var_f, var_u0,
                                 pc, d, pcp, dp, pcs, ds, h_own,
                                 p_hat, sig_hat, n_pairs)
    if status != 0:
        return NLL_SURROGATE, 1, 0
    n_floored = _reprojection_sorted(us, navs, nav_covs, point_of_row, f, u0,
                                     var_u, var_v, var_f, var_u0,
                                     p_hat, sig_hat,
                                     Rcw_nom, pc_nom, Rcw_nav, pc_nav,
                                     e_out, var_out)
    nll = 0.0
    for o in range(O):
        nll += e_out[o] ** 2 / (2.0 * var_out[o])
    return nll, 0, n_floored
