"""Compiled inner loops of the time integrator.

The adaptive stepping loop runs millions of Runge-Kutta stages per
trajectory; these kernels keep that loop in machine code while the
public API stays in numpy.  Arithmetic is plain IEEE double with a
fixed operation order, so runs are bit-reproducible on one platform.

Status codes returned by advance():
    0  reached the target time
    1  sup-norm crossed the blowup threshold
    2  step size collapsed below dt_min with a growing sup-norm
    3  step size collapsed below dt_min otherwise
"""
from __future__ import annotations

import numpy as np
from numba import njit

REACHED_TARGET = 0
SUP_THRESHOLD = 1
COLLAPSE_GROWING = 2
COLLAPSE_STALLED = 3

# dispatch codes for the diffusion coefficient, resolved once per run
_PTYPE_GENERAL = 0
_PTYPE_CRITICAL = 1
_PTYPE_CONSTANT = 2

#: Accepted states clamp u components in [-NEG_CLAMP, 0) to zero; anything
#: below -NEG_CLAMP rejects the step.
NEG_CLAMP = 1e-13


def ptype_of(p: float) -> int:
    if p == 1.0:
        return _PTYPE_CRITICAL
    if p == 0.0:
        return _PTYPE_CONSTANT
    return _PTYPE_GENERAL


@njit(cache=True, nogil=True)
def _coeff(ub, p, ptype):
    if ptype == _PTYPE_CRITICAL:
        return 1.0 / (1.0 + ub)
    if ptype == _PTYPE_CONSTANT:
        return 1.0
    return (1.0 + ub) ** (-p)


@njit(cache=True, nogil=True)
def rhs(u, v, du, dv, dx, p, ptype, growth_source):
    """Flux-form right-hand side; growth_source drops diffusion and adds u^2."""
    n = u.shape[0]
    inv = 1.0 / dx
    fprev = 0.0
    gprev = 0.0
    for j in range(1, n):
        um = u[j - 1]
        up = u[j]
        ub = 0.5 * (um + up)
        gv = (v[j] - v[j - 1]) * inv
        if growth_source:
            f = -ub * gv
        else:
            f = _coeff(ub, p, ptype) * (up - um) * inv - ub * gv
        du[j - 1] = (f - fprev) * inv
        dv[j - 1] = (gv - gprev) * inv - v[j - 1] + u[j - 1]
        fprev = f
        gprev = gv
    du[n - 1] = -fprev * inv
    dv[n - 1] = -gprev * inv - v[n - 1] + u[n - 1]
    if growth_source:
        for i in range(n):
            du[i] += u[i] * u[i]


@njit(cache=True, nogil=True)
def _rk4(u, v, dt, k1u, k1v, dx, p, ptype, gs, tu, tv, k2u, k2v, k3u, k3v, k4u, k4v,
         ou, ov, ciu, civ, cou, cov):
    # classical order-4 tableau; k1 is supplied by the caller so it can be
    # shared between the full step and the first half step.  The final
    # combine is Kahan-compensated: ci* carries the low-order bits lost in
    # earlier combines, co* receives the new remainder.  Without this,
    # near-equilibrium states accumulate a systematic ulp-level mass bias
    # over ~1e6 steps.
    n = u.shape[0]
    h = 0.5 * dt
    for i in range(n):
        tu[i] = u[i] + h * k1u[i]
        tv[i] = v[i] + h * k1v[i]
    rhs(tu, tv, k2u, k2v, dx, p, ptype, gs)
    for i in range(n):
        tu[i] = u[i] + h * k2u[i]
        tv[i] = v[i] + h * k2v[i]
    rhs(tu, tv, k3u, k3v, dx, p, ptype, gs)
    for i in range(n):
        tu[i] = u[i] + dt * k3u[i]
        tv[i] = v[i] + dt * k3v[i]
    rhs(tu, tv, k4u, k4v, dx, p, ptype, gs)
    s = dt / 6.0
    for i in range(n):
        y = ciu[i] + s * (k1u[i] + 2.0 * (k2u[i] + k3u[i]) + k4u[i])
        t = u[i] + y
        cou[i] = y - (t - u[i])
        ou[i] = t
        y = civ[i] + s * (k1v[i] + 2.0 * (k2v[i] + k3v[i]) + k4v[i])
        t = v[i] + y
        cov[i] = y - (t - v[i])
        ov[i] = t


@njit(cache=True, nogil=True)
def try_step(u, v, cu, cv, k1u, k1v, dt, rel_tol, dx, p, ptype, gs, work,
             au, av, acu, acv):
    """One step-doubling attempt; on acceptance writes the fine solution
    (negatives in [-NEG_CLAMP, 0) clamped) into au, av and the carried
    compensation into acu, acv.

    cu, cv hold the state's Kahan compensation going in.  Returns
    (accepted, error_estimate); the estimate is the max over all
    components of |fine - coarse| / (1 + |fine|).
    """
    n = u.shape[0]
    tu = work[0]
    tv = work[1]
    k2u = work[2]
    k2v = work[3]
    k3u = work[4]
    k3v = work[5]
    k4u = work[6]
    k4v = work[7]
    bu = work[8]
    bv = work[9]
    hu = work[10]
    hv = work[11]
    mu = work[12]
    mv = work[13]
    ku = work[14]
    kv = work[15]
    dmu = work[16]
    dmv = work[17]
    cmu = work[18]
    cmv = work[19]

    _rk4(u, v, dt, k1u, k1v, dx, p, ptype, gs, tu, tv, k2u, k2v, k3u, k3v, k4u, k4v,
         bu, bv, cu, cv, dmu, dmv)
    half = 0.5 * dt
    _rk4(u, v, half, k1u, k1v, dx, p, ptype, gs, tu, tv, k2u, k2v, k3u, k3v, k4u, k4v,
         mu, mv, cu, cv, cmu, cmv)
    rhs(mu, mv, ku, kv, dx, p, ptype, gs)
    _rk4(mu, mv, half, ku, kv, dx, p, ptype, gs, tu, tv, k2u, k2v, k3u, k3v, k4u, k4v,
         hu, hv, cmu, cmv, acu, acv)

    err = 0.0
    for i in range(n):
        e = abs(hu[i] - bu[i]) / (1.0 + abs(hu[i]))
        if e > err:
            err = e
        e = abs(hv[i] - bv[i]) / (1.0 + abs(hv[i]))
        if e > err:
            err = e
    if not np.isfinite(err) or err > rel_tol:
        return False, err
    for i in range(n):
        if not (np.isfinite(hu[i]) and np.isfinite(hv[i])):
            return False, err
        if hu[i] < -NEG_CLAMP:
            return False, err
    for i in range(n):
        x = hu[i]
        if x < 0.0:
            au[i] = 0.0
            acu[i] = 0.0
        else:
            au[i] = x
        av[i] = hv[i]
    return True, err


@njit(cache=True, nogil=True)
def stable_dt_kernel(u, v, dx, p, ptype, cfl_safety):
    """Explicit stability bound: diffusion of u, drift along grad v, diffusion of v."""
    n = u.shape[0]
    amax = 0.0
    gmax = 0.0
    for j in range(1, n):
        ub = 0.5 * (u[j - 1] + u[j])
        aa = _coeff(ub, p, ptype)
        if aa > amax:
            amax = aa
        g = abs(v[j] - v[j - 1]) / dx
        if g > gmax:
            gmax = g
    dt = dx * dx / (2.0 * amax)
    cand = dx / (gmax + 1e-30)
    if cand < dt:
        dt = cand
    cand = dx * dx / 2.0
    if cand < dt:
        dt = cand
    return cfl_safety * dt


@njit(cache=True, nogil=True)
def advance(u, v, t, t_target, dx, p, ptype, gs, cfl_safety, rel_tol, dt_min, dt_max,
            u_max_threshold, sup_prev_in, last_dt_in):
    """Advance (u, v) in place until t_target or breakdown.

    Returns (status, t, last_accepted_dt, sup_u, n_steps, n_rejected).
    sup_prev_in seeds the growth test used when the step collapses.
    """
    n = u.shape[0]
    work = np.empty((20, n))
    k1u = np.empty(n)
    k1v = np.empty(n)
    au = np.empty(n)
    av = np.empty(n)
    cu = np.zeros(n)
    cv = np.zeros(n)
    acu = np.empty(n)
    acv = np.empty(n)

    sup_prev = sup_prev_in
    sup_cur = 0.0
    for i in range(n):
        if u[i] > sup_cur:
            sup_cur = u[i]
    last_dt = last_dt_in
    nsteps = 0
    nrej = 0
    snap_tol = 1e-14 * (t_target if t_target > 1.0 else 1.0)

    while True:
        rem = t_target - t
        if rem <= snap_tol:
            t = t_target
            return REACHED_TARGET, t, last_dt, sup_cur, nsteps, nrej
        dt = stable_dt_kernel(u, v, dx, p, ptype, cfl_safety)
        if dt > dt_max:
            dt = dt_max
        if dt > rem:
            dt = rem
        rhs(u, v, k1u, k1v, dx, p, ptype, gs)
        while True:
            ok, err = try_step(u, v, cu, cv, k1u, k1v, dt, rel_tol, dx, p, ptype, gs,
                               work, au, av, acu, acv)
            if ok:
                break
            dt = 0.5 * dt
            nrej += 1
            if dt < dt_min:
                if sup_cur > sup_prev:
                    return COLLAPSE_GROWING, t, last_dt, sup_cur, nsteps, nrej
                return COLLAPSE_STALLED, t, last_dt, sup_cur, nsteps, nrej
        for i in range(n):
            u[i] = au[i]
            v[i] = av[i]
            cu[i] = acu[i]
            cv[i] = acv[i]
        t = t + dt
        last_dt = dt
        nsteps += 1
        sup_prev = sup_cur
        sup_cur = 0.0
        for i in range(n):
            if u[i] > sup_cur:
                sup_cur = u[i]
        if sup_cur > u_max_threshold:
            return SUP_THRESHOLD, t, last_dt, sup_cur, nsteps, nrej
