"""Fused integration kernel for the 3-SAT flow.

This is the hot path behind the trial harness: one jitted loop that does
the per-clause flow evaluation, the generic explicit Runge-Kutta stage
arithmetic (with the field saturating its argument at the state box),
the post-step projection, the per-stage non-finite guard and the Boolean
solution check.  It reproduces the arithmetic of `dmm.flow_field` +
`integrators.step` + `dmm.clamp_field` term for term (same accumulation
order), which the tests verify.

The kernel is compiled nogil so independent trials can run on a thread
pool; it holds no global state.
"""

from __future__ import annotations

import numpy as np
from numba import njit

UNSOLVED = 0
SOLVED = 1
DIVERGED = 2


@njit(cache=True, nogil=True)
def _is_solved(var_idx, signs, v):
    # clause satisfied iff some literal has (sign > 0) == (v > 0)
    for m in range(var_idx.shape[0]):
        sat = False
        for s in range(3):
            if (signs[m, s] > 0.0) == (v[var_idx[m, s]] > 0.0):
                sat = True
                break
        if not sat:
            return False
    return True


@njit(cache=True, nogil=True)
def _flow(var_idx, signs, sv, sxs, sxl, kv, kxs, kxl,
          alpha, beta, gamma, delta, epsilon, zeta):
    kv[:] = 0.0
    for m in range(var_idx.shape[0]):
        i0 = var_idx[m, 0]
        i1 = var_idx[m, 1]
        i2 = var_idx[m, 2]
        q0 = signs[m, 0]
        q1 = signs[m, 1]
        q2 = signs[m, 2]
        t0 = 1.0 - q0 * sv[i0]
        t1 = 1.0 - q1 * sv[i1]
        t2 = 1.0 - q2 * sv[i2]

        mn = t0
        amin = 0
        if t1 < mn:
            mn = t1
            amin = 1
        if t2 < mn:
            mn = t2
            amin = 2
        c = 0.5 * mn

        w_grad = sxl[m] * sxs[m]
        w_rig = (1.0 + zeta * sxl[m]) * (1.0 - sxs[m])

        g0 = w_grad * (0.5 * q0 * (t1 if t1 < t2 else t2))
        g1 = w_grad * (0.5 * q1 * (t0 if t0 < t2 else t2))
        g2 = w_grad * (0.5 * q2 * (t0 if t0 < t1 else t1))
        if amin == 0:
            g0 = g0 + w_rig * (0.5 * (q0 - sv[i0]))
        elif amin == 1:
            g1 = g1 + w_rig * (0.5 * (q1 - sv[i1]))
        else:
            g2 = g2 + w_rig * (0.5 * (q2 - sv[i2]))
        kv[i0] += g0
        kv[i1] += g1
        kv[i2] += g2

        kxs[m] = beta * (sxs[m] + epsilon) * (c - gamma)
        kxl[m] = alpha * (c - delta)


@njit(cache=True, nogil=True)
def _all_finite(a):
    for t in range(a.shape[0]):
        if not np.isfinite(a[t]):
            return False
    return True


@njit(cache=True, nogil=True)
def integrate_dmm(var_idx, signs, v, x_s, x_l, dt, weights, coeffs,
                  max_steps, check_interval,
                  alpha, beta, gamma, delta, epsilon, zeta, xl_max):
    """Integrate in place; returns (status, steps).

    status: 0 budget exhausted, 1 solved, 2 diverged (non-finite stage
    derivative).  steps is the completed-step count at exit; the solution
    predicate is tested at the initial state, every `check_interval`
    steps, and on the final step.
    """
    n = v.shape[0]
    m = x_s.shape[0]
    q = weights.shape[0]

    if _is_solved(var_idx, signs, v):
        return SOLVED, 0

    kv = np.empty((q, n))
    kxs = np.empty((q, m))
    kxl = np.empty((q, m))
    sv = np.empty(n)
    sxs = np.empty(m)
    sxl = np.empty(m)

    for step in range(1, max_steps + 1):
        for i in range(q):
            sv[:] = v
            sxs[:] = x_s
            sxl[:] = x_l
            for j in range(i):
                lam = coeffs[i, j]
                if lam != 0.0:
                    for t in range(n):
                        sv[t] += dt * lam * kv[j, t]
                    for t in range(m):
                        sxs[t] += dt * lam * kxs[j, t]
                        sxl[t] += dt * lam * kxl[j, t]
            if i > 0:
                # the flow saturates its argument at the state box; the
                # base state (i = 0) is already inside it
                for t in range(n):
                    if sv[t] > 1.0:
                        sv[t] = 1.0
                    elif sv[t] < -1.0:
                        sv[t] = -1.0
                for t in range(m):
                    if sxs[t] > 1.0:
                        sxs[t] = 1.0
                    elif sxs[t] < 0.0:
                        sxs[t] = 0.0
                    if sxl[t] > xl_max:
                        sxl[t] = xl_max
                    elif sxl[t] < 1.0:
                        sxl[t] = 1.0
            _flow(var_idx, signs, sv, sxs, sxl, kv[i], kxs[i], kxl[i],
                  alpha, beta, gamma, delta, epsilon, zeta)
            if not (_all_finite(kv[i]) and _all_finite(kxs[i])
                    and _all_finite(kxl[i])):
                return DIVERGED, step - 1  # completed steps only

        for i in range(q):
            w = dt * weights[i]
            for t in range(n):
                v[t] += w * kv[i, t]
            for t in range(m):
                x_s[t] += w * kxs[i, t]
                x_l[t] += w * kxl[i, t]

        for t in range(n):
            if v[t] > 1.0:
                v[t] = 1.0
            elif v[t] < -1.0:
                v[t] = -1.0
        for t in range(m):
            if x_s[t] > 1.0:
                x_s[t] = 1.0
            elif x_s[t] < 0.0:
                x_s[t] = 0.0
            if x_l[t] > xl_max:
                x_l[t] = xl_max
            elif x_l[t] < 1.0:
                x_l[t] = 1.0

        if step % check_interval == 0 or step == max_steps:
            if _is_solved(var_idx, signs, v):
                return SOLVED, step

    return UNSOLVED, max_steps
