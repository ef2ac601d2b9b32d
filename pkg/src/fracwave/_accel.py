"""@njit twins of the spectral kernel evaluation.

Same head/tail algorithm as the NumPy path in ``kernels``: singularity
substitution plus adaptive GK15 on [0, xi0], exact trig-component tails
via the integration-by-parts series beyond.  Scalar code throughout so
numba can compile the whole covariance-lag sweep, including a prange
batch driver whose per-lag results are independent of thread count.

Import of this module compiles nothing by itself (lazy dispatch); the
first kernel call pays the JIT cost once per machine thanks to
``cache=True``.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

_NODES = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_WG = np.array([
    0.0, 0.129484966168870, 0.0, 0.279705391489277, 0.0,
    0.381830050505119, 0.0, 0.417959183673469, 0.0, 0.381830050505119,
    0.0, 0.279705391489277, 0.0, 0.129484966168870, 0.0,
])

_ASYM_Z = 50.0
_HEAD_CAP = 2048  # adaptive panel budget for the head integral


@njit(cache=True, inline="always")
def _overlap_ratio(T, S, xi):
    # overlap(T,S,xi)/xi^2 with the Taylor branch below phase 1e-3
    a = T - S
    b = T + S
    if b * xi < 1e-3:
        c2 = (b * b * b - a * a * a) / 24.0 - S * a * a / 4.0
        c4 = -(b ** 5 - a ** 5) / 480.0 + S * a ** 4 / 48.0
        return c2 + c4 * xi * xi
    return ((math.sin(a * xi) - math.sin(b * xi)) / (4.0 * xi)
            + 0.5 * S * math.cos(a * xi)) / (xi * xi)


@njit(cache=True, inline="always")
def _omc(x):
    # 1 - cos(x), cancellation-free
    s = math.sin(0.5 * x)
    return 2.0 * s * s


@njit(cache=True, inline="always")
def _head_f(kind, a1, a2, a3, xi):
    if kind == 0:
        return _overlap_ratio(a1, a2, xi) * math.cos(a3 * xi)
    if kind == 1:
        return _overlap_ratio(a1, a1, xi) * _omc(a2 * xi) * _omc(a3 * xi)
    T = a1 + a2
    ratio_f = (_overlap_ratio(T, T, xi) + _overlap_ratio(a1, a1, xi)
               - 2.0 * _overlap_ratio(T, a1, xi))
    return ratio_f * _omc(a3 * xi)


@njit(cache=True)
def _head_panel(kind, a1, a2, a3, inv_p, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    k15 = 0.0
    g7 = 0.0
    for i in range(15):
        u = mid + half * _NODES[i]
        xi = u ** inv_p
        y = _head_f(kind, a1, a2, a3, xi)
        k15 += _WK[i] * y
        g7 += _WG[i] * y
    k15 *= half
    g7 *= half
    err = abs(k15 - g7)
    floor = 1e-16 * abs(k15)
    if err < floor:
        err = floor
    return k15, err


@njit(cache=True)
def _head_quad(kind, a1, a2, a3, H, x0, rel_tol, abs_tol, omega_max):
    """int_0^x0 xi^(1-2H) f(xi) dxi via u = xi^(2-2H) substitution."""
    p = 2.0 - 2.0 * H
    inv_p = 1.0 / p
    B = x0 ** p

    n0 = int(omega_max * x0 / 2.0) + 4
    if n0 > 64:
        n0 = 64
    lefts = np.empty(_HEAD_CAP)
    rights = np.empty(_HEAD_CAP)
    vals = np.empty(_HEAD_CAP)
    errs = np.empty(_HEAD_CAP)
    n = n0
    total = 0.0
    terr = 0.0
    for i in range(n0):
        lefts[i] = B * i / n0
        rights[i] = B * (i + 1) / n0
        v, e = _head_panel(kind, a1, a2, a3, inv_p, lefts[i], rights[i])
        vals[i] = v
        errs[i] = e
        total += v
        terr += e

    target_abs = abs_tol * p
    while terr > max(target_abs, rel_tol * abs(total)) and n < _HEAD_CAP:
        iw = 0
        ew = errs[0]
        for i in range(1, n):
            if errs[i] > ew:
                ew = errs[i]
                iw = i
        lo = lefts[iw]
        hi = rights[iw]
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        v1, e1 = _head_panel(kind, a1, a2, a3, inv_p, lo, mid)
        v2, e2 = _head_panel(kind, a1, a2, a3, inv_p, mid, hi)
        total += v1 + v2 - vals[iw]
        terr += e1 + e2 - errs[iw]
        lefts[iw] = lo
        rights[iw] = mid
        vals[iw] = v1
        errs[iw] = e1
        lefts[n] = mid
        rights[n] = hi
        vals[n] = v2
        errs[n] = e2
        n += 1

    ok = terr <= max(target_abs, rel_tol * abs(total))
    return total / p, terr / p, ok


@njit(cache=True)
def _q_asym(mu, z):
    """Re/Im of int_z^inf e^(iu) u^(-mu) du plus a remainder bound, z >= 50."""
    acc_re = 0.0
    acc_im = 0.0
    poch = 1.0
    zpow = z ** (-mu)
    best = 1.0e308
    for k in range(60):
        denom = mu + k - 1.0
        if denom <= 0.0:
            bound = 1.0e308
        else:
            bound = poch * zpow * z / denom
        if bound >= best or bound < 1e-300:
            break
        best = bound
        m = k & 3
        if m == 0:
            acc_re += poch * zpow
        elif m == 1:
            acc_im -= poch * zpow
        elif m == 2:
            acc_re -= poch * zpow
        else:
            acc_im += poch * zpow
        poch *= mu + k
        zpow /= z
    cz = math.cos(z)
    sz = math.sin(z)
    q_re = -(cz * acc_im + sz * acc_re)
    q_im = cz * acc_re - sz * acc_im
    return q_re, q_im, best


@njit(cache=True)
def _tail_trig(is_sin, omega, mu, a):
    """int_a^inf trig(omega xi) xi^(-mu) dxi; returns (value, err bound)."""
    if omega == 0.0:
        if is_sin == 1:
            return 0.0, 0.0
        return a ** (1.0 - mu) / (mu - 1.0), 0.0
    scale = omega ** (mu - 1.0)
    z0 = omega * a
    if z0 >= _ASYM_Z:
        q_re, q_im, bound = _q_asym(mu, z0)
        if is_sin == 1:
            return scale * q_im, scale * bound
        return scale * q_re, scale * bound

    a1 = _ASYM_Z / omega
    cap = 0.5 * math.pi / omega
    val = 0.0
    err = 0.0
    lo = a
    while lo < a1:
        w = 0.35 * lo
        if w > cap:
            w = cap
        hi = lo + w
        if hi > a1:
            hi = a1
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        k15 = 0.0
        g7 = 0.0
        for i in range(15):
            x = mid + half * _NODES[i]
            if is_sin == 1:
                y = math.sin(omega * x)
            else:
                y = math.cos(omega * x)
            y *= x ** (-mu)
            k15 += _WK[i] * y
            g7 += _WG[i] * y
        val += half * k15
        err += abs(half * (k15 - g7))
        lo = hi
    q_re, q_im, bound = _q_asym(mu, omega * a1)
    if is_sin == 1:
        val += scale * q_im
    else:
        val += scale * q_re
    err += scale * bound
    return val, err


@njit(cache=True, inline="always")
def _sgn(x):
    return 1.0 if x >= 0.0 else -1.0


@njit(cache=True)
def _cov_tail(T, S, dx, H, x0):
    a = T - S
    b = T + S
    mu1 = 1.0 + 2.0 * H
    mu2 = 2.0 + 2.0 * H
    val = 0.0
    err = 0.0

    v, e = _tail_trig(0, a + dx, mu1, x0)
    val += 0.25 * S * v
    err += 0.25 * S * e
    v, e = _tail_trig(0, abs(a - dx), mu1, x0)
    val += 0.25 * S * v
    err += 0.25 * S * e

    v, e = _tail_trig(1, a + dx, mu2, x0)
    val += 0.125 * v
    err += 0.125 * e
    v, e = _tail_trig(1, abs(a - dx), mu2, x0)
    val += 0.125 * _sgn(a - dx) * v
    err += 0.125 * e
    v, e = _tail_trig(1, b + dx, mu2, x0)
    val -= 0.125 * v
    err += 0.125 * e
    v, e = _tail_trig(1, abs(b - dx), mu2, x0)
    val -= 0.125 * _sgn(b - dx) * v
    err += 0.125 * e
    return val, err


@njit(cache=True)
def _d2_tail(t, u, h, H, x0):
    mu1 = 1.0 + 2.0 * H
    mu2 = 2.0 + 2.0 * H
    two_t = 2.0 * t
    # cos-weight expansion of (1-cos u.xi)(1-cos h.xi)
    cs = np.empty(5)
    oms = np.empty(5)
    cs[0] = 1.0
    oms[0] = 0.0
    cs[1] = -1.0
    oms[1] = u
    cs[2] = -1.0
    oms[2] = h
    cs[3] = 0.5
    oms[3] = u + h
    cs[4] = 0.5
    oms[4] = abs(u - h)
    val = 0.0
    err = 0.0
    for i in range(5):
        c = cs[i]
        om = oms[i]
        v, e = _tail_trig(0, om, mu1, x0)
        val += 0.5 * t * c * v
        err += 0.5 * t * abs(c) * e
        v, e = _tail_trig(1, two_t + om, mu2, x0)
        val -= 0.125 * c * v
        err += 0.125 * abs(c) * e
        v, e = _tail_trig(1, abs(two_t - om), mu2, x0)
        val -= 0.125 * c * _sgn(two_t - om) * v
        err += 0.125 * abs(c) * e
    return val, err


@njit(cache=True)
def _d3_tail(t, tau, u, H, x0):
    mu1 = 1.0 + 2.0 * H
    mu2 = 2.0 + 2.0 * H
    val = 0.0
    err = 0.0
    # cos family: (t + tau/2) at 0, -t at tau
    ccs = np.empty(2)
    coms = np.empty(2)
    ccs[0] = t + 0.5 * tau
    coms[0] = 0.0
    ccs[1] = -t
    coms[1] = tau
    for i in range(2):
        c = ccs[i]
        om = coms[i]
        v, e = _tail_trig(0, om, mu1, x0)
        val += c * v
        err += abs(c) * e
        v, e = _tail_trig(0, om + u, mu1, x0)
        val -= 0.5 * c * v
        err += 0.5 * abs(c) * e
        v, e = _tail_trig(0, abs(om - u), mu1, x0)
        val -= 0.5 * c * v
        err += 0.5 * abs(c) * e
    # sin family
    scs = np.empty(4)
    soms = np.empty(4)
    scs[0] = -0.5
    soms[0] = tau
    scs[1] = 0.5
    soms[1] = 2.0 * t + tau
    scs[2] = -0.25
    soms[2] = 2.0 * t + 2.0 * tau
    scs[3] = -0.25
    soms[3] = 2.0 * t
    for i in range(4):
        c = scs[i]
        om = soms[i]
        v, e = _tail_trig(1, om, mu2, x0)
        val += c * v
        err += abs(c) * e
        v, e = _tail_trig(1, om + u, mu2, x0)
        val -= 0.5 * c * v
        err += 0.5 * abs(c) * e
        v, e = _tail_trig(1, abs(om - u), mu2, x0)
        val -= 0.5 * c * _sgn(om - u) * v
        err += 0.5 * abs(c) * e
    return val, err


@njit(cache=True)
def _eval_one(kind, a1, a2, a3, H, rel_tol, abs_tol):
    x0 = 1.0 if a1 >= 1.0 else 1.0 / a1
    if kind == 0:
        omega_max = a1 + a2 + a3
    elif kind == 1:
        omega_max = 2.0 * a1 + a2 + a3
    else:
        omega_max = 2.0 * a1 + 2.0 * a2 + a3
    hv, he, ok = _head_quad(kind, a1, a2, a3, H, x0,
                            0.5 * rel_tol, 0.5 * abs_tol, omega_max)
    if kind == 0:
        tv, te = _cov_tail(a1, a2, a3, H, x0)
    elif kind == 1:
        tv, te = _d2_tail(a1, a2, a3, H, x0)
    else:
        tv, te = _d3_tail(a1, a2, a3, H, x0)
    return hv + tv, he + te, ok


@njit(cache=True, parallel=True)
def _cov_lag_batch(T, S, lags, H, rel_tol, abs_tol):
    n = lags.shape[0]
    values = np.empty(n)
    errs = np.empty(n)
    oks = np.empty(n, dtype=np.bool_)
    for i in prange(n):
        v, e, ok = _eval_one(0, T, S, lags[i], H, rel_tol, abs_tol)
        values[i] = v
        errs[i] = e
        oks[i] = ok
    return values, errs, oks


# ------------------------------------------------------------------
# python-visible wrappers


def eval_kernel(kind: int, a1: float, a2: float, a3: float, H: float,
                rel_tol: float, abs_tol: float):
    v, e, ok = _eval_one(kind, float(a1), float(a2), float(a3), float(H),
                         float(rel_tol), float(abs_tol))
    return float(v), float(e), bool(ok)


def cov_lag_batch(T: float, S: float, lags: np.ndarray, H: float,
                  rel_tol: float, abs_tol: float):
    return _cov_lag_batch(float(T), float(S),
                          np.ascontiguousarray(lags, dtype=np.float64),
                          float(H), float(rel_tol), float(abs_tol))
