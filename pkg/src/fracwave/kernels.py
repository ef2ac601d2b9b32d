"""Closed-form time-integrated spectral kernels of the solution field.

Scope: d = 1 with time-white noise (temporal exponent 1/2) and spatial
Hurst exponent H in (0, 1).  Every quantity reduces to a single spectral
integral

    int_0^inf  W(xi) * xi^(-1-2H) dxi

with a bounded oscillatory numerator W built from the time-overlap
integral of two wave propagators.  The integral is split at
xi0 = max(1, 1/t):

* [0, xi0]   endpoint power xi^(1-2H) times the smooth ratio W/xi^2,
  handled by the singularity-regularizing adaptive rule,
* [xi0, inf) expanded exactly into finitely many cos/sin components with
  power-law envelopes and evaluated by ``quad.tail_power_trig`` to near
  machine precision.

Two implementations exist: the NumPy one below (the reference, built on
``quad``) and an @njit twin in ``_accel`` used for bulk covariance
assembly.  ``backend.active_backend()`` selects between them; they agree
to ~1e-12 relative.

Prefactor convention: the noise spectral measure is C_H |xi|^(1-2H) dxi
on the full line with C_H = Gamma(2H+1) sin(pi H) / (2 pi).  The metric
combinations d2^2 and d3^2 below carry the prefactors (8 C_H resp. 4 C_H
over the half line) forced by their four-point covariance expansions; the
consistency tests pin them against direct cov() combinations.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from . import quad
from .backend import active_backend
from .errors import ConvergenceError, ParameterError, RoundoffError
from .params import HurstParams, KernelConfig, SpaceTimePoint, spectral_constant

__all__ = [
    "time_overlap_integral",
    "variance",
    "cov",
    "d1",
    "d2_sq",
    "d3_sq",
    "lightcone_cov",
    "cov_lag_array",
]

_DEFAULT_CFG = KernelConfig()

# Taylor switch for the overlap closed form; below this phase the exact
# expression loses all digits to cancellation (the limit is O(xi^2)).
_SMALL_PHASE = 1e-3

_KIND_COV = 0
_KIND_D2 = 1
_KIND_D3 = 2


def _check_hurst(H: float):
    if not (isinstance(H, (int, float)) and math.isfinite(H) and 0.0 < H < 1.0):
        raise ParameterError(f"spatial Hurst exponent must lie in (0, 1), got {H!r}")


def _as_point(p) -> SpaceTimePoint:
    if isinstance(p, SpaceTimePoint):
        return p
    t, x = p
    return SpaceTimePoint(float(t), float(x))


# ---------------------------------------------------------------------------
# time overlap integral


def time_overlap_integral(t: float, s: float, xi: float) -> float:
    """int_0^s sin((t-r) xi) sin((s-r) xi) dr for 0 <= s <= t, xi > 0.

    Closed form -sin(xi(t+s))/(4 xi) + sin(xi(t-s))/(4 xi)
    + (s/2) cos(xi(t-s)); switches to the 4th-order Taylor expansion when
    xi (t+s) < 1e-3 to avoid catastrophic cancellation (the value tends
    to 0 like xi^2).
    """
    if not (math.isfinite(t) and math.isfinite(s) and math.isfinite(xi)):
        raise ParameterError("time_overlap_integral: inputs must be finite")
    if s < 0.0 or s > t:
        raise ParameterError(f"time_overlap_integral: need 0 <= s <= t, got t={t}, s={s}")
    if xi <= 0.0:
        raise ParameterError(f"time_overlap_integral: need xi > 0, got xi={xi}")
    return float(_overlap_np(t, s, np.asarray([xi]))[0])


def _overlap_series_coeffs(T: float, S: float):
    a = T - S
    b = T + S
    c2 = (b ** 3 - a ** 3) / 24.0 - S * a * a / 4.0
    c4 = -(b ** 5 - a ** 5) / 480.0 + S * a ** 4 / 48.0
    return c2, c4


def _overlap_np(T: float, S: float, xi: np.ndarray) -> np.ndarray:
    """Vectorized overlap integral, cancellation-safe near xi = 0."""
    a = T - S
    b = T + S
    with np.errstate(invalid="ignore", divide="ignore"):
        closed = (np.sin(a * xi) - np.sin(b * xi)) / (4.0 * xi) + 0.5 * S * np.cos(a * xi)
    c2, c4 = _overlap_series_coeffs(T, S)
    series = (c2 + c4 * xi * xi) * xi * xi
    return np.where(b * xi < _SMALL_PHASE, series, closed)


def _overlap_ratio_np(T: float, S: float, xi: np.ndarray) -> np.ndarray:
    """overlap(T, S, xi) / xi^2, finite at xi = 0."""
    a = T - S
    b = T + S
    xi2 = xi * xi
    with np.errstate(invalid="ignore", divide="ignore"):
        closed = ((np.sin(a * xi) - np.sin(b * xi)) / (4.0 * xi)
                  + 0.5 * S * np.cos(a * xi)) / xi2
    c2, c4 = _overlap_series_coeffs(T, S)
    series = c2 + c4 * xi2
    return np.where(b * xi < _SMALL_PHASE, series, closed)


def _one_minus_cos(x: np.ndarray) -> np.ndarray:
    s = np.sin(0.5 * x)
    return 2.0 * s * s


# ---------------------------------------------------------------------------
# oscillatory tail decomposition
#
# Components are triples (is_sin, coef, omega): cos terms carry envelope
# xi^(-1-2H), sin terms xi^(-2-2H) (one extra 1/xi from the overlap).


def _sign(x: float) -> float:
    return 1.0 if x >= 0.0 else -1.0


def _cov_components(T: float, S: float, dx: float):
    a = T - S
    b = T + S
    comps = [
        (0, 0.25 * S, a + dx),
        (0, 0.25 * S, abs(a - dx)),
        (1, 0.125, a + dx),
        (1, 0.125 * _sign(a - dx), abs(a - dx)),
        (1, -0.125, b + dx),
        (1, -0.125 * _sign(b - dx), abs(b - dx)),
    ]
    return comps


def _d2_components(t: float, u: float, h: float):
    # (1-cos u.xi)(1-cos h.xi) = sum of cos components with these weights
    base = [(1.0, 0.0), (-1.0, u), (-1.0, h), (0.5, u + h), (0.5, abs(u - h))]
    two_t = 2.0 * t
    comps = []
    for c, om in base:
        comps.append((0, 0.5 * t * c, om))
        comps.append((1, -0.125 * c, two_t + om))
        comps.append((1, -0.125 * c * _sign(two_t - om), abs(two_t - om)))
    return comps

def _d3_components(t: float, tau: float, u: float):
    # F(xi) = (t + tau/2) - t cos(tau.xi)
    #         + [ -sin(tau.xi)/2 + sin((2t+tau)xi)/2
    #             - sin((2t+2tau)xi)/4 - sin(2t.xi)/4 ] / xi
    f_cos = [(t + 0.5 * tau, 0.0), (-t, tau)]
    f_sin = [(-0.5, tau), (0.5, 2.0 * t + tau),
             (-0.25, 2.0 * t + 2.0 * tau), (-0.25, 2.0 * t)]
    comps = []
    for c, om in f_cos:
        comps.append((0, c, om))
        comps.append((0, -0.5 * c, om + u))
        comps.append((0, -0.5 * c, abs(om - u)))
    for c, om in f_sin:
        comps.append((1, c, om))
        comps.append((1, -0.5 * c, om + u))
        comps.append((1, -0.5 * c * _sign(om - u), abs(om - u)))
    return comps


# ---------------------------------------------------------------------------
# NumPy evaluation of head + tail


def _head_integrand(kind: int, a1: float, a2: float, a3: float, eps: float):
    """Smooth factor f with integrand = xi^(1-2H) f(xi) on [0, xi0]."""
    if kind == _KIND_COV:
        T, S, dx = a1, a2, a3

        def f(xi):
            out = _overlap_ratio_np(T, S, xi) * np.cos(dx * xi)
            if eps > 0.0:
                out = out * np.exp(-eps * xi * xi)
            return out
    elif kind == _KIND_D2:
        t, u, h = a1, a2, a3

        def f(xi):
            out = (_overlap_ratio_np(t, t, xi)
                   * _one_minus_cos(u * xi) * _one_minus_cos(h * xi))
            if eps > 0.0:
                out = out * np.exp(-eps * xi * xi)
            return out
    else:
        t, tau, u = a1, a2, a3
        T = t + tau

        def f(xi):
            ratio_f = (_overlap_ratio_np(T, T, xi) + _overlap_ratio_np(t, t, xi)
                       - 2.0 * _overlap_ratio_np(T, t, xi))
            out = ratio_f * _one_minus_cos(u * xi)
            if eps > 0.0:
                out = out * np.exp(-eps * xi * xi)
            return out
    return f


def _full_integrand(kind: int, a1: float, a2: float, a3: float, H: float, eps: float):
    head = _head_integrand(kind, a1, a2, a3, eps)

    def f(xi):
        return head(xi) * np.power(xi, 1.0 - 2.0 * H)
    return f


def _osc_sup_bound(kind: int, a1: float, a2: float, a3: float, x0: float) -> float:
    """Analytic sup of |W(xi)| on [x0, inf), for damped-tail remainders."""
    if kind == _KIND_COV:
        return 0.5 * a2 + 0.5 / x0
    if kind == _KIND_D2:
        return 4.0 * (0.5 * a1 + 0.25 / x0)
    t, tau = a1, a2
    return 2.0 * (2.0 * t + 1.5 * tau + 1.5 / x0)


def _eval_np(kind: int, a1: float, a2: float, a3: float, H: float, cfg: KernelConfig):
    """Half-line spectral integral for one kernel; returns (value, err, ok)."""
    t_scale = a1  # dominant time: T for cov, t for d2/d3
    x0 = max(1.0, 1.0 / t_scale)
    alpha = 1.0 - 2.0 * H
    eps = cfg.damping_eps

    head = quad.integrate_singular(
        _head_integrand(kind, a1, a2, a3, eps), alpha, 0.0, x0,
        rel_tol=0.5 * cfg.rel_tol, abs_tol=0.5 * cfg.abs_tol)
    value = head.value
    err = head.err_est
    ok = head.converged

    if eps > 0.0:
        # damped tail: finite numeric stage with an analytic Gaussian remainder
        bound = _osc_sup_bound(kind, a1, a2, a3, x0)
        x_cut = x0 + math.sqrt(max(1.0, math.log(max(bound, 1.0) / cfg.abs_tol)) / eps)
        omega_max = 2.0 * (a1 + a2 + a3) + 1.0
        n_per = min(4096, int((x_cut - x0) * omega_max / math.pi) + 1)
        tail = quad.integrate_adaptive(
            _full_integrand(kind, a1, a2, a3, H, eps), x0, x_cut,
            rel_tol=0.5 * cfg.rel_tol, abs_tol=0.5 * cfg.abs_tol,
            max_panels=max(4096, 2 * n_per), min_panels=n_per)
        rem = bound * math.exp(-eps * x_cut * x_cut) * x_cut ** (-2.0 * H) / (2.0 * H)
        return value + tail.value, err + tail.err_est + rem, ok and tail.converged

    if kind == _KIND_COV:
        comps = _cov_components(a1, a2, a3)
    elif kind == _KIND_D2:
        comps = _d2_components(a1, a2, a3)
    else:
        comps = _d3_components(a1, a2, a3)

    mu_cos = 1.0 + 2.0 * H
    mu_sin = 2.0 + 2.0 * H
    for is_sin, coef, omega in comps:
        if coef == 0.0:
            continue
        v, e = quad.tail_power_trig("sin" if is_sin else "cos", omega,
                                    mu_sin if is_sin else mu_cos, x0)
        value += coef * v
        err += abs(coef) * e
    return value, err, ok


def _eval_dispatch(kind: int, a1: float, a2: float, a3: float, H: float,
                   cfg: KernelConfig):
    if cfg.damping_eps == 0.0 and active_backend() == "numba":
        from . import _accel
        return _accel.eval_kernel(kind, a1, a2, a3, H, cfg.rel_tol, cfg.abs_tol)
    return _eval_np(kind, a1, a2, a3, H, cfg)


def _finish(name: str, value: float, err: float, ok: bool, cfg: KernelConfig) -> float:
    if not ok or err > max(cfg.abs_tol, cfg.rel_tol * abs(value)) * 4.0:
        raise ConvergenceError(
            f"{name} quadrature did not converge (value={value:.9g}, err={err:.3g})",
            value=value, err_est=err)
    return value


# ---------------------------------------------------------------------------
# public kernels


def variance(t: float, H: float, cfg: KernelConfig | None = None) -> float:
    """Var u(t, x): C_H int_R [t/2 - sin(2t|xi|)/(4|xi|)] |xi|^(-1-2H) dxi.

    Scales exactly as t^(2H+1); for H = 1/2 equals t^2/4.
    """
    cfg = cfg or _DEFAULT_CFG
    _check_hurst(H)
    if not (math.isfinite(t) and t >= 0.0):
        raise ParameterError(f"variance: time must be nonnegative, got {t}")
    if t == 0.0:
        return 0.0
    value, err, ok = _eval_dispatch(_KIND_COV, t, t, 0.0, H, cfg)
    c = 2.0 * spectral_constant(H)
    return _finish("variance", c * value, c * err, ok, cfg)


def cov(p, q, H: float, cfg: KernelConfig | None = None) -> float:
    """Covariance of the solution at two space-time points.

    C_H int_R overlap(t v s, t ^ s, |xi|) cos((x-y) xi) |xi|^(-1-2H) dxi.
    Symmetric in (p, q) and stationary in space by construction: the two
    points enter only through (t v s, t ^ s, |x - y|).
    """
    cfg = cfg or _DEFAULT_CFG
    _check_hurst(H)
    p = _as_point(p)
    q = _as_point(q)
    T = max(p.t, q.t)
    S = min(p.t, q.t)
    if S == 0.0:
        return 0.0
    dx = abs(p.x - q.x)
    value, err, ok = _eval_dispatch(_KIND_COV, T, S, dx, H, cfg)
    c = 2.0 * spectral_constant(H)
    return _finish("cov", c * value, c * err, ok, cfg)


def d1(p, q, H: float, cfg: KernelConfig | None = None) -> float:
    """Natural L2 metric sqrt(E|u(p) - u(q)|^2) of the solution field."""
    cfg = cfg or _DEFAULT_CFG
    p = _as_point(p)
    q = _as_point(q)
    rad = variance(p.t, H, cfg) + variance(q.t, H, cfg) - 2.0 * cov(p, q, H, cfg)
    if rad < -1e3 * cfg.abs_tol:
        raise RoundoffError(
            f"d1 radicand {rad:.3g} is far below zero; kernel inconsistency")
    return math.sqrt(rad) if rad > 0.0 else 0.0


def d2_sq(t: float, h: float, x: float, y: float, H: float,
          cfg: KernelConfig | None = None) -> float:
    """E|Delta_h u(t,x) - Delta_h u(t,y)|^2 for spatial increments.

    8 C_H int_0^inf [t/2 - sin(2 xi t)/(4 xi)] [1-cos(|x-y| xi)]
    [1-cos(h xi)] xi^(-1-2H) dxi; the prefactor is pinned by the ten-term
    four-point covariance expansion over the even spectral measure.
    """
    cfg = cfg or _DEFAULT_CFG
    _check_hurst(H)
    if not (math.isfinite(t) and t > 0.0):
        raise ParameterError(f"d2_sq: time must be positive, got {t}")
    if not (math.isfinite(h) and math.isfinite(x) and math.isfinite(y)):
        raise ParameterError("d2_sq: inputs must be finite")
    if h == 0.0 or x == y:
        return 0.0
    value, err, ok = _eval_dispatch(_KIND_D2, t, abs(x - y), abs(h), H, cfg)
    c = 8.0 * spectral_constant(H)
    return _finish("d2_sq", c * value, c * err, ok, cfg)


def d3_sq(t: float, tau: float, x: float, y: float, H: float,
          cfg: KernelConfig | None = None) -> float:
    """E|Delta_tau u(t,x) - Delta_tau u(t,y)|^2 for temporal increments.

    4 C_H int_0^inf [1-cos(|x-y| xi)] xi^(-1-2H) (f1+f2+f3)(t,tau,xi) dxi
    with f1 = t[1-cos(tau xi)], f2 = tau/2 - sin(tau xi)/(2 xi),
    f3 = -[sin(xi(t+tau))-sin(xi t)][cos(xi(t+tau))-cos(xi t)]/(2 xi).
    The sum f1+f2+f3 is a squared modulus, hence nonnegative; coded here
    as overlap(T,T) + overlap(t,t) - 2 overlap(T,t) with T = t + tau.
    """
    cfg = cfg or _DEFAULT_CFG
    _check_hurst(H)
    if not (math.isfinite(t) and t > 0.0):
        raise ParameterError(f"d3_sq: time must be positive, got {t}")
    if not (math.isfinite(tau) and tau > 0.0):
        raise ParameterError(f"d3_sq: time shift must be positive, got {tau}")
    if x == y:
        return 0.0
    value, err, ok = _eval_dispatch(_KIND_D3, t, tau, abs(x - y), H, cfg)
    c = 4.0 * spectral_constant(H)
    return _finish("d3_sq", c * value, c * err, ok, cfg)


def f123(t: float, tau: float, xi) -> np.ndarray:
    """The temporal-increment spectral numerator f1 + f2 + f3 at given xi.

    Exposed for the pointwise nonnegativity checks; equals
    overlap(T,T,xi) + overlap(t,t,xi) - 2 overlap(T,t,xi), T = t + tau.
    """
    xi = np.asarray(xi, dtype=np.float64)
    T = t + tau
    return (_overlap_np(T, T, xi) + _overlap_np(t, t, xi)
            - 2.0 * _overlap_np(T, t, xi))


def lightcone_cov(p, q) -> float:
    """Exact H = 1/2 covariance: the light-cone overlap area over 4.

    Both cones are intervals shrinking at unit speed, so the overlap
    length is max(0, D - 2r) with
    D = min(x+t, y+s) - max(x-t, y-s), giving cov = max(0, D)^2 / 16.
    """
    p = _as_point(p)
    q = _as_point(q)
    D = min(p.x + p.t, q.x + q.t) - max(p.x - p.t, q.x - q.t)
    return (D * D / 16.0) if D > 0.0 else 0.0


def cov_lag_array(T: float, S: float, lags: np.ndarray, H: float,
                  cfg: KernelConfig | None = None) -> np.ndarray:
    """cov((T, 0), (S, lag)) for an array of spatial lags.

    Bulk entry point for covariance-matrix assembly; the numba backend
    runs the lags in parallel with bit-deterministic per-lag results.
    """
    cfg = cfg or _DEFAULT_CFG
    _check_hurst(H)
    if S > T:
        T, S = S, T
    lags = np.ascontiguousarray(np.abs(np.asarray(lags, dtype=np.float64)))
    if S == 0.0:
        return np.zeros_like(lags)
    c = 2.0 * spectral_constant(H)
    if cfg.damping_eps == 0.0 and active_backend() == "numba":
        from . import _accel
        values, errs, oks = _accel.cov_lag_batch(T, S, lags, H,
                                                 cfg.rel_tol, cfg.abs_tol)
        if not np.all(oks):
            bad = int(np.argmin(oks))
            raise ConvergenceError(
                f"cov quadrature did not converge at lag {lags[bad]:.6g}",
                value=c * values[bad], err_est=c * errs[bad])
        return c * values
    out = np.empty_like(lags)
    for i, dx in enumerate(lags):
        value, err, ok = _eval_np(_KIND_COV, T, S, float(dx), H, cfg)
        out[i] = _finish("cov", c * value, c * err, ok, cfg)
    return out


@lru_cache(maxsize=128)
def _kappa(H: float, cfg: KernelConfig) -> float:
    """variance(1, H); variance(t, H) = kappa * t^(2H+1)."""
    return variance(1.0, H, cfg)


def kappa(H: float, cfg: KernelConfig | None = None) -> float:
    """Unit-time variance constant kappa_H."""
    return _kappa(H, cfg or _DEFAULT_CFG)
