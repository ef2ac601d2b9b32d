"""Solvability of the fractional-noise wave equation, two independent ways.

The closed-form classifier encodes the critical manifold

    H0 = 1/2:        |H| > d - 1
    H0 = 1:          |H| > d - 2
    1/2 < H0 < 1:    |H| + H0 > d - 1/2

while ``classify_numeric`` rediscovers the verdict by integrating the
radial spectral integrand out to geometric cutoffs and fitting the decay
exponent of the octave increments.  The two must agree away from the
critical manifold; their agreement across the phase diagram is the
module's central cross-validation.

The intermediate regime runs through g(rho), the triangle integral of
sin(s) sin(r) |r-s|^(2 H0 - 2), decomposed as g = g1/2 - g2/4 with

    g1(rho) = int_0^rho (rho - s) cos(s) s^(2 H0 - 2) ds
    g2(rho) = int_0^rho [sin(2 rho - s) - sin(s)] s^(2 H0 - 2) ds.

g2 stays bounded; g1 grows linearly for H0 < 1 with slope

    Gamma(2 H0 - 1) cos(pi (2 H0 - 1) / 2)

(the large-rho limit of its cosine moment), which degenerates to bounded
oscillation 1 - cos(rho) at H0 = 1.  That vanishing slope is the
mechanism behind the jump of the critical manifold at H0 = 1.

All g-family functions are evaluated two ways: scalar routes through the
generic quadrature engine, and a batched cumulative moment sweep (used by
curves and the classifier) that reduces g1, g2, g to the three running
moments int cos(s) s^b, int cos(s) s^(b+1), int sin(s) s^b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import quad
from .errors import DomainError, ParameterError, RegimeError
from .params import HurstParams

__all__ = [
    "SolvabilityVerdict",
    "TailFit",
    "Hyp1F2Params",
    "PhaseRow",
    "condition_closed_form",
    "radial_integrand",
    "g1",
    "g2",
    "g",
    "g1_batch",
    "g2_batch",
    "g_batch",
    "g1_limit_slope",
    "sine_moment",
    "hyp1f2",
    "g1_asymptotic_slope",
    "classify_numeric",
    "phase_diagram_scan",
]

REGIME_TIME_WHITE = "time-white"
REGIME_SMOOTH = "smooth-time"
REGIME_INTERMEDIATE = "intermediate"

#: |fitted exponent| below this is ruled near-critical / indeterminate
EXPONENT_BAND = 0.02


@dataclass(frozen=True)
class SolvabilityVerdict:
    """Closed-form verdict with the signed distance to criticality."""

    solvable: bool
    margin: float
    regime: str

    def __post_init__(self):
        if self.solvable != (self.margin > 0.0):
            raise ParameterError("verdict/margin inconsistency")


@dataclass(frozen=True)
class TailFit:
    """Numeric tail-exponent estimate over geometric cutoffs."""

    lambda_grid: tuple
    partial_integrals: tuple
    fitted_exponent: float
    classified_convergent: bool
    r_squared: float
    integrand_min: float  # smallest sampled radial integrand value

    def __post_init__(self):
        lg = np.asarray(self.lambda_grid)
        if lg.size < 2 or np.any(np.diff(lg) <= 0):
            raise ParameterError("lambda_grid must be strictly increasing")
        ratios = lg[1:] / lg[:-1]
        if np.max(np.abs(ratios - ratios[0])) > 1e-9 * ratios[0]:
            raise ParameterError("lambda_grid must be geometric")
        pi_ = np.asarray(self.partial_integrals)
        if np.any(np.diff(pi_) < -1e-12 * np.maximum(np.abs(pi_[:-1]), 1.0)):
            raise ParameterError("partial integrals must be nondecreasing")

    @property
    def indeterminate(self) -> bool:
        return abs(self.fitted_exponent) <= EXPONENT_BAND


@dataclass(frozen=True)
class Hyp1F2Params:
    """Parameters of 1F2(a1; b1, b2; z)."""

    a1: float
    b1: float
    b2: float
    z: float

    def __post_init__(self):
        for b in (self.b1, self.b2):
            if b <= 0.0 and float(b).is_integer():
                raise ParameterError(f"denominator parameter {b} is a nonpositive integer")

    @classmethod
    def for_sine_moment(cls, h0: float, rho: float) -> "Hyp1F2Params":
        return cls(a1=h0 - 0.5, b1=1.5, b2=h0 + 0.5, z=-0.25 * rho * rho)


# ---------------------------------------------------------------------------
# closed form


def condition_closed_form(params: HurstParams) -> SolvabilityVerdict:
    """Signed margin to the critical manifold, per temporal regime."""
    d, h0, hsum = params.d, params.h0, params.h_sum
    if h0 == 0.5:
        return SolvabilityVerdict(hsum > d - 1.0, hsum - (d - 1.0), REGIME_TIME_WHITE)
    if h0 == 1.0:
        return SolvabilityVerdict(hsum > d - 2.0, hsum - (d - 2.0), REGIME_SMOOTH)
    margin = hsum + h0 - (d - 0.5)
    return SolvabilityVerdict(margin > 0.0, margin, REGIME_INTERMEDIATE)


# ---------------------------------------------------------------------------
# g-family: cumulative moment sweep (batched fast path)


def _moment_heads(rho0: float, h0: float):
    beta = 2.0 * h0 - 2.0
    a = quad.integrate_singular(np.cos, beta, 0.0, rho0,
                                rel_tol=1e-12, abs_tol=1e-14).require("cos moment head")
    b = quad.integrate_singular(np.cos, beta + 1.0, 0.0, rho0,
                                rel_tol=1e-12, abs_tol=1e-14).require("cos moment head")
    c = quad.integrate_singular(np.sin, beta, 0.0, rho0,
                                rel_tol=1e-12, abs_tol=1e-14).require("sin moment head")
    return a, b, c


def _moment_sweep(rhos: np.ndarray, h0: float):
    """Running moments A, B, C of cos/sin against s^b at ascending rhos.

    A = int_0^rho cos(s) s^b ds, B likewise with s^(b+1), C with sin;
    b = 2 h0 - 2.  The first point is integrated through the singular
    head; between consecutive points fixed GK15 panels of width <= pi/4
    are exact to machine precision for these integrands.
    """
    if np.any(rhos <= 0.0) or np.any(np.diff(rhos) <= 0.0):
        raise ParameterError("moment sweep needs strictly increasing positive points")
    beta = 2.0 * h0 - 2.0
    a0, b0, c0 = _moment_heads(float(rhos[0]), h0)

    gaps = np.diff(rhos)
    n_sub = np.maximum(1, np.ceil(gaps / (0.25 * math.pi)).astype(np.int64))
    # build all panel edges in one flat array
    starts = rhos[:-1]
    panel_gap_index = np.repeat(np.arange(gaps.size), n_sub)
    within = np.concatenate([np.arange(k) for k in n_sub]) if gaps.size else np.empty(0, np.int64)
    widths = gaps[panel_gap_index] / n_sub[panel_gap_index]
    lefts = starts[panel_gap_index] + within * widths
    rights = lefts + widths

    half = 0.5 * (rights - lefts)
    mid = 0.5 * (rights + lefts)
    nodes = mid[:, None] + half[:, None] * quad.GK_NODES[None, :]
    spow = np.power(nodes, beta)
    cosn = np.cos(nodes)
    sinn = np.sin(nodes)
    wa = (cosn * spow) @ quad.GK_WK * half
    wb = (cosn * spow * nodes) @ quad.GK_WK * half
    wc = (sinn * spow) @ quad.GK_WK * half

    out_a = np.empty(rhos.size)
    out_b = np.empty(rhos.size)
    out_c = np.empty(rhos.size)
    out_a[0], out_b[0], out_c[0] = a0, b0, c0
    if gaps.size:
        sums_a = np.zeros(gaps.size)
        sums_b = np.zeros(gaps.size)
        sums_c = np.zeros(gaps.size)
        np.add.at(sums_a, panel_gap_index, wa)
        np.add.at(sums_b, panel_gap_index, wb)
        np.add.at(sums_c, panel_gap_index, wc)
        out_a[1:] = a0 + np.cumsum(sums_a)
        out_b[1:] = b0 + np.cumsum(sums_b)
        out_c[1:] = c0 + np.cumsum(sums_c)
    return out_a, out_b, out_c


def _check_g_domain(h0: float):
    if not (0.5 < h0 <= 1.0):
        raise DomainError(
            f"g-family requires 1/2 < h0 <= 1 (endpoint exponent > -1), got {h0}")


def g1_batch(rhos, h0: float) -> np.ndarray:
    """g1 on an ascending positive grid: rho * A(rho) - B(rho)."""
    _check_g_domain(h0)
    rhos = np.asarray(rhos, dtype=np.float64)
    a, b, _ = _moment_sweep(rhos, h0)
    return rhos * a - b


def g2_batch(rhos, h0: float) -> np.ndarray:
    """g2 on an ascending positive grid: sin(2 rho) A - (1 + cos(2 rho)) C."""
    _check_g_domain(h0)
    rhos = np.asarray(rhos, dtype=np.float64)
    a, _, c = _moment_sweep(rhos, h0)
    return np.sin(2.0 * rhos) * a - (1.0 + np.cos(2.0 * rhos)) * c


def g_batch(rhos, h0: float) -> np.ndarray:
    _check_g_domain(h0)
    rhos = np.asarray(rhos, dtype=np.float64)
    a, b, c = _moment_sweep(rhos, h0)
    g1v = rhos * a - b
    g2v = np.sin(2.0 * rhos) * a - (1.0 + np.cos(2.0 * rhos)) * c
    return 0.5 * g1v - 0.25 * g2v


# ---------------------------------------------------------------------------
# g-family: scalar routes


def g1(rho: float, h0: float) -> float:
    """int_0^rho (rho - s) cos(s) s^(2 h0 - 2) ds via the singular rule.

    Equals 1 - cos(rho) exactly at h0 = 1 and grows like
    g1_limit_slope(h0) * rho for h0 < 1.
    """
    _check_g_domain(h0)
    if rho < 0.0:
        raise ParameterError(f"g1: rho must be nonnegative, got {rho}")
    if rho == 0.0:
        return 0.0
    n0 = min(512, int(rho / math.pi) + 1)
    res = quad.integrate_singular(
        lambda s: (rho - s) * np.cos(s), 2.0 * h0 - 2.0, 0.0, rho,
        rel_tol=1e-11, abs_tol=1e-12, max_panels=4096, min_panels=n0)
    return res.require("g1")


def g2(rho: float, h0: float) -> float:
    """int_0^rho [sin(2 rho - s) - sin(s)] s^(2 h0 - 2) ds.

    Split at min(1, rho): singular rule near 0, per-period adaptive
    panels beyond.  Bounded uniformly in rho.
    """
    _check_g_domain(h0)
    if rho < 0.0:
        raise ParameterError(f"g2: rho must be nonnegative, got {rho}")
    if rho == 0.0:
        return 0.0
    split = min(1.0, rho)
    beta = 2.0 * h0 - 2.0

    def osc(s):
        return np.sin(2.0 * rho - s) - np.sin(s)

    head = quad.integrate_singular(osc, beta, 0.0, split,
                                   rel_tol=1e-11, abs_tol=1e-12)
    total = head.require("g2 head")
    if rho > 1.0:
        n0 = min(8192, int((rho - 1.0) / math.pi) + 1)
        tail = quad.integrate_adaptive(
            lambda s: osc(s) * np.power(s, beta), 1.0, rho,
            rel_tol=1e-11, abs_tol=1e-12,
            max_panels=n0 + 2048, min_panels=n0)
        total += tail.require("g2 tail")
    return total


def g(rho: float, h0: float) -> float:
    """Triangle integral of sin(s) sin(r) |r - s|^(2 h0 - 2): g1/2 - g2/4."""
    return 0.5 * g1(rho, h0) - 0.25 * g2(rho, h0)


def g1_limit_slope(h0: float) -> float:
    """Large-rho slope of g1: Gamma(2 h0 - 1) cos(pi (2 h0 - 1) / 2).

    Positive for 1/2 < h0 < 1 and zero at h0 = 1, where g1 degenerates to
    the bounded oscillation 1 - cos(rho).
    """
    _check_g_domain(h0)
    return math.gamma(2.0 * h0 - 1.0) * math.cos(0.5 * math.pi * (2.0 * h0 - 1.0))


# ---------------------------------------------------------------------------
# hypergeometric series


def sine_moment(rho: float, h0: float) -> float:
    """int_0^1 sin(rho s) s^(2 h0 - 3) ds, exponent 2 h0 - 2 after
    factoring one s out of the sine."""
    _check_g_domain(h0)
    if rho <= 0.0:
        raise ParameterError(f"sine_moment: rho must be positive, got {rho}")

    def f(s):
        out = np.empty_like(s)
        small = s < 1e-8
        out[~small] = np.sin(rho * s[~small]) / s[~small]
        out[small] = rho * (1.0 - (rho * s[small]) ** 2 / 6.0)
        return out

    res = quad.integrate_singular(f, 2.0 * h0 - 2.0, 0.0, 1.0,
                                  rel_tol=1e-13, abs_tol=1e-15,
                                  min_panels=min(256, int(rho / math.pi) + 1))
    return res.require("sine moment")


_Z_MAX = 900.0


def hyp1f2(p: Hyp1F2Params) -> float:
    """1F2(a1; b1, b2; z) by its power series with compensated summation.

    Valid in the series regime |z| <= 900 (rho <= 60 for z = -rho^2/4).
    For alternating arguments the intermediate terms can exceed the result
    by many orders; when the float64 cancellation noise endangers 1e-13
    relative accuracy the series is replayed in mpmath at just enough
    precision.  Beyond the regime boundary a RegimeError instructs the
    caller to use the asymptotic slope fit instead.
    """
    if abs(p.z) > _Z_MAX:
        raise RegimeError(
            f"hyp1f2 series regime is |z| <= {_Z_MAX:g}, got z={p.z:g}; "
            "use the asymptotic slope fit instead")
    if p.z == 0.0:
        return 1.0

    total = 0.0
    comp = 0.0  # Kahan compensation
    sum_abs = 0.0
    term = 1.0
    k = 0
    while True:
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        sum_abs += abs(term)
        ratio = (p.a1 + k) / ((p.b1 + k) * (p.b2 + k) * (k + 1.0)) * p.z
        term *= ratio
        k += 1
        if abs(term) < 1e-16 * abs(total) and k > 4:
            break
        if k > 10_000:
            raise RegimeError("hyp1f2 series failed to terminate")

    # cancellation audit: noise ~ sum|term| * eps
    if total == 0.0 or sum_abs * 1e-16 > 1e-13 * abs(total):
        import mpmath as mp
        extra = int(math.log10(max(sum_abs / max(abs(total), 1e-300), 1.0))) + 1
        with mp.workdps(20 + extra):
            z = mp.mpf(p.z)
            a1 = mp.mpf(p.a1)
            b1 = mp.mpf(p.b1)
            b2 = mp.mpf(p.b2)
            tot = mp.mpf(1)
            term_mp = mp.mpf(1)
            kk = 0
            while True:
                term_mp *= (a1 + kk) / ((b1 + kk) * (b2 + kk) * (kk + 1)) * z
                tot += term_mp
                kk += 1
                if abs(term_mp) < mp.mpf(10) ** (-(20 + extra)) * abs(tot) and kk > 4:
                    break
            total = float(tot)
    return total


# ---------------------------------------------------------------------------
# radial integrand and the numeric classifier


def radial_integrand(rho, params: HurstParams, t: float = 1.0):
    """Radial reduction of the spectral solvability integrand, with the
    angular constant set to 1.

    time-white:    rho^(2d - 2|H| - 3) [t/2 - sin(2 t rho)/(4 rho)]
    smooth-time:   rho^(2d - 2|H| - 5) [cos(t rho) - 1]^2
    intermediate:  rho^(2d - 2|H| - 2 h0 - 3) g(rho)   (t scales out)
    """
    scalar = np.isscalar(rho)
    rho_arr = np.atleast_1d(np.asarray(rho, dtype=np.float64))
    if np.any(rho_arr <= 0.0):
        raise ParameterError("radial_integrand requires rho > 0")
    d, h0, hsum = params.d, params.h0, params.h_sum
    if h0 == 0.5:
        if t <= 0.0:
            raise ParameterError("time-white radial integrand needs t > 0")
        out = rho_arr ** (2 * d - 2 * hsum - 3) * (
            0.5 * t - np.sin(2.0 * t * rho_arr) / (4.0 * rho_arr))
    elif h0 == 1.0:
        if t <= 0.0:
            raise ParameterError("smooth-time radial integrand needs t > 0")
        c = np.cos(t * rho_arr) - 1.0
        out = rho_arr ** (2 * d - 2 * hsum - 5) * c * c
    else:
        # the cumulative g sweep wants unique ascending points
        uniq, inv = np.unique(rho_arr, return_inverse=True)
        gv = g_batch(uniq, h0)[inv]
        out = rho_arr ** (2 * d - 2 * hsum - 2 * h0 - 3) * gv
    return float(out[0]) if scalar else out


def _classifier_panels(lambda_grid: np.ndarray, period: float):
    """GK15 panel edges covering [1, lambda_max], snapped to the cutoffs."""
    bounds = np.concatenate([[1.0], lambda_grid])
    lefts_all = []
    rights_all = []
    seg_index = []
    for j in range(bounds.size - 1):
        lo, hi = bounds[j], bounds[j + 1]
        n = max(1, int(math.ceil((hi - lo) / (0.5 * period))))
        edges = np.linspace(lo, hi, n + 1)
        lefts_all.append(edges[:-1])
        rights_all.append(edges[1:])
        seg_index.append(np.full(n, j))
    return (np.concatenate(lefts_all), np.concatenate(rights_all),
            np.concatenate(seg_index), bounds.size - 1)


@lru_cache(maxsize=32)
def _g_node_cache(h0: float, key: tuple):
    nodes = np.array(key)
    return g_batch(nodes, h0)


def classify_numeric(params: HurstParams, t: float = 1.0,
                     lambda_max: float = 4096.0, n_cutoffs: int = 7) -> TailFit:
    """Fit the decay exponent of octave increments of M(Lambda).

    M(Lambda) = int_1^Lambda radial_integrand drho at geometric cutoffs;
    the increments over whole octaves average the oscillation out, and
    their log-log slope equals -2 * margin for all three regimes.  The
    verdict is slope < -0.02; |slope| <= 0.02 is the near-critical band.
    """
    if lambda_max < 2 ** 6:
        raise ParameterError(f"lambda_max must be >= 64, got {lambda_max}")
    if n_cutoffs < 4:
        raise ParameterError(f"n_cutoffs must be >= 4, got {n_cutoffs}")
    d, h0, hsum = params.d, params.h0, params.h_sum
    lambda_grid = lambda_max * 2.0 ** (-np.arange(n_cutoffs - 1, -1, -1, dtype=np.float64))

    if h0 == 0.5:
        period = math.pi / t
    elif h0 == 1.0:
        period = 2.0 * math.pi / t
    else:
        period = 2.0 * math.pi

    lefts, rights, seg_index, n_segs = _classifier_panels(lambda_grid, period)
    half = 0.5 * (rights - lefts)
    mid = 0.5 * (rights + lefts)
    nodes = (mid[:, None] + half[:, None] * quad.GK_NODES[None, :]).ravel()

    if h0 == 0.5:
        vals = nodes ** (2 * d - 2 * hsum - 3) * (
            0.5 * t - np.sin(2.0 * t * nodes) / (4.0 * nodes))
    elif h0 == 1.0:
        c = np.cos(t * nodes) - 1.0
        vals = nodes ** (2 * d - 2 * hsum - 5) * c * c
    else:
        gv = _g_node_cache(h0, tuple(nodes.tolist()))
        vals = nodes ** (2 * d - 2 * hsum - 2 * h0 - 3) * gv

    integrand_min = float(np.min(vals))
    panel_sums = (vals.reshape(-1, 15) @ quad.GK_WK) * half
    seg_sums = np.zeros(n_segs)
    np.add.at(seg_sums, seg_index, panel_sums)

    partials = np.cumsum(seg_sums)  # M at each cutoff
    increments = seg_sums[1:]       # M(Lambda_{j+1}) - M(Lambda_j)
    mids = np.sqrt(lambda_grid[1:] * lambda_grid[:-1])
    if np.any(increments <= 0.0):
        raise ParameterError(
            "nonpositive octave increment; radial integrand not nonnegative "
            f"(min sampled value {integrand_min:.3g})")
    X = np.log(mids)
    Y = np.log(increments)
    A = np.vstack([X, np.ones_like(X)]).T
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((Y - pred) ** 2))
    ss_tot = float(np.sum((Y - np.mean(Y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    slope = float(coef[0])

    return TailFit(
        lambda_grid=tuple(lambda_grid),
        partial_integrals=tuple(partials),
        fitted_exponent=slope,
        classified_convergent=slope < -EXPONENT_BAND,
        r_squared=r2,
        integrand_min=integrand_min,
    )


# ---------------------------------------------------------------------------
# asymptotic slope of g1 and the phase-diagram scan


def g1_asymptotic_slope(h0: float, rho_lo: float, rho_hi: float,
                        n_points: int):
    """Least-squares line through g1 on a uniform grid; (slope, intercept, r2).

    For h0 < 1 the slope is positive (near g1_limit_slope); at h0 = 1 the
    fit degenerates against the bounded oscillation 1 - cos(rho).
    """
    _check_g_domain(h0)
    if n_points < 3:
        raise ParameterError(f"need at least 3 fit points, got {n_points}")
    if not (0.0 < rho_lo < rho_hi):
        raise ParameterError("need 0 < rho_lo < rho_hi")
    rhos = np.linspace(rho_lo, rho_hi, n_points)
    vals = g1_batch(rhos, h0)
    A = np.vstack([rhos, np.ones_like(rhos)]).T
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((vals - pred) ** 2))
    ss_tot = float(np.sum((vals - np.mean(vals)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return float(coef[0]), float(coef[1]), r2


@dataclass(frozen=True)
class PhaseRow:
    """One cell of the phase diagram."""

    h0: float
    habs: float
    closed_solvable: bool
    numeric_convergent: bool
    margin: float
    fitted_exponent: float
    flag: str  # "" or "near-critical"


def phase_diagram_scan(d: int, h0_grid, habs_grid, t: float = 1.0,
                       exclusion_band: float = 0.05,
                       lambda_max: float = 4096.0,
                       n_cutoffs: int = 7) -> list[PhaseRow]:
    """Closed-form vs numeric verdict over the (h0, |H|) cross product.

    Rows inside |margin| < exclusion_band are flagged near-critical and
    exempt from agreement requirements.  Row order follows the input
    grids, h0-major.
    """
    rows: list[PhaseRow] = []
    for h0 in h0_grid:
        for habs in habs_grid:
            params = HurstParams.from_total(d, float(h0), float(habs))
            verdict = condition_closed_form(params)
            fit = classify_numeric(params, t=t, lambda_max=lambda_max,
                                   n_cutoffs=n_cutoffs)
            flag = "near-critical" if abs(verdict.margin) < exclusion_band else ""
            rows.append(PhaseRow(
                h0=float(h0), habs=float(habs),
                closed_solvable=verdict.solvable,
                numeric_convergent=fit.classified_convergent,
                margin=verdict.margin,
                fitted_exponent=fit.fitted_exponent,
                flag=flag,
            ))
    return rows
