"""Reusable one-dimensional quadrature engine.

Three entry points cover the integral shapes that appear in the spectral
kernels and the solvability integrands:

* ``integrate_adaptive``   plain adaptive bisection on [a, b],
* ``integrate_singular``   endpoint power singularity s^alpha at s = 0,
  regularized by the substitution s = u^(1/(1+alpha)),
* ``integrate_osc_tail``   infinite oscillatory tails with a power-law
  envelope, summed period by period with a rigorous remainder bound.

The panel rule is the 15-point Kronrod extension of 7-point Gauss with a
fixed abscissa set, so every result is a deterministic function of its
inputs.  Integrands must be vectorized: they receive a float64 ndarray of
abscissae and return an ndarray of values.

``tail_power_trig`` evaluates int_a^inf trig(omega*xi) xi^(-mu) dxi to
near machine precision using a finite panel stage up to omega*xi ~ 50 and
the integration-by-parts asymptotic series beyond.  The spectral kernel
module decomposes its oscillatory tails into exactly these primitives.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergenceError, DomainError, ParameterError

__all__ = [
    "QuadResult",
    "integrate_adaptive",
    "integrate_singular",
    "integrate_osc_tail",
    "tail_power_trig",
]

# Gauss-Kronrod 7/15 nodes on [-1, 1] and the two weight sets.  Gauss
# weights are zero at the Kronrod-only nodes.
GK_NODES = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
GK_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
GK_WG = np.array([
    0.0, 0.129484966168870, 0.0, 0.279705391489277, 0.0,
    0.381830050505119, 0.0, 0.417959183673469, 0.0, 0.381830050505119,
    0.0, 0.279705391489277, 0.0, 0.129484966168870, 0.0,
])


@dataclass(frozen=True)
class QuadResult:
    """Value, error estimate, evaluation count and convergence flag."""

    value: float
    err_est: float
    evals: int
    converged: bool

    def require(self, what: str = "integral") -> float:
        """Return the value, raising ConvergenceError when not converged."""
        from .errors import ConvergenceError
        if not self.converged:
            raise ConvergenceError(
                f"{what} did not reach tolerance (value={self.value:.6g}, "
                f"err_est={self.err_est:.3g}, evals={self.evals})",
                value=self.value, err_est=self.err_est,
            )
        return self.value


def _eval_panels(f: Callable, lefts: np.ndarray, rights: np.ndarray):
    """GK15 on a batch of panels; returns (values, error estimates)."""
    half = 0.5 * (rights - lefts)
    mid = 0.5 * (rights + lefts)
    nodes = mid[:, None] + half[:, None] * GK_NODES[None, :]
    y = np.asarray(f(nodes.ravel()), dtype=np.float64).reshape(nodes.shape)
    if not np.all(np.isfinite(y)):
        raise DomainError("integrand returned a non-finite value")
    k15 = half * (y @ GK_WK)
    g7 = half * (y @ GK_WG)
    err = np.abs(k15 - g7)
    # roundoff floor: the difference estimator saturates near machine eps
    np.maximum(err, 1e-16 * np.abs(k15), out=err)
    return k15, err


def integrate_adaptive(
    f: Callable,
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-13,
    max_panels: int = 2048,
    min_panels: int = 1,
) -> QuadResult:
    """Adaptive GK15 bisection of a vectorized integrand on [a, b].

    ``min_panels`` pre-splits the interval uniformly, which is how callers
    seed per-period panels for oscillatory integrands.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ParameterError("integration limits must be finite")
    if not a < b:
        raise ParameterError(f"need a < b, got a={a}, b={b}")
    if min_panels < 1:
        raise ParameterError("min_panels must be >= 1")

    n0 = min(min_panels, max_panels)
    edges = np.linspace(a, b, n0 + 1)
    vals, errs = _eval_panels(f, edges[:-1], edges[1:])
    evals = 15 * n0

    # heap of (-err, insertion counter, left, right, value, err)
    heap = []
    counter = 0
    for i in range(n0):
        heapq.heappush(heap, (-errs[i], counter, edges[i], edges[i + 1], vals[i], errs[i]))
        counter += 1
    total = float(np.sum(vals))
    total_err = float(np.sum(errs))
    n_panels = n0

    while total_err > max(abs_tol, rel_tol * abs(total)) and n_panels < max_panels:
        neg_err, _, left, right, val, err = heapq.heappop(heap)
        midpt = 0.5 * (left + right)
        if midpt <= left or midpt >= right:
            # interval at floating-point resolution; cannot refine further
            heapq.heappush(heap, (neg_err, counter, left, right, val, err))
            counter += 1
            break
        sub_vals, sub_errs = _eval_panels(
            f, np.array([left, midpt]), np.array([midpt, right]))
        evals += 30
        total += float(sub_vals[0] + sub_vals[1] - val)
        total_err += float(sub_errs[0] + sub_errs[1] - err)
        for j in range(2):
            lo = left if j == 0 else midpt
            hi = midpt if j == 0 else right
            heapq.heappush(heap, (-sub_errs[j], counter, lo, hi, sub_vals[j], sub_errs[j]))
            counter += 1
        n_panels += 1

    converged = total_err <= max(abs_tol, rel_tol * abs(total))
    return QuadResult(total, total_err, evals, converged)


def integrate_singular(
    f: Callable,
    alpha: float,
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-13,
    max_panels: int = 2048,
    min_panels: int = 1,
) -> QuadResult:
    """int_0^b s^alpha f(s) ds for alpha > -1 with f bounded on (0, b].

    The substitution s = u^(1/(1+alpha)) turns the integral into
    (1/(1+alpha)) int_0^(b^(1+alpha)) f(u^(1/(1+alpha))) du, which spreads
    the endpoint mass evenly.  For exponents near -1 this is not a luxury:
    at alpha = -0.998 more than a third of int_0^1 s^alpha ds lies below
    s = 1e-100 where direct panels see nothing.
    """
    if alpha <= -1.0:
        raise DomainError(f"endpoint exponent must exceed -1, got alpha={alpha}")
    if a != 0.0:
        raise ParameterError("lower limit must be 0 (shift the integrand otherwise)")
    if not (math.isfinite(b) and b > 0.0):
        raise ParameterError(f"upper limit must be positive and finite, got {b}")

    p = 1.0 + alpha
    inv_p = 1.0 / p

    def transformed(u):
        return f(np.power(u, inv_p))

    res = integrate_adaptive(transformed, 0.0, b ** p, rel_tol=rel_tol,
                             abs_tol=abs_tol * p, max_panels=max_panels,
                             min_panels=min_panels)
    return QuadResult(res.value / p, res.err_est / p, res.evals, res.converged)


def integrate_osc_tail(
    envelope_exponent: float,
    osc: Callable,
    period_hint: float,
    a: float = 0.0,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-13,
    max_periods: int = 1_000_000,
    osc_bound: float | None = None,
) -> QuadResult:
    """int_a^inf osc(xi) xi^(-beta) dxi by per-period summation.

    beta = envelope_exponent must exceed 1 (absolute convergence); beta <= 1
    raises DivergenceError, which the solvability classifier probes on
    purpose.  Each period is integrated with two GK15 panels and the
    remainder after k periods is certified by

        bound(|osc|) * (a + k*p)^(1-beta) / (beta - 1),

    the exact envelope tail integral, which dominates the geometric-series
    panel bound.  ``osc_bound`` should be an analytic sup of |osc| on the
    tail; when omitted a safety factor of 4 over the largest sampled |osc|
    is used, which is a heuristic rather than a certificate.

    The certificate decays like k^(1-beta), so tight tolerances with beta
    close to 1 are out of reach here by design; the spectral kernels use
    ``tail_power_trig`` on their exact trig decomposition instead.
    """
    beta = envelope_exponent
    if beta <= 1.0:
        raise DivergenceError(
            f"tail envelope exponent must exceed 1 for convergence, got {beta}")
    if period_hint <= 0.0 or not math.isfinite(period_hint):
        raise ParameterError(f"period_hint must be positive, got {period_hint}")
    if a < 0.0:
        raise ParameterError(f"lower limit must be nonnegative, got {a}")
    if max_periods < 1:
        raise ParameterError("max_periods must be at least 1")

    p = float(period_hint)
    total = 0.0
    panel_err = 0.0
    evals = 0
    sampled_sup = 0.0
    k = 0
    chunk = 64
    converged = False
    remainder = math.inf

    while k < max_periods:
        m = min(chunk, max_periods - k)
        edges = a + p * np.arange(k, k + m + 1)
        # two panels per period
        lefts = np.repeat(edges[:-1], 2)
        rights = np.repeat(edges[1:], 2)
        mids = 0.5 * (edges[:-1] + edges[1:])
        lefts[1::2] = mids
        rights[0::2] = mids

        half = 0.5 * (rights - lefts)
        mid = 0.5 * (rights + lefts)
        nodes = mid[:, None] + half[:, None] * GK_NODES[None, :]
        oy = np.asarray(osc(nodes.ravel()), dtype=np.float64).reshape(nodes.shape)
        if not np.all(np.isfinite(oy)):
            raise DomainError("oscillatory factor returned a non-finite value")
        sampled_sup = max(sampled_sup, float(np.max(np.abs(oy))))
        y = oy * np.power(nodes, -beta)
        k15 = half * (y @ GK_WK)
        g7 = half * (y @ GK_WG)
        total += float(np.sum(k15))
        panel_err += float(np.sum(np.abs(k15 - g7)))
        evals += oy.size
        k += m

        bound = osc_bound if osc_bound is not None else 4.0 * sampled_sup
        remainder = bound * (a + k * p) ** (1.0 - beta) / (beta - 1.0)
        if panel_err + remainder <= max(abs_tol, rel_tol * abs(total)):
            converged = True
            break
        chunk = min(2 * chunk, 8192)

    return QuadResult(total, panel_err + remainder, evals, converged)


# ---------------------------------------------------------------------------
# power-law trig tails: int_a^inf trig(omega*xi) xi^(-mu) dxi


_ASYM_Z = 50.0  # switch to the integration-by-parts series at omega*xi >= 50


def _q_asym(mu: float, z: float):
    """Q(mu, z) = int_z^inf e^(iu) u^(-mu) du for z >= _ASYM_Z.

    Repeated integration by parts gives
        Q = i e^(iz) sum_k (-i)^k (mu)_k z^(-mu-k),
    truncated where the remainder bound (mu)_K z^(1-mu-K)/(mu+K-1) is
    minimal; with z >= 50 and mu <= ~4 that bound is far below 1e-15.
    """
    acc = 0.0 + 0.0j
    poch = 1.0
    zpow = z ** (-mu)
    best = math.inf
    for kk in range(60):
        bound = poch * zpow * z / (mu + kk - 1.0) if mu + kk > 1.0 else math.inf
        if bound >= best or bound < 1e-300:
            break
        best = bound
        acc += (-1j) ** kk * poch * zpow
        poch *= mu + kk
        zpow /= z
    value = 1j * complex(math.cos(z), math.sin(z)) * acc
    return value, best


def tail_power_trig(
    trig: str,
    omega: float,
    mu: float,
    a: float,
    max_panels: int = 4096,
):
    """int_a^inf trig(omega*xi) xi^(-mu) dxi, trig in {"cos", "sin"}.

    Requires mu > 1 and a > 0; omega >= 0 (odd/even reduction is the
    caller's job).  omega = 0 is the plain power tail (0 for sin).
    Returns (value, error_bound); the error is near machine precision.

    Strategy: fixed GK15 panels from a up to omega*xi = 50, with widths
    capped at half an oscillation period and at 0.35*xi so both the trig
    factor and the power factor stay deep inside the panel rule's accuracy,
    then the asymptotic series for the remainder.
    """
    if mu <= 1.0:
        raise DivergenceError(f"power tail requires mu > 1, got {mu}")
    if a <= 0.0:
        raise ParameterError(f"tail start must be positive, got {a}")
    if omega < 0.0:
        raise ParameterError("omega must be nonnegative; reduce by parity first")
    if trig not in ("cos", "sin"):
        raise ParameterError(f"trig must be 'cos' or 'sin', got {trig!r}")

    if omega == 0.0:
        if trig == "sin":
            return 0.0, 0.0
        return a ** (1.0 - mu) / (mu - 1.0), 0.0

    z_start = omega * a
    take = (lambda c: c.real) if trig == "cos" else (lambda c: c.imag)

    if z_start >= _ASYM_Z:
        q, bound = _q_asym(mu, z_start)
        return omega ** (mu - 1.0) * take(q), omega ** (mu - 1.0) * bound

    # finite stage [a, a1] with a1 = _ASYM_Z / omega
    a1 = _ASYM_Z / omega
    cap = 0.5 * math.pi / omega
    edges = [a]
    x = a
    while x < a1 and len(edges) <= max_panels:
        x = min(x + min(0.35 * x, cap), a1)
        edges.append(x)
    if x < a1:
        raise ParameterError("tail_power_trig panel budget exceeded")
    edges_arr = np.array(edges)
    lefts, rights = edges_arr[:-1], edges_arr[1:]
    half = 0.5 * (rights - lefts)
    mid = 0.5 * (rights + lefts)
    nodes = mid[:, None] + half[:, None] * GK_NODES[None, :]
    tfun = np.cos if trig == "cos" else np.sin
    y = tfun(omega * nodes) * np.power(nodes, -mu)
    k15 = half * (y @ GK_WK)
    g7 = half * (y @ GK_WG)
    value = float(np.sum(k15))
    err = float(np.sum(np.abs(k15 - g7)))

    q, bound = _q_asym(mu, omega * a1)
    value += omega ** (mu - 1.0) * take(q)
    err += omega ** (mu - 1.0) * bound
    return value, err
