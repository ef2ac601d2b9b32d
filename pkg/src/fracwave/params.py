"""Core parameter and point types.

HurstParams carries the temporal exponent h0 in [1/2, 1] and the vector of
spatial exponents h_i in (0, 1); h_sum caches their sum.  Kernel and field
operations additionally require d == 1 and h0 == 1/2 (the time-white case),
which is what ``require_time_white`` enforces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ParameterError


@dataclass(frozen=True)
class HurstParams:
    """Dimension and Hurst exponents of the driving noise."""

    d: int
    h0: float
    h: tuple[float, ...]
    h_sum: float = field(init=False)

    def __post_init__(self):
        if not isinstance(self.d, int) or self.d < 1:
            raise ParameterError(f"dimension must be a positive integer, got {self.d!r}")
        if not math.isfinite(self.h0):
            raise ParameterError("temporal Hurst exponent must be finite")
        if not (0.5 <= self.h0 <= 1.0):
            raise ParameterError(f"temporal Hurst exponent must lie in [1/2, 1], got {self.h0}")
        hs = tuple(float(v) for v in self.h)
        if len(hs) != self.d:
            raise ParameterError(f"expected {self.d} spatial Hurst exponents, got {len(hs)}")
        for v in hs:
            if not math.isfinite(v) or not (0.0 < v < 1.0):
                raise ParameterError(f"spatial Hurst exponents must lie in (0, 1), got {v}")
        object.__setattr__(self, "h", hs)
        object.__setattr__(self, "h_sum", math.fsum(hs))

    @classmethod
    def from_total(cls, d: int, h0: float, h_sum: float) -> "HurstParams":
        """Build an isotropic parameter set with the given total |H|."""
        if d < 1:
            raise ParameterError("dimension must be positive")
        return cls(d=d, h0=h0, h=(h_sum / d,) * d)

    def require_time_white(self):
        """Kernel/field scope: d = 1 and h0 = 1/2 only."""
        if self.d != 1 or self.h0 != 0.5:
            raise ParameterError(
                "closed-form kernels and field sampling require d=1 and h0=1/2, "
                f"got d={self.d}, h0={self.h0}"
            )


@dataclass(frozen=True)
class SpaceTimePoint:
    """A point (t, x) with t >= 0."""

    t: float
    x: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.x)):
            raise ParameterError("space-time coordinates must be finite")
        if self.t < 0.0:
            raise ParameterError(f"time coordinate must be nonnegative, got {self.t}")


@dataclass(frozen=True)
class KernelConfig:
    """Tolerances and switches for the spectral kernel quadrature.

    damping_eps > 0 multiplies every spectral integrand by exp(-eps*xi^2),
    the mollified covariance used to define the solution as an L2 limit.
    The default 0 is the limiting (exact) kernel.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_periods: int = 200_000
    damping_eps: float = 0.0

    def __post_init__(self):
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise ParameterError("rel_tol and abs_tol must be positive")
        if self.damping_eps < 0.0:
            raise ParameterError("damping_eps must be nonnegative")
        if self.max_periods < 1:
            raise ParameterError("max_periods must be at least 1")


def spectral_constant(h: float) -> float:
    """Noise spectral-density constant Gamma(2H+1) sin(pi H) / (2 pi)."""
    if not (0.0 < h < 1.0):
        raise ParameterError(f"spatial Hurst exponent must lie in (0, 1), got {h}")
    return math.gamma(2.0 * h + 1.0) * math.sin(math.pi * h) / (2.0 * math.pi)
