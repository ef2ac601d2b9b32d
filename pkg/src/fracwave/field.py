"""Exact Gaussian sampling of the solution field on space-time grids.

The solution is a centered Gaussian field, so finite-dimensional sampling
is exact: assemble the covariance matrix from the spectral kernels,
factorize, and multiply standard normal vectors.  Spatial stationarity
plus the uniform x grid mean only n_t (n_t + 1) / 2 time pairs times n_x
lags of distinct kernel integrals are ever evaluated; each block of the
matrix is symmetric Toeplitz.

Replicate streams are counter-based (Philox) and derived from
(seed, replicate), so a batch is a pure function of its arguments and
independent of execution order or thread count.  Grids are capped at
4096 points to keep the dense factorization at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import kernels
from .errors import (FactorizationError, GridCapError, ParameterError)
from .params import KernelConfig, SpaceTimePoint

__all__ = [
    "POINT_CAP",
    "GridSpec",
    "CovarianceMatrix",
    "PsdFactor",
    "SampleBatch",
    "SupEstimate",
    "assemble_cov",
    "factorize_psd",
    "sample",
    "mc_sup",
    "increment_grid_spatial",
    "increment_grid_temporal",
    "derive_seed",
]

POINT_CAP = 4096

SUP_STATISTICS = ("sup", "sup_abs", "sup_increment_spatial", "sup_increment_temporal")


@dataclass(frozen=True)
class GridSpec:
    """Time-major space-time grid: point (i, j) -> index i * n_x + j.

    x values must be uniformly spaced (the kernel cache keys on lag
    multiples); all times must be positive.
    """

    t_values: tuple
    x_values: tuple

    def __post_init__(self):
        ts = tuple(float(t) for t in self.t_values)
        xs = tuple(float(x) for x in self.x_values)
        if len(ts) == 0 or len(xs) == 0:
            raise ParameterError("grid must contain at least one time and one x")
        if any(t <= 0.0 or not math.isfinite(t) for t in ts):
            raise ParameterError("grid times must be positive and finite")
        if any(np.diff(ts) <= 0.0):
            raise ParameterError("grid times must be strictly increasing")
        if any(np.diff(xs) <= 0.0):
            raise ParameterError("grid x values must be strictly increasing")
        if len(xs) > 2:
            steps = np.diff(xs)
            if np.max(steps) - np.min(steps) > 1e-9 * np.max(steps):
                raise ParameterError("grid x values must be uniformly spaced")
        object.__setattr__(self, "t_values", ts)
        object.__setattr__(self, "x_values", xs)

    @property
    def n_t(self) -> int:
        return len(self.t_values)

    @property
    def n_x(self) -> int:
        return len(self.x_values)

    @property
    def n_points(self) -> int:
        return self.n_t * self.n_x

    @property
    def dx(self) -> float:
        if self.n_x < 2:
            return 0.0
        return (self.x_values[-1] - self.x_values[0]) / (self.n_x - 1)

    def index(self, i_t: int, j_x: int) -> int:
        return i_t * self.n_x + j_x

    def point(self, k: int) -> SpaceTimePoint:
        i, j = divmod(k, self.n_x)
        return SpaceTimePoint(self.t_values[i], self.x_values[j])

    @classmethod
    def regular(cls, t_values, x_min: float, x_max: float, dx: float) -> "GridSpec":
        n = int(round((x_max - x_min) / dx)) + 1
        xs = x_min + dx * np.arange(n)
        return cls(tuple(t_values), tuple(xs))


@dataclass
class CovarianceMatrix:
    """Dense covariance of the field over a grid, plus any applied jitter."""

    grid: GridSpec
    entries: np.ndarray
    jitter_applied: float = 0.0


@dataclass(frozen=True)
class PsdFactor:
    """Lower-triangular factor of the (jittered) covariance."""

    lower: np.ndarray
    jitter_applied: float
    grid: GridSpec


@dataclass(frozen=True)
class SampleBatch:
    """n_reps exact field realizations over a grid, row per replicate."""

    fields: np.ndarray
    grid: GridSpec
    seed: int


@dataclass(frozen=True)
class SupEstimate:
    """Monte Carlo estimate of an expected supremum."""

    mean: float
    stderr: float
    n_reps: int
    seed: int
    statistic: str

    def __post_init__(self):
        if self.n_reps < 2:
            raise ParameterError("supremum estimate needs at least 2 replicates")
        if self.statistic not in SUP_STATISTICS:
            raise ParameterError(f"unknown statistic {self.statistic!r}")


def assemble_cov(grid: GridSpec, H: float, cfg: KernelConfig | None = None) -> CovarianceMatrix:
    """Covariance matrix via the (time pair, |lag|) kernel cache.

    entries[(i,j),(i',j')] = cov((t_i, x_j), (t_i', x_j')); per time pair
    the block is vals[|j - j'|], one kernel integral per distinct lag.
    """
    cfg = cfg or KernelConfig()
    if grid.n_points > POINT_CAP:
        raise GridCapError(
            f"grid has {grid.n_points} points, cap is {POINT_CAP}")
    n_t, n_x = grid.n_t, grid.n_x
    lags = grid.dx * np.arange(n_x)
    lag_idx = np.abs(np.arange(n_x)[:, None] - np.arange(n_x)[None, :])
    entries = np.empty((grid.n_points, grid.n_points))
    for i in range(n_t):
        for i2 in range(i, n_t):
            vals = kernels.cov_lag_array(grid.t_values[i2], grid.t_values[i],
                                         lags, H, cfg)
            block = vals[lag_idx]
            entries[i * n_x:(i + 1) * n_x, i2 * n_x:(i2 + 1) * n_x] = block
            if i2 != i:
                entries[i2 * n_x:(i2 + 1) * n_x, i * n_x:(i + 1) * n_x] = block.T
    return CovarianceMatrix(grid=grid, entries=entries, jitter_applied=0.0)


def factorize_psd(cov: CovarianceMatrix, jitter_start: float = 1e-12,
                  jitter_factor: float = 10.0, max_attempts: int = 8,
                  max_rel_jitter: float = 1e-6) -> PsdFactor:
    """Cholesky with escalating diagonal jitter.

    On failure adds jitter * mean(diag) to the diagonal, escalating
    geometrically.  The final relative perturbation must stay below
    max_rel_jitter (1e-6): needing more means the grid is too fine for
    the kernel tolerance, which is an error rather than silent
    degradation.
    """
    A = cov.entries
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ParameterError("covariance matrix must be square")
    scale = float(np.max(np.abs(A))) or 1.0
    if float(np.max(np.abs(A - A.T))) > 1e-12 * scale:
        raise ParameterError("covariance matrix is not symmetric")
    mean_diag = float(np.mean(np.diag(A)))

    jitter = 0.0
    for _attempt in range(max_attempts + 1):
        try:
            if jitter == 0.0:
                lower = np.linalg.cholesky(A)
            else:
                B = A.copy()
                B[np.diag_indices_from(B)] += jitter * mean_diag
                lower = np.linalg.cholesky(B)
            if jitter > max_rel_jitter:
                raise FactorizationError(
                    f"factorization needed relative jitter {jitter:.3g} "
                    f"> {max_rel_jitter:.1g}; grid too fine for kernel tolerance",
                    failed_jitter=jitter)
            cov.jitter_applied = jitter * mean_diag
            return PsdFactor(lower=lower, jitter_applied=jitter * mean_diag,
                             grid=cov.grid)
        except np.linalg.LinAlgError:
            jitter = jitter_start if jitter == 0.0 else jitter * jitter_factor
    raise FactorizationError(
        f"cholesky failed after {max_attempts} jitter escalations",
        failed_jitter=jitter)


def _replicate_normals(seed: int, replicate: int, n: int) -> np.ndarray:
    """Standard normals from the counter-based stream of (seed, replicate)."""
    bits = np.random.Philox(key=np.uint64(seed & (2 ** 64 - 1)),
                            counter=[0, 0, 0, np.uint64(replicate)])
    return np.random.Generator(bits).standard_normal(n)


def sample(factor: PsdFactor, n_reps: int, seed: int) -> SampleBatch:
    """n_reps field realizations: row r = lower @ z_r, z_r from (seed, r)."""
    if n_reps < 1:
        raise ParameterError(f"need at least one replicate, got {n_reps}")
    n = factor.lower.shape[0]
    Z = np.empty((n, n_reps))
    for r in range(n_reps):
        Z[:, r] = _replicate_normals(seed, r, n)
    fields = (factor.lower @ Z).T.copy()
    return SampleBatch(fields=fields, grid=factor.grid, seed=seed)


def mc_sup(batch: SampleBatch, statistic: str, pairs=None) -> SupEstimate:
    """Per-replicate supremum of the requested statistic, averaged.

    statistic "sup" / "sup_abs" applies to the raw field, or to increment
    values when index ``pairs`` = (plus, minus) are supplied;
    "sup_increment_spatial" / "sup_increment_temporal" are the signed
    increment suprema and require pairs.
    """
    if statistic not in SUP_STATISTICS:
        raise ParameterError(f"unknown statistic {statistic!r}")
    values = batch.fields
    if statistic.startswith("sup_increment"):
        if pairs is None:
            raise ParameterError(f"{statistic} requires increment index pairs")
    if pairs is not None:
        plus, minus = pairs
        values = values[:, plus] - values[:, minus]
    if statistic == "sup_abs":
        per_rep = np.max(np.abs(values), axis=1)
    else:
        per_rep = np.max(values, axis=1)
    n = per_rep.size
    mean = float(np.mean(per_rep))
    stderr = float(np.std(per_rep, ddof=1) / math.sqrt(n))
    return SupEstimate(mean=mean, stderr=stderr, n_reps=n,
                       seed=batch.seed, statistic=statistic)


def increment_grid_spatial(grid: GridSpec, h: float):
    """Index pairs implementing u(t, x + h) - u(t, x) on the grid.

    h must be a nonzero lattice multiple of dx; x sites whose x + h falls
    off the grid are dropped.  Returns (grid, (plus, minus)).
    """
    if h == 0.0:
        raise ParameterError("spatial increment requires h != 0")
    dx = grid.dx
    if dx == 0.0:
        raise ParameterError("grid has a single x; no spatial increments")
    k = int(round(h / dx))
    if k == 0 or abs(h - k * dx) > 1e-9 * max(dx, abs(h)):
        raise ParameterError(
            f"h={h} is not a lattice multiple of dx={dx}")
    n_t, n_x = grid.n_t, grid.n_x
    if abs(k) >= n_x:
        raise ParameterError(f"h={h} exceeds the grid extent")
    js = np.arange(n_x - abs(k))
    j_minus = js if k > 0 else js + abs(k)
    j_plus = j_minus + k
    plus = (np.arange(n_t)[:, None] * n_x + j_plus[None, :]).ravel()
    minus = (np.arange(n_t)[:, None] * n_x + j_minus[None, :]).ravel()
    return grid, (plus, minus)


def increment_grid_temporal(grid: GridSpec, tau: float):
    """Augment the grid with t + tau levels and pair u(t+tau, x) - u(t, x).

    Returns (augmented grid, (plus, minus)); pairs cover every original
    time level at every x.
    """
    if not tau > 0.0:
        raise ParameterError(f"temporal increment requires tau > 0, got {tau}")
    base = np.asarray(grid.t_values)
    shifted = base + tau
    merged = list(base)
    tol = 1e-12 * max(float(base[-1] + tau), 1.0)
    for t in shifted:
        if min(abs(t - m) for m in merged) > tol:
            merged.append(float(t))
    merged.sort()
    new_grid = GridSpec(tuple(merged), grid.x_values)

    def level_of(t: float) -> int:
        for i, m in enumerate(merged):
            if abs(m - t) <= tol:
                return i
        raise ParameterError("internal: time level lost in merge")

    n_x = grid.n_x
    plus_rows = []
    minus_rows = []
    for t in base:
        ip = level_of(t + tau)
        im = level_of(float(t))
        plus_rows.append(ip * n_x + np.arange(n_x))
        minus_rows.append(im * n_x + np.arange(n_x))
    plus = np.concatenate(plus_rows)
    minus = np.concatenate(minus_rows)
    return new_grid, (plus, minus)


def derive_seed(seed: int, *key: int) -> int:
    """Deterministic 64-bit child seed for an experiment cell."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
