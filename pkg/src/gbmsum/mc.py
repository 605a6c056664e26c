"""Monte Carlo oracle for discrete GBM sums and GBM time integrals.

Ground truth for means, moments, survival probabilities and option payoffs,
with standard errors.  A single counter-based Philox stream and a fixed,
platform-independent draw layout (horizons first, then one flat normal
block per chunk) make every estimate bit-for-bit reproducible for a given
(seed, n_paths, horizon); the accumulation is serial, so results cannot
depend on scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import path_partial_product_sums
from .errors import ParameterError
from .params import as_reduced

_MAX_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class FixedHorizon:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"fixed horizon must be >= 1, got {self.n}")


@dataclass(frozen=True)
class GeometricHorizon:
    p: float

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise ParameterError(f"geometric horizon needs 0 < p <= 1, got {self.p}")


@dataclass(frozen=True)
class GeneralHorizon:
    """P(N = k+1) = weights[k]; weights must sum to 1 within 1e-10."""

    weights: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or np.any(w < 0.0):
            raise ParameterError("horizon weights must be a non-empty 1-d array >= 0")
        if abs(w.sum() - 1.0) > 1e-10:
            raise ParameterError(f"horizon weights sum to {w.sum()}, not 1")
        object.__setattr__(self, "weights", tuple(float(v) for v in w / w.sum()))


@dataclass(frozen=True)
class McConfig:
    n_paths: int
    seed: int
    antithetic: bool = False
    horizon: object = field(default_factory=lambda: FixedHorizon(1))

    def __post_init__(self):
        if self.n_paths < 1000:
            raise ParameterError(f"n_paths must be >= 1000, got {self.n_paths}")
        if self.antithetic and self.n_paths % 2:
            raise ParameterError("antithetic pairing needs an even n_paths")
        if not isinstance(self.horizon, (FixedHorizon, GeometricHorizon, GeneralHorizon)):
            raise ParameterError(f"unknown horizon {self.horizon!r}")


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n_paths: int


def _typical_horizon(horizon) -> int:
    if isinstance(horizon, FixedHorizon):
        return horizon.n
    if isinstance(horizon, GeometricHorizon):
        return max(1, int(math.ceil(1.0 / horizon.p)))
    return len(horizon.weights)


def _chunk_size(horizon) -> int:
    return max(1024, min(1 << 16, _MAX_CHUNK_ELEMENTS // _typical_horizon(horizon)))


def _draw_horizons(rng: np.random.Generator, horizon, count: int) -> np.ndarray:
    if isinstance(horizon, FixedHorizon):
        return np.full(count, horizon.n, dtype=np.int64)
    if isinstance(horizon, GeometricHorizon):
        return rng.geometric(horizon.p, size=count).astype(np.int64)
    w = np.asarray(horizon.weights)
    return rng.choice(w.size, size=count, p=w).astype(np.int64) + 1


class _Accumulator:
    """Streaming mean / standard error over (possibly multi-column) samples."""

    def __init__(self):
        self.n = 0
        self.total = None
        self.total_sq = None

    def add(self, samples: np.ndarray):
        samples = np.atleast_2d(np.asarray(samples, dtype=float).T).T
        if self.total is None:
            self.total = samples.sum(axis=0)
            self.total_sq = (samples**2).sum(axis=0)
        else:
            self.total += samples.sum(axis=0)
            self.total_sq += (samples**2).sum(axis=0)
        self.n += samples.shape[0]

    def estimates(self, n_paths: int) -> list[McEstimate]:
        mean = self.total / self.n
        var = np.maximum(self.total_sq / self.n - mean**2, 0.0) * self.n / max(self.n - 1, 1)
        se = np.sqrt(var / self.n)
        return [McEstimate(float(m), float(s), n_paths) for m, s in zip(mean, se)]


def _finish(acc: _Accumulator, cfg: McConfig):
    ests = acc.estimates(cfg.n_paths)
    return ests[0] if len(ests) == 1 else ests


def simulate_sum(params, cfg: McConfig, statistic):
    """Estimate E[statistic(X_horizon)] for the discrete GBM sum.

    Each path multiplies i.i.d. log-normal factors (log-mean rho - beta/2,
    log-variance beta) cumulatively and sums the running products.  The
    statistic must be vectorized; it may return one column per path or a
    (paths, k) array, in which case a list of estimates is returned.
    Antithetic pairing shares the horizon draw and flips the normals.
    """
    rp = as_reduced(params)
    scale = math.sqrt(rp.beta)
    drift = rp.rho - 0.5 * rp.beta
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    primaries = cfg.n_paths // 2 if cfg.antithetic else cfg.n_paths
    chunk = _chunk_size(cfg.horizon)
    acc = _Accumulator()
    done = 0
    while done < primaries:
        count = min(chunk, primaries - done)
        horizons = _draw_horizons(rng, cfg.horizon, count)
        offsets = np.concatenate([[0], np.cumsum(horizons)])
        z = rng.standard_normal(offsets[-1])
        s_arr = np.full(count, scale)
        d_arr = np.full(count, drift)
        x = path_partial_product_sums(z, offsets, s_arr, d_arr)
        if cfg.antithetic:
            x_anti = path_partial_product_sums(-z, offsets, s_arr, d_arr)
            samples = 0.5 * (
                np.asarray(statistic(x), dtype=float) + np.asarray(statistic(x_anti), dtype=float)
            )
        else:
            samples = np.asarray(statistic(x), dtype=float)
        acc.add(samples)
        done += count
    return _finish(acc, cfg)


def simulate_time_integral(sigma: float, m: float, substeps: int, cfg: McConfig,
                           statistic=None, T: float | None = None,
                           lam: float | None = None):
    """Left-Riemann estimate of the GBM time integral over [0, T].

    Exactly one of T (fixed maturity) and lam (exponential maturity drawn
    per path) must be given.  Used to validate the continuous-time limit
    laws empirically.
    """
    if substeps < 100:
        raise ParameterError(f"substeps must be >= 100, got {substeps}")
    if (T is None) == (lam is None):
        raise ParameterError("give exactly one of T and lam")
    if T is not None and T <= 0.0:
        raise ParameterError(f"T must be positive, got {T}")
    if lam is not None and lam <= 0.0:
        raise ParameterError(f"lam must be positive, got {lam}")
    if statistic is None:
        statistic = lambda y: y  # noqa: E731 - identity default
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    primaries = cfg.n_paths // 2 if cfg.antithetic else cfg.n_paths
    chunk = max(1024, min(1 << 16, _MAX_CHUNK_ELEMENTS // substeps))
    acc = _Accumulator()
    done = 0
    n_inner = substeps - 1  # the t = 0 term of the Riemann sum is exp(0) = 1
    offsets_template = None
    while done < primaries:
        count = min(chunk, primaries - done)
        if lam is not None:
            maturities = rng.exponential(1.0 / lam, size=count)
        else:
            maturities = np.full(count, float(T))
        dt = maturities / substeps
        z = rng.standard_normal(count * n_inner)
        if offsets_template is None or offsets_template.size != count + 1:
            offsets_template = np.arange(count + 1, dtype=np.int64) * n_inner
        s_arr = sigma * np.sqrt(dt)
        d_arr = (m - 0.5 * sigma**2) * dt

        def integrals(zz):
            partial = path_partial_product_sums(zz, offsets_template, s_arr, d_arr)
            return dt * (1.0 + partial)

        if cfg.antithetic:
            samples = 0.5 * (
                np.asarray(statistic(integrals(z)), dtype=float)
                + np.asarray(statistic(integrals(-z)), dtype=float)
            )
        else:
            samples = np.asarray(statistic(integrals(z)), dtype=float)
        acc.add(samples)
        done += count
    return _finish(acc, cfg)
