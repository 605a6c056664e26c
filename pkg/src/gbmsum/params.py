"""Model parameterizations and power-law tail descriptors.

Two equivalent parameterizations describe the one-period log-normal
multiplier of the discrete GBM sum: the physical one (volatility sigma,
drift m, time step tau, optional stopping intensity lam) and the reduced
dimensionless one (beta = sigma^2 tau, rho = m tau, per-period stopping
probability p = lam tau).  All numerical routines work in reduced form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the sampled geometric Brownian motion.

    sigma : volatility per sqrt(unit time), > 0
    m     : drift per unit time
    tau   : sampling time step, > 0
    lam   : stopping (mortality) intensity per unit time, >= 0
    """

    sigma: float
    m: float
    tau: float
    lam: float = 0.0

    def __post_init__(self):
        if not (self.sigma > 0.0):
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not (self.tau > 0.0):
            raise ParameterError(f"tau must be positive, got {self.tau}")
        if self.lam < 0.0:
            raise ParameterError(f"lam must be non-negative, got {self.lam}")


@dataclass(frozen=True)
class ReducedParams:
    """Dimensionless multiplier-law parameters (beta, rho, p).

    The one-period multiplier is log-normal with log-mean rho - beta/2 and
    log-variance beta; p is the per-period stopping probability.
    """

    beta: float
    rho: float
    p: float = 0.0

    def __post_init__(self):
        if not (self.beta > 0.0):
            raise ParameterError(f"beta must be positive, got {self.beta}")
        if not (0.0 <= self.p <= 1.0):
            raise ParameterError(f"p must lie in [0, 1], got {self.p}")

    @property
    def perpetuity_feasible(self) -> bool:
        """True when the infinite sum exists (rho < beta/2)."""
        return self.rho < 0.5 * self.beta


def reduce(params: ModelParams) -> ReducedParams:
    """Map physical parameters to the reduced (beta, rho, p) triple."""
    p = params.lam * params.tau
    if p > 1.0:
        raise ParameterError(
            f"lam*tau = {p} exceeds 1; not a valid per-period stopping probability"
        )
    return ReducedParams(
        beta=params.sigma**2 * params.tau, rho=params.m * params.tau, p=p
    )


def as_reduced(params) -> ReducedParams:
    """Accept either parameterization and return the reduced one."""
    if isinstance(params, ReducedParams):
        return params
    if isinstance(params, ModelParams):
        return reduce(params)
    raise ParameterError(f"expected ModelParams or ReducedParams, got {type(params)!r}")


def infinite_tail_exponent(rp: ReducedParams) -> float:
    """Power-law decay exponent of the infinite-sum survival function."""
    if not rp.perpetuity_feasible:
        raise ParameterError(
            f"infinite sum does not exist: rho = {rp.rho} >= beta/2 = {0.5 * rp.beta}"
        )
    return 1.0 - 2.0 * rp.rho / rp.beta


def geometric_tail_exponent(rp: ReducedParams) -> float:
    """Power-law decay exponent of the geometrically stopped sum.

    Strictly positive for any drift when 0 < p < 1; the perpetuity drift
    condition is not required.
    """
    if not (0.0 < rp.p < 1.0):
        raise ParameterError(f"geometric tail exponent needs 0 < p < 1, got p = {rp.p}")
    half = 0.5 * rp.beta
    disc = (rp.rho - half) ** 2 - 2.0 * rp.beta * math.log1p(-rp.p)
    return (-rp.rho + half + math.sqrt(disc)) / rp.beta


@dataclass(frozen=True)
class TailAsymptote:
    """Power-law survival asymptote P(X > x) ~ constant * x**(-exponent)."""

    exponent: float
    constant: float
    regime: str = "infinite_sum"  # infinite_sum | geometric_sum | continuous_limit

    def __post_init__(self):
        if not (self.exponent > 0.0):
            raise ParameterError(f"tail exponent must be positive, got {self.exponent}")
        if not (self.constant > 0.0):
            raise ParameterError(f"tail constant must be positive, got {self.constant}")
        if self.regime not in ("infinite_sum", "geometric_sum", "continuous_limit"):
            raise ParameterError(f"unknown tail regime {self.regime!r}")

    def survival(self, x: float) -> float:
        return self.constant * x ** (-self.exponent)
