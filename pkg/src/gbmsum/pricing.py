"""Finite-sum densities, discrete-monitoring Asian options, annuity mixtures
and Makeham-based calibration of the geometric stopping probability.

Finite-sum densities come from repeated application of the one-step
transform to the one-period multiplier law; an independent alternating
derivative expansion of the geometric-stopping density reproduces them and
serves as a cross-check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import distributions, solver
from .errors import (
    AccuracyWarning,
    CancellationWarning,
    DivergentExpectationError,
    NoRootError,
    ParameterError,
)
from .moments import mean_finite_sum
from .params import ReducedParams, as_reduced, geometric_tail_exponent
from .solver import GaussianStepOperator, Grid, GridDensity

_PAYOFF_TRUNCATION_TOL = 1e-6
_DENSITY_CACHE: dict = {}
_DENSITY_CACHE_MAX = 8


@dataclass(frozen=True)
class AsianSpec:
    """Contract and model parameters of a discretely monitored Asian option."""

    s0: float
    strike: float
    rate: float
    dividend: float
    sigma: float
    maturity: float
    n_fixings: int

    def __post_init__(self):
        if self.s0 <= 0.0:
            raise ParameterError(f"spot must be positive, got {self.s0}")
        if self.strike < 0.0:
            raise ParameterError(f"strike must be non-negative, got {self.strike}")
        if self.sigma <= 0.0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if self.maturity <= 0.0:
            raise ParameterError(f"maturity must be positive, got {self.maturity}")
        if self.n_fixings < 1:
            raise ParameterError(f"n_fixings must be >= 1, got {self.n_fixings}")

    @property
    def tau(self) -> float:
        return self.maturity / self.n_fixings

    @property
    def drift(self) -> float:
        return self.rate - self.dividend

    def reduced(self) -> ReducedParams:
        return ReducedParams(beta=self.sigma**2 * self.tau, rho=self.drift * self.tau)


@dataclass(frozen=True)
class MortalityModel:
    """Stopping-time model: geometric(p), general weights, or Makeham hazard."""

    variant: str
    p: float | None = None
    weights: tuple | None = None
    makeham_a: float | None = None
    makeham_b: float | None = None
    makeham_beta: float | None = None

    @classmethod
    def geometric(cls, p: float) -> "MortalityModel":
        if not (0.0 < p <= 1.0):
            raise ParameterError(f"geometric mortality needs 0 < p <= 1, got {p}")
        return cls(variant="geometric", p=p)

    @classmethod
    def general(cls, weights) -> "MortalityModel":
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or np.any(w < 0.0):
            raise ParameterError("weights must be a non-empty 1-d array >= 0")
        if abs(w.sum() - 1.0) > 1e-10:
            raise ParameterError(
                f"weights sum to {w.sum():.12g}; must be 1 within 1e-10 after capping"
            )
        return cls(variant="general", weights=tuple(float(v) for v in w / w.sum()))

    @classmethod
    def makeham(cls, a: float = 0.0007, b: float = 5e-5,
                beta: float = 0.0921) -> "MortalityModel":
        if a <= 0.0 or b <= 0.0:
            raise ParameterError("Makeham parameters A, B must be positive")
        return cls(variant="makeham", makeham_a=a, makeham_b=b, makeham_beta=beta)


# -- finite-sum densities ------------------------------------------------------


def _finite_sum_u_max(n: int, rp: ReducedParams) -> float:
    mean = mean_finite_sum(n, rp.rho, 1.0, 1.0)
    margin = math.sqrt(2.0 * rp.beta * n * 46.0) + 1.0
    return math.log1p(max(mean, 1.0) * math.exp(margin))


def _finite_sum_grid(n: int, rp: ReducedParams, h: float | None,
                     u_max: float | None) -> Grid:
    if h is None:
        h = min(0.01, math.sqrt(rp.beta) / 4.0)
    if u_max is None:
        u_max = _finite_sum_u_max(n, rp)
    return Grid(h, max(16, int(round(u_max / h)) + 1))


def _multiplier_values(grid: Grid, rp: ReducedParams) -> np.ndarray:
    vals = np.asarray(distributions.multiplier_pdf(grid.x(), rp), dtype=float)
    vals[0] = 0.0
    return vals


def _finite_sum_values(n: int, rp: ReducedParams, grid: Grid) -> np.ndarray:
    key = (n, rp.beta, rp.rho, grid.h, grid.n_points)
    cached = _DENSITY_CACHE.get(key)
    if cached is not None:
        return cached
    op = GaussianStepOperator(grid, rp)
    vals = _multiplier_values(grid, rp)
    for _ in range(n - 1):
        vals = op.apply(vals)
    if len(_DENSITY_CACHE) >= _DENSITY_CACHE_MAX:
        _DENSITY_CACHE.pop(next(iter(_DENSITY_CACHE)))
    _DENSITY_CACHE[key] = vals
    return vals


def finite_sum_density(n: int, params, h: float | None = None,
                       u_max: float | None = None) -> GridDensity:
    """Density of the n-term sum: n-1 applications of the one-step transform
    to the one-period multiplier law.  No power-law tail is attached (finite
    sums have log-normal-type tails)."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rp = as_reduced(params)
    grid = _finite_sum_grid(n, rp, h, u_max)
    return GridDensity(grid, _finite_sum_values(n, rp, grid))


def finite_sum_density_derivative_form(n: int, params, h: float | None = None,
                                       u_max: float | None = None,
                                       k_terms: int | None = None) -> GridDensity:
    """The same n-term density from the alternating derivative expansion of
    the geometric-stopping law around p = 1.

    Validation path only: each term is one transform application scaled by
    -k, summed with (-1)^k/k! coefficients.  All n terms are always used;
    catastrophic cancellation is flagged.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if n > 150:
        raise ParameterError(
            f"expansion order {n} exceeds double-precision factorial range; "
            f"use finite_sum_density for large horizons"
        )
    if k_terms is not None and k_terms != n:
        raise ParameterError("partial expansions are not supported; k_terms must equal n")
    rp = as_reduced(params)
    grid = _finite_sum_grid(n, rp, h, u_max)
    op = GaussianStepOperator(grid, rp)
    f1 = _multiplier_values(grid, rp)
    total = f1.copy()
    deriv = f1  # d^k/dp^k of the stopped density at p = 1, unscaled
    max_term = float(np.max(np.abs(f1)))
    for k in range(1, n):
        if k == 1:
            deriv = f1 - op.apply(f1)
        else:
            deriv = -k * op.apply(deriv)
        term = ((-1.0) ** k / math.factorial(k)) * deriv
        total = total + term
        max_term = max(max_term, float(np.max(np.abs(term))))
    peak = float(np.max(np.abs(total)))
    if peak > 0.0 and max_term / peak > 1e3:
        warnings.warn(
            f"alternating expansion lost ~{math.log10(max_term / peak):.1f} digits "
            f"to cancellation at n = {n}",
            CancellationWarning,
            stacklevel=2,
        )
    floor = -max(1e-14, 64.0 * 2.2e-16 * max_term)
    if total.min() < floor:
        warnings.warn(
            f"alternating expansion produced negative density values down to "
            f"{total.min():.3g}; clipping",
            CancellationWarning,
            stacklevel=2,
        )
    total = np.where(total < 0.0, 0.0, total)
    total[0] = 0.0
    return GridDensity(grid, total)


def mixture_density(mortality: MortalityModel, params, h: float | None = None,
                    u_max: float | None = None) -> GridDensity:
    """Density of the sum stopped at a general random horizon: the weighted
    combination of finite-sum densities, built with one running transform
    pass."""
    if mortality.variant != "general":
        raise ParameterError("mixture_density needs a general mortality model")
    rp = as_reduced(params)
    weights = np.asarray(mortality.weights)
    cap = weights.size
    if u_max is None:
        means = np.array([mean_finite_sum(k, rp.rho, 1.0, 1.0) for k in range(1, cap + 1)])
        u_max = math.log1p(1000.0 * max(float(weights @ means), 1.0))
    if h is None:
        h = min(0.01, math.sqrt(rp.beta) / 4.0)
    grid = Grid(h, max(16, int(round(u_max / h)) + 1))
    op = GaussianStepOperator(grid, rp)
    running = _multiplier_values(grid, rp)
    acc = weights[0] * running
    for k in range(1, cap):
        running = op.apply(running)
        acc = acc + weights[k] * running
    return GridDensity(grid, acc)


# -- Asian options --------------------------------------------------------------


def _asian_u_max(spec: AsianSpec, kappa: float) -> float:
    mean = mean_finite_sum(spec.n_fixings, spec.drift, spec.tau, 1.0)
    margin = math.sqrt(2.0 * spec.sigma**2 * spec.maturity * 46.0) + 1.0
    return math.log1p(max(mean, kappa, 1.0) * math.exp(margin))


def _edge_decay_mass(grid: Grid, integrand: np.ndarray) -> float:
    """Estimate of the integral beyond the grid from the edge log-slope."""
    tail = integrand[-40:]
    if np.any(tail <= 0.0):
        return 0.0
    slope = np.polyfit(grid.u()[-40:], np.log(tail), 1)[0]
    if slope >= -0.1:
        return math.inf
    return float(integrand[-1] / (-slope))


def asian_prices(spec: AsianSpec, h: float | None = None,
                 u_max: float | None = None) -> dict:
    """Discounted call and put prices plus integration diagnostics.

    The grid span is enlarged until the estimated truncated call-payoff mass
    is below 1e-6 of the price; a truncation-dominated result raises an
    AccuracyWarning (escalated to an error by the CLI's --strict).
    """
    rp = spec.reduced()
    n = spec.n_fixings
    kappa = n * spec.strike / spec.s0
    disc = math.exp(-spec.rate * spec.maturity)
    u_target = _asian_u_max(spec, kappa) if u_max is None else u_max
    diag: dict = {}
    for _ in range(4):
        grid = _finite_sum_grid(n, rp, h, u_target)
        density = GridDensity(grid, _finite_sum_values(n, rp, grid))
        u = grid.u()
        x = grid.x()
        mass_integrand = density.values * np.exp(u)
        call_integrand = mass_integrand * np.maximum(x - kappa, 0.0)
        call_exp = float(np.trapezoid(call_integrand, dx=grid.h))
        beyond = _edge_decay_mass(grid, call_integrand)
        if call_exp > 0.0 and beyond <= _PAYOFF_TRUNCATION_TOL * call_exp:
            break
        u_target += 2.0
    else:
        warnings.warn(
            f"truncated call-payoff mass ~{beyond:.3g} still exceeds "
            f"{_PAYOFF_TRUNCATION_TOL} of the integral after enlarging the grid",
            AccuracyWarning,
            stacklevel=2,
        )
    density_beyond = _edge_decay_mass(grid, mass_integrand)
    if math.isfinite(density_beyond) and density_beyond * float(x[-1]) > 1e-5 * max(call_exp, 1e-300):
        warnings.warn(
            f"truncation-dominated result: beyond-grid mass * x_max = "
            f"{density_beyond * float(x[-1]):.3g} exceeds 1e-5 of the payoff integral",
            AccuracyWarning,
            stacklevel=2,
        )
    put_exp = float(np.trapezoid(mass_integrand * np.maximum(kappa - x, 0.0), dx=grid.h))
    grid_mean = float(np.trapezoid(mass_integrand * x, dx=grid.h))
    exact_mean = mean_finite_sum(n, spec.drift, spec.tau, 1.0)
    diag.update(
        call=disc * spec.s0 / n * call_exp,
        put=disc * spec.s0 / n * put_exp,
        grid_mean=grid_mean,
        exact_mean=exact_mean,
        mean_rel_err=abs(grid_mean - exact_mean) / exact_mean,
        u_max=grid.u_max,
        h=grid.h,
        n_points=grid.n_points,
        truncated_payoff_mass=beyond if math.isfinite(beyond) else None,
    )
    return diag


def asian_call(spec: AsianSpec, h: float | None = None,
               u_max: float | None = None) -> float:
    """Discounted arithmetic-average call price by density integration."""
    return asian_prices(spec, h, u_max)["call"]


def asian_put(spec: AsianSpec, h: float | None = None,
              u_max: float | None = None) -> float:
    """Discounted arithmetic-average put price (bounded payoff, no closure)."""
    return asian_prices(spec, h, u_max)["put"]


def put_call_parity_gap(spec: AsianSpec, convention: str = "discrete") -> float:
    """(C - P) - e^{-rT} (E[average] - K).

    'discrete' uses the exact discretely sampled mean; 'continuous_average'
    uses the continuous-average mean (S0/(rT))(e^{rT} - 1) for comparison.
    """
    prices = asian_prices(spec)
    disc = math.exp(-spec.rate * spec.maturity)
    if convention == "discrete":
        mean_avg = spec.s0 * mean_finite_sum(spec.n_fixings, spec.drift, spec.tau, 1.0) / spec.n_fixings
    elif convention == "continuous_average":
        if spec.rate == 0.0:
            mean_avg = spec.s0
        else:
            mean_avg = spec.s0 / (spec.rate * spec.maturity) * math.expm1(spec.rate * spec.maturity)
    else:
        raise ParameterError(f"unknown parity convention {convention!r}")
    return (prices["call"] - prices["put"]) - disc * (mean_avg - spec.strike)


# -- geometric-maturity option block ---------------------------------------------


def geometric_maturity_option(params, kappa: float, tol: float = 1e-9,
                              max_iter: int = 500, h: float | None = None,
                              u_max: float | None = None) -> float:
    """E[(X_N - kappa)+] for geometric stopping: the building block of the
    generating-function route to fixed-maturity prices."""
    rp = as_reduced(params)
    if not (0.0 < rp.p < 1.0):
        raise ParameterError(f"needs 0 < p < 1, got p = {rp.p}")
    if kappa < 0.0:
        raise ParameterError(f"kappa must be non-negative, got {kappa}")
    mu = geometric_tail_exponent(rp)
    if mu <= 1.0:
        raise DivergentExpectationError(
            f"tail exponent mu = {mu:.4g} <= 1: E[(X_N - kappa)+] is infinite"
        )
    density, _ = solver.solve_geometric(rp, tol=tol, max_iter=max_iter, h=h, u_max=u_max)
    return solver.expectation(density, lambda x: np.maximum(x - kappa, 0.0))


# -- Makeham calibration ----------------------------------------------------------


def _makeham_cumulative_hazard(a: float, b: float, beta: float, t0: float,
                               t1: float) -> float:
    if beta == 0.0:
        return (a + b) * (t1 - t0)
    return a * (t1 - t0) + b / beta * (math.exp(beta * t1) - math.exp(beta * t0))


def makeham_match_p(a0: float, method: str = "life_expectancy",
                    a: float = 0.0007, b: float = 5e-5,
                    beta: float = 0.0921) -> float:
    """Match the geometric stopping probability to a Makeham hazard at age a0.

    life_expectancy: solve E[age at death | alive at a0] = a0 + 1/p with the
    conditional expectation integrated numerically (truncated at age 130,
    where survival is below 1e-12).

    hazard_rate: match the one-year death probability at a0,
    p = 1 - exp(-integral of the hazard over [a0, a0+1]).  (The raw hazard
    equated to the geometric pmf has no root in (0,1) at realistic ages.)
    """
    if not (0.0 <= a0 <= 120.0):
        raise ParameterError(f"age must lie in [0, 120], got {a0}")
    if a < 0.0 or b < 0.0:
        raise ParameterError("Makeham parameters must be non-negative")
    if method == "life_expectancy":
        if a == 0.0 and b == 0.0:
            raise NoRootError("zero hazard: conditional life expectancy diverges")

        def death_age_density(t: float) -> float:
            hz = a + b * math.exp(beta * t)
            return t * hz * math.exp(-_makeham_cumulative_hazard(a, b, beta, a0, t))

        expect, _ = quad(death_age_density, a0, 130.0, epsabs=1e-12, epsrel=1e-11,
                         limit=400)
        if expect - a0 <= 1.0:
            raise NoRootError(
                f"conditional life expectancy {expect:.4g} leaves no p in (0, 1)"
            )
        return 1.0 / (expect - a0)
    if method == "hazard_rate":
        cum = _makeham_cumulative_hazard(a, b, beta, a0, a0 + 1.0)
        p = -math.expm1(-cum)
        if not (0.0 < p < 1.0):
            raise NoRootError(f"one-year death probability {p:.4g} is not in (0, 1)")
        return p
    raise ParameterError(
        f"method must be 'life_expectancy' or 'hazard_rate', got {method!r}"
    )
