"""Tail exponents, tail constants, shortfall probabilities and Value-at-Risk.

Right tails of the infinite and geometrically stopped sums are power laws;
the prefactors come from renewal-theoretic expectation formulas evaluated on
the solved densities.  Left tails scale like log-normal left tails:
log P(X <= eps) / (log eps)^2 approaches a constant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import solver
from .distributions import yor_survival
from .errors import ParameterError, RegimeWarning
from .params import (
    TailAsymptote,
    as_reduced,
    geometric_tail_exponent,
    infinite_tail_exponent,
)


def exponent_infinite(params) -> float:
    """Survival exponent 1 - 2 rho / beta of the infinite sum."""
    return infinite_tail_exponent(as_reduced(params))


def exponent_geometric(params) -> float:
    """Survival exponent of the geometrically stopped sum."""
    return geometric_tail_exponent(as_reduced(params))


def _stable_power_gap(x: np.ndarray, mu: float) -> np.ndarray:
    # (1+x)^mu - x^mu without cancellation for large x
    out = np.empty_like(x)
    small = x < 1e6
    out[small] = (1.0 + x[small]) ** mu - x[small] ** mu
    xl = x[~small]
    out[~small] = xl**mu * np.expm1(mu * np.log1p(1.0 / xl))
    return out


def tail_constant_infinite(F: solver.GridDensity, params) -> float:
    """Renewal-formula prefactor of P(X_inf > x) ~ c x^(-alpha).

    c = E[(1+X)^alpha - X^alpha] / (alpha (beta/2 - rho)); the expectation
    runs over the solved stationary density (tail-closed: the integrand
    grows like x^(alpha-1) so it always converges).
    """
    rp = as_reduced(params)
    alpha = infinite_tail_exponent(rp)
    numer = solver.expectation(F, lambda x: _stable_power_gap(x, alpha))
    return numer / (alpha * (0.5 * rp.beta - rp.rho))


def tail_constant_geometric(F: solver.GridDensity, params) -> float:
    """Prefactor of P(X_N > x) ~ c+ x^(-mu) for geometric stopping.

    The mu-power expectation is evaluated as the single combined payoff
    (1+x)^mu - x^mu; integrating the two terms separately is forbidden
    because each diverges at the exponent boundary.
    """
    rp = as_reduced(params)
    if rp.p >= 1.0:
        raise ParameterError(
            "p = 1 has a log-normal law with no power tail; tail constant undefined"
        )
    mu = geometric_tail_exponent(rp)
    gap = solver.expectation(F, lambda x: _stable_power_gap(x, mu))
    half = 0.5 * rp.beta
    root = math.sqrt((rp.rho - half) ** 2 - 2.0 * rp.beta * math.log1p(-rp.p))
    return (rp.p + (1.0 - rp.p) * gap) / (mu * (1.0 - rp.p) * root)


def left_tail_coefficient(kind: str, params, n: int | None = None) -> float:
    """Limit of log P(X <= eps) / (log eps)^2: -1/(2 beta) for every variant."""
    rp = as_reduced(params)
    if kind not in ("infinite", "geometric", "finite"):
        raise ParameterError(f"kind must be infinite, geometric or finite, got {kind!r}")
    if kind == "finite" and (n is None or n < 1):
        raise ParameterError("kind='finite' requires a horizon n >= 1")
    return -1.0 / (2.0 * rp.beta)


def finite_sum_right_tail_coefficient(params, n: int) -> float:
    """Limit of log P(X_n >= x) / (log x)^2 = -1/(2 beta n) for finite sums."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rp = as_reduced(params)
    return -1.0 / (2.0 * rp.beta * n)


def shortfall_probability(F: solver.GridDensity, K: float, q: float = 0.0) -> float:
    """P(X > (1+q) K) on the solved discrete-time density."""
    if K <= 0.0:
        raise ParameterError(f"capital K must be positive, got {K}")
    if q < 0.0:
        raise ParameterError(f"buffer q must be non-negative, got {q}")
    return solver.survival(F, (1.0 + q) * K)


def shortfall_continuous(sigma: float, m: float, lam: float, K: float,
                         q: float = 0.0) -> float:
    """Continuous-time-limit shortfall: survival of the exponential-time
    integral law at (1+q) K."""
    if K <= 0.0:
        raise ParameterError(f"capital K must be positive, got {K}")
    if q < 0.0:
        raise ParameterError(f"buffer q must be non-negative, got {q}")
    return yor_survival((1.0 + q) * K, sigma, m, lam)


@dataclass(frozen=True)
class VarEstimate:
    threshold: float
    method: str  # "tail_inversion" | "grid_inversion"


def value_at_risk(ta: TailAsymptote, p_level: float,
                  density: solver.GridDensity | None = None) -> VarEstimate:
    """Threshold K with P(X > K) = p_level from the tail asymptote.

    K = (constant / p_level)^(1/exponent).  When a density is supplied and
    K falls inside the grid body (below the 99th percentile), the power-law
    regime does not apply: the exact grid inversion is returned and flagged.
    """
    if not (0.0 < p_level < 1.0):
        raise ParameterError(f"p_level must be in (0, 1), got {p_level}")
    k = (ta.constant / p_level) ** (1.0 / ta.exponent)
    if density is not None:
        x99 = solver.quantile(density, 0.99)
        if k <= x99:
            warnings.warn(
                f"VaR threshold {k:.6g} falls inside the grid body (99th "
                f"percentile {x99:.6g}); using exact grid inversion",
                RegimeWarning,
                stacklevel=2,
            )
            return VarEstimate(solver.quantile(density, 1.0 - p_level), "grid_inversion")
    return VarEstimate(k, "tail_inversion")


# -- empirical fits on solved densities -----------------------------------------


def fit_survival_powerlaw(F: solver.GridDensity, window_decades: float = 1.0,
                          min_points: int = 20) -> tuple[float, float, float]:
    """Fit the survival power law over the last decade(s) of the grid.

    Returns (fitted_exponent, plateau_constant, plateau_variation): the
    log-log regression slope, the median of survival * x^fitted over the
    window, and the relative max-min spread of survival * x^exponent using
    the density's own tail exponent (flatness diagnostic).
    """
    if F.tail is None:
        raise ParameterError("density carries no tail asymptote to fit against")
    x = F.grid.x()
    surv = solver.survival_on_grid(F)
    lo = np.expm1(F.grid.u_max - window_decades * math.log(10.0))
    sel = (x >= lo) & (surv > 0.0)
    if sel.sum() < min_points:
        sel = np.zeros_like(sel)
        sel[-min_points:] = True
    lx = np.log(x[sel])
    ls = np.log(surv[sel])
    slope, intercept = np.polyfit(lx, ls, 1)
    fitted_exponent = -float(slope)
    plateau = surv[sel] * x[sel] ** F.tail.exponent
    variation = float((plateau.max() - plateau.min()) / np.median(plateau))
    constant = float(np.median(surv[sel] * x[sel] ** fitted_exponent))
    return fitted_exponent, constant, variation


def fit_left_tail_coefficient(F: solver.GridDensity, params,
                              eps_range: tuple[float, float] = (1e-4, 1e-2),
                              n_points: int = 12) -> float:
    """Quadratic-in-log(eps) fit of log P(X <= eps) over the given range.

    Returns the leading coefficient, comparable to -1/(2 beta); the linear
    and constant terms absorb the subleading log-normal structure.
    """
    rp = as_reduced(params)
    eps = np.geomspace(eps_range[0], eps_range[1], n_points)
    probs = solver.left_tail_cdf(F, rp, eps, p=rp.p)
    if np.any(probs <= 0.0):
        raise ParameterError("left-tail probabilities vanished; grid too coarse")
    coeffs = np.polyfit(np.log(eps), np.log(probs), 2)
    return float(coeffs[0])


def risk_record(exponent: float, constant: float, shortfall: float,
                var: VarEstimate) -> dict:
    """JSON-ready summary of a tail/risk computation."""
    return {
        "exponent": exponent,
        "constant": constant,
        "shortfall": shortfall,
        "var_threshold": var.threshold,
        "method_flags": {"var": var.method},
    }
