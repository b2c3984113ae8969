"""Special functions for the killing walk: modified Bessel series, the ball
survival probability, and the 1D interval Laplace transform.

The survival probability of a particle jumping across a ball of radius r
under a constant killing rate lam is

    psi(mu*r)  with  mu = sqrt(2*lam),
    psi(mu) = mu^nu / (2^nu * Gamma(nu+1) * I_nu(mu)),   nu = n/2 - 1,

which reduces to 1/cosh(mu) in 1D, 1/I_0(mu) in 2D and mu/sinh(mu) in 3D.
All functions here are pure and numerically stable in log space for large
arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "SurvivalQuery",
    "bessel_i",
    "log_bessel_i",
    "psi",
    "survival_probability",
    "interval_laplace",
]

# Series stops once the next term drops below _SERIES_RTOL times the partial
# sum; past _SERIES_MAX_TERMS (or past the overflow-safe argument range) the
# large-argument log asymptotic takes over.
_SERIES_RTOL = 1e-16
_SERIES_MAX_TERMS = 500
_SERIES_MAX_ARG = 690.0
# Survival probabilities below exp(-700) are rounded down to zero: the
# particle is killed with certainty, and subnormal arithmetic is avoided.
_LOG_UNDERFLOW = -700.0


@dataclass(frozen=True)
class SurvivalQuery:
    """Killing rate, ball radius and ambient dimension for one sphere jump."""

    lam: float
    radius: float
    dimension: int

    def __post_init__(self) -> None:
        if not (self.lam >= 0.0 and math.isfinite(self.lam)):
            raise ValueError(f"killing rate must be finite and >= 0, got {self.lam}")
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be finite and > 0, got {self.radius}")
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension}")

    @property
    def mu(self) -> float:
        return math.sqrt(2.0 * self.lam) * self.radius

    @property
    def nu(self) -> float:
        return self.dimension / 2.0 - 1.0


def _normalized_series(nu: float, x: float) -> float:
    """Sum of the Bessel series with the leading (x/2)^nu / Gamma(nu+1) factor
    divided out, i.e. sum_m (x^2/4)^m / (m! (nu+1)_m).  Equals 1 at x = 0 and
    1/psi for x = mu, which is how ``psi`` consumes it.

    Raises OverflowError when the sum cannot be represented; callers fall back
    to the log asymptotic.
    """
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    for m in range(1, _SERIES_MAX_TERMS + 1):
        term *= q / (m * (m + nu))
        total += term
        if term < _SERIES_RTOL * total:
            return total
    raise OverflowError(f"Bessel series did not converge in {_SERIES_MAX_TERMS} terms (x={x})")


def bessel_i(nu: float, x: float) -> float:
    """Modified Bessel function of the first kind, by its power series.

    Supported orders are nu >= -1/2; the walk only exercises
    nu in {-1/2, 0, 1/2}.  Overflows to inf for x beyond ~700; use
    ``log_bessel_i`` in that regime.
    """
    if x < 0.0:
        raise ValueError(f"bessel_i requires x >= 0, got {x}")
    if nu < -0.5:
        raise ValueError(f"bessel_i requires nu >= -1/2, got {nu}")
    if x == 0.0:
        if nu == 0.0:
            return 1.0
        return math.inf if nu < 0.0 else 0.0
    if x > _SERIES_MAX_ARG:
        log_val = log_bessel_i(nu, x)
        return math.exp(log_val) if log_val < 709.0 else math.inf
    prefactor = math.exp(nu * math.log(0.5 * x) - math.lgamma(nu + 1.0))
    return prefactor * _normalized_series(nu, x)


def log_bessel_i(nu: float, x: float) -> float:
    """log I_nu(x), stable for large x via the leading asymptotic
    I_nu(x) ~ e^x / sqrt(2 pi x)."""
    if x < 0.0:
        raise ValueError(f"log_bessel_i requires x >= 0, got {x}")
    if x == 0.0:
        if nu == 0.0:
            return 0.0
        return math.inf if nu < 0.0 else -math.inf
    if x <= _SERIES_MAX_ARG:
        log_prefactor = nu * math.log(0.5 * x) - math.lgamma(nu + 1.0)
        return log_prefactor + math.log(_normalized_series(nu, x))
    return x - 0.5 * math.log(2.0 * math.pi * x)


def psi(mu: float, dimension: int) -> float:
    """Survival probability of the exponential clock over one sphere exit:
    psi(mu) = mu^nu / (2^nu Gamma(nu+1) I_nu(mu)), nu = n/2 - 1, psi(0) = 1.

    Evaluated as the reciprocal of the normalized Bessel series, so the
    continuity limit psi(0) = 1 is automatic; large arguments go through log
    space and results below exp(-700) round to exactly 0.
    """
    if mu < 0.0:
        raise ValueError(f"psi requires mu >= 0, got {mu}")
    if dimension not in (1, 2, 3):
        raise ValueError(f"psi supports dimensions 1, 2, 3; got {dimension}")
    nu = dimension / 2.0 - 1.0
    if mu <= _SERIES_MAX_ARG:
        try:
            return 1.0 / _normalized_series(nu, mu)
        except OverflowError:
            pass
    log_psi = nu * math.log(0.5 * mu) - math.lgamma(nu + 1.0) - log_bessel_i(nu, mu)
    if log_psi < _LOG_UNDERFLOW:
        return 0.0
    return math.exp(log_psi)


def survival_probability(query: SurvivalQuery) -> float:
    """P(exponential clock at rate lam outlives the exit from a ball of the
    given radius) = psi(sqrt(2 lam) * r).  Always in (0, 1]."""
    return psi(query.mu, query.dimension)


def _log_cosh(t: float) -> float:
    # |t| + log((1 + e^{-2|t|}) / 2); never overflows.
    a = abs(t)
    return a + math.log1p(math.exp(-2.0 * a)) - math.log(2.0)


def interval_laplace(x: float, a: float, b: float, lam: float) -> float:
    """E[exp(-lam * T)] for the first exit time T of 1D Brownian motion from
    (a, b) started at x: cosh((b+a-2x) sqrt(lam/2)) / cosh((b-a) sqrt(lam/2)).

    Returns 1 at the endpoints (exit time zero) and for lam = 0.
    """
    if lam < 0.0:
        raise ValueError(f"interval_laplace requires lam >= 0, got {lam}")
    if not (a <= x <= b):
        raise ValueError(f"x={x} must lie in [{a}, {b}]")
    if lam == 0.0 or x == a or x == b:
        return 1.0
    s = math.sqrt(0.5 * lam)
    log_ratio = _log_cosh((b + a - 2.0 * x) * s) - _log_cosh((b - a) * s)
    if log_ratio < _LOG_UNDERFLOW:
        return 0.0
    return math.exp(log_ratio)
