"""Normalizing constants (a_n, b_n) with u_n(x) = x/a_n + b_n.

Closed forms for the Gaussian, chi and Gaussian order-statistic families,
plus the generic quantile recipe b_n = F^{-1}(1 - 1/n), a_n = n f(b_n) for
Gumbel-domain marginals with tractable inverse CDF.

The order-statistic formula follows the tail expansion
P(O > u) ~ C(d,r) Psi(u)^r: leading term a_n/r with inner power (a_n/r)^{-r},
which is the unique reading calibrating n P(O > u_n(x)) -> e^{-x}; the
variant with inner power a_n^{-r} shifts the limit by r log r.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.special

from .errors import DomainError, InvalidParameter, UnsupportedMarginal

GAUSSIAN = "gaussian"
CHI = "chi"
ORDERSTAT = "orderstat"
QUANTILE = "quantile"
EXPLICIT = "explicit"


@dataclass(frozen=True)
class Norming:
    a: float
    b: float
    n: int
    family: str

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a) and math.isfinite(self.b)):
            raise InvalidParameter(f"norming needs finite a > 0, got a={self.a}, b={self.b}")

    def u(self, x):
        """Level u_n(x) = x/a_n + b_n; strictly increasing in x."""
        return np.asarray(x) / self.a + self.b

    def normalize(self, m):
        """Map a raw maximum onto the limit scale: a_n (m - b_n)."""
        return self.a * (np.asarray(m) - self.b)


def gaussian_norming(n: int) -> Norming:
    """Classical constants for standard Gaussian maxima."""
    if n <= 2:
        raise DomainError(f"gaussian norming needs n >= 3, got {n}")
    a = math.sqrt(2.0 * math.log(n))
    b = a - (math.log(math.log(n)) + math.log(4.0 * math.pi)) / (2.0 * a)
    return Norming(a, b, n, GAUSSIAN)


def chi_norming(n: int, d: int) -> Norming:
    """Constants for maxima of chi sequences with d degrees of freedom.

    For d = 2 the correction term vanishes exactly (Rayleigh tail), so
    b_n = a_n.
    """
    if n < 2:
        raise DomainError(f"chi norming needs n >= 2, got {n}")
    if d < 1:
        raise DomainError(f"chi norming needs d >= 1, got {d}")
    a = math.sqrt(2.0 * math.log(n))
    log_const = (1.0 - d / 2.0) * math.log(2.0) - math.lgamma(d / 2.0)
    b = a + (log_const + (d - 2.0) * math.log(a)) / a
    return Norming(a, b, n, f"{CHI}({d})")


def order_stat_norming(n: int, d: int, r: int) -> Norming:
    """Constants for maxima of the r-th largest of d Gaussian coordinates."""
    if n < 2:
        raise DomainError(f"order-statistic norming needs n >= 2, got {n}")
    if not (1 <= r <= d):
        raise DomainError(f"order-statistic norming needs 1 <= r <= d, got r={r}, d={d}")
    a = math.sqrt(2.0 * r * math.log(n))
    log_c = math.log(math.comb(d, r))
    b = a / r + (log_c - 0.5 * r * math.log(2.0 * math.pi) - r * math.log(a / r)) / a
    return Norming(a, b, n, f"{ORDERSTAT}({d},{r})")


_QUANTILE_MARGINALS = ("exponential", "gaussian")


def quantile_norming(marginal: str, n: int) -> Norming:
    """Generic Gumbel-domain constants: b_n = F^{-1}(1-1/n), a_n = n f(b_n).

    Supported marginals: standard exponential and standard gaussian.
    Uniform is Weibull-domain and Frechet/Pareto are Frechet-domain, so the
    Gumbel recipe rejects them.
    """
    if n < 2:
        raise DomainError(f"quantile norming needs n >= 2, got {n}")
    if marginal == "exponential":
        return Norming(1.0, math.log(n), n, f"{QUANTILE}(exponential)")
    if marginal == "gaussian":
        # -ndtri(1/n) rather than ndtri(1 - 1/n): 1/n stays exact for large n
        b = -float(scipy.special.ndtri(1.0 / n))
        a = n * math.exp(-0.5 * b * b) / math.sqrt(2.0 * math.pi)
        return Norming(a, b, n, f"{QUANTILE}(gaussian)")
    raise UnsupportedMarginal(
        f"quantile norming supports {_QUANTILE_MARGINALS}, got {marginal!r}")


def explicit_norming(a: float, b: float, n: int) -> Norming:
    return Norming(a, b, n, EXPLICIT)
