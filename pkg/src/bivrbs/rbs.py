"""Univariate Birnbaum-Saunders distribution parameterized by its mean.

``RBS(mu, delta)`` has mean ``mu`` and precision ``delta``; the classical
Birnbaum-Saunders shape and scale are ``alpha = sqrt(2/delta)`` and
``beta = mu*delta/(delta+1)`` (``beta`` is the median).  The monotone map

    a(t) = (sqrt(t/beta) - sqrt(beta/t)) / alpha

sends an RBS variate to a standard normal one, and almost everything in this
module is written in terms of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

from .exceptions import DomainError
from .numerics import std_normal_cdf, std_normal_quantile, std_normal_sf

__all__ = [
    "RbsParams",
    "to_classical",
    "from_classical",
    "a_transform",
    "a_inverse",
    "a_derivs",
    "rbs_logpdf",
    "rbs_pdf",
    "rbs_cdf",
    "rbs_sf",
    "rbs_hr",
    "rbs_quantile",
    "rbs_moments",
    "rbs_var",
    "rbs_chi3_weighted_pdf",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class RbsParams:
    """Mean ``mu`` and precision ``delta`` of an RBS distribution."""

    mu: float
    delta: float

    def __post_init__(self):
        mu, delta = float(self.mu), float(self.delta)
        if not (np.isfinite(mu) and mu > 0):
            raise DomainError(f"mu must be positive and finite, got {self.mu}")
        if not (np.isfinite(delta) and delta > 0):
            raise DomainError(f"delta must be positive and finite, got {self.delta}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "delta", delta)

    @property
    def alpha(self) -> float:
        return math.sqrt(2.0 / self.delta)

    @property
    def beta(self) -> float:
        return self.mu * self.delta / (self.delta + 1.0)

    @classmethod
    def from_classical(cls, alpha: float, beta: float) -> "RbsParams":
        """Build from Birnbaum-Saunders shape ``alpha`` and scale ``beta``."""
        if not (alpha > 0 and beta > 0):
            raise DomainError("alpha and beta must be positive")
        delta = 2.0 / (alpha * alpha)
        return cls(mu=beta * (1.0 + 0.5 * alpha * alpha), delta=delta)


def to_classical(p: RbsParams) -> tuple[float, float]:
    """Return ``(alpha, beta)``."""
    return p.alpha, p.beta


def from_classical(alpha: float, beta: float) -> RbsParams:
    return RbsParams.from_classical(alpha, beta)


def _positive(t, name="t"):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)) or np.any(~np.isfinite(t)):
        raise DomainError(f"{name} must be positive and finite")
    return t


def _ret(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


def a_transform(t, p: RbsParams):
    """Standardizing map a(t); strictly increasing from R+ onto R."""
    t = _positive(t)
    r = np.sqrt(t / p.beta)
    return _ret((r - 1.0 / r) / p.alpha)


def a_inverse(s, p: RbsParams):
    """Inverse of :func:`a_transform`: (beta/4) [alpha s + sqrt((alpha s)^2 + 4)]^2."""
    s = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(s)):
        raise DomainError("a_inverse requires finite input")
    x = p.alpha * s
    # for x < 0 the sum cancels; use the conjugate 4/(sqrt(x^2+4) - x) instead
    root = np.sqrt(x * x + 4.0)
    y = np.where(x >= 0, x + root, 4.0 / (root - x))
    return _ret(0.25 * p.beta * y * y)


def a_derivs(t, p: RbsParams):
    """First three derivatives ``(a', a'', a''')`` of the standardizing map."""
    t = _positive(t)
    al, be = p.alpha, p.beta
    u = 1.0 / np.sqrt(be * t)
    v = np.sqrt(be / t) / t
    a1 = (u + v) / (2.0 * al)
    a2 = -(u + 3.0 * v) / (4.0 * al * t)
    a3 = 3.0 * (u + 5.0 * v) / (8.0 * al * t * t)
    return _ret(a1), _ret(a2), _ret(a3)


def _log_a1(t, p):
    # log a'(t) = log((sqrt(t/beta) + sqrt(beta/t)) / (2 alpha t))
    r = np.sqrt(t / p.beta)
    return np.log(r + 1.0 / r) - math.log(2.0 * p.alpha) - np.log(t)


def rbs_logpdf(t, p: RbsParams):
    """Log density, log phi(a(t)) + log a'(t)."""
    t = _positive(t)
    a = np.asarray(a_transform(t, p))
    return _ret(-_LOG_SQRT_2PI - 0.5 * a * a + _log_a1(t, p))


def rbs_pdf(t, p: RbsParams):
    """Density phi(a(t)) a'(t), evaluated in log space."""
    return _ret(np.exp(rbs_logpdf(t, p)))


def rbs_cdf(t, p: RbsParams):
    return std_normal_cdf(a_transform(t, p))


def rbs_sf(t, p: RbsParams):
    """Survival function 1 - F(t) = Phi(-a(t))."""
    return std_normal_sf(a_transform(t, p))


def rbs_hr(t, p: RbsParams):
    """Hazard rate f(t) / S(t); log-space ratio, so it stays finite deep in the right tail."""
    t = _positive(t)
    a = np.asarray(a_transform(t, p))
    return _ret(np.exp(rbs_logpdf(t, p) - log_ndtr(-a)))


def rbs_quantile(q, p: RbsParams):
    return a_inverse(std_normal_quantile(q), p)


def rbs_moments(p: RbsParams, order: int = 1) -> float:
    """Raw moment E[T^order] for order 1 or 2."""
    if order == 1:
        return p.mu
    if order == 2:
        d = p.delta
        return p.mu**2 * (1.0 + (2.0 * d + 5.0) / (d + 1.0) ** 2)
    raise DomainError("only orders 1 and 2 have closed forms; use sampling for higher moments")


def rbs_var(p: RbsParams) -> float:
    """mu^2 (2 delta + 5) / (delta + 1)^2, i.e. (alpha beta)^2 (1 + 5 alpha^2 / 4)."""
    d = p.delta
    return p.mu**2 * (2.0 * d + 5.0) / (d + 1.0) ** 2


def rbs_chi3_weighted_pdf(u, p: RbsParams):
    """Density of a_inverse(sqrt(U)) with U ~ chi-square(3).

    Equal to 2 a(u)^2 f(u) on u >= beta and zero below the median, since
    sqrt(U) is nonnegative.
    """
    u = _positive(u, "u")
    a = np.asarray(a_transform(u, p))
    dens = 2.0 * a * a * np.asarray(rbs_pdf(u, p))
    return _ret(np.where(u >= p.beta, dens, 0.0))
