"""Scalar special functions and quadrature primitives.

Everything here is vectorized over numpy arrays and pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss
from scipy import special

from .exceptions import DomainError, NumericalError

__all__ = [
    "QuadratureSpec",
    "DEFAULT_QUADRATURE",
    "std_normal_pdf",
    "std_normal_logpdf",
    "std_normal_cdf",
    "std_normal_sf",
    "std_normal_quantile",
    "bvn_pdf",
    "bvn_logpdf",
    "bvn_cdf",
    "chi2_cdf",
    "wilson_hilferty",
    "expect_over_standard_normal",
    "real_cubic_roots",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class QuadratureSpec:
    """Node budget and tolerances for :func:`expect_over_standard_normal`."""

    node_count: int = 128
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10

    def __post_init__(self):
        if int(self.node_count) != self.node_count or self.node_count < 16:
            raise DomainError(f"node_count must be an integer >= 16, got {self.node_count}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")


DEFAULT_QUADRATURE = QuadratureSpec()


def _as_float(x):
    out = np.asarray(x, dtype=float)
    return out


def _ret(out):
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# univariate normal
# ---------------------------------------------------------------------------


def std_normal_pdf(z):
    """Standard normal density (2 pi)^(-1/2) exp(-z^2/2)."""
    z = _as_float(z)
    if not np.all(np.isfinite(z)):
        raise DomainError("std_normal_pdf requires finite input")
    return _ret(_INV_SQRT_2PI * np.exp(-0.5 * z * z))


def std_normal_logpdf(z):
    z = _as_float(z)
    if not np.all(np.isfinite(z)):
        raise DomainError("std_normal_logpdf requires finite input")
    return _ret(-_LOG_SQRT_2PI - 0.5 * z * z)


def std_normal_cdf(z):
    """Standard normal CDF; +-inf map to 1 and 0."""
    z = _as_float(z)
    if np.any(np.isnan(z)):
        raise DomainError("std_normal_cdf is undefined at NaN")
    return _ret(special.ndtr(z))


def std_normal_sf(z):
    """Upper tail 1 - Phi(z), evaluated without cancellation."""
    z = _as_float(z)
    if np.any(np.isnan(z)):
        raise DomainError("std_normal_sf is undefined at NaN")
    return _ret(special.ndtr(-z))


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1)."""
    p = _as_float(p)
    if np.any(~((p > 0.0) & (p < 1.0))):
        raise DomainError("std_normal_quantile requires 0 < p < 1")
    return _ret(special.ndtri(p))


# ---------------------------------------------------------------------------
# bivariate normal
# ---------------------------------------------------------------------------


def _check_rho(rho):
    rho = _as_float(rho)
    if np.any(~(np.abs(rho) < 1.0)):
        raise DomainError("correlation must satisfy |rho| < 1")
    return rho


def bvn_logpdf(u, v, rho):
    rho = _check_rho(rho)
    u = _as_float(u)
    v = _as_float(v)
    omr2 = (1.0 - rho) * (1.0 + rho)
    q = (u * u - 2.0 * rho * u * v + v * v) / omr2
    return _ret(-math.log(2.0 * math.pi) - 0.5 * np.log(omr2) - 0.5 * q)


def bvn_pdf(u, v, rho):
    """Standard bivariate normal density with correlation ``rho``."""
    return _ret(np.exp(bvn_logpdf(u, v, rho)))


@lru_cache(maxsize=None)
def _legendre20():
    x, w = leggauss(20)
    return x, w


def _bvn_upper(h, k, r):
    """P(X > h, Y > k) for finite h, k and |r| < 1 (Genz's BVNU, 20-point rule).

    Arrays must already be broadcast to a common 1-d shape.
    """
    x, w = _legendre20()
    out = np.empty_like(h)
    hk = h * k

    low = np.abs(r) < 0.925
    if np.any(low):
        hl, kl, rl, hkl = h[low], k[low], r[low], hk[low]
        hs = 0.5 * (hl * hl + kl * kl)
        asr = np.arcsin(rl)
        sn = np.sin(asr[:, None] * (x[None, :] + 1.0) / 2.0)
        terms = w[None, :] * np.exp((sn * hkl[:, None] - hs[:, None]) / (1.0 - sn * sn))
        out[low] = terms.sum(axis=1) * asr / (4.0 * math.pi) + special.ndtr(-hl) * special.ndtr(-kl)

    high = ~low
    if np.any(high):
        hh, kh, rh = h[high], k[high].copy(), r[high]
        hkh = hk[high].copy()
        neg = rh < 0
        kh[neg] = -kh[neg]
        hkh[neg] = -hkh[neg]
        as_ = (1.0 - rh) * (1.0 + rh)
        a = np.sqrt(as_)
        bs = (hh - kh) ** 2
        c = (4.0 - hkh) / 8.0
        d = (12.0 - hkh) / 16.0
        asr = -(bs / as_ + hkh) / 2.0
        bvn = np.where(
            asr > -100.0,
            a * np.exp(np.maximum(asr, -100.0))
            * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0),
            0.0,
        )
        b = np.sqrt(bs)
        sp = math.sqrt(2.0 * math.pi) * special.ndtr(-b / a)
        bvn = bvn - np.where(
            hkh > -100.0,
            np.exp(-np.minimum(hkh, 100.0) / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0),
            0.0,
        )
        a2 = a / 2.0
        xs = (a2[:, None] * (1.0 + x[None, :])) ** 2
        rs = np.sqrt(1.0 - xs)
        asr2 = -(bs[:, None] / xs + hkh[:, None]) / 2.0
        sp2 = 1.0 + c[:, None] * xs * (1.0 + d[:, None] * xs)
        ep = np.exp(-hkh[:, None] * xs / (2.0 * (1.0 + rs) ** 2)) / rs
        contrib = np.where(asr2 > -100.0, np.exp(np.maximum(asr2, -100.0)) * (ep - sp2), 0.0)
        bvn = bvn + a2 * (w[None, :] * contrib).sum(axis=1)
        bvn = -bvn / (2.0 * math.pi)

        res = np.empty_like(bvn)
        pos = rh > 0
        res[pos] = bvn[pos] + special.ndtr(-np.maximum(hh[pos], kh[pos]))
        ge = (~pos) & (hh >= kh)
        res[ge] = -bvn[ge]
        lt = (~pos) & (hh < kh)
        hl, kl = hh[lt], kh[lt]
        span = np.where(hl < 0, special.ndtr(kl) - special.ndtr(hl), special.ndtr(-hl) - special.ndtr(-kl))
        res[lt] = span - bvn[lt]
        out[high] = res
    return np.clip(out, 0.0, 1.0)


def bvn_cdf(h, k, rho):
    """P(U <= h, V <= k) for a standard bivariate normal with correlation ``rho``.

    Uses the Drezner-Wesolowsky single-integral representation with Genz's
    20-point Gauss-Legendre rule; for |rho| >= 0.925 the complementary
    expansion in sqrt(1 - rho^2) is used.  ``h`` and ``k`` may be infinite.
    """
    rho = _check_rho(rho)
    h = _as_float(h)
    k = _as_float(k)
    if np.any(np.isnan(h)) or np.any(np.isnan(k)):
        raise DomainError("bvn_cdf is undefined at NaN")
    h, k, rho = np.broadcast_arrays(h, k, rho)
    shape = h.shape
    h = h.ravel().astype(float)
    k = k.ravel().astype(float)
    r = rho.ravel().astype(float)
    out = np.empty(h.shape)

    fin = np.isfinite(h) & np.isfinite(k)
    if np.any(fin):
        out[fin] = _bvn_upper(-h[fin], -k[fin], r[fin])
    inf = ~fin
    if np.any(inf):
        hi, ki = h[inf], k[inf]
        val = np.where(
            (hi == -np.inf) | (ki == -np.inf),
            0.0,
            np.where(hi == np.inf, special.ndtr(ki), special.ndtr(hi)),
        )
        out[inf] = val
    return _ret(out.reshape(shape))


# ---------------------------------------------------------------------------
# chi-square
# ---------------------------------------------------------------------------


def chi2_cdf(x, dof):
    """Chi-square CDF as the regularized lower incomplete gamma P(dof/2, x/2)."""
    x = _as_float(x)
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise DomainError("chi2_cdf requires x >= 0")
    if dof <= 0:
        raise DomainError("dof must be positive")
    return _ret(special.gammainc(0.5 * dof, 0.5 * x))


def wilson_hilferty(d, dof):
    """Cube-root normalization of a chi-square(dof) variate."""
    d = _as_float(d)
    if np.any(np.isnan(d)) or np.any(d < 0):
        raise DomainError("wilson_hilferty requires d >= 0")
    k = float(dof)
    if k <= 0:
        raise DomainError("dof must be positive")
    return _ret((np.cbrt(d / k) - (1.0 - 2.0 / (9.0 * k))) * math.sqrt(9.0 * k / 2.0))


# ---------------------------------------------------------------------------
# expectations over N(0, 1)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _hermite(n):
    x, w = hermegauss(n)
    return x, w / math.sqrt(2.0 * math.pi)


@lru_cache(maxsize=None)
def _legendre(n):
    return leggauss(n)


# beyond this |z| the standard normal density is below 1e-300
_Z_CUT = 37.5


def _gauss_hermite(g, n):
    x, w = _hermite(n)
    return float(np.sum(w * np.asarray(g(x), dtype=float)))


def _tail_panels(g, lower, upper, per_panel):
    lo = max(lower, -_Z_CUT)
    hi = min(upper, _Z_CUT)
    if hi <= lo:
        return 0.0
    n_panels = max(1, int(math.ceil(hi - lo)))
    edges = np.linspace(lo, hi, n_panels + 1)
    x, w = _legendre(per_panel)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    z = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    ww = (half[:, None] * w[None, :]).ravel()
    vals = np.asarray(g(z), dtype=float) * (_INV_SQRT_2PI * np.exp(-0.5 * z * z))
    return float(np.sum(ww * vals))


def expect_over_standard_normal(g, spec: QuadratureSpec = DEFAULT_QUADRATURE, lower=-np.inf, upper=np.inf):
    """E[g(Z) 1{lower < Z < upper}] for Z ~ N(0, 1).

    Over the whole line a Gauss-Hermite rule with ``spec.node_count`` nodes is
    used; on a truncated range, composite Gauss-Legendre on unit panels.  In
    both cases the estimate is repeated with half the nodes and the two must
    agree within the tolerances of ``spec``.

    Parameters
    ----------
    g : callable
        Vectorized function of a 1-d array of abscissae.
    spec : QuadratureSpec
    lower, upper : float
        Truncation limits.

    Raises
    ------
    NumericalError
        If the two node budgets disagree; ``residual`` holds the disagreement.
    """
    if lower >= upper:
        return 0.0
    n = int(spec.node_count)
    if np.isinf(lower) and np.isinf(upper):
        fine = _gauss_hermite(g, n)
        coarse = _gauss_hermite(g, n // 2)
    else:
        per = max(8, n // 4)
        fine = _tail_panels(g, lower, upper, per)
        coarse = _tail_panels(g, lower, upper, per // 2)
    resid = abs(fine - coarse)
    if not np.isfinite(fine) or resid > spec.abs_tol + spec.rel_tol * abs(fine):
        raise NumericalError(
            f"normal expectation did not converge with {n} nodes (residual {resid:.3e})",
            residual=resid,
        )
    return fine


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------


def real_cubic_roots(b, c, d):
    """Real roots, ascending, of x^3 + b x^2 + c x + d.

    Trigonometric form when there are three real roots, Cardano otherwise;
    each root is then polished by three Newton steps.
    """
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    shift = -b / 3.0
    disc = -(4.0 * p**3 + 27.0 * q * q)
    if disc > 0:
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
        roots = [m * math.cos(theta - 2.0 * math.pi * k / 3.0) + shift for k in range(3)]
    else:
        r = math.sqrt(max(q * q / 4.0 + p**3 / 27.0, 0.0))
        roots = [float(np.cbrt(-q / 2.0 + r) + np.cbrt(-q / 2.0 - r)) + shift]
    polished = []
    for x in roots:
        for _ in range(3):
            f = ((x + b) * x + c) * x + d
            fp = (3.0 * x + 2.0 * b) * x + c
            if fp == 0:
                break
            x -= f / fp
        polished.append(x)
    return sorted(polished)
