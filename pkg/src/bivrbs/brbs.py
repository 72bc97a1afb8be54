"""Bivariate RBS distribution.

``(T1, T2) ~ BRBS(mu1, mu2, delta1, delta2, rho)`` when
``(a1(T1), a2(T2))`` is standard bivariate normal with correlation ``rho``,
``ak`` being the standardizing map of margin k (see :mod:`bivrbs.rbs`).
Joint CDF, density and survival function therefore reduce to bivariate normal
quantities evaluated at the standardized scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize
from scipy.special import log_ndtr

from .exceptions import DomainError, InconsistencyError, NumericalError
from .numerics import (
    DEFAULT_QUADRATURE,
    QuadratureSpec,
    bvn_cdf,
    bvn_logpdf,
    expect_over_standard_normal,
    real_cubic_roots,
    std_normal_cdf,
    std_normal_sf,
)
from .rbs import RbsParams, a_derivs, a_inverse, a_transform, rbs_logpdf, rbs_pdf, rbs_var

__all__ = [
    "BrbsParams",
    "ModeResult",
    "Hypothesis1Result",
    "TAU0",
    "c_fn",
    "brbs_logpdf",
    "brbs_pdf",
    "brbs_cdf",
    "brbs_sf",
    "brbs_sf_integral",
    "brbs_hr",
    "conditional_pdf",
    "conditional_mean",
    "conditional_sf",
    "conditional_hazard",
    "conditional_mrf",
    "reliability",
    "product_moment",
    "covariance",
    "correlation",
    "mode_find",
    "numeric_mode",
    "hypothesis1_check",
    "equilibrium_pdf",
    "ldf",
    "reciprocal_params",
    "expect_a_inverse_normal",
]

TAU0 = 9.6


@dataclass(frozen=True)
class BrbsParams:
    """Two RBS margins and the correlation of their standardized scores."""

    margin1: RbsParams
    margin2: RbsParams
    rho: float

    def __post_init__(self):
        rho = float(self.rho)
        if not abs(rho) < 1.0:
            raise DomainError(f"rho must satisfy |rho| < 1, got {self.rho}")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_values(cls, mu1, mu2, delta1, delta2, rho) -> "BrbsParams":
        """Build from the vector ``(mu1, mu2, delta1, delta2, rho)``."""
        return cls(RbsParams(mu1, delta1), RbsParams(mu2, delta2), rho)

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.margin1.mu, self.margin2.mu, self.margin1.delta, self.margin2.delta, self.rho)

    def margin(self, k: int) -> RbsParams:
        if k == 1:
            return self.margin1
        if k == 2:
            return self.margin2
        raise DomainError(f"margin index must be 1 or 2, got {k}")


PARAM_NAMES = ("mu1", "mu2", "delta1", "delta2", "rho")


def _ret(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


def _scores(t1, t2, params):
    a1 = np.asarray(a_transform(t1, params.margin1), dtype=float)
    a2 = np.asarray(a_transform(t2, params.margin2), dtype=float)
    return a1, a2


def c_fn(j: int, k: int, t, w, params: BrbsParams):
    """(a_j(t) - rho a_k(w)) / sqrt(1 - rho^2) for margins j != k."""
    if {j, k} != {1, 2}:
        raise DomainError("c_fn needs j, k to be 1 and 2 in some order")
    rho = params.rho
    aj = np.asarray(a_transform(t, params.margin(j)))
    ak = np.asarray(a_transform(w, params.margin(k)))
    return _ret((aj - rho * ak) / math.sqrt(1.0 - rho * rho))


def _log_a1(t, p):
    return np.log(np.asarray(a_derivs(t, p)[0]))


def brbs_logpdf(t1, t2, params: BrbsParams):
    a1, a2 = _scores(t1, t2, params)
    out = bvn_logpdf(a1, a2, params.rho) + _log_a1(t1, params.margin1) + _log_a1(t2, params.margin2)
    return _ret(out)


def brbs_pdf(t1, t2, params: BrbsParams):
    """Joint density phi2(a1(t1), a2(t2); rho) a1'(t1) a2'(t2)."""
    return _ret(np.exp(brbs_logpdf(t1, t2, params)))


def brbs_cdf(t1, t2, params: BrbsParams):
    a1, a2 = _scores(t1, t2, params)
    return bvn_cdf(a1, a2, params.rho)


def brbs_sf(t1, t2, params: BrbsParams):
    """Joint survival P(T1 > t1, T2 > t2).

    Equals 1 - F1 - F2 + F; evaluated as Phi2(-a1, -a2; rho), which is the same
    quantity without the cancellation in the upper tail.
    """
    a1, a2 = _scores(t1, t2, params)
    return bvn_cdf(-a1, -a2, params.rho)


def brbs_sf_integral(t1: float, t2: float, params: BrbsParams, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Joint survival by one-dimensional quadrature over the first margin.

    Integrates f1(w) {1 - Phi(c21(t2, w))} over w > t1 after the substitution
    w = a1^-1(z).  Independent of the bivariate normal CDF; used as a cross-check.
    """
    rho = params.rho
    s = math.sqrt(1.0 - rho * rho)
    a1 = float(a_transform(t1, params.margin1))
    a2 = float(a_transform(t2, params.margin2))
    return expect_over_standard_normal(lambda z: std_normal_sf((a2 - rho * z) / s), spec, lower=a1)


def brbs_hr(t1, t2, params: BrbsParams):
    """Bivariate hazard rate f(t1, t2) / S(t1, t2) (Basu's scalar definition)."""
    a1, a2 = _scores(t1, t2, params)
    sf = np.asarray(bvn_cdf(-a1, -a2, params.rho), dtype=float)
    if np.any(sf <= 0.0):
        raise NumericalError("joint survival function underflows to zero; hazard rate undefined")
    return _ret(np.exp(np.asarray(brbs_logpdf(t1, t2, params)) - np.log(sf)))


# ---------------------------------------------------------------------------
# conditionals
# ---------------------------------------------------------------------------


def conditional_pdf(t1, t2, params: BrbsParams):
    """Density of T1 at ``t1`` given T2 = ``t2``."""
    rho = params.rho
    s = math.sqrt(1.0 - rho * rho)
    c = np.asarray(c_fn(1, 2, t1, t2, params))
    a1p = np.asarray(a_derivs(t1, params.margin1)[0])
    return _ret(np.exp(-0.5 * c * c) * a1p / (math.sqrt(2.0 * math.pi) * s))


def conditional_mean(t2, params: BrbsParams):
    """E[T1 | T2 = t2].

    Given T2 = t2 the score a1(T1) is N(rho a2(t2), 1 - rho^2), so this is
    :func:`expect_a_inverse_normal` at that mean and spread.
    """
    rho = params.rho
    s = math.sqrt(1.0 - rho * rho)
    a2 = np.asarray(a_transform(t2, params.margin2), dtype=float)
    out = _expect_a_inverse(rho * a2.reshape(-1), s, params.margin1)
    return _ret(out.reshape(a2.shape))


_GIVEN = ("gt", "eq")


def _check_given(given):
    if given not in _GIVEN:
        raise DomainError(f"conditioning must be one of {_GIVEN}, got {given!r}")


def _conditioning_mass(t2, params, given):
    if given == "gt":
        mass = np.asarray(std_normal_sf(a_transform(t2, params.margin2)))
    else:
        mass = np.asarray(rbs_pdf(t2, params.margin2))
    low = float(np.min(mass))
    if low < 1e-300:
        raise NumericalError(f"conditioning event has negligible probability ({low:.3e})")
    return mass


def conditional_sf(t1, t2, params: BrbsParams, given: str = "gt"):
    """Conditional survival of T1 given T2 > t2 (``"gt"``) or T2 = t2 (``"eq"``)."""
    _check_given(given)
    if given == "gt":
        mass = _conditioning_mass(t2, params, given)
        return _ret(np.asarray(brbs_sf(t1, t2, params)) / mass)
    _conditioning_mass(t2, params, given)
    return std_normal_sf(c_fn(1, 2, t1, t2, params))


def _log_conditional_hazard(t1, t2, params, given):
    rho = params.rho
    s = math.sqrt(1.0 - rho * rho)
    if given == "gt":
        a1, a2 = _scores(t1, t2, params)
        # f1(t1) P(T2 > t2 | T1 = t1) / P(T1 > t1, T2 > t2)
        c21 = (a2 - rho * a1) / s
        sf = np.asarray(bvn_cdf(-a1, -a2, rho), dtype=float)
        if np.any(sf <= 0):
            raise NumericalError("joint survival underflows; conditional hazard undefined")
        return np.asarray(rbs_logpdf(t1, params.margin1)) + log_ndtr(-c21) - np.log(sf)
    c = np.asarray(c_fn(1, 2, t1, t2, params))
    a1p = np.asarray(a_derivs(t1, params.margin1)[0])
    return -0.5 * c * c - 0.5 * math.log(2.0 * math.pi) + np.log(a1p / s) - log_ndtr(-c)


def conditional_hazard(t1, t2, params: BrbsParams, given: str = "gt"):
    """Hazard of T1 at ``t1`` given T2 > t2 (``"gt"``) or T2 = t2 (``"eq"``)."""
    _check_given(given)
    _conditioning_mass(t2, params, given)
    return _ret(np.exp(_log_conditional_hazard(t1, t2, params, given)))


def _mrf_scalar(t1, t2, params, given, spec):
    rho = params.rho
    s = math.sqrt(1.0 - rho * rho)
    m1 = params.margin1
    a1 = float(a_transform(t1, m1))
    a2 = float(a_transform(t2, params.margin2))
    if given == "gt":
        # E[(T1 - t1)+ 1{T2 > t2}] / P(T1 > t1, T2 > t2)
        num = expect_over_standard_normal(
            lambda z: (a_inverse(z, m1) - t1) * std_normal_sf((a2 - rho * z) / s), spec, lower=a1
        )
        den = float(bvn_cdf(-a1, -a2, rho))
    else:
        # T1 | T2 = t2 is a1^-1(rho a2 + s Z)
        z0 = (a1 - rho * a2) / s
        num = expect_over_standard_normal(lambda z: a_inverse(rho * a2 + s * z, m1) - t1, spec, lower=z0)
        den = float(std_normal_sf(z0))
    if den <= 0:
        raise NumericalError("conditional survival underflows; mean residual undefined")
    return num / den


def conditional_mrf(t1, t2, params: BrbsParams, given: str = "gt", spec: QuadratureSpec = DEFAULT_QUADRATURE):
    """Mean residual life of T1 at ``t1`` under the conditioning event."""
    _check_given(given)
    _conditioning_mass(t2, params, given)
    t1b, t2b = np.broadcast_arrays(np.asarray(t1, dtype=float), np.asarray(t2, dtype=float))
    out = np.array([_mrf_scalar(float(x), float(y), params, given, spec) for x, y in zip(t1b.ravel(), t2b.ravel())])
    return _ret(out.reshape(t1b.shape))


# ---------------------------------------------------------------------------
# reliability and moments
# ---------------------------------------------------------------------------


def reliability(params: BrbsParams, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Stress-strength reliability R = P(T1 < T2).

    Conditioning on T1 = w, P(T2 > w | T1 = w) = 1 - Phi(c21(w, w)), so
    R = 1 - E[Phi(c21(T1, T1))] with T1 = a1^-1(Z).
    """
    rho = params.rho
    s = math.sqrt(1.0 - rho * rho)
    m1, m2 = params.margin1, params.margin2

    def g(z):
        w = a_inverse(z, m1)
        return std_normal_sf((np.asarray(a_transform(w, m2)) - rho * z) / s)

    # the integrand lies in [0, 1], so truncating at |z| = 12 costs under 1e-32
    return expect_over_standard_normal(g, spec, lower=-12.0, upper=12.0)


# Expectations of a^-1(X) for normal X are sums over y with x = (2/alpha) sinh(y),
# where a^-1(x) = beta exp(2y); the integrand is entire and decays
# double-exponentially, so the trapezoid rule converges geometrically.
_SINH_STEP = 0.03
_SCORE_REACH = 40.0


def _sinh_nodes(alpha, lo, hi, step=_SINH_STEP):
    y0, y1 = math.asinh(0.5 * alpha * lo), math.asinh(0.5 * alpha * hi)
    k0, k1 = math.floor(y0 / step), math.ceil(y1 / step)
    y = step * np.arange(k0, k1 + 1)
    x = (2.0 / alpha) * np.sinh(y)
    dx = (2.0 / alpha) * np.cosh(y) * step
    return y, x, dx


def _expect_a_inverse(b, sigma, p: RbsParams):
    b = np.atleast_1d(np.asarray(b, dtype=float))
    lo = float(np.min(b)) - _SCORE_REACH * sigma
    hi = float(np.max(b)) + _SCORE_REACH * sigma
    # a normal of spread sigma in x has spread at least sigma alpha / (2 cosh y)
    # in y; a few nodes per spread keep the trapezoid rule exact to rounding
    widest = math.cosh(max(abs(math.asinh(0.5 * p.alpha * lo)), abs(math.asinh(0.5 * p.alpha * hi))))
    step = min(_SINH_STEP, sigma * p.alpha / (6.0 * widest))
    y, x, dx = _sinh_nodes(p.alpha, lo, hi, step)
    z = (x[None, :] - b[:, None]) / sigma
    w = np.exp(2.0 * y[None, :] - 0.5 * z * z) * dx[None, :]
    return p.beta * np.sum(w, axis=1) / (sigma * math.sqrt(2.0 * math.pi))


@lru_cache(maxsize=256)
def product_moment(params: BrbsParams) -> float:
    """E[T1 T2] by two-dimensional quadrature over the standardized scores."""
    m1, m2 = params.margin1, params.margin2
    rho = params.rho
    omr2 = 1.0 - rho * rho
    y1, x1, d1 = _sinh_nodes(m1.alpha, -_SCORE_REACH, _SCORE_REACH)
    y2, x2, d2 = _sinh_nodes(m2.alpha, -_SCORE_REACH, _SCORE_REACH)
    u, v = x1[:, None], x2[None, :]
    logf = 2.0 * (y1[:, None] + y2[None, :]) - 0.5 * (u * u - 2.0 * rho * u * v + v * v) / omr2
    total = np.sum(np.exp(logf) * d1[:, None] * d2[None, :])
    return float(m1.beta * m2.beta * total / (2.0 * math.pi * math.sqrt(omr2)))


def covariance(params: BrbsParams) -> float:
    """Cov(T1, T2); it has the sign of rho."""
    return product_moment(params) - params.margin1.mu * params.margin2.mu


def correlation(params: BrbsParams) -> float:
    """Pearson correlation of (T1, T2)."""
    return covariance(params) / math.sqrt(rbs_var(params.margin1) * rbs_var(params.margin2))


def expect_a_inverse_normal(b: float, sigma: float, p: RbsParams) -> float:
    """E[a^-1(X)] for X ~ N(b, sigma^2).

    Equals beta [1 + alpha^2 (sigma^2 + b^2)/2] only when b = 0; otherwise the
    odd part alpha X sqrt(1 + alpha^2 X^2/4) of a^-1 adds a term of the sign of b.
    """
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    return float(_expect_a_inverse(b, float(sigma), p)[0])


# ---------------------------------------------------------------------------
# mode
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hypothesis1Result:
    """Conditions of the unimodality hypothesis, reported separately.

    ``condition2_alpha2`` is the same bound with the roles of the margins
    swapped; informational only, it does not enter ``holds``.
    """

    condition1: bool
    condition2: bool
    condition2_alpha2: bool

    @property
    def holds(self) -> bool:
        return self.condition1 and self.condition2

    def __iter__(self):
        return iter((self.condition1, self.condition2))


def hypothesis1_check(params: BrbsParams) -> Hypothesis1Result:
    al1, al2 = params.margin1.alpha, params.margin2.alpha
    rho = params.rho
    cond1 = rho < min(al2 / al1, al1 / al2)
    bound = TAU0 / (1.0 - rho * rho) * max(1.0 / al1 - rho / al2, 1.0 / al2 - rho / al1)
    return Hypothesis1Result(condition1=bool(cond1), condition2=bool(al1 > bound), condition2_alpha2=bool(al2 > bound))


@dataclass(frozen=True)
class ModeResult:
    """Critical point (c beta1, c beta2) of the joint density."""

    c: float
    t1: float
    t2: float
    gradient_norm: float
    hypothesis1_holds: bool
    cubic_roots: tuple = field(default=())

    @property
    def in_unimodal_range(self) -> bool:
        return 0.0 < self.c < 2.0 * math.sqrt(3.0) - 3.0


def _critical_c(alpha_j, theta):
    if theta == 0:
        raise InconsistencyError("critical-point cubic degenerates (theta = 0)")
    r = alpha_j / theta
    roots = real_cubic_roots(1.0 + r, 3.0 * r - 1.0, -1.0)
    pos = [x for x in roots if x > 0]
    if len(pos) != 1:
        raise InconsistencyError(f"critical-point cubic has {len(pos)} positive roots: {roots}")
    return pos[0], roots


def _log_gradient(t1, t2, params, h=1e-5):
    """Central-difference gradient of log f with respect to (log t1, log t2)."""
    g = []
    for k in range(2):
        up = [math.log(t1), math.log(t2)]
        dn = list(up)
        up[k] += h
        dn[k] -= h
        fu = float(brbs_logpdf(math.exp(up[0]), math.exp(up[1]), params))
        fd = float(brbs_logpdf(math.exp(dn[0]), math.exp(dn[1]), params))
        g.append((fu - fd) / (2.0 * h))
    return np.array(g)


def mode_find(params: BrbsParams, grad_tol: float = 1e-6) -> ModeResult:
    """Critical point of the joint density of the form (c beta1, c beta2).

    ``c`` is the positive root of the cubic stationarity equation for each
    margin; both margins must give the same root.  ``gradient_norm`` is the
    norm of the central-difference gradient of log f in log coordinates,
    i.e. of t * grad f / f.

    Raises
    ------
    InconsistencyError
        If a cubic has no unique positive root or the two roots disagree
        (they only coincide when delta1 == delta2).
    NumericalError
        If the gradient at the returned point exceeds ``grad_tol``.
    """
    al1, al2 = params.margin1.alpha, params.margin2.alpha
    rho = params.rho
    omr2 = 1.0 - rho * rho
    th12 = (1.0 / al1 - rho / al2) / omr2
    th21 = (1.0 / al2 - rho / al1) / omr2
    cp, roots_p = _critical_c(al1, th12)
    cq, _ = _critical_c(al2, th21)
    if abs(cp - cq) > 1e-8:
        raise InconsistencyError(
            f"no critical point on the ray (c beta1, c beta2): margin roots {cp:.10g} vs {cq:.10g}",
            residual=abs(cp - cq),
        )
    t1, t2 = cp * params.margin1.beta, cp * params.margin2.beta
    gnorm = float(np.linalg.norm(_log_gradient(t1, t2, params)))
    if gnorm > grad_tol:
        raise NumericalError(f"gradient at critical point is {gnorm:.3e}", residual=gnorm)
    return ModeResult(
        c=cp,
        t1=t1,
        t2=t2,
        gradient_norm=gnorm,
        hypothesis1_holds=hypothesis1_check(params).holds,
        cubic_roots=tuple(roots_p),
    )


def numeric_mode(params: BrbsParams) -> tuple[float, float]:
    """Maximizer of the joint density found by direct optimization in log coordinates."""

    def neg(x):
        return -float(brbs_logpdf(math.exp(x[0]), math.exp(x[1]), params))

    x0 = np.log([params.margin1.beta, params.margin2.beta])
    res = optimize.minimize(neg, x0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
    return float(math.exp(res.x[0])), float(math.exp(res.x[1]))


# ---------------------------------------------------------------------------
# dependence and transforms
# ---------------------------------------------------------------------------


def equilibrium_pdf(t1, t2, params: BrbsParams):
    """Joint density of the bivariate equilibrium distribution, S(t1, t2) / E[T1 T2]."""
    return _ret(np.asarray(brbs_sf(t1, t2, params)) / product_moment(params))


def ldf(t1, t2, params: BrbsParams):
    """Local dependence function: mixed partial of log f, rho/(1-rho^2) a1' a2'."""
    rho = params.rho
    a1p = np.asarray(a_derivs(t1, params.margin1)[0])
    a2p = np.asarray(a_derivs(t2, params.margin2)[0])
    return _ret(rho / (1.0 - rho * rho) * a1p * a2p)


def _reciprocal_margin(m: RbsParams) -> RbsParams:
    return RbsParams(m.mu / m.beta**2, m.delta)


def reciprocal_params(params: BrbsParams, which: str = "both") -> BrbsParams:
    """Parameters of the vector with the chosen coordinates replaced by their reciprocals.

    ``which`` is ``"both"``, ``"first"`` or ``"second"``.  Reciprocating a
    margin flips the sign of its standardized score, so a single reciprocal
    flips ``rho``.
    """
    m1, m2, rho = params.margin1, params.margin2, params.rho
    if which == "both":
        return BrbsParams(_reciprocal_margin(m1), _reciprocal_margin(m2), rho)
    if which == "first":
        return BrbsParams(_reciprocal_margin(m1), m2, -rho)
    if which == "second":
        return BrbsParams(m1, _reciprocal_margin(m2), -rho)
    raise DomainError(f"which must be 'both', 'first' or 'second', got {which!r}")
