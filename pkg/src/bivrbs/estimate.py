"""Maximum-likelihood and modified-moment fitting of BRBS models, with interval estimates.

Parameter vectors are ordered ``(mu1, mu2, delta1, delta2, rho)`` throughout;
the first four components are collectively called ``eta``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .brbs import PARAM_NAMES, BrbsParams
from .exceptions import (
    ConvergenceError,
    DegenerateSampleError,
    DomainError,
    IntervalError,
    NumericalError,
    SampleTooSmallError,
)
from .numerics import real_cubic_roots, std_normal_quantile
from .rbs import RbsParams
from .sampling import SeededStream, sample_chi2, sample_std_normal

__all__ = [
    "BivariateSample",
    "Interval",
    "FitReport",
    "FitOptions",
    "loglik",
    "loglik_constant_free",
    "rho_hat_given",
    "rho_mle_given",
    "profile_loglik",
    "mm_from_summaries",
    "fit_mm",
    "fit_ml",
    "numerical_hessian",
    "observed_information",
    "mm_asymptotic_se",
    "ci_wald_ml",
    "ci_mm",
    "ci_rho_fisher",
    "ci_rho_kx",
    "ci_rho_kx_levels",
    "attach_intervals",
]

_LOG_2PI = math.log(2.0 * math.pi)
KX_DEFAULT_REPS = 200_000


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BivariateSample:
    """Paired positive observations ``(t1[i], t2[i])``.

    A single row is accepted so that the likelihood can be evaluated at one
    point; the estimators enforce their own minimum sizes.
    """

    t1: np.ndarray
    t2: np.ndarray

    def __post_init__(self):
        t1 = np.array(self.t1, dtype=float).reshape(-1)
        t2 = np.array(self.t2, dtype=float).reshape(-1)
        if t1.shape != t2.shape:
            raise DomainError(f"columns differ in length ({t1.size} vs {t2.size})")
        if t1.size < 1:
            raise SampleTooSmallError("sample is empty")
        for k, t in ((1, t1), (2, t2)):
            bad = np.flatnonzero(~(np.isfinite(t) & (t > 0)))
            if bad.size:
                raise DomainError(f"row {bad[0] + 1}, column {k}: observations must be positive and finite")
        t1.setflags(write=False)
        t2.setflags(write=False)
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)

    @classmethod
    def from_rows(cls, rows) -> "BivariateSample":
        arr = np.asarray(rows, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise DomainError("rows must be a sequence of (t1, t2) pairs")
        return cls(arr[:, 0], arr[:, 1])

    @property
    def n(self) -> int:
        return int(self.t1.size)

    @property
    def rows(self) -> np.ndarray:
        return np.column_stack([self.t1, self.t2])

    def column(self, k: int) -> np.ndarray:
        if k not in (1, 2):
            raise DomainError("column index must be 1 or 2")
        return self.t1 if k == 1 else self.t2

    def arithmetic_means(self) -> tuple[float, float]:
        return float(math.fsum(self.t1) / self.n), float(math.fsum(self.t2) / self.n)

    def harmonic_means(self) -> tuple[float, float]:
        return (
            float(self.n / math.fsum(1.0 / self.t1)),
            float(self.n / math.fsum(1.0 / self.t2)),
        )

    def scaled(self, b1: float = 1.0, b2: float = 1.0) -> "BivariateSample":
        return BivariateSample(self.t1 * b1, self.t2 * b2)


def _as_params(theta) -> BrbsParams:
    if isinstance(theta, BrbsParams):
        return theta
    return BrbsParams.from_values(*theta)


def _margins(eta):
    if isinstance(eta, BrbsParams):
        return eta.margin1, eta.margin2
    mu1, mu2, d1, d2 = (float(v) for v in eta)
    return RbsParams(mu1, d1), RbsParams(mu2, d2)


def _scores(t, m: RbsParams):
    """Standardized scores a(t) and log a'(t) for one column."""
    r = np.sqrt(t / m.beta)
    x = (r - 1.0 / r) / m.alpha
    log_ap = np.log(r + 1.0 / r) - math.log(2.0 * m.alpha) - np.log(t)
    return x, log_ap


def _bvn_terms(x1, x2, rho):
    omr2 = (1.0 - rho) * (1.0 + rho)
    return -_LOG_2PI - 0.5 * math.log(omr2) - (x1 * x1 - 2.0 * rho * x1 * x2 + x2 * x2) / (2.0 * omr2)


# ---------------------------------------------------------------------------
# likelihood
# ---------------------------------------------------------------------------


def loglik(theta, sample: BivariateSample) -> float:
    """Sum of log joint densities over the rows, all constants included."""
    p = _as_params(theta)
    x1, l1 = _scores(sample.t1, p.margin1)
    x2, l2 = _scores(sample.t2, p.margin2)
    terms = _bvn_terms(x1, x2, p.rho) + l1 + l2
    bad = np.flatnonzero(~np.isfinite(terms))
    if bad.size:
        raise NumericalError(f"log-density is not finite at row {bad[0] + 1}")
    return math.fsum(terms)


def loglik_constant_free(theta, sample: BivariateSample) -> float:
    """Log-likelihood without the additive constant, in the a/b notation.

    With a = sqrt(t/beta) and b = 1/a for each margin, this is

        -n/2 log(1-rho^2)
        - 1/(4(1-rho^2)) sum_i { -2 rho prod_k sqrt(delta_k)(a_ki - b_ki)
                                 + sum_k [delta_k b_ki^2 - 2 delta_k + delta_k a_ki^2] }
        + sum_k [n/2 log(delta_k) + sum_i log(a_ki + b_ki)]

    and differs from :func:`loglik` by ``-n log(16 pi) - sum log t``.
    """
    p = _as_params(theta)
    rho = p.rho
    n = sample.n
    inner = np.zeros(n)
    cross = np.ones(n)
    tail = 0.0
    for m, t in ((p.margin1, sample.t1), (p.margin2, sample.t2)):
        d = m.delta
        a = np.sqrt(t / m.beta)
        b = 1.0 / a
        inner += d * b * b - 2.0 * d * a * b + d * a * a
        cross *= math.sqrt(d) * (a - b)
        tail += 0.5 * n * math.log(d) + math.fsum(np.log(a + b))
    omr2 = 1.0 - rho * rho
    return -0.5 * n * math.log(omr2) - math.fsum(-2.0 * rho * cross + inner) / (4.0 * omr2) + tail


def _score_columns(eta, sample):
    m1, m2 = _margins(eta)
    x1, l1 = _scores(sample.t1, m1)
    x2, l2 = _scores(sample.t2, m2)
    return x1, x2, l1, l2


def rho_hat_given(eta, sample: BivariateSample) -> float:
    """Normalized cross-product of the standardized scores at fixed ``eta``.

    Raises
    ------
    DegenerateSampleError
        If every score of a margin is zero.
    """
    x1, x2, _, _ = _score_columns(eta, sample)
    s11 = float(np.dot(x1, x1))
    s22 = float(np.dot(x2, x2))
    if s11 == 0.0 or s22 == 0.0:
        raise DegenerateSampleError("all standardized scores of a margin are zero")
    r = float(np.dot(x1, x2)) / math.sqrt(s11 * s22)
    return max(-1.0, min(1.0, r))


def _rho_mle(x1, x2):
    n = x1.size
    sxy = float(np.dot(x1, x2))
    s = float(np.dot(x1, x1) + np.dot(x2, x2))
    if s == 0.0:
        raise DegenerateSampleError("all standardized scores are zero")
    # stationarity in rho: n rho (1 - rho^2) + sxy (1 + rho^2) - rho s = 0
    roots = [r for r in real_cubic_roots(-sxy / n, s / n - 1.0, -sxy / n) if -1.0 < r < 1.0]
    if not roots:
        raise DegenerateSampleError("conditional likelihood of rho has no interior maximum")

    def obj(r):
        omr2 = 1.0 - r * r
        return -0.5 * n * math.log(omr2) - (s - 2.0 * r * sxy) / (2.0 * omr2)

    return max(roots, key=obj)


def rho_mle_given(eta, sample: BivariateSample) -> float:
    """Exact maximizer of the log-likelihood in ``rho`` at fixed ``eta``.

    Coincides with :func:`rho_hat_given` when the squared scores of each
    margin sum to ``n``, which holds approximately near the joint optimum.
    """
    x1, x2, _, _ = _score_columns(eta, sample)
    return _rho_mle(x1, x2)


def _profile_from_scores(x1, x2, l1, l2):
    rho = _rho_mle(x1, x2)
    return math.fsum(_bvn_terms(x1, x2, rho) + l1 + l2), rho


def profile_loglik(eta, sample: BivariateSample) -> float:
    """Log-likelihood maximized over ``rho`` at fixed ``eta``."""
    x1, x2, l1, l2 = _score_columns(eta, sample)
    return _profile_from_scores(x1, x2, l1, l2)[0]


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    """Two-sided interval estimate for one parameter."""

    parameter: str
    level: float
    lower: float
    upper: float
    technique: str

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise IntervalError(f"interval for {self.parameter} has lower > upper")

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class FitReport:
    """Point estimates, standard errors and intervals from one fit.

    ``std_errors`` maps parameter names to floats, or ``None`` when a
    standard error is unavailable (the MM estimator of rho, or an ML fit
    whose observed information is not positive definite).
    """

    method: str
    estimates: BrbsParams
    std_errors: dict
    loglik: float
    n: int
    intervals: tuple = ()
    converged: bool = True
    iterations: int = 0
    warnings: tuple = ()

    def __post_init__(self):
        if self.method not in ("ML", "MM"):
            raise DomainError(f"method must be 'ML' or 'MM', got {self.method!r}")
        if not math.isfinite(self.loglik):
            raise NumericalError("log-likelihood of fitted model is not finite")

    def estimate(self, name: str) -> float:
        return dict(zip(PARAM_NAMES, self.estimates.as_tuple()))[name]

    def interval(self, parameter: str, technique: str, level: float) -> Interval:
        for iv in self.intervals:
            if iv.parameter == parameter and iv.technique == technique and iv.level == level:
                return iv
        raise IntervalError(f"no {technique} interval for {parameter} at level {level}")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "n": self.n,
            "estimates": dict(zip(PARAM_NAMES, self.estimates.as_tuple())),
            "std_errors": {k: self.std_errors.get(k) for k in PARAM_NAMES},
            "loglik": self.loglik,
            "intervals": [asdict(iv) for iv in self.intervals],
            "converged": self.converged,
            "iterations": self.iterations,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitReport":
        est = d["estimates"]
        return cls(
            method=d["method"],
            estimates=BrbsParams.from_values(*(est[k] for k in PARAM_NAMES)),
            std_errors={k: d["std_errors"].get(k) for k in PARAM_NAMES},
            loglik=d["loglik"],
            n=d["n"],
            intervals=tuple(Interval(**iv) for iv in d["intervals"]),
            converged=d["converged"],
            iterations=d["iterations"],
            warnings=tuple(d["warnings"]),
        )


# ---------------------------------------------------------------------------
# modified moments
# ---------------------------------------------------------------------------


def mm_from_summaries(s1: float, r1: float, s2: float, r2: float) -> tuple[float, float, float, float]:
    """``(mu1, mu2, delta1, delta2)`` from arithmetic means ``s`` and harmonic means ``r``."""
    out_mu, out_delta = [], []
    for k, (s, r) in enumerate(((s1, r1), (s2, r2)), start=1):
        if not (s > 0 and r > 0):
            raise DomainError("means must be positive")
        if not s > r:
            raise DegenerateSampleError(f"margin {k}: arithmetic mean must exceed harmonic mean")
        out_mu.append(float(s))
        out_delta.append(1.0 / (math.sqrt(s / r) - 1.0))
    return out_mu[0], out_mu[1], out_delta[0], out_delta[1]


def mm_asymptotic_se(params: BrbsParams, n: int) -> dict:
    """Asymptotic standard errors of the MM estimators; ``rho`` has none."""
    if n < 1:
        raise DomainError("n must be positive")
    out = {}
    for k, m in ((1, params.margin1), (2, params.margin2)):
        d = m.delta
        out[f"mu{k}"] = m.mu * math.sqrt(2.0 * d + 5.0) / ((d + 1.0) * math.sqrt(n))
        out[f"delta{k}"] = d * math.sqrt(2.0 / n)
    out["rho"] = None
    return {k: out[k] for k in PARAM_NAMES}


def fit_mm(sample: BivariateSample) -> FitReport:
    """Closed-form modified-moment fit."""
    if sample.n < 2:
        raise SampleTooSmallError("MM fit needs at least 2 rows")
    s1, s2 = sample.arithmetic_means()
    r1, r2 = sample.harmonic_means()
    eta = mm_from_summaries(s1, r1, s2, r2)
    rho = rho_hat_given(eta, sample)
    if abs(rho) >= 1.0:
        raise DegenerateSampleError("MM correlation estimate is +-1")
    params = BrbsParams.from_values(*eta, rho)
    return FitReport(
        method="MM",
        estimates=params,
        std_errors=mm_asymptotic_se(params, sample.n),
        loglik=loglik(params, sample),
        n=sample.n,
    )


# ---------------------------------------------------------------------------
# maximum likelihood
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitOptions:
    """Controls for :func:`fit_ml`.

    ``init`` is ``"mm"`` or an explicit ``eta``/``BrbsParams`` start.
    """

    max_iter: int = 4000
    tol: float = 1e-10
    xtol: float = 1e-8
    init: object = "mm"
    hessian_step: float = 1e-4


class _Profile:
    """Profile objective in log(eta) with precomputed data transforms."""

    def __init__(self, sample):
        self.sqrt_t = (np.sqrt(sample.t1), np.sqrt(sample.t2))
        self.log_t_sum = float(np.sum(np.log(sample.t1)) + np.sum(np.log(sample.t2)))
        self.n = sample.n
        self.evals = 0

    def _margin(self, k, mu, d):
        st = self.sqrt_t[k]
        alpha = math.sqrt(2.0 / d)
        sb = math.sqrt(mu * d / (d + 1.0))
        r = st / sb
        x = (r - 1.0 / r) / alpha
        la = float(np.sum(np.log(r + 1.0 / r))) - self.n * math.log(2.0 * alpha)
        return x, la

    def value(self, log_eta):
        self.evals += 1
        mu1, mu2, d1, d2 = np.exp(log_eta)
        x1, la1 = self._margin(0, mu1, d1)
        x2, la2 = self._margin(1, mu2, d2)
        rho = _rho_mle(x1, x2)
        omr2 = (1.0 - rho) * (1.0 + rho)
        q = float(np.dot(x1, x1) + np.dot(x2, x2) - 2.0 * rho * np.dot(x1, x2))
        val = -self.n * _LOG_2PI - 0.5 * self.n * math.log(omr2) - q / (2.0 * omr2) + la1 + la2 - self.log_t_sum
        return val, rho

    def grad(self, log_eta):
        """Gradient of the profile in log(eta); the rho-direction drops out at the conditional optimum."""
        eta = np.exp(log_eta)
        cols = []
        for k in range(2):
            mu, d = eta[k], eta[k + 2]
            alpha = math.sqrt(2.0 / d)
            r = self.sqrt_t[k] / math.sqrt(mu * d / (d + 1.0))
            cols.append((alpha, d, r, r + 1.0 / r, (r - 1.0 / r) / alpha))
        x1, x2 = cols[0][4], cols[1][4]
        rho = _rho_mle(x1, x2)
        omr2 = (1.0 - rho) * (1.0 + rho)
        w = ((rho * x2 - x1) / omr2, (rho * x1 - x2) / omr2)
        g = np.empty(4)
        for k, (alpha, d, r, rs, x) in enumerate(cols):
            g_alpha = -float(np.dot(w[k], x)) - self.n
            g_sb = -float(np.dot(w[k], rs)) / alpha - float(np.sum((r - 1.0 / r) / rs))
            g[k] = 0.5 * g_sb
            g[k + 2] = -0.5 * g_alpha + g_sb / (2.0 * (d + 1.0))
        return g

    def neg(self, log_eta):
        try:
            v = self.value(log_eta)[0]
        except (DegenerateSampleError, FloatingPointError, ValueError, OverflowError):
            return np.inf
        return -v if math.isfinite(v) else np.inf


def _initial_eta(sample, init):
    if isinstance(init, str):
        if init.lower() != "mm":
            raise DomainError(f"unknown init {init!r}")
        s1, s2 = sample.arithmetic_means()
        r1, r2 = sample.harmonic_means()
        return np.array(mm_from_summaries(s1, r1, s2, r2))
    if isinstance(init, BrbsParams):
        return np.array(init.as_tuple()[:4])
    eta = np.asarray(init, dtype=float).reshape(-1)[:4]
    if eta.size != 4 or np.any(~(eta > 0)):
        raise DomainError("explicit init needs four positive values (mu1, mu2, delta1, delta2)")
    return eta


def _newton_refine(prof, x, fx, max_steps=30, h=1e-6):
    """Newton steps on the analytic profile gradient.

    Function-value searches stall near sqrt(machine eps) in x; solving the
    score equation pushes the optimum to near rounding level.  A step is
    kept only while the Hessian is negative definite and the profile does
    not drop beyond rounding.
    """
    for _ in range(max_steps):
        try:
            g = prof.grad(x)
            jac = np.array([(prof.grad(x + e) - prof.grad(x - e)) / (2.0 * h) for e in h * np.eye(x.size)])
            jac = 0.5 * (jac + jac.T)
            if not np.all(np.isfinite(jac)) or np.any(np.linalg.eigvalsh(jac) >= 0):
                break
            step = np.linalg.solve(jac, -g)
        except (DegenerateSampleError, FloatingPointError, ValueError, np.linalg.LinAlgError):
            break
        trial = x + step
        ft = prof.neg(trial)
        if not ft <= fx + 1e-12 * max(1.0, abs(fx)):
            break
        x, fx = trial, min(ft, fx)
        if np.max(np.abs(step)) < 1e-13:
            break
    return x, fx


def fit_ml(sample: BivariateSample, options: FitOptions = FitOptions()) -> FitReport:
    """Maximum-likelihood fit through the profile likelihood of ``eta``.

    Each column is first divided by its arithmetic mean.  The profile is
    maximized over log(eta) by Nelder-Mead from the start value, then polished by BFGS with finite-difference gradients.  ``rho``
    is the conditional maximizer at the optimum.  Standard errors come from
    the observed information; if it is not positive definite they are
    omitted and a warning is recorded.

    Raises
    ------
    ConvergenceError
        If the simplex stage hits ``max_iter`` and the polish does not
        converge either; ``best`` holds the best parameters found.
    """
    if sample.n < 3:
        raise SampleTooSmallError("ML fit needs at least 3 rows")
    # optimize on unit-mean columns so the fit is scale equivariant by construction
    scale = np.array(sample.arithmetic_means())
    work = sample.scaled(1.0 / scale[0], 1.0 / scale[1])
    prof = _Profile(work)
    start = _initial_eta(sample, options.init)
    x0 = np.log(np.concatenate([start[:2] / scale, start[2:]]))
    f0 = prof.neg(x0)
    if not math.isfinite(f0):
        raise NumericalError("profile likelihood is not finite at the start value")
    nm = optimize.minimize(
        prof.neg,
        x0,
        method="Nelder-Mead",
        options={
            "xatol": options.xtol,
            "fatol": options.tol * max(1.0, abs(f0)),
            "maxiter": options.max_iter,
            "maxfev": 2 * options.max_iter,
            "initial_simplex": x0 + np.vstack([np.zeros(4), 0.05 * np.eye(4)]),
        },
    )
    best_x, best_f = (nm.x, nm.fun) if nm.fun <= f0 else (x0, f0)
    polish = optimize.minimize(prof.neg, best_x, method="BFGS", options={"gtol": 1e-7, "maxiter": 200})
    if polish.fun < best_f:
        best_x, best_f = polish.x, polish.fun
    best_x, best_f = _newton_refine(prof, best_x, best_f)
    converged = bool(nm.status == 0 or polish.success)
    eta = np.exp(best_x)
    rho = prof.value(best_x)[1]
    eta[:2] *= scale
    params = BrbsParams.from_values(*eta, rho)
    if not converged:
        raise ConvergenceError(
            f"ML fit did not converge within {options.max_iter} simplex iterations",
            best=params,
            residual=float(np.linalg.norm(getattr(polish, "jac", np.zeros(4)))),
        )

    warnings = []
    ses = {k: None for k in PARAM_NAMES}
    try:
        info = observed_information(params, sample, step=options.hessian_step)
        cov = np.linalg.inv(info)
        if np.all(np.linalg.eigvalsh(info) > 0) and np.all(np.diag(cov) > 0):
            ses = dict(zip(PARAM_NAMES, (float(v) for v in np.sqrt(np.diag(cov)))))
        else:
            warnings.append("observed information is not positive definite; standard errors omitted")
    except (NumericalError, DomainError, np.linalg.LinAlgError) as exc:
        warnings.append(f"observed information unavailable: {exc}")

    return FitReport(
        method="ML",
        estimates=params,
        std_errors=ses,
        loglik=loglik(params, sample),
        n=sample.n,
        converged=converged,
        iterations=int(nm.nit) + int(polish.nit),
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# observed information
# ---------------------------------------------------------------------------


def numerical_hessian(f, x, step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of a scalar function; exact for quadratics up to rounding."""
    x = np.asarray(x, dtype=float)
    k = x.size
    h = np.full(k, float(step))
    f0 = f(x)
    hess = np.empty((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        hess[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / (h[i] * h[i])
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h[j]
            v = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = v
    if not np.all(np.isfinite(hess)):
        raise NumericalError("non-finite second differences")
    return hess


def _numerical_gradient(f, x, step):
    g = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2.0 * step)
    return g


def observed_information(theta_hat, sample: BivariateSample, step: float = 1e-4) -> np.ndarray:
    """Negative Hessian of :func:`loglik` on the natural parameter scale.

    Differences are taken in ``(log mu1, log mu2, log delta1, log delta2, rho)``
    and mapped back by the chain rule, including the first-order term so the
    result is exact away from the optimum too.
    """
    p = _as_params(theta_hat)
    if not 1.0 - abs(p.rho) > 10.0 * step:
        raise DomainError("rho is too close to +-1 for the difference step")
    theta = np.array(p.as_tuple())
    phi = np.r_[np.log(theta[:4]), theta[4]]

    def f(v):
        return loglik(BrbsParams.from_values(*np.exp(v[:4]), v[4]), sample)

    h_phi = numerical_hessian(f, phi, step)
    g_phi = _numerical_gradient(f, phi, step)
    scale = np.r_[theta[:4], 1.0]
    corr = np.diag(np.r_[g_phi[:4], 0.0])
    h_theta = (h_phi - corr) / np.outer(scale, scale)
    h_theta = 0.5 * (h_theta + h_theta.T)
    return -h_theta


# ---------------------------------------------------------------------------
# intervals
# ---------------------------------------------------------------------------


def _check_level(level):
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")


def _z(level):
    return float(std_normal_quantile(0.5 + 0.5 * level))


def ci_wald_ml(fit: FitReport, level: float = 0.95) -> list[Interval]:
    """Wald intervals estimate +- z SE for the five parameters."""
    _check_level(level)
    z = _z(level)
    out = []
    for name in PARAM_NAMES:
        se = fit.std_errors.get(name)
        if se is None:
            raise IntervalError(f"no standard error for {name}; Wald interval unavailable")
        est = fit.estimate(name)
        out.append(Interval(name, level, est - z * se, est + z * se, "Wald"))
    return out


def _ratio_interval(est, spread, level, name):
    z = _z(level)
    lo_den = 1.0 - z * spread
    if lo_den <= 0:
        raise IntervalError(f"{name}: 1 + z sqrt(.) is not positive at level {level}; interval undefined")
    ends = sorted((est / lo_den, est / (1.0 + z * spread)))
    return Interval(name, level, ends[0], ends[1], "MM")


def ci_mm(fit: FitReport, level: float = 0.95) -> list[Interval]:
    """Intervals for ``mu_k`` and ``delta_k`` built from the MM asymptotics."""
    _check_level(level)
    n = fit.n
    out = []
    for k in (1, 2):
        d = fit.estimate(f"delta{k}")
        h = (2.0 * d + 5.0) / (d + 1.0) ** 2
        out.append(_ratio_interval(fit.estimate(f"mu{k}"), math.sqrt(h / n), level, f"mu{k}"))
    for k in (1, 2):
        out.append(_ratio_interval(fit.estimate(f"delta{k}"), math.sqrt(2.0 / n), level, f"delta{k}"))
    return out


def ci_rho_fisher(rho_tilde: float, n: int, level: float = 0.95) -> Interval:
    """Fisher z-transform interval tanh(atanh(rho) +- z / sqrt(n - 3))."""
    _check_level(level)
    if n < 4:
        raise SampleTooSmallError("Fisher interval needs n >= 4")
    if not abs(rho_tilde) < 1.0:
        raise DegenerateSampleError("Fisher interval needs |rho| < 1")
    z = _z(level)
    c = math.atanh(rho_tilde)
    w = z / math.sqrt(n - 3)
    return Interval("rho", level, math.tanh(c - w), math.tanh(c + w), "FI")


def _kx_pivots(rho_tilde, n, m, stream):
    if n < 3:
        raise SampleTooSmallError("KX interval needs n >= 3")
    if m < 10_000:
        raise DomainError("KX needs at least 10000 replications")
    if not abs(rho_tilde) < 1.0:
        raise DegenerateSampleError("KX interval needs |rho| < 1")
    rbar = rho_tilde / math.sqrt(1.0 - rho_tilde * rho_tilde)
    u1 = sample_chi2(m, n - 1, stream)
    u2 = sample_chi2(m, n - 2, stream)
    z0 = sample_std_normal(m, stream)
    num = rbar * np.sqrt(u2) - z0
    return num / np.sqrt(num * num + u1)


def ci_rho_kx_levels(rho_tilde: float, n: int, levels: Sequence[float], m: int = KX_DEFAULT_REPS,
                     stream: Optional[SeededStream] = None) -> list[Interval]:
    """KX intervals at several levels from one set of pivot draws."""
    for lv in levels:
        _check_level(lv)
    stream = stream if stream is not None else SeededStream(0, 0)
    q = _kx_pivots(rho_tilde, n, m, stream)
    out = []
    for lv in levels:
        g = 0.5 * (1.0 - lv)
        lo, hi = np.quantile(q, [g, 1.0 - g])
        out.append(Interval("rho", lv, float(lo), float(hi), "KX"))
    return out


def ci_rho_kx(rho_tilde: float, n: int, level: float = 0.95, m: int = KX_DEFAULT_REPS,
              stream: Optional[SeededStream] = None) -> Interval:
    """Krishnamoorthy-Xia Monte Carlo pivot interval for a normal correlation."""
    return ci_rho_kx_levels(rho_tilde, n, [level], m, stream)[0]


def attach_intervals(fit: FitReport, levels: Sequence[float], kx_reps: int = KX_DEFAULT_REPS,
                     stream: Optional[SeededStream] = None) -> FitReport:
    """Return ``fit`` with the intervals appropriate to its method added.

    ML fits get Wald intervals (when standard errors exist); MM fits get MM
    intervals for mu and delta plus FI and KX intervals for rho.
    """
    ivs = list(fit.intervals)
    warns = list(fit.warnings)
    if fit.method == "ML":
        for lv in levels:
            try:
                ivs.extend(ci_wald_ml(fit, lv))
            except IntervalError as exc:
                warns.append(str(exc))
    else:
        rho = fit.estimates.rho
        for lv in levels:
            try:
                ivs.extend(ci_mm(fit, lv))
            except IntervalError as exc:
                warns.append(str(exc))
            if fit.n >= 4:
                ivs.append(ci_rho_fisher(rho, fit.n, lv))
        if kx_reps:
            ivs.extend(ci_rho_kx_levels(rho, fit.n, list(levels), kx_reps, stream))
    return replace(fit, intervals=tuple(ivs), warnings=tuple(warns))
