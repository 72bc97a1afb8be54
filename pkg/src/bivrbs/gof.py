"""Goodness-of-fit diagnostics for fitted BRBS models.

Under the model the standardized score pairs are standard bivariate normal,
so their Mahalanobis distances are chi-square with two degrees of freedom.
After a Wilson-Hilferty cube-root transform the distances should look
standard normal, which is checked with a Kolmogorov-Smirnov test.  Marginal
PP/QQ coordinates and scaled total-time-on-test curves complete the toolkit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import kolmogi, kolmogorov

from .brbs import BrbsParams
from .estimate import BivariateSample
from .exceptions import DomainError, SampleTooSmallError
from .numerics import std_normal_cdf, wilson_hilferty
from .rbs import RbsParams, a_transform, rbs_cdf, rbs_quantile

__all__ = [
    "GofReport",
    "mahalanobis_distances",
    "wh_normality_ks",
    "ks_test",
    "ks_band_halfwidth",
    "pp_data",
    "qq_data",
    "ttt_data",
    "gof_report",
]


@dataclass(frozen=True)
class GofReport:
    """Diagnostics for one fitted model and sample.

    ``pp_points`` and ``bands`` hold one entry per sorted transformed
    distance: (empirical i/(n+1), Phi(z_(i))) and the KS acceptance band
    around the empirical coordinate.
    """

    distances: np.ndarray
    transformed: np.ndarray
    ks_statistic: float
    ks_pvalue: float
    pp_points: np.ndarray
    bands: np.ndarray

    def to_dict(self) -> dict:
        return {
            "distances": self.distances.tolist(),
            "transformed": self.transformed.tolist(),
            "ks_statistic": self.ks_statistic,
            "ks_pvalue": self.ks_pvalue,
            "pp_points": self.pp_points.tolist(),
            "bands": self.bands.tolist(),
        }


def mahalanobis_distances(theta: BrbsParams, sample: BivariateSample) -> np.ndarray:
    """(x1^2 - 2 rho x1 x2 + x2^2) / (1 - rho^2) for each row's score pair."""
    rho = theta.rho
    x1 = np.asarray(a_transform(sample.t1, theta.margin1)).reshape(-1)
    x2 = np.asarray(a_transform(sample.t2, theta.margin2)).reshape(-1)
    d = (x1 * x1 - 2.0 * rho * x1 * x2 + x2 * x2) / ((1.0 - rho) * (1.0 + rho))
    return np.maximum(d, 0.0)


def ks_test(values, cdf) -> tuple[float, float]:
    """Two-sided one-sample KS statistic and asymptotic p-value.

    The p-value uses the Kolmogorov limit law at
    (sqrt(n) + 0.12 + 0.11/sqrt(n)) D.
    """
    x = np.sort(np.asarray(values, dtype=float).reshape(-1))
    n = x.size
    if n < 1:
        raise SampleTooSmallError("KS test needs data")
    u = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))
    rn = math.sqrt(n)
    p = float(kolmogorov((rn + 0.12 + 0.11 / rn) * d))
    return d, min(1.0, max(0.0, p))


def wh_normality_ks(distances) -> tuple[float, float]:
    """KS test of the Wilson-Hilferty transformed distances against N(0, 1)."""
    d = np.asarray(distances, dtype=float).reshape(-1)
    if d.size < 5:
        raise SampleTooSmallError("normality check needs at least 5 distances")
    z = wilson_hilferty(d, 2)
    return ks_test(z, std_normal_cdf)


def ks_band_halfwidth(n: int, level: float) -> float:
    """Distance c with P(D_n > c) = 1 - level under the corrected asymptotic law."""
    if not 0.0 < level < 1.0:
        raise DomainError("band level must lie in (0, 1)")
    rn = math.sqrt(n)
    return float(kolmogi(1.0 - level)) / (rn + 0.12 + 0.11 / rn)


def _pp(sorted_x, cdf, band_level):
    n = sorted_x.size
    emp = np.arange(1, n + 1) / (n + 1.0)
    theo = np.asarray(cdf(sorted_x), dtype=float).reshape(-1)
    c = ks_band_halfwidth(n, band_level)
    bands = np.column_stack([np.clip(emp - c, 0.0, 1.0), np.clip(emp + c, 0.0, 1.0)])
    return np.column_stack([emp, theo]), bands


def pp_data(marginal: RbsParams, column, band_level: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
    """PP coordinates (i/(n+1), F(t_(i))) with KS acceptance bands.

    Returns
    -------
    points : ndarray of shape (n, 2)
        Empirical and theoretical probabilities.
    bands : ndarray of shape (n, 2)
        Lower and upper band limits for the theoretical coordinate.
    """
    t = np.sort(np.asarray(column, dtype=float).reshape(-1))
    if t.size < 2:
        raise SampleTooSmallError("PP data needs at least 2 observations")
    return _pp(t, lambda x: rbs_cdf(x, marginal), band_level)


def qq_data(marginal: RbsParams, column) -> np.ndarray:
    """QQ coordinates (F^-1(i/(n+1)), t_(i)): theoretical then empirical quantiles."""
    t = np.sort(np.asarray(column, dtype=float).reshape(-1))
    n = t.size
    if n < 2:
        raise SampleTooSmallError("QQ data needs at least 2 observations")
    q = np.asarray(rbs_quantile(np.arange(1, n + 1) / (n + 1.0), marginal)).reshape(-1)
    return np.column_stack([q, t])


def ttt_data(column) -> np.ndarray:
    """Scaled total-time-on-test curve as rows (k/n, W(k/n)), k = 1..n."""
    t = np.sort(np.asarray(column, dtype=float).reshape(-1))
    n = t.size
    if n < 2:
        raise SampleTooSmallError("TTT curve needs at least 2 observations")
    if np.any(~(t > 0)):
        raise DomainError("TTT curve needs positive observations")
    k = np.arange(1, n + 1)
    w = (np.cumsum(t) + (n - k) * t) / np.sum(t)
    w[-1] = 1.0
    return np.column_stack([k / n, w])


def gof_report(theta: BrbsParams, sample: BivariateSample, band_level: float = 0.95) -> GofReport:
    """Mahalanobis/Wilson-Hilferty diagnostics with PP data for the transformed distances."""
    d = mahalanobis_distances(theta, sample)
    z = np.asarray(wilson_hilferty(d, 2)).reshape(-1)
    stat, p = wh_normality_ks(d)
    points, bands = _pp(np.sort(z), std_normal_cdf, band_level)
    return GofReport(d, z, stat, p, points, bands)
