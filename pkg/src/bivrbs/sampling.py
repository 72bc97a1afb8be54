"""Reproducible random variates for RBS and BRBS models.

Every draw comes from a :class:`SeededStream`, a counter-based Philox
generator keyed by ``(seed, stream_id)``.  Streams with distinct ids are
independent, so a simulation can give each replication its own stream and
obtain identical results however the replications are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .brbs import BrbsParams
from .exceptions import DomainError
from .rbs import RbsParams, a_inverse

__all__ = ["SeededStream", "sample_rbs", "sample_brbs", "sample_chi2", "sample_std_normal"]

_U64 = 2**64
# keeps inverse-CDF arguments inside the open interval (0, 1)
_HALF_ULP = 2.0**-54


@dataclass
class SeededStream:
    """Random stream identified by a 64-bit ``seed`` and a 64-bit ``stream_id``.

    Two streams built from the same pair produce bit-identical sequences.
    A stream holds state, so it should not be shared between threads.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if int(v) != v or not 0 <= int(v) < _U64:
                raise DomainError(f"{name} must be an unsigned 64-bit integer, got {v}")
            setattr(self, name, int(v))
        ss = np.random.SeedSequence([self.seed, self.stream_id])
        self._gen = np.random.Generator(np.random.Philox(ss))

    def spawn(self, stream_id: int) -> "SeededStream":
        """Fresh stream with the same seed and a different id."""
        return SeededStream(self.seed, stream_id)

    def uniform(self, n: int) -> np.ndarray:
        """Uniforms on the open interval (0, 1)."""
        return self._gen.random(n) + _HALF_ULP

    def gamma(self, shape: float, n: int) -> np.ndarray:
        return self._gen.standard_gamma(shape, n)


def _check_n(n):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    return int(n)


def sample_std_normal(n: int, stream: SeededStream) -> np.ndarray:
    """Standard normals by inversion of open-interval uniforms."""
    return ndtri(stream.uniform(_check_n(n)))


def sample_rbs(n: int, p: RbsParams, stream: SeededStream) -> np.ndarray:
    """``n`` draws a_inverse(Z) with Z standard normal."""
    return np.asarray(a_inverse(sample_std_normal(n, stream), p), dtype=float).reshape(-1)


def sample_brbs(n: int, params: BrbsParams, stream: SeededStream) -> np.ndarray:
    """``n`` BRBS pairs as an ``(n, 2)`` array.

    A correlated standard normal pair is built from two independent normals
    with the 2x2 Cholesky factor, then each coordinate is sent through its
    margin's inverse map.
    """
    n = _check_n(n)
    z = sample_std_normal(2 * n, stream).reshape(n, 2)
    rho = params.rho
    z2 = rho * z[:, 0] + math.sqrt(1.0 - rho * rho) * z[:, 1]
    out = np.empty((n, 2))
    out[:, 0] = a_inverse(z[:, 0], params.margin1)
    out[:, 1] = a_inverse(z2, params.margin2)
    return out


def sample_chi2(n: int, dof: int, stream: SeededStream) -> np.ndarray:
    """Chi-square draws; sums of squared normals for dof <= 4, gamma variates above."""
    n = _check_n(n)
    if int(dof) != dof or dof < 1:
        raise DomainError(f"dof must be a positive integer, got {dof}")
    dof = int(dof)
    if dof <= 4:
        z = sample_std_normal(n * dof, stream).reshape(n, dof)
        return np.sum(z * z, axis=1)
    return 2.0 * stream.gamma(0.5 * dof, n)
