"""Monte Carlo harness for bias/MSE and interval-coverage studies.

Each replication draws its sample from its own stream, keyed by the cell
index and the replication number, so any split of the replications across
workers gives the same report as a serial run.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

from .brbs import PARAM_NAMES, BrbsParams
from .estimate import (
    BivariateSample,
    ci_mm,
    ci_rho_fisher,
    ci_rho_kx_levels,
    ci_wald_ml,
    fit_ml,
    fit_mm,
)
from .exceptions import BrbsError, DomainError
from .sampling import SeededStream, sample_brbs

__all__ = [
    "SimConfig",
    "Cell",
    "CellReport",
    "SimReport",
    "ReplicationResult",
    "run_bias_mse",
    "run_coverage",
    "run_replications",
    "replication_stream",
    "DEGRADED_FRACTION",
]

DEGRADED_FRACTION = 0.05
METHODS = ("ML", "MM")
TECHNIQUES = ("Wald", "MM", "FI", "KX")
_KX_TAG = 1 << 63


@dataclass(frozen=True)
class Cell:
    n: int
    params: BrbsParams


@dataclass
class SimConfig:
    """Scenario grid and Monte Carlo settings.

    Cells are the product ``n_values x rho_values x delta_values`` with both
    margins set to ``(mu, delta)``.
    """

    n_values: list = field(default_factory=lambda: [10, 50, 100])
    rho_values: list = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.95])
    delta_values: list = field(default_factory=lambda: [0.25, 2.0])
    mu: float = 2.0
    replications: int = 2000
    seed: int = 12345
    methods: list = field(default_factory=lambda: list(METHODS))
    interval_techniques: list = field(default_factory=lambda: list(TECHNIQUES))
    levels: list = field(default_factory=lambda: [0.90, 0.95])
    kx_reps: int = 50_000
    workers: int = 1

    def __post_init__(self):
        if self.replications < 100:
            raise DomainError("replications must be at least 100")
        if any(int(n) != n or n < 3 for n in self.n_values):
            raise DomainError("sample sizes must be integers >= 3")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise DomainError(f"methods must be a nonempty subset of {METHODS}")
        bad = set(self.interval_techniques) - set(TECHNIQUES)
        if bad:
            raise DomainError(f"unknown interval techniques {sorted(bad)}")
        if any(not 0.0 < lv < 1.0 for lv in self.levels):
            raise DomainError("levels must lie in (0, 1)")
        if self.workers < 1:
            raise DomainError("workers must be positive")
        # validates every cell
        self.cells()

    def cells(self) -> list[Cell]:
        out = []
        for n, rho, delta in itertools.product(self.n_values, self.rho_values, self.delta_values):
            out.append(Cell(int(n), BrbsParams.from_values(self.mu, self.mu, delta, delta, rho)))
        return out

    @classmethod
    def coverage_defaults(cls, **kw) -> "SimConfig":
        """Grid of the coverage study: mu = 1, delta = 0.5."""
        base = dict(mu=1.0, delta_values=[0.5])
        base.update(kw)
        return cls(**base)

    def to_dict(self) -> dict:
        return asdict(self)


def replication_stream(seed: int, cell_idx: int, rep: int, kx: bool = False) -> SeededStream:
    """Stream of one replication: id = cell << 32 | rep, with the top bit set for KX draws."""
    sid = (cell_idx << 32) | rep
    return SeededStream(seed, sid | _KX_TAG if kx else sid)


@dataclass
class ReplicationResult:
    """Outcome of one replication: estimates per method and interval hits."""

    rep: int
    estimates: dict
    hits: dict

    def failed(self, method: str) -> bool:
        return self.estimates.get(method) is None


def _one_replication(config: SimConfig, cell_idx: int, cell: Cell, rep: int, coverage: bool) -> ReplicationResult:
    data = sample_brbs(cell.n, cell.params, replication_stream(config.seed, cell_idx, rep))
    sample = BivariateSample(data[:, 0], data[:, 1])
    truth = dict(zip(PARAM_NAMES, cell.params.as_tuple()))
    estimates, hits = {}, {}
    techniques = set(config.interval_techniques) if coverage else set()

    def record(ivs):
        for iv in ivs:
            hits[f"{iv.technique}|{iv.level!r}|{iv.parameter}"] = iv.contains(truth[iv.parameter])

    if "ML" in config.methods:
        try:
            fit = fit_ml(sample)
            estimates["ML"] = fit.estimates.as_tuple()
            if "Wald" in techniques:
                for lv in config.levels:
                    try:
                        record(ci_wald_ml(fit, lv))
                    except BrbsError:
                        pass
        except BrbsError:
            estimates["ML"] = None
    if "MM" in config.methods:
        try:
            fit = fit_mm(sample)
            estimates["MM"] = fit.estimates.as_tuple()
            rho = fit.estimates.rho
            for lv in config.levels:
                if "MM" in techniques:
                    try:
                        record(ci_mm(fit, lv))
                    except BrbsError:
                        pass
                if "FI" in techniques and cell.n >= 4:
                    record([ci_rho_fisher(rho, cell.n, lv)])
            if "KX" in techniques:
                kx_stream = replication_stream(config.seed, cell_idx, rep, kx=True)
                record(ci_rho_kx_levels(rho, cell.n, config.levels, config.kx_reps, kx_stream))
        except BrbsError:
            estimates["MM"] = None
    return ReplicationResult(rep, estimates, hits)


def run_replications(config: SimConfig, cell_idx: int, reps, coverage: bool = False) -> list[ReplicationResult]:
    """Run the listed replication numbers of one cell; the unit of work for sharding."""
    cell = config.cells()[cell_idx]
    return [_one_replication(config, cell_idx, cell, int(r), coverage) for r in reps]


def _shard(args):
    config, cell_idx, reps, coverage = args
    return run_replications(config, cell_idx, reps, coverage)


@dataclass
class CellReport:
    """Aggregates of one cell.  Coverage entries are percentages."""

    n: int
    rho: float
    mu: float
    delta: float
    replications: int
    failed: dict
    bias: dict
    mse: dict
    coverage: dict
    coverage_counts: dict
    degraded: bool

    def rows(self) -> list[dict]:
        """Flat rows, one per method, for tabular output."""
        out = []
        for method in self.bias:
            row = {"n": self.n, "rho": self.rho, "mu": self.mu, "delta": self.delta, "method": method,
                   "replications": self.replications, "failed": self.failed[method]}
            for p in PARAM_NAMES:
                row[f"bias_{p}"] = self.bias[method][p]
                row[f"mse_{p}"] = self.mse[method][p]
            out.append(row)
        return out


def _aggregate(config: SimConfig, cell: Cell, results: list[ReplicationResult]) -> CellReport:
    results = sorted(results, key=lambda r: r.rep)
    truth = cell.params.as_tuple()
    failed, bias, mse = {}, {}, {}
    for method in config.methods:
        good = [r.estimates[method] for r in results if not r.failed(method)]
        failed[method] = len(results) - len(good)
        k = len(good)
        bias[method], mse[method] = {}, {}
        for j, name in enumerate(PARAM_NAMES):
            errs = [g[j] - truth[j] for g in good]
            bias[method][name] = math.fsum(errs) / k if k else math.nan
            mse[method][name] = math.fsum(e * e for e in errs) / k if k else math.nan
    coverage, counts = {}, {}
    keys = sorted({key for r in results for key in r.hits})
    for key in keys:
        technique, level, name = key.split("|")
        vals = [r.hits[key] for r in results if key in r.hits]
        coverage.setdefault(technique, {}).setdefault(level, {})[name] = 100.0 * sum(vals) / len(vals)
        counts.setdefault(technique, {}).setdefault(level, {})[name] = len(vals)
    degraded = any(f > DEGRADED_FRACTION * len(results) for f in failed.values())
    p = cell.params
    return CellReport(
        n=cell.n,
        rho=p.rho,
        mu=p.margin1.mu,
        delta=p.margin1.delta,
        replications=len(results),
        failed=failed,
        bias=bias,
        mse=mse,
        coverage=coverage,
        coverage_counts=counts,
        degraded=degraded,
    )


@dataclass
class SimReport:
    config: dict
    cells: list

    @property
    def degraded(self) -> bool:
        return any(c.degraded for c in self.cells)

    def cell(self, n: int, rho: float, delta: Optional[float] = None) -> CellReport:
        for c in self.cells:
            if c.n == n and c.rho == rho and (delta is None or c.delta == delta):
                return c
        raise KeyError((n, rho, delta))

    def to_dict(self) -> dict:
        return {"config": self.config, "degraded": self.degraded, "cells": [asdict(c) for c in self.cells]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SimReport":
        return cls(config=d["config"], cells=[CellReport(**c) for c in d["cells"]])


def _chunks(reps: int, k: int):
    step = math.ceil(reps / k)
    return [range(i, min(i + step, reps)) for i in range(0, reps, step)]


def _run(config: SimConfig, coverage: bool) -> SimReport:
    cells = config.cells()
    per_cell: dict[int, list] = {i: [] for i in range(len(cells))}
    if config.workers == 1:
        for i in range(len(cells)):
            per_cell[i] = run_replications(config, i, range(config.replications), coverage)
    else:
        jobs = [(config, i, chunk, coverage) for i in range(len(cells))
                for chunk in _chunks(config.replications, config.workers)]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for (_, i, _, _), res in zip(jobs, pool.map(_shard, jobs)):
                per_cell[i].extend(res)
    reports = [_aggregate(config, cells[i], per_cell[i]) for i in range(len(cells))]
    return SimReport(config=config.to_dict(), cells=reports)


def run_bias_mse(config: SimConfig) -> SimReport:
    """Bias and MSE of each method's estimates, per cell."""
    return _run(config, coverage=False)


def run_coverage(config: SimConfig) -> SimReport:
    """Empirical coverage (in percent) of each interval technique, per cell, plus bias/MSE."""
    return _run(config, coverage=True)
