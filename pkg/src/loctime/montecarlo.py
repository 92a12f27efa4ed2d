"""Replicated experiments comparing the normalized statistic with its mixed-Gaussian limit.

Path ``i`` of an experiment is a pure function of ``(config, i)``: its field is
drawn from stream 0 and its Gaussian factor ``Z_i`` from stream 1 of the
generator seeded with ``mix_seed(master_seed, i)``.  Results are gathered by
path index before any reduction, so reports do not depend on the worker count.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np

from .hermite_bessel import limit_constant, limit_constant_squared
from .path_sim import (
    LocalTimeField,
    local_time_field,
    make_rng,
    mix_seed,
    simulate_besq0,
    simulate_brownian,
)
from .statistics_core import StatisticRequest, lag_bins, normalized_statistic

__all__ = [
    "MODES",
    "ExperimentConfig",
    "HSummary",
    "ExperimentReport",
    "PathError",
    "ExpectationRow",
    "ProbeRow",
    "default_field",
    "zero_field",
    "effective_workers",
    "run_experiment",
    "ks_two_sample",
    "expectation_scan",
    "conjecture_probe",
]

logger = logging.getLogger(__name__)

MODES = ("fixed-time", "tau")
WORKERS_ENV = "LOCTIME_WORKERS"


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment.

    ``t`` and ``dt`` apply to fixed-time mode; ``besq_start`` and
    ``tau_extent`` to tau mode, where ``bin_width`` is also the Euler step.
    ``workers`` only affects scheduling and is left out of :meth:`to_dict`.
    """

    mode: str = "fixed-time"
    q: int = 2
    r: int = 0
    h_list: tuple[float, ...] = (0.4, 0.2, 0.1, 0.05)
    t: float = 1.0
    besq_start: float = 1.0
    tau_extent: float = 20.0
    dt: float = 1e-4
    bin_width: float = 0.01
    n_paths: int = 4000
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "h_list", tuple(float(h) for h in self.h_list))
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.q < 2:
            raise ValueError(f"q must be >= 2, got {self.q}")
        if self.n_paths < 2:
            raise ValueError(f"n_paths must be >= 2, got {self.n_paths}")
        if not self.h_list:
            raise ValueError("h_list is empty")
        if any(b >= a for a, b in zip(self.h_list, self.h_list[1:])):
            raise ValueError(f"h_list must be strictly decreasing, got {self.h_list}")
        for h in self.h_list:
            lag_bins(h, self.bin_width)
        # raises on bad q/r range
        StatisticRequest(self.q, self.h_list[0], self.r)
        if self.mode == "fixed-time" and not (self.t > 0 and 0 < self.dt <= self.t):
            raise ValueError(f"need t > 0 and 0 < dt <= t, got t={self.t}, dt={self.dt}")
        if self.mode == "tau" and not (self.besq_start > 0 and self.tau_extent > self.h_list[0]):
            raise ValueError("tau mode needs besq_start > 0 and tau_extent > max(h)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        del d["workers"]
        d["h_list"] = list(self.h_list)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


class PathError(RuntimeError):
    def __init__(self, index: int, cause: BaseException):
        super().__init__(f"path {index}: {cause}")
        self.index = index


FieldFactory = Callable[[ExperimentConfig, np.random.Generator], object]


def default_field(config: ExperimentConfig, rng: np.random.Generator):
    if config.mode == "tau":
        return simulate_besq0(config.besq_start, config.bin_width, config.tau_extent, rng)
    return local_time_field(simulate_brownian(config.t, config.dt, rng), config.bin_width)


def zero_field(config: ExperimentConfig, rng: np.random.Generator) -> LocalTimeField:
    """Degenerate generator: an identically zero field (for plumbing tests)."""
    return LocalTimeField(config.bin_width, 0, np.zeros(1), config.t)


def _run_paths(config: ExperimentConfig, indices: range, factory: FieldFactory):
    n_h = len(config.h_list)
    out = []
    for i in indices:
        try:
            seed = mix_seed(config.master_seed, i)
            fld = factory(config, make_rng(seed, 0))
            z = float(make_rng(seed, 1).standard_normal())
            row = np.empty((4, n_h))
            for j, h in enumerate(config.h_list):
                res = normalized_statistic(fld, StatisticRequest(config.q, h, config.r))
                row[:, j] = (res.s_q, res.r_qh, res.t_q, res.limit_scale)
        except Exception as exc:
            raise PathError(i, exc) from exc
        out.append((i, seed, row, z))
    return out


def effective_workers(requested: int) -> int:
    cap = os.environ.get(WORKERS_ENV)
    if cap:
        try:
            requested = min(requested, max(1, int(cap)))
        except ValueError:
            logger.warning("ignoring non-integer %s=%r", WORKERS_ENV, cap)
    return max(1, requested)


@dataclass
class HSummary:
    h: float
    ks_stat: float
    var_ratio: float
    mean_T: float
    mean_S: float
    stderr: float
    stderr_T: float
    mean_R: float
    stderr_R: float


@dataclass
class ExperimentReport:
    """Per-path samples (rows = paths in index order, columns = ``config.h_list``)."""

    config: ExperimentConfig
    path_ids: np.ndarray
    seeds: list[int]
    s_q: np.ndarray
    r_qh: np.ndarray
    t_q: np.ndarray
    limit_scale: np.ndarray
    z: np.ndarray
    summaries: list[HSummary]
    runtime_seconds: float = field(default=0.0, compare=False)

    @property
    def limit_sample(self) -> np.ndarray:
        return limit_constant(self.config.q) * np.sqrt(self.limit_scale) * self.z[:, None]

    def summary_for(self, h: float) -> HSummary:
        for s in self.summaries:
            if math.isclose(s.h, h, rel_tol=1e-12):
                return s
        raise KeyError(h)


def _stderr(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / math.sqrt(len(x)))


def _summarize(config: ExperimentConfig, s, r, t, scale, limit) -> list[HSummary]:
    c2 = float(limit_constant_squared(config.q))
    out = []
    for j, h in enumerate(config.h_list):
        denom = c2 * float(np.mean(scale[:, j]))
        var_t = float(np.var(t[:, j], ddof=1))
        out.append(
            HSummary(
                h=h,
                ks_stat=ks_two_sample(t[:, j], limit[:, j]),
                var_ratio=var_t / denom if denom > 0 else math.nan,
                mean_T=float(np.mean(t[:, j])),
                mean_S=float(np.mean(s[:, j])),
                stderr=_stderr(s[:, j]),
                stderr_T=_stderr(t[:, j]),
                mean_R=float(np.mean(r[:, j])),
                stderr_R=_stderr(r[:, j]),
            )
        )
    return out


def run_experiment(config: ExperimentConfig, field_factory: FieldFactory | None = None) -> ExperimentReport:
    factory = field_factory or default_field
    workers = min(effective_workers(config.workers), config.n_paths)
    start = time.perf_counter()
    if workers == 1:
        results = _run_paths(config, range(config.n_paths), factory)
    else:
        bounds = np.linspace(0, config.n_paths, workers + 1).astype(int)
        chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_paths, config, c, factory) for c in chunks]
            results = [item for fut in futures for item in fut.result()]
    results.sort(key=lambda item: item[0])

    rows = np.stack([item[2] for item in results])
    s, r, t, scale = (rows[:, k, :] for k in range(4))
    z = np.array([item[3] for item in results])
    limit = limit_constant(config.q) * np.sqrt(scale) * z[:, None]
    report = ExperimentReport(
        config=config,
        path_ids=np.array([item[0] for item in results]),
        seeds=[item[1] for item in results],
        s_q=s,
        r_qh=r,
        t_q=t,
        limit_scale=scale,
        z=z,
        summaries=_summarize(config, s, r, t, scale, limit),
        runtime_seconds=time.perf_counter() - start,
    )
    logger.info("%d paths in %.2fs (%d workers)", config.n_paths, report.runtime_seconds, workers)
    return report


def ks_two_sample(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance ``sup_x |F_a(x) - F_b(x)|``."""
    xs = sorted(float(v) for v in np.ravel(a))
    ys = sorted(float(v) for v in np.ravel(b))
    n, m = len(xs), len(ys)
    if n == 0 or m == 0:
        raise ValueError("ks_two_sample needs two nonempty samples")
    i = j = 0
    best = 0.0
    while i < n and j < m:
        x = min(xs[i], ys[j])
        while i < n and xs[i] == x:
            i += 1
        while j < m and ys[j] == x:
            j += 1
        best = max(best, abs(i / n - j / m))
    return best


@dataclass
class ExpectationRow:
    h: float
    mean_S: float
    stderr: float
    deviation: float
    mean_S_plus_R: float


def expectation_scan(config: ExperimentConfig, report: ExperimentReport | None = None) -> list[ExpectationRow]:
    """Mean of ``S_2(h)`` against ``4 t h`` over the h-grid."""
    if config.q != 2 or config.r != 0 or config.mode != "fixed-time":
        raise ValueError("expectation_scan needs a fixed-time config with q=2, r=0")
    report = report or run_experiment(config)
    rows = []
    for j, h in enumerate(config.h_list):
        s = report.s_q[:, j]
        mean_s = float(np.mean(s))
        rows.append(
            ExpectationRow(
                h=h,
                mean_S=mean_s,
                stderr=_stderr(s),
                deviation=mean_s - 4 * config.t * h,
                mean_S_plus_R=float(np.mean(s + report.r_qh[:, j])),
            )
        )
    return rows


@dataclass
class ProbeRow:
    h: float
    var_centered_R: float
    var_T: float
    mean_R: float
    stderr_R: float


def conjecture_probe(config: ExperimentConfig, report: ExperimentReport | None = None) -> list[ProbeRow]:
    """Fluctuation of the centered, normalized compensator next to ``Var(T_q)``."""
    if config.q < 4:
        raise ValueError("conjecture_probe needs q >= 4")
    report = report or run_experiment(config)
    rows = []
    for j, h in enumerate(config.h_list):
        r = report.r_qh[:, j]
        norm = h ** ((config.q + 1) / 2)
        rows.append(
            ProbeRow(
                h=h,
                var_centered_R=float(np.var((r - np.mean(r)) / norm, ddof=1)),
                var_T=float(np.var(report.t_q[:, j], ddof=1)),
                mean_R=float(np.mean(r)),
                stderr_R=_stderr(r),
            )
        )
    return rows
