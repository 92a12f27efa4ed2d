"""Increment moments, compensators and the normalized statistic of a field.

For a field ``L`` on a grid of width ``dx`` and a lag ``h = m * dx``::

    S_q(h)   = sum_j (L[j+m] - L[j])**q * Y[j] * dx
    W[j]     = 4 * dx * (L[j]/2 + L[j+1] + ... + L[j+m-1] + L[j+m]/2)
    R_{q,h}  = sum_{k>=1} a(q,k) * sum_j (L[j+m] - L[j])**(q-2k) * W[j]**k * Y[j] * dx
    T_q(h)   = (S_q(h) + R_{q,h}) / h**((q+1)/2)

with ``Y = L**r``.  ``W`` is the trapezoidal window integral; with it both
``R_{2,h} = -4 h * sum(L) * dx`` and ``sum_j (L[j+m]-L[j]) W[j] = 0`` hold
exactly on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermite_bessel import bessel_number, limit_constant
from .path_sim import BesqZeroField, LocalTimeField

__all__ = [
    "StatisticRequest",
    "StatisticResult",
    "lag_bins",
    "increment_moment",
    "compensator",
    "compensator_terms",
    "normalized_statistic",
    "window_integrals",
]

MAX_Q = 12
MAX_R = 8
_ALIGN_TOL = 1e-9

Field = LocalTimeField | BesqZeroField


@dataclass(frozen=True)
class StatisticRequest:
    q: int
    h: float
    r: int = 0

    def __post_init__(self):
        if not 2 <= self.q <= MAX_Q:
            raise ValueError(f"q={self.q} outside [2, {MAX_Q}]")
        if not 0 <= self.r <= MAX_R:
            raise ValueError(f"r={self.r} outside [0, {MAX_R}]")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")


@dataclass(frozen=True)
class StatisticResult:
    s_q: float
    r_qh: float
    t_q: float
    limit_scale: float
    limit_constant: float


def lag_bins(h: float, bin_width: float) -> int:
    """Number of bins in ``h``; raises ValueError unless h is a multiple of ``bin_width``."""
    m = int(round(h / bin_width))
    if m < 1 or abs(m * bin_width - h) > _ALIGN_TOL * h:
        raise ValueError(f"h={h} is not a positive integer multiple of bin width {bin_width}")
    return m


def _aligned(field: Field, request: StatisticRequest):
    """Lagged differences, window integrals and weights over every contributing bin."""
    dx = field.bin_width
    m = lag_bins(request.h, dx)
    L = np.asarray(field.values, dtype=float)
    if not field.half_line:
        L = np.concatenate([np.zeros(m), L, np.zeros(m)])
    elif field.absorbed:
        L = np.concatenate([L, np.zeros(m)])
    if len(L) <= m:
        empty = np.zeros(0)
        return empty, empty, empty, dx
    diff = L[m:] - L[:-m]
    weights = np.ones(m + 1)
    weights[0] = weights[-1] = 0.5
    window = 4.0 * dx * np.convolve(L, weights, mode="valid")
    base = L[: len(diff)]
    y = base**request.r if request.r else np.ones_like(base)
    return diff, window, y, dx


def window_integrals(field: Field, h: float) -> np.ndarray:
    """``W[j] = 4 * int_{x_j}^{x_j+h} L du`` for each contributing bin."""
    _, window, _, _ = _aligned(field, StatisticRequest(2, h))
    return window


def increment_moment(field: Field, request: StatisticRequest) -> float:
    diff, _, y, dx = _aligned(field, request)
    return float(np.sum(diff**request.q * y) * dx)


def _terms(diff, window, y, dx, q):
    return [
        bessel_number(q, k) * float(np.sum(diff ** (q - 2 * k) * window**k * y) * dx)
        for k in range(1, q // 2 + 1)
    ]


def compensator_terms(field: Field, request: StatisticRequest) -> list[float]:
    """Signed contributions of k = 1..q//2 to the compensator."""
    return _terms(*_aligned(field, request), request.q)


def compensator(field: Field, request: StatisticRequest) -> float:
    return float(sum(compensator_terms(field, request)))


def normalized_statistic(field: Field, request: StatisticRequest) -> StatisticResult:
    diff, window, y, dx = _aligned(field, request)
    q, r = request.q, request.r
    s_q = float(np.sum(diff**q * y) * dx)
    r_qh = float(sum(_terms(diff, window, y, dx, q)))
    L = np.asarray(field.values, dtype=float)
    if field.half_line and not field.absorbed:
        # statistic only sees x < extent - h; keep the limit scale on the same interval
        L = L[: len(diff)]
    return StatisticResult(
        s_q=s_q,
        r_qh=r_qh,
        t_q=(s_q + r_qh) / request.h ** ((q + 1) / 2),
        limit_scale=float(np.sum(L ** (q + 2 * r)) * dx),
        limit_constant=limit_constant(q),
    )
