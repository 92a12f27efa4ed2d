"""Discrete iterated integrals and the Kailath-Segall identity on sampled paths.

With left-point evaluation the discrete iterated integral ``I_m`` of a path
is the elementary symmetric polynomial ``e_m`` of its increments, so the
identity ``q I_q = sum_k (-1)**(k+1) I_{q-k} P_k`` (Newton's identities, with
``P_k`` the k-th power variation) holds exactly at every grid point.  The
continuous form ``q! I_q = H~_q(M, <M>)`` only holds as the mesh goes to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hermite_bessel import scaled_hermite_eval

__all__ = [
    "MAX_LADDER_ORDER",
    "DiscretizedMartingale",
    "IteratedIntegralLadder",
    "build_ladder",
    "power_variation",
    "newton_terms",
    "check_newton_identity",
    "check_kailath_segall_continuous",
]

MAX_LADDER_ORDER = 12


@dataclass(frozen=True)
class DiscretizedMartingale:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.shape != values.shape or grid.ndim != 1 or len(grid) < 2:
            raise ValueError("grid and values must be 1-d of equal length >= 2")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if values[0] != 0.0:
            raise ValueError("martingale must start at 0")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_increments(cls, increments, grid=None) -> "DiscretizedMartingale":
        inc = np.asarray(increments, dtype=float)
        values = np.concatenate([[0.0], np.cumsum(inc)])
        if grid is None:
            grid = np.arange(len(values), dtype=float)
        return cls(np.asarray(grid, dtype=float), values)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    @property
    def quad_var(self) -> np.ndarray:
        return power_variation(self, 2)


@dataclass(frozen=True)
class IteratedIntegralLadder:
    """``tables[m, i]`` is the discrete ``I_m`` at grid point i."""

    max_order: int
    tables: np.ndarray

    def __getitem__(self, m: int) -> np.ndarray:
        return self.tables[m]


def _check_order(q: int, name: str = "q") -> None:
    if q < 1 or q > MAX_LADDER_ORDER:
        raise ValueError(f"{name}={q} outside [1, {MAX_LADDER_ORDER}]")


def build_ladder(path: DiscretizedMartingale, q: int) -> IteratedIntegralLadder:
    """Running ``I_{m+1}(x_{i+1}) = I_{m+1}(x_i) + I_m(x_i) * Δ_i`` for m < q."""
    _check_order(q)
    inc = path.increments
    tables = np.zeros((q + 1, len(inc) + 1))
    tables[0, :] = 1.0
    for m in range(q):
        np.cumsum(tables[m, :-1] * inc, out=tables[m + 1, 1:])
    return IteratedIntegralLadder(q, tables)


def power_variation(path: DiscretizedMartingale, k: int) -> np.ndarray:
    """Running ``P_k(x_i) = sum_{j<i} Δ_j**k``."""
    _check_order(k, "k")
    out = np.zeros(len(path.values))
    np.cumsum(path.increments**k, out=out[1:])
    return out


def newton_terms(path: DiscretizedMartingale, q: int) -> tuple[float, np.ndarray]:
    """End-point ``q * I_q`` and the signed terms ``(-1)**(k+1) I_{q-k} P_k``, k = 1..q."""
    ladder = build_ladder(path, q)
    lhs = q * ladder[q][-1]
    terms = np.array(
        [(-1) ** (k + 1) * ladder[q - k][-1] * power_variation(path, k)[-1] for k in range(1, q + 1)]
    )
    return float(lhs), terms


def check_newton_identity(path: DiscretizedMartingale, q: int) -> float:
    lhs, terms = newton_terms(path, q)
    return abs(lhs - math.fsum(terms))


def check_kailath_segall_continuous(path: DiscretizedMartingale, q: int) -> float:
    """Sup over the grid of ``|q! I_q - H~_q(M, Q)|`` with Q the realized quadratic variation."""
    if q < 1 or q > 8:
        raise ValueError(f"q={q} outside [1, 8]")
    ladder = build_ladder(path, q)
    target = scaled_hermite_eval(q, path.values, path.quad_var)
    return float(np.max(np.abs(math.factorial(q) * ladder[q] - target)))
